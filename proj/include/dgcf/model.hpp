// The embedding update model: second-order aggregation over partner
// histories, zero-order inheritance, first-order propagation, gated fusion,
// and the forward projection that predicts the next item embedding. All
// kernels record onto a caller-supplied tape so the same code path serves
// training and inference.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgcf/autodiff.hpp"
#include "dgcf/store.hpp"

namespace dgcf {

enum class AggregatorKind { mean, recurrent, attention };
enum class FeatureMode { duplicate, split, one_hot };
enum class HistoryPolicy { snapshot, live };

struct ModelConfig {
    int d = 128;
    int feature_dim = 0; // length of each per-side feature vector
    FeatureMode feature_mode = FeatureMode::duplicate;
    AggregatorKind aggregator = AggregatorKind::attention;
    bool use_zero = true;
    bool use_first = true;
    bool use_second = true;
    int history_capacity = 20;
    double lambda_u = 1.0;
    double alpha_v = 1.0;
    // Raw elapsed-time values are divided by this before they meet a weight;
    // 0 means "derive from the training split".
    double dt_norm = 0.0;
    double leaky_slope = 0.01;
    Activation theta = Activation::identity;    // zero-order output activation
    Activation phi = Activation::identity;      // first-order output activation
    Activation fusion = Activation::sigmoid;    // fusion gate
    bool squared_loss = true; // false switches the loss terms to plain norms
    // Treat the reference side of each loss term (the embedding the
    // prediction chases, the pre-update embeddings the drift terms anchor to)
    // as a constant. Gradients then reach the update weights only through the
    // live side, which stops the optimizer from dragging every state toward a
    // common predictable point.
    bool detach_targets = true;
    HistoryPolicy history_policy = HistoryPolicy::snapshot;

    void validate() const; // throws ConfigError
};

struct LstmCell {
    DenseMatrix Wi, Ui, bi; // input gate
    DenseMatrix Wf, Uf, bf; // forget gate
    DenseMatrix Wo, Uo, bo; // output gate
    DenseMatrix Wc, Uc, bc; // candidate
};

struct Mlp {
    DenseMatrix Wh, bh; // hidden layer, leaky_relu
    DenseMatrix Wo, bo; // linear output
};

struct ModelParams {
    // zero-order inheritance (time weight and feature map are shared between sides)
    DenseMatrix W0_user, W0_item, w0_time, W0_feat;
    // first-order propagation from the interaction partner
    DenseMatrix W1_user, W1_item, W1_feat;
    // mean aggregator
    DenseMatrix Wm_user, Wm_item;
    // recurrent aggregator, one cell per side
    LstmCell lstm_user, lstm_item;
    // attention scoring vector over [anchor ; neighbor], shared between sides
    DenseMatrix Ww_attn;
    // fusion maps per mechanism and side
    DenseMatrix Wfuse_zero_user, Wfuse_first_user, Wfuse_second_user;
    DenseMatrix Wfuse_zero_item, Wfuse_first_item, Wfuse_second_item;
    // forward projection
    DenseMatrix wt_time, W2_user_proj, W3_user_feat, W4_item_feat;
    Mlp mlp_user, mlp_item;

    // Stable enumeration used by the optimizer, serialization and gradient
    // extraction. Keep in lockstep with ParamVars::visit.
    template <class F> void visit(F&& f);
    template <class F> void visit(F&& f) const;

    // Weight matrices get uniform +-sqrt(6/(fan_in+fan_out)) entries, biases
    // start at zero. Draw order equals visit order.
    static ModelParams init(const ModelConfig& cfg, uint64_t seed);
};

// Tape leaves for every parameter tensor, bound once per recording episode.
struct ParamVars {
    Var W0_user, W0_item, w0_time, W0_feat;
    Var W1_user, W1_item, W1_feat;
    Var Wm_user, Wm_item;
    struct LstmVars { Var Wi, Ui, bi, Wf, Uf, bf, Wo, Uo, bo, Wc, Uc, bc; } lstm_user, lstm_item;
    Var Ww_attn;
    Var Wfuse_zero_user, Wfuse_first_user, Wfuse_second_user;
    Var Wfuse_zero_item, Wfuse_first_item, Wfuse_second_item;
    Var wt_time, W2_user_proj, W3_user_feat, W4_item_feat;
    struct MlpVars { Var Wh, bh, Wo, bo; } mlp_user, mlp_item;

    template <class F> void visit(F&& f);
    template <class F> void visit(F&& f) const;

    static ParamVars bind(Tape& tape, const ModelParams& p, bool requires_grad = true);
};

// ---- kernels ---------------------------------------------------------------

// theta(W0_side h_prev + w0 dt/dt_norm + W0_feat f)
Var zero_order(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Side side,
               Var h_prev, double dt, Var features);

// phi(W1_side h_partner_prev + W1_feat f_partner)
Var first_order(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Side side,
                Var partner_prev, Var partner_features);

// Aggregates the partner's history around the anchor embedding. neighbors are
// chronological and at most history_capacity long; an empty list returns the
// anchor unchanged.
Var second_order(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Side side,
                 Var anchor_prev, const std::vector<Var>& neighbors);

// fusion(sum over enabled mechanisms of Wfuse_mech h_mech); disabled
// mechanisms contribute nothing, so the output cannot depend on them.
Var fuse(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Side side,
         std::optional<Var> zero, std::optional<Var> first, std::optional<Var> second);

// mlp_user(h * (1 + wt dt_future/dt_norm)), elementwise modulation
Var project_user(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Var h_user, double dt_future);

// mlp_item(W2 projected_user + W3 f_user + W4 f_item)
Var project_item(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Var projected_user,
                 Var f_user, Var f_item);

// ||pred_item - h_item||^2 + lambda_u ||h_user - h_user_prev||^2
//                          + alpha_v ||h_item - h_item_prev||^2
// (plain norms instead of squared ones when squared_loss is off)
Var evolutionary_loss(Tape& t, const ModelConfig& cfg, Var pred_item, Var h_item,
                      Var h_user, Var h_user_prev, Var h_item_prev);

struct StepResult {
    Var h_user, h_item;       // fused embeddings at the interaction time
    Var h_user_prev, h_item_prev;
    Var projected_user;       // user embedding carried to dt_future
    Var predicted_item;       // estimated partner embedding at dt_future
    Var loss;                 // this interaction's loss contribution
};

// Full update for one interaction, reading (never writing) the entity states
// and histories in snap. Leaf nodes created for detached states are cached
// back into snap so repeated reads within one tape share a node.
StepResult forward_step(Tape& t, const ParamVars& pv, const ModelConfig& cfg,
                        GraphSnapshot& snap, const Interaction& x, double dt_future);

// Items ordered by ascending L2 distance from the predicted embedding; equal
// distances resolve to the smaller id. No tape involved.
struct RankedItem {
    int item = 0;
    double distance = 0.0;
};
std::vector<RankedItem> rank_items(const DenseMatrix& predicted, const GraphSnapshot& snap);

// 1-based rank the full sort would assign to target, in O(items).
int target_rank(const DenseMatrix& predicted, const GraphSnapshot& snap, int target);

// Expected partner embedding for `user` projected dt_future ahead, before
// any interaction happens. Features follow feature_source under the
// configured mode except that the unknown partner contributes a zero one-hot
// vector. States are read, never written.
DenseMatrix predict_item_embedding(Tape& t, const ParamVars& pv, const ModelConfig& cfg,
                                   GraphSnapshot& snap, int user, double dt_future,
                                   const Interaction& feature_source);

// Per-side slices of an interaction's feature vector under the configured
// mode. Zero-length when feature_dim is 0.
std::pair<DenseMatrix, DenseMatrix> split_features(const Interaction& x, const ModelConfig& cfg);

const char* aggregator_name(AggregatorKind k);

// ---- template bodies -------------------------------------------------------

template <class Self, class F>
void visit_params_impl(Self& p, F&& f) {
    f("W0_user", p.W0_user); f("W0_item", p.W0_item); f("w0_time", p.w0_time); f("W0_feat", p.W0_feat);
    f("W1_user", p.W1_user); f("W1_item", p.W1_item); f("W1_feat", p.W1_feat);
    f("Wm_user", p.Wm_user); f("Wm_item", p.Wm_item);
    f("lstm_user.Wi", p.lstm_user.Wi); f("lstm_user.Ui", p.lstm_user.Ui); f("lstm_user.bi", p.lstm_user.bi);
    f("lstm_user.Wf", p.lstm_user.Wf); f("lstm_user.Uf", p.lstm_user.Uf); f("lstm_user.bf", p.lstm_user.bf);
    f("lstm_user.Wo", p.lstm_user.Wo); f("lstm_user.Uo", p.lstm_user.Uo); f("lstm_user.bo", p.lstm_user.bo);
    f("lstm_user.Wc", p.lstm_user.Wc); f("lstm_user.Uc", p.lstm_user.Uc); f("lstm_user.bc", p.lstm_user.bc);
    f("lstm_item.Wi", p.lstm_item.Wi); f("lstm_item.Ui", p.lstm_item.Ui); f("lstm_item.bi", p.lstm_item.bi);
    f("lstm_item.Wf", p.lstm_item.Wf); f("lstm_item.Uf", p.lstm_item.Uf); f("lstm_item.bf", p.lstm_item.bf);
    f("lstm_item.Wo", p.lstm_item.Wo); f("lstm_item.Uo", p.lstm_item.Uo); f("lstm_item.bo", p.lstm_item.bo);
    f("lstm_item.Wc", p.lstm_item.Wc); f("lstm_item.Uc", p.lstm_item.Uc); f("lstm_item.bc", p.lstm_item.bc);
    f("Ww_attn", p.Ww_attn);
    f("Wfuse_zero_user", p.Wfuse_zero_user); f("Wfuse_first_user", p.Wfuse_first_user);
    f("Wfuse_second_user", p.Wfuse_second_user);
    f("Wfuse_zero_item", p.Wfuse_zero_item); f("Wfuse_first_item", p.Wfuse_first_item);
    f("Wfuse_second_item", p.Wfuse_second_item);
    f("wt_time", p.wt_time); f("W2_user_proj", p.W2_user_proj);
    f("W3_user_feat", p.W3_user_feat); f("W4_item_feat", p.W4_item_feat);
    f("mlp_user.Wh", p.mlp_user.Wh); f("mlp_user.bh", p.mlp_user.bh);
    f("mlp_user.Wo", p.mlp_user.Wo); f("mlp_user.bo", p.mlp_user.bo);
    f("mlp_item.Wh", p.mlp_item.Wh); f("mlp_item.bh", p.mlp_item.bh);
    f("mlp_item.Wo", p.mlp_item.Wo); f("mlp_item.bo", p.mlp_item.bo);
}

template <class F> void ModelParams::visit(F&& f) { visit_params_impl(*this, f); }
template <class F> void ModelParams::visit(F&& f) const { visit_params_impl(*this, f); }
template <class F> void ParamVars::visit(F&& f) { visit_params_impl(*this, f); }
template <class F> void ParamVars::visit(F&& f) const { visit_params_impl(*this, f); }

} // namespace dgcf
