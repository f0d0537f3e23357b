#include "dgcf/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dgcf/error.hpp"

namespace dgcf {

void ModelConfig::validate() const {
    if (d < 1) throw ConfigError("d must be at least 1");
    if (feature_dim < 0) throw ConfigError("feature_dim must be non-negative");
    if (history_capacity < 0) throw ConfigError("history size must be non-negative");
    if (lambda_u < 0.0 || alpha_v < 0.0) throw ConfigError("drift penalties must be non-negative");
    if (dt_norm < 0.0) throw ConfigError("dt_norm must be non-negative");
    if (leaky_slope < 0.0) throw ConfigError("leaky_slope must be non-negative");
    if (!use_zero && !use_first && !use_second)
        throw ConfigError("at least one update mechanism must stay enabled");
}

namespace {

// Kernels accept an unresolved (0) normalizer so they can run standalone;
// the trainer always resolves it from data before training.
double effective_dt_norm(const ModelConfig& cfg) {
    return cfg.dt_norm > 0.0 ? cfg.dt_norm : 1.0;
}

bool is_bias_name(const char* name) {
    const char* last = name;
    for (const char* p = name; *p; ++p)
        if (*p == '.') last = p + 1;
    return *last == 'b';
}

} // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    const int d = cfg.d;
    const int df = cfg.feature_dim;
    ModelParams p;
    p.W0_user = DenseMatrix(d, d); p.W0_item = DenseMatrix(d, d);
    p.w0_time = DenseMatrix(d, 1); p.W0_feat = DenseMatrix(d, df);
    p.W1_user = DenseMatrix(d, d); p.W1_item = DenseMatrix(d, d); p.W1_feat = DenseMatrix(d, df);
    p.Wm_user = DenseMatrix(d, d); p.Wm_item = DenseMatrix(d, d);
    for (LstmCell* cell : {&p.lstm_user, &p.lstm_item}) {
        cell->Wi = DenseMatrix(d, d); cell->Ui = DenseMatrix(d, d); cell->bi = DenseMatrix(d, 1);
        cell->Wf = DenseMatrix(d, d); cell->Uf = DenseMatrix(d, d); cell->bf = DenseMatrix(d, 1);
        cell->Wo = DenseMatrix(d, d); cell->Uo = DenseMatrix(d, d); cell->bo = DenseMatrix(d, 1);
        cell->Wc = DenseMatrix(d, d); cell->Uc = DenseMatrix(d, d); cell->bc = DenseMatrix(d, 1);
    }
    p.Ww_attn = DenseMatrix(1, 2 * d);
    p.Wfuse_zero_user = DenseMatrix(d, d); p.Wfuse_first_user = DenseMatrix(d, d);
    p.Wfuse_second_user = DenseMatrix(d, d);
    p.Wfuse_zero_item = DenseMatrix(d, d); p.Wfuse_first_item = DenseMatrix(d, d);
    p.Wfuse_second_item = DenseMatrix(d, d);
    p.wt_time = DenseMatrix(d, 1); p.W2_user_proj = DenseMatrix(d, d);
    p.W3_user_feat = DenseMatrix(d, df); p.W4_item_feat = DenseMatrix(d, df);
    for (Mlp* mlp : {&p.mlp_user, &p.mlp_item}) {
        mlp->Wh = DenseMatrix(d, d); mlp->bh = DenseMatrix(d, 1);
        mlp->Wo = DenseMatrix(d, d); mlp->bo = DenseMatrix(d, 1);
    }

    std::mt19937_64 rng(seed);
    p.visit([&](const char* name, DenseMatrix& m) {
        if (is_bias_name(name) || m.size() == 0) return;
        const double bound = std::sqrt(6.0 / (m.rows + m.cols));
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (double& v : m.data) v = uni(rng);
    });
    return p;
}

ParamVars ParamVars::bind(Tape& tape, const ModelParams& p, bool requires_grad) {
    std::vector<const DenseMatrix*> tensors;
    p.visit([&](const char*, const DenseMatrix& m) { tensors.push_back(&m); });
    ParamVars pv;
    size_t i = 0;
    pv.visit([&](const char*, Var& v) { v = tape.leaf(*tensors[i++], requires_grad); });
    return pv;
}

namespace {

Var side_pick(Side s, Var user_var, Var item_var) {
    return s == Side::user ? user_var : item_var;
}

Var run_mlp(Tape& t, const ParamVars::MlpVars& mlp, const ModelConfig& cfg, Var x) {
    Var hidden = t.activation(Activation::leaky_relu,
                              t.add(t.matmul(mlp.Wh, x), mlp.bh), cfg.leaky_slope);
    return t.add(t.matmul(mlp.Wo, hidden), mlp.bo);
}

Var run_lstm(Tape& t, const ParamVars::LstmVars& cell, int d, const std::vector<Var>& inputs) {
    Var h = t.leaf(DenseMatrix(d, 1));
    Var c = t.leaf(DenseMatrix(d, 1));
    for (Var x : inputs) {
        Var gi = t.activation(Activation::sigmoid,
                              t.add(t.add(t.matmul(cell.Wi, x), t.matmul(cell.Ui, h)), cell.bi));
        Var gf = t.activation(Activation::sigmoid,
                              t.add(t.add(t.matmul(cell.Wf, x), t.matmul(cell.Uf, h)), cell.bf));
        Var go = t.activation(Activation::sigmoid,
                              t.add(t.add(t.matmul(cell.Wo, x), t.matmul(cell.Uo, h)), cell.bo));
        Var gc = t.activation(Activation::tanh,
                              t.add(t.add(t.matmul(cell.Wc, x), t.matmul(cell.Uc, h)), cell.bc));
        c = t.add(t.hadamard(gf, c), t.hadamard(gi, gc));
        h = t.hadamard(go, t.activation(Activation::tanh, c));
    }
    return h;
}

} // namespace

Var zero_order(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Side side,
               Var h_prev, double dt, Var features) {
    Var acc = t.matmul(side_pick(side, pv.W0_user, pv.W0_item), h_prev);
    acc = t.add(acc, t.scale(pv.w0_time, dt / effective_dt_norm(cfg)));
    if (cfg.feature_dim > 0) acc = t.add(acc, t.matmul(pv.W0_feat, features));
    return t.activation(cfg.theta, acc, cfg.leaky_slope);
}

Var first_order(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Side side,
                Var partner_prev, Var partner_features) {
    Var acc = t.matmul(side_pick(side, pv.W1_user, pv.W1_item), partner_prev);
    if (cfg.feature_dim > 0) acc = t.add(acc, t.matmul(pv.W1_feat, partner_features));
    return t.activation(cfg.phi, acc, cfg.leaky_slope);
}

Var second_order(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Side side,
                 Var anchor_prev, const std::vector<Var>& neighbors) {
    if (neighbors.empty()) return anchor_prev;
    if (static_cast<int>(neighbors.size()) > cfg.history_capacity)
        throw ContractError("second_order: " + std::to_string(neighbors.size()) +
                            " neighbors exceed the history capacity " +
                            std::to_string(cfg.history_capacity));
    switch (cfg.aggregator) {
        case AggregatorKind::mean: {
            const Var Wm = side_pick(side, pv.Wm_user, pv.Wm_item);
            Var acc = t.matmul(Wm, neighbors[0]);
            for (size_t i = 1; i < neighbors.size(); ++i)
                acc = t.add(acc, t.matmul(Wm, neighbors[i]));
            return t.add(anchor_prev, t.scale(acc, 1.0 / static_cast<double>(neighbors.size())));
        }
        case AggregatorKind::recurrent: {
            const auto& cell = side == Side::user ? pv.lstm_user : pv.lstm_item;
            return t.add(anchor_prev, run_lstm(t, cell, cfg.d, neighbors));
        }
        case AggregatorKind::attention: {
            // Scores compare the anchor against each neighbor; the anchor
            // itself enters only through the scores, not as an extra summand.
            std::vector<Var> scores;
            scores.reserve(neighbors.size());
            for (Var nb : neighbors)
                scores.push_back(t.activation(Activation::leaky_relu,
                                              t.matmul(pv.Ww_attn, t.concat_rows(anchor_prev, nb)),
                                              cfg.leaky_slope));
            Var weights = t.softmax(t.stack_scalars(scores));
            return t.weighted_sum(weights, neighbors);
        }
    }
    throw ContractError("second_order: unknown aggregator");
}

Var fuse(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Side side,
         std::optional<Var> zero, std::optional<Var> first, std::optional<Var> second) {
    std::optional<Var> acc;
    auto take = [&](bool enabled, Var weight, const std::optional<Var>& h, const char* mech) {
        if (!enabled) return;
        if (!h || !h->valid())
            throw ContractError(std::string("fuse: enabled mechanism '") + mech + "' has no input");
        Var term = t.matmul(weight, *h);
        acc = acc ? t.add(*acc, term) : term;
    };
    take(cfg.use_zero, side_pick(side, pv.Wfuse_zero_user, pv.Wfuse_zero_item), zero, "zero");
    take(cfg.use_first, side_pick(side, pv.Wfuse_first_user, pv.Wfuse_first_item), first, "first");
    take(cfg.use_second, side_pick(side, pv.Wfuse_second_user, pv.Wfuse_second_item), second, "second");
    if (!acc) throw ContractError("fuse: every mechanism is disabled");
    return t.activation(cfg.fusion, *acc, cfg.leaky_slope);
}

Var project_user(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Var h_user, double dt_future) {
    Var modulation = t.affine(pv.wt_time, dt_future / effective_dt_norm(cfg), 1.0);
    return run_mlp(t, pv.mlp_user, cfg, t.hadamard(h_user, modulation));
}

Var project_item(Tape& t, const ParamVars& pv, const ModelConfig& cfg, Var projected_user,
                 Var f_user, Var f_item) {
    Var acc = t.matmul(pv.W2_user_proj, projected_user);
    if (cfg.feature_dim > 0) {
        acc = t.add(acc, t.matmul(pv.W3_user_feat, f_user));
        acc = t.add(acc, t.matmul(pv.W4_item_feat, f_item));
    }
    return run_mlp(t, pv.mlp_item, cfg, acc);
}

static Var loss_term(Tape& t, const ModelConfig& cfg, Var a, Var b) {
    Var sq = t.squared_norm(t.sub(a, b));
    return cfg.squared_loss ? sq : t.sqrt_scalar(sq);
}

Var evolutionary_loss(Tape& t, const ModelConfig& cfg, Var pred_item, Var h_item,
                      Var h_user, Var h_user_prev, Var h_item_prev) {
    Var pred = loss_term(t, cfg, pred_item, h_item);
    Var user_drift = loss_term(t, cfg, h_user, h_user_prev);
    Var item_drift = loss_term(t, cfg, h_item, h_item_prev);
    return t.add(pred, t.add(t.scale(user_drift, cfg.lambda_u), t.scale(item_drift, cfg.alpha_v)));
}

namespace {

Var ensure_state_var(Tape& t, StateRef& ref) {
    if (ref.node >= 0) return Var{ref.node};
    Var v = t.leaf(ref.value, false);
    ref.node = v.id;
    return v;
}

std::vector<Var> neighbor_vars(Tape& t, const ModelConfig& cfg, GraphSnapshot& snap,
                               Side history_owner, int owner_id) {
    std::vector<Var> out;
    for (HistoryEntry* h : neighbors_for(snap, history_owner, owner_id)) {
        if (cfg.history_policy == HistoryPolicy::snapshot)
            out.push_back(ensure_state_var(t, h->snapshot));
        else
            out.push_back(ensure_state_var(t, snap.state(other_side(history_owner), h->partner).emb));
    }
    return out;
}

} // namespace

StepResult forward_step(Tape& t, const ParamVars& pv, const ModelConfig& cfg,
                        GraphSnapshot& snap, const Interaction& x, double dt_future) {
    EntityState& su = snap.state(Side::user, x.user);
    EntityState& sv = snap.state(Side::item, x.item);
    Var hu_prev = ensure_state_var(t, su.emb);
    Var hv_prev = ensure_state_var(t, sv.emb);

    Var fu, fv;
    if (cfg.feature_dim > 0) {
        auto [fu_m, fv_m] = split_features(x, cfg);
        fu = t.leaf(std::move(fu_m));
        fv = t.leaf(std::move(fv_m));
    }

    const double dt_u = snap.elapsed_since_last(Side::user, x.user, x.time);
    const double dt_v = snap.elapsed_since_last(Side::item, x.item, x.time);

    std::optional<Var> zero_u, zero_v, first_u, first_v, second_u, second_v;
    if (cfg.use_zero) {
        zero_u = zero_order(t, pv, cfg, Side::user, hu_prev, dt_u, fu);
        zero_v = zero_order(t, pv, cfg, Side::item, hv_prev, dt_v, fv);
    }
    if (cfg.use_first) {
        first_u = first_order(t, pv, cfg, Side::user, hv_prev, fv);
        first_v = first_order(t, pv, cfg, Side::item, hu_prev, fu);
    }
    if (cfg.use_second) {
        // The user update looks at who else touched this item, and vice
        // versa: each side aggregates its partner's history.
        second_u = second_order(t, pv, cfg, Side::user, hu_prev,
                                neighbor_vars(t, cfg, snap, Side::item, x.item));
        second_v = second_order(t, pv, cfg, Side::item, hv_prev,
                                neighbor_vars(t, cfg, snap, Side::user, x.user));
    }

    StepResult r;
    r.h_user_prev = hu_prev;
    r.h_item_prev = hv_prev;
    r.h_user = fuse(t, pv, cfg, Side::user, zero_u, first_u, second_u);
    r.h_item = fuse(t, pv, cfg, Side::item, zero_v, first_v, second_v);
    r.projected_user = project_user(t, pv, cfg, r.h_user, dt_future);
    r.predicted_item = project_item(t, pv, cfg, r.projected_user, fu, fv);
    if (cfg.detach_targets) {
        // The reference side of each term is a constant: the prediction
        // chases the item state without pulling it closer, and the drift
        // terms anchor each new state to a frozen copy of the previous one.
        Var item_target = t.leaf(t.value(r.h_item));
        Var pred = loss_term(t, cfg, r.predicted_item, item_target);
        Var user_drift = loss_term(t, cfg, r.h_user, t.leaf(t.value(hu_prev)));
        Var item_drift = loss_term(t, cfg, r.h_item, t.leaf(t.value(hv_prev)));
        r.loss = t.add(pred, t.add(t.scale(user_drift, cfg.lambda_u),
                                   t.scale(item_drift, cfg.alpha_v)));
    } else {
        r.loss = evolutionary_loss(t, cfg, r.predicted_item, r.h_item, r.h_user, hu_prev, hv_prev);
    }
    return r;
}

DenseMatrix predict_item_embedding(Tape& t, const ParamVars& pv, const ModelConfig& cfg,
                                   GraphSnapshot& snap, int user, double dt_future,
                                   const Interaction& feature_source) {
    Var h_user = ensure_state_var(t, snap.state(Side::user, user).emb);
    Var projected = project_user(t, pv, cfg, h_user, dt_future);
    Var fu, fv;
    if (cfg.feature_dim > 0) {
        if (cfg.feature_mode == FeatureMode::one_hot) {
            if (user >= cfg.feature_dim)
                throw DimensionError("one_hot feature_dim " + std::to_string(cfg.feature_dim) +
                                     " cannot encode user " + std::to_string(user));
            DenseMatrix fu_m(cfg.feature_dim, 1);
            fu_m.data[user] = 1.0;
            fu = t.leaf(std::move(fu_m));
            fv = t.leaf(DenseMatrix(cfg.feature_dim, 1));
        } else {
            auto [fu_m, fv_m] = split_features(feature_source, cfg);
            fu = t.leaf(std::move(fu_m));
            fv = t.leaf(std::move(fv_m));
        }
    }
    return t.value(project_item(t, pv, cfg, projected, fu, fv));
}

std::vector<RankedItem> rank_items(const DenseMatrix& predicted, const GraphSnapshot& snap) {
    if (snap.items.empty()) throw DomainError("rank_items: the item table is empty");
    std::vector<RankedItem> out;
    out.reserve(snap.items.size());
    for (size_t i = 0; i < snap.items.size(); ++i)
        out.push_back({static_cast<int>(i), euclidean_distance(predicted, snap.items[i].emb.value)});
    std::sort(out.begin(), out.end(), [](const RankedItem& a, const RankedItem& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.item < b.item;
    });
    return out;
}

int target_rank(const DenseMatrix& predicted, const GraphSnapshot& snap, int target) {
    if (snap.items.empty()) throw DomainError("target_rank: the item table is empty");
    if (target < 0 || target >= static_cast<int>(snap.items.size()))
        throw LookupError("target_rank: item id " + std::to_string(target) + " out of range");
    const double dt = euclidean_distance(predicted, snap.items[target].emb.value);
    int rank = 1;
    for (size_t i = 0; i < snap.items.size(); ++i) {
        if (static_cast<int>(i) == target) continue;
        const double di = euclidean_distance(predicted, snap.items[i].emb.value);
        if (di < dt || (di == dt && static_cast<int>(i) < target)) ++rank;
    }
    return rank;
}

std::pair<DenseMatrix, DenseMatrix> split_features(const Interaction& x, const ModelConfig& cfg) {
    const int df = cfg.feature_dim;
    if (df == 0) return {DenseMatrix(0, 1), DenseMatrix(0, 1)};
    DenseMatrix fu(df, 1), fv(df, 1);
    switch (cfg.feature_mode) {
        case FeatureMode::duplicate:
            if (static_cast<int>(x.features.size()) != df)
                throw DimensionError("interaction carries " + std::to_string(x.features.size()) +
                                     " features, config expects " + std::to_string(df));
            for (int i = 0; i < df; ++i) fu.data[i] = fv.data[i] = x.features[i];
            break;
        case FeatureMode::split:
            if (static_cast<int>(x.features.size()) != 2 * df)
                throw DimensionError("interaction carries " + std::to_string(x.features.size()) +
                                     " features, split mode expects " + std::to_string(2 * df));
            for (int i = 0; i < df; ++i) {
                fu.data[i] = x.features[i];
                fv.data[i] = x.features[df + i];
            }
            break;
        case FeatureMode::one_hot:
            if (x.user >= df || x.item >= df)
                throw DimensionError("one_hot feature_dim " + std::to_string(df) +
                                     " cannot encode ids " + std::to_string(x.user) + "/" +
                                     std::to_string(x.item));
            fu.data[x.user] = 1.0;
            fv.data[x.item] = 1.0;
            break;
    }
    return {std::move(fu), std::move(fv)};
}

const char* aggregator_name(AggregatorKind k) {
    switch (k) {
        case AggregatorKind::mean: return "mean";
        case AggregatorKind::recurrent: return "recurrent";
        case AggregatorKind::attention: return "attention";
    }
    return "mean";
}

} // namespace dgcf
