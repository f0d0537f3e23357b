#include "dgcf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <unordered_map>

#include "dgcf/error.hpp"

namespace dgcf {

double compute_dt_norm(std::span<const Interaction> train) {
    std::unordered_map<int, double> last_user, last_item;
    double total = 0.0;
    int64_t count = 0;
    for (const Interaction& x : train) {
        if (auto it = last_user.find(x.user); it != last_user.end()) {
            total += x.time - it->second;
            ++count;
        }
        last_user[x.user] = x.time;
        if (auto it = last_item.find(x.item); it != last_item.end()) {
            total += x.time - it->second;
            ++count;
        }
        last_item[x.item] = x.time;
    }
    if (count == 0) return 1.0;
    const double mean = total / static_cast<double>(count);
    return mean > 0.0 ? mean : 1.0;
}

std::vector<double> future_gaps(std::span<const Interaction> split) {
    std::vector<double> gaps(split.size(), 0.0);
    std::unordered_map<int, double> next_time;
    for (size_t i = split.size(); i-- > 0;) {
        const Interaction& x = split[i];
        if (auto it = next_time.find(x.user); it != next_time.end()) gaps[i] = it->second - x.time;
        next_time[x.user] = x.time;
    }
    return gaps;
}

ModelConfig resolve_model_config(ModelConfig cfg, const DatasetMeta& meta,
                                 std::span<const Interaction> train) {
    switch (cfg.feature_mode) {
        case FeatureMode::duplicate:
            cfg.feature_dim = meta.feature_dim;
            break;
        case FeatureMode::split:
            if (meta.feature_dim % 2 != 0)
                throw ConfigError("split feature mode needs an even feature count, dataset has " +
                                  std::to_string(meta.feature_dim));
            cfg.feature_dim = meta.feature_dim / 2;
            break;
        case FeatureMode::one_hot:
            cfg.feature_dim = std::max(meta.num_users, meta.num_items);
            break;
    }
    if (cfg.dt_norm <= 0.0) cfg.dt_norm = compute_dt_norm(train);
    cfg.validate();
    return cfg;
}

// ---- teacher-forced streaming ----------------------------------------------

StreamRunner::StreamRunner(const ModelParams& params, const ModelConfig& cfg, GraphSnapshot& snap,
                           int chunk)
    : params_(params), cfg_(cfg), snap_(snap), chunk_(chunk > 0 ? chunk : 1) {
    // Stale node ids from an earlier tape would alias into this one.
    snap_.detach_all();
    pv_ = ParamVars::bind(tape_, params_, false);
}

void StreamRunner::maybe_rebind() {
    if (steps_since_bind_ < chunk_) return;
    snap_.detach_all();
    tape_.clear();
    pv_ = ParamVars::bind(tape_, params_, false);
    steps_since_bind_ = 0;
}

void StreamRunner::step(const Interaction& x) {
    maybe_rebind();
    // dt_future only shapes the projection outputs, which nobody reads here.
    StepResult r = forward_step(tape_, pv_, cfg_, snap_, x, 0.0);
    record_interaction(snap_, x, StateRef{tape_.value(r.h_user), r.h_user.id},
                       StateRef{tape_.value(r.h_item), r.h_item.id});
    ++steps_since_bind_;
}

DenseMatrix StreamRunner::predict(int user, double dt_future, const Interaction& feature_source) {
    maybe_rebind();
    return predict_item_embedding(tape_, pv_, cfg_, snap_, user, dt_future, feature_source);
}

// ---- evaluation -------------------------------------------------------------

namespace {

EvalResult eval_streams(const ModelParams& params, const ModelConfig& cfg, GraphSnapshot& snap,
                        std::span<const Interaction> replay, std::span<const Interaction> score) {
    StreamRunner runner(params, cfg, snap);
    for (const Interaction& x : replay) runner.step(x);

    EvalResult out;
    out.records.reserve(score.size());
    for (const Interaction& x : score) {
        const double dt_future = snap.elapsed_since_last(Side::user, x.user, x.time);
        const DenseMatrix pred = runner.predict(x.user, dt_future, x);
        out.records.push_back(RankRecord{x.seq, target_rank(pred, snap, x.item)});
        runner.step(x);
    }
    if (!out.records.empty()) {
        const std::vector<int> ranks = ranks_of(out.records);
        out.mrr_value = mrr(ranks);
        out.recall10 = recall_at_k(ranks, 10);
    }
    return out;
}

} // namespace

EvalResult evaluate(const Checkpoint& ckpt, std::span<const Interaction> replay,
                    std::span<const Interaction> score) {
    GraphSnapshot snap = ckpt.states; // evaluation never disturbs the checkpoint
    return eval_streams(ckpt.params, ckpt.model_config, snap, replay, score);
}

// ---- training ---------------------------------------------------------------

namespace {

struct SegmentContext {
    Tape tape;
    std::optional<ParamVars> pv;
    std::vector<Var> losses;
    int batches_in_segment = 0;
};

double flush_segment(SegmentContext& seg, ModelParams& params, AdamState& opt, GraphSnapshot& snap,
                     int epoch, int near_batch) {
    double loss_value = 0.0;
    if (!seg.losses.empty()) {
        Var total = seg.losses[0];
        for (size_t i = 1; i < seg.losses.size(); ++i) total = seg.tape.add(total, seg.losses[i]);
        loss_value = seg.tape.scalar(total);
        if (!std::isfinite(loss_value))
            throw NumericError("non-finite training loss in epoch " + std::to_string(epoch) +
                               " near t-batch " + std::to_string(near_batch));
        seg.tape.backward(total);
        std::vector<DenseMatrix*> ps;
        std::vector<const DenseMatrix*> gs;
        params.visit([&](const char*, DenseMatrix& m) { ps.push_back(&m); });
        seg.pv->visit([&](const char*, const Var& v) { gs.push_back(&seg.tape.grad(v)); });
        adam_step(ps, gs, opt);
    }
    snap.detach_all();
    seg.tape.clear();
    seg.pv.reset();
    seg.losses.clear();
    seg.batches_in_segment = 0;
    return loss_value;
}

// Epoch boundary under carry_states: embeddings continue evolving, but the
// replayed stream starts over, so clocks and histories must start empty.
GraphSnapshot epoch_start_states(const GraphSnapshot& prev) {
    GraphSnapshot s;
    s.d = prev.d;
    s.history_capacity = prev.history_capacity;
    s.now = 0.0;
    auto strip = [](const std::vector<EntityState>& src) {
        std::vector<EntityState> out;
        out.reserve(src.size());
        for (const EntityState& e : src)
            out.push_back(EntityState{StateRef{e.emb.value, -1}, std::nullopt, {}});
        return out;
    };
    s.users = strip(prev.users);
    s.items = strip(prev.items);
    return s;
}

double train_epoch(ModelParams& params, AdamState& opt, GraphSnapshot& snap,
                   std::span<const Interaction> train, const std::vector<double>& gaps,
                   const TBatchSchedule& sched, const ModelConfig& cfg,
                   const TrainSettings& settings, int epoch) {
    SegmentContext seg;
    double loss_sum = 0.0;
    for (size_t b = 0; b < sched.batches.size(); ++b) {
        for (int seq : sched.batches[b]) {
            if (!seg.pv) seg.pv = ParamVars::bind(seg.tape, params, true);
            const Interaction& x = train[seq];
            StepResult r = forward_step(seg.tape, *seg.pv, cfg, snap, x, gaps[seq]);
            record_interaction(snap, x, StateRef{seg.tape.value(r.h_user), r.h_user.id},
                               StateRef{seg.tape.value(r.h_item), r.h_item.id});
            seg.losses.push_back(r.loss);
            if (static_cast<int>(seg.losses.size()) >= settings.segment_max_interactions)
                loss_sum += flush_segment(seg, params, opt, snap, epoch, static_cast<int>(b));
        }
        ++seg.batches_in_segment;
        if (seg.batches_in_segment >= settings.bptt_batches)
            loss_sum += flush_segment(seg, params, opt, snap, epoch, static_cast<int>(b));
    }
    loss_sum += flush_segment(seg, params, opt, snap, epoch,
                              static_cast<int>(sched.batches.size()) - 1);
    return train.empty() ? 0.0 : loss_sum / static_cast<double>(train.size());
}

} // namespace

TrainResult train(const Dataset& data, const Splits& splits, const ModelConfig& model_config,
                  const TrainSettings& settings, const Checkpoint* resume) {
    settings.validate();
    const auto& log = data.interactions;
    if (splits.train_end > log.size() || splits.val_end > log.size() ||
        splits.train_end > splits.val_end)
        throw ContractError("splits do not fit the dataset");
    std::span<const Interaction> train_split(log.data(), splits.train_end);
    std::span<const Interaction> val_split(log.data() + splits.train_end,
                                           splits.val_end - splits.train_end);

    ModelConfig cfg = resolve_model_config(model_config, data.meta, train_split);

    // Sub-seeds for parameters and states come from one generator so a single
    // seed pins the whole run.
    std::mt19937_64 seeder(settings.seed);
    const uint64_t param_seed = seeder();
    const uint64_t state_seed = seeder();

    Checkpoint current;
    current.model_config = cfg;
    current.train_settings = settings;
    current.num_users = data.meta.num_users;
    current.num_items = data.meta.num_items;
    if (resume) {
        current = *resume;
        current.train_settings = settings;
        if (resume->num_users != data.meta.num_users || resume->num_items != data.meta.num_items)
            throw ContractError("resume checkpoint was trained on a different dataset");
        cfg = current.model_config; // the stored resolved config wins over re-derivation
    } else {
        current.params = ModelParams::init(cfg, param_seed);
        current.opt = AdamState{};
        current.opt.learning_rate = settings.learning_rate;
        current.opt.weight_decay = settings.l2_penalty;
    }

    // Every epoch re-propagates the stream from the same seeded initial
    // states; only parameters and optimizer moments persist across epochs.
    // A resumed run rebuilds identical initial states from the stored seed.
    const GraphSnapshot initial = init_states(data.meta.num_users, data.meta.num_items, cfg.d,
                                              cfg.history_capacity, state_seed);
    if (!resume) current.states = initial;

    const TBatchSchedule sched = assign_batches({train_split.begin(), train_split.end()});
    const std::vector<double> gaps = future_gaps(train_split);

    TrainResult result;
    result.best = current;

    auto timed_eval = [&](const ModelParams& p, const GraphSnapshot& states,
                          std::span<const Interaction> replay) {
        GraphSnapshot copy = states;
        return eval_streams(p, cfg, copy, replay, val_split);
    };

    using clock = std::chrono::steady_clock;
    if (!resume) {
        // Baseline row: untrained parameters, teacher-forced through the
        // training split so the validation states are comparable to later
        // epochs.
        const auto t0 = clock::now();
        EvalResult base = timed_eval(current.params, initial, train_split);
        result.log.push_back(EpochRow{0, std::nullopt, base.mrr_value, base.recall10});
        result.epoch_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    }

    for (int epoch = current.epoch + 1; epoch <= settings.epochs; ++epoch) {
        const auto t0 = clock::now();
        GraphSnapshot states =
            settings.carry_states ? epoch_start_states(current.states) : initial;
        const double mean_loss = train_epoch(current.params, current.opt, states,
                                             train_split, gaps, sched, cfg, settings, epoch);
        current.states = std::move(states);
        EvalResult val = timed_eval(current.params, current.states, {});
        result.epoch_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        current.epoch = epoch;
        result.log.push_back(EpochRow{epoch, mean_loss, val.mrr_value, val.recall10});
        if (val.mrr_value > current.best_val_mrr) {
            current.best_val_mrr = val.mrr_value;
            current.best_epoch = epoch;
            result.best = current;
        }
    }
    // A resumed run that never beats the stored best keeps the resume point
    // as its best snapshot.
    result.best.best_val_mrr = current.best_val_mrr;
    result.best.best_epoch = current.best_epoch;
    result.last = std::move(current);
    return result;
}

} // namespace dgcf
