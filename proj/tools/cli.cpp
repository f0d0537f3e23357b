#include "cli.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unistd.h>

#include "CLI11.hpp"
#include "dgcf/data_io.hpp"
#include "dgcf/error.hpp"
#include "dgcf/metrics.hpp"
#include "dgcf/model.hpp"
#include "dgcf/tbatch.hpp"
#include "dgcf/trainer.hpp"

namespace dgcf {

namespace {

bool use_color() {
    static const bool on = isatty(fileno(stdout)) != 0 && std::getenv("NO_COLOR") == nullptr;
    return on;
}

const char* sgr_bold() { return use_color() ? "\x1b[1m" : ""; }
const char* sgr_reset() { return use_color() ? "\x1b[0m" : ""; }

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string hex64(uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

struct SplitSpans {
    std::span<const Interaction> train, val, test;
};

SplitSpans make_spans(const Dataset& data, const Splits& s) {
    std::span<const Interaction> all(data.interactions);
    return {all.subspan(0, s.train_end), all.subspan(s.train_end, s.val_end - s.train_end),
            all.subspan(s.val_end)};
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    std::string data, synthetic, config, out = ".";
    uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_train(const TrainArgs& a) {
    if (a.data.empty() == a.synthetic.empty())
        throw ConfigError("train wants exactly one of --data and --synthetic");
    ConfigBundle cfg = a.config.empty() ? default_config() : parse_config(a.config);
    if (a.seed_set) cfg.train.seed = a.seed;
    ensure_dir(a.out);

    // Synthetic runs materialize the stream and re-parse it so both sources
    // share one ingestion path (and the CSV stays around for evaluate).
    std::string data_path = a.data;
    if (!a.synthetic.empty()) {
        SyntheticSpec spec = parse_synthetic_spec(a.synthetic);
        spec.seed = cfg.train.seed;
        data_path = a.out + "/synthetic.csv";
        write_csv(data_path, generate_synthetic(spec));
    }
    Dataset data = parse_csv(data_path);
    const Splits splits = split_80_10_10(data.interactions);
    const SplitSpans spans = make_spans(data, splits);

    TrainResult res = train(data, splits, cfg.model, cfg.train);
    const EvalResult test = evaluate(res.best, spans.val, spans.test);
    const std::string fp = hex64(config_fingerprint(res.last.model_config, cfg.train));

    std::printf("fingerprint %s\n", fp.c_str());
    std::printf("%s%5s  %12s  %10s  %13s%s\n", sgr_bold(), "epoch", "train_loss", "val_mrr",
                "val_recall@10", sgr_reset());
    for (const EpochRow& row : res.log)
        std::printf("%5d  %12s  %10s  %13s\n", row.epoch,
                    row.train_loss ? fixed(*row.train_loss, 6).c_str() : "-",
                    fixed(row.val_mrr, 6).c_str(), fixed(row.val_recall10, 6).c_str());
    std::printf("best epoch %d, val MRR %s\n", res.last.best_epoch,
                fixed(res.last.best_val_mrr, 6).c_str());
    std::printf("test MRR %s, test Recall@10 %s\n", fixed(test.mrr_value, 6).c_str(),
                fixed(test.recall10, 6).c_str());

    {
        std::ofstream out = open_out(a.out + "/report.csv");
        out << "fingerprint," << fp << "\n";
        out << "epoch,train_loss,val_mrr,val_recall10\n";
        for (const EpochRow& row : res.log)
            out << row.epoch << ',' << (row.train_loss ? fixed(*row.train_loss, 6) : "") << ','
                << fixed(row.val_mrr, 6) << ',' << fixed(row.val_recall10, 6) << "\n";
        out << "test,," << fixed(test.mrr_value, 6) << ',' << fixed(test.recall10, 6) << "\n";
        if (!out) throw IoError("write to '" + a.out + "/report.csv' failed");
    }
    {
        // Wall clock lives in its own file so report.csv stays byte-stable
        // across runs of the same seed.
        std::ofstream out = open_out(a.out + "/timing.csv");
        out << "epoch,seconds\n";
        for (size_t i = 0; i < res.log.size(); ++i)
            out << res.log[i].epoch << ',' << fixed(res.epoch_seconds[i], 3) << "\n";
        if (!out) throw IoError("write to '" + a.out + "/timing.csv' failed");
    }
    save_checkpoint(a.out + "/best.ckpt", res.best);
    save_checkpoint(a.out + "/last.ckpt", res.last);
    std::printf("wrote %s/best.ckpt %s/last.ckpt %s/report.csv %s/timing.csv\n", a.out.c_str(),
                a.out.c_str(), a.out.c_str(), a.out.c_str());
    return 0;
}

// ---- evaluate ---------------------------------------------------------------

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_path) {
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    Dataset data = parse_csv(data_path);
    if (static_cast<int>(data.meta.num_users) > ckpt.num_users ||
        static_cast<int>(data.meta.num_items) > ckpt.num_items)
        throw ConfigError("checkpoint covers " + std::to_string(ckpt.num_users) + " users / " +
                          std::to_string(ckpt.num_items) + " items, dataset has more");
    const SplitSpans spans = make_spans(data, split_80_10_10(data.interactions));
    const EvalResult val = evaluate(ckpt, {}, spans.val);
    const EvalResult test = evaluate(ckpt, spans.val, spans.test);
    std::printf("split,mrr,recall10\n");
    std::printf("validation,%s,%s\n", fixed(val.mrr_value, 3).c_str(),
                fixed(val.recall10, 3).c_str());
    std::printf("test,%s,%s\n", fixed(test.mrr_value, 3).c_str(), fixed(test.recall10, 3).c_str());
    return 0;
}

// ---- predict ----------------------------------------------------------------

int cmd_predict(const std::string& ckpt_path, int user, double delta_t, int k) {
    if (k < 1) throw ConfigError("--k must be at least 1");
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    const ModelConfig& cfg = ckpt.model_config;

    // No interaction exists yet, so content features are zero; one_hot mode
    // encodes the user id internally.
    Interaction feature_source;
    feature_source.user = user;
    if (cfg.feature_dim > 0 && cfg.feature_mode != FeatureMode::one_hot)
        feature_source.features.assign(
            cfg.feature_mode == FeatureMode::split ? 2 * cfg.feature_dim : cfg.feature_dim, 0.0);

    Tape tape;
    ParamVars pv = ParamVars::bind(tape, ckpt.params, false);
    const DenseMatrix pred =
        predict_item_embedding(tape, pv, cfg, ckpt.states, user, delta_t, feature_source);
    const std::vector<RankedItem> ranked = rank_items(pred, ckpt.states);
    const int shown = std::min<int>(k, static_cast<int>(ranked.size()));
    std::printf("rank,item,distance\n");
    for (int i = 0; i < shown; ++i)
        std::printf("%d,%d,%s\n", i + 1, ranked[i].item, fixed(ranked[i].distance, 6).c_str());
    return 0;
}

// ---- batch-inspect ----------------------------------------------------------

int cmd_batch_inspect(const std::string& data_path) {
    Dataset data = parse_csv(data_path);
    const TBatchSchedule sched = assign_batches(data.interactions);
    const ScheduleCheck check = validate_schedule(sched, data.interactions);

    std::printf("interactions: %lld\n", static_cast<long long>(data.meta.num_interactions));
    std::printf("batches: %zu\n", sched.batches.size());
    if (sched.batches.size() <= 64) {
        std::printf("sizes: [");
        for (size_t i = 0; i < sched.batches.size(); ++i)
            std::printf("%s%zu", i ? ", " : "", sched.batches[i].size());
        std::printf("]\n");
    }
    std::printf("histogram:");
    size_t max_size = 0;
    for (const auto& b : sched.batches) max_size = std::max(max_size, b.size());
    std::vector<size_t> by_size(max_size + 1, 0);
    for (const auto& b : sched.batches) ++by_size[b.size()];
    for (size_t s = 1; s <= max_size; ++s)
        if (by_size[s]) std::printf(" %zu:%zu", s, by_size[s]);
    std::printf("\n");
    if (check.ok) {
        std::printf("invariants: %sok%s\n", use_color() ? "\x1b[32m" : "", sgr_reset());
        return 0;
    }
    std::printf("invariants: %sviolated%s (%s)\n", use_color() ? "\x1b[31m" : "", sgr_reset(),
                check.violation.c_str());
    throw IntegrityError("schedule invariants violated: " + check.violation);
}

// ---- dataset-stats ----------------------------------------------------------

int cmd_dataset_stats(const std::string& data_path) {
    const Dataset data = parse_csv(data_path);
    std::printf("users: %d\n", data.meta.num_users);
    std::printf("items: %d\n", data.meta.num_items);
    std::printf("interactions: %lld\n", static_cast<long long>(data.meta.num_interactions));
    std::printf("feature_dim: %d\n", data.meta.feature_dim);
    std::printf("action_repetition: %s\n", fixed(data.meta.action_repetition, 6).c_str());
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"dynamic graph collaborative filtering"};
    app.require_subcommand(1);

    TrainArgs ta;
    CLI::App* t = app.add_subcommand("train", "train a model and write checkpoints and reports");
    t->add_option("--data", ta.data, "interaction CSV path");
    t->add_option("--synthetic", ta.synthetic,
                  "inline synthetic spec users:items:clusters:events:offprob");
    t->add_option("--config", ta.config, "key = value config file");
    CLI::Option* seed_opt = t->add_option("--seed", ta.seed, "seed override");
    t->add_option("--out", ta.out, "output directory (default .)");

    std::string eval_ckpt, eval_data;
    CLI::App* ev = app.add_subcommand("evaluate", "score a checkpoint on a dataset's splits");
    ev->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    ev->add_option("--data", eval_data, "interaction CSV path")->required();

    std::string pr_ckpt;
    int pr_user = 0, pr_k = 10;
    double pr_dt = 0.0;
    CLI::App* pr = app.add_subcommand("predict", "rank items for a user at a future time");
    pr->add_option("--checkpoint", pr_ckpt, "checkpoint path")->required();
    pr->add_option("--user", pr_user, "dense user id")->required();
    pr->add_option("--delta-t", pr_dt, "seconds past the user's last interaction");
    pr->add_option("--k", pr_k, "list length (default 10)");

    std::string bi_data;
    CLI::App* bi = app.add_subcommand("batch-inspect", "build and check the t-batch schedule");
    bi->add_option("--data", bi_data, "interaction CSV path")->required();

    std::string ds_data;
    CLI::App* ds = app.add_subcommand("dataset-stats", "print parsed dataset counters");
    ds->add_option("--data", ds_data, "interaction CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    ta.seed_set = seed_opt->count() > 0;

    try {
        if (t->parsed()) return cmd_train(ta);
        if (ev->parsed()) return cmd_evaluate(eval_ckpt, eval_data);
        if (pr->parsed()) return cmd_predict(pr_ckpt, pr_user, pr_dt, pr_k);
        if (bi->parsed()) return cmd_batch_inspect(bi_data);
        if (ds->parsed()) return cmd_dataset_stats(ds_data);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const IntegrityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const LookupError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const OrderingError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DimensionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace dgcf
