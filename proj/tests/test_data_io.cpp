#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dgcf/data_io.hpp"
#include "dgcf/error.hpp"

using dgcf::Dataset;
using dgcf::Interaction;
using dgcf::SyntheticSpec;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

bool same_log(const std::vector<Interaction>& a, const std::vector<Interaction>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].seq != b[i].seq || a[i].user != b[i].user || a[i].item != b[i].item ||
            a[i].time != b[i].time || a[i].features != b[i].features)
            return false;
    }
    return true;
}

Interaction make_ix(int user, int item, double time) {
    Interaction x;
    x.user = user;
    x.item = item;
    x.time = time;
    return x;
}

} // namespace

TEST_CASE("a hand-written file parses into the expected dense tuples") {
    TempFile f("fixture_hand.csv",
               "user_id,item_id,timestamp,state_label,f1\n"
               "42,7,100.0,0,0.5\n"
               "42,9,50.0,0,1.5\n"
               "77,7,75.0,0,2.5\n");
    Dataset ds = dgcf::parse_csv(f.path);
    CHECK(ds.meta.num_users == 2);
    CHECK(ds.meta.num_items == 2);
    CHECK(ds.meta.num_interactions == 3);
    CHECK(ds.meta.feature_dim == 1);
    CHECK(ds.meta.action_repetition == 0.0);
    REQUIRE(ds.interactions.size() == 3);
    // Rows are sorted by time first, then ids run in first-appearance order.
    const Interaction& a = ds.interactions[0];
    CHECK(a.seq == 0);
    CHECK(a.user == 0); // original 42
    CHECK(a.item == 0); // original 9
    CHECK(a.time == 50.0);
    CHECK(a.features == std::vector<double>{1.5});
    const Interaction& b = ds.interactions[1];
    CHECK(b.user == 1); // original 77
    CHECK(b.item == 1); // original 7
    CHECK(b.time == 75.0);
    const Interaction& c = ds.interactions[2];
    CHECK(c.user == 0);
    CHECK(c.item == 1);
    CHECK(c.time == 100.0);
    CHECK(c.features == std::vector<double>{0.5});
}

TEST_CASE("carriage returns and missing feature columns are tolerated") {
    TempFile f("fixture_crlf.csv",
               "user_id,item_id,timestamp,state_label\r\n"
               "5,6,1.0,0\r\n"
               "5,8,2.0,0\r\n");
    Dataset ds = dgcf::parse_csv(f.path);
    CHECK(ds.meta.num_users == 1);
    CHECK(ds.meta.num_items == 2);
    CHECK(ds.meta.feature_dim == 0);
    CHECK(ds.interactions[0].features.empty());
}

TEST_CASE("parsing the same file twice gives identical streams") {
    TempFile f("fixture_idem.csv",
               "user_id,item_id,timestamp,state_label,f1,f2\n"
               "1,2,3.0,0,0.1,0.2\n"
               "4,2,1.0,1,0.3,0.4\n"
               "1,5,2.0,0,0.5,0.6\n");
    Dataset first = dgcf::parse_csv(f.path);
    Dataset second = dgcf::parse_csv(f.path);
    CHECK(same_log(first.interactions, second.interactions));
}

TEST_CASE("malformed rows are reported with their line number") {
    TempFile bad_time("fixture_badtime.csv",
                      "user_id,item_id,timestamp,state_label\n"
                      "1,2,3.0,0\n"
                      "1,2,not_a_time,0\n");
    try {
        dgcf::parse_csv(bad_time.path);
        FAIL("expected a parse failure");
    } catch (const dgcf::ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    TempFile short_row("fixture_short.csv",
                       "user_id,item_id,timestamp,state_label\n"
                       "1,2\n");
    CHECK_THROWS_AS(dgcf::parse_csv(short_row.path), dgcf::ParseError);

    TempFile ragged("fixture_ragged.csv",
                    "user_id,item_id,timestamp,state_label,f1\n"
                    "1,2,1.0,0,0.5\n"
                    "1,2,2.0,0,0.5,0.7\n");
    CHECK_THROWS_AS(dgcf::parse_csv(ragged.path), dgcf::ParseError);

    TempFile negative("fixture_negtime.csv",
                      "user_id,item_id,timestamp,state_label\n"
                      "1,2,-5.0,0\n");
    CHECK_THROWS_AS(dgcf::parse_csv(negative.path), dgcf::ParseError);

    CHECK_THROWS_AS(dgcf::parse_csv("no_such_file_anywhere.csv"), dgcf::IoError);
}

TEST_CASE("writing and re-parsing a log is lossless") {
    SyntheticSpec spec{20, 10, 2, 500, 0.3, 77};
    Dataset ds = dgcf::canonicalize(dgcf::generate_synthetic(spec));
    TempFile f("fixture_roundtrip.csv", "");
    dgcf::write_csv(f.path, ds.interactions);
    Dataset back = dgcf::parse_csv(f.path);
    CHECK(same_log(ds.interactions, back.interactions));
    CHECK(back.meta.num_users == ds.meta.num_users);
    CHECK(back.meta.num_items == ds.meta.num_items);
}

TEST_CASE("ten interactions split eight one one") {
    std::vector<Interaction> log;
    for (int i = 0; i < 10; ++i) log.push_back(make_ix(0, 0, static_cast<double>(i)));
    dgcf::Splits s = dgcf::split_80_10_10(log);
    CHECK(s.train_end == 8);
    CHECK(s.val_end == 9);
}

TEST_CASE("split boundaries follow floor arithmetic on a large count") {
    std::vector<Interaction> log(157474);
    dgcf::Splits s = dgcf::split_80_10_10(log);
    CHECK(s.train_end == 125979);
    CHECK(s.val_end - s.train_end == 15747);
    CHECK(log.size() - s.val_end == 15748);
}

TEST_CASE("the three split ranges partition the log") {
    std::vector<Interaction> log(1234);
    dgcf::Splits s = dgcf::split_80_10_10(log);
    CHECK(s.train_end <= s.val_end);
    CHECK(s.val_end <= log.size());
    CHECK(s.train_end + (s.val_end - s.train_end) + (log.size() - s.val_end) == log.size());
}

TEST_CASE("repetition rate is zero for all-distinct pairs") {
    std::vector<Interaction> log{make_ix(0, 0, 0), make_ix(0, 1, 1), make_ix(1, 0, 2)};
    CHECK(dgcf::action_repetition(log) == 0.0);
}

TEST_CASE("repetition rate counts exact pair recurrences") {
    std::vector<Interaction> log{make_ix(0, 0, 0), make_ix(0, 0, 1), make_ix(0, 1, 2)};
    CHECK(dgcf::action_repetition(log) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("repetition rate of an empty log is a domain error") {
    CHECK_THROWS_AS(dgcf::action_repetition({}), dgcf::DomainError);
}

TEST_CASE("with the off-cluster chance at zero every event stays in its block") {
    SyntheticSpec spec{20, 12, 4, 2000, 0.0, 5};
    auto log = dgcf::generate_synthetic(spec);
    REQUIRE(log.size() == 2000);
    for (const Interaction& x : log) {
        CHECK(x.user / 5 == x.item / 3); // 5 users, 3 items per block
    }
}

TEST_CASE("with the off-cluster chance at one the items are uniform") {
    SyntheticSpec spec{20, 20, 4, 100000, 1.0, 6};
    auto log = dgcf::generate_synthetic(spec);
    int64_t in_cluster = 0;
    for (const Interaction& x : log)
        if (x.user / 5 == x.item / 5) ++in_cluster;
    const double frac = static_cast<double>(in_cluster) / static_cast<double>(log.size());
    CHECK(frac > 0.23);
    CHECK(frac < 0.27);
}

TEST_CASE("cluster co-occurrence matches the generative mixture within two percent") {
    const int clusters = 4;
    const double p = 0.2;
    SyntheticSpec spec{40, 40, clusters, 100000, p, 7};
    auto log = dgcf::generate_synthetic(spec);
    std::vector<std::vector<int64_t>> counts(clusters, std::vector<int64_t>(clusters, 0));
    std::vector<int64_t> totals(clusters, 0);
    for (const Interaction& x : log) {
        const int cu = x.user / 10;
        const int ci = x.item / 10;
        ++counts[cu][ci];
        ++totals[cu];
    }
    for (int cu = 0; cu < clusters; ++cu) {
        REQUIRE(totals[cu] > 0);
        for (int ci = 0; ci < clusters; ++ci) {
            const double observed = static_cast<double>(counts[cu][ci]) / static_cast<double>(totals[cu]);
            const double expected = (cu == ci) ? (1.0 - p) + p / clusters : p / clusters;
            CHECK(std::abs(observed - expected) <= 0.02);
        }
    }
}

TEST_CASE("synthetic generation is bitwise reproducible under a seed") {
    SyntheticSpec spec{10, 10, 2, 300, 0.5, 9};
    auto a = dgcf::generate_synthetic(spec);
    auto b = dgcf::generate_synthetic(spec);
    CHECK(same_log(a, b));
    spec.seed = 10;
    auto c = dgcf::generate_synthetic(spec);
    CHECK_FALSE(same_log(a, c));
}

TEST_CASE("synthetic timestamps are the event index") {
    SyntheticSpec spec{4, 4, 2, 50, 0.1, 11};
    auto log = dgcf::generate_synthetic(spec);
    for (size_t i = 0; i < log.size(); ++i) {
        CHECK(log[i].seq == static_cast<int>(i));
        CHECK(log[i].time == static_cast<double>(i));
    }
}

TEST_CASE("cluster counts must divide both sides") {
    CHECK_THROWS_AS(dgcf::generate_synthetic(SyntheticSpec{10, 10, 3, 10, 0.0, 1}),
                    dgcf::DomainError);
    CHECK_THROWS_AS(dgcf::generate_synthetic(SyntheticSpec{9, 10, 3, 10, 0.0, 1}),
                    dgcf::DomainError);
    CHECK_THROWS_AS(dgcf::generate_synthetic(SyntheticSpec{10, 10, 2, 10, 1.5, 1}),
                    dgcf::DomainError);
}

TEST_CASE("the inline synthetic spec syntax parses into its five fields") {
    SyntheticSpec s = dgcf::parse_synthetic_spec("200:100:4:20000:0.1");
    CHECK(s.users == 200);
    CHECK(s.items == 100);
    CHECK(s.clusters == 4);
    CHECK(s.events == 20000);
    CHECK(s.off_cluster_prob == doctest::Approx(0.1));
    CHECK_THROWS_AS(dgcf::parse_synthetic_spec("200:100:4"), dgcf::ConfigError);
    CHECK_THROWS_AS(dgcf::parse_synthetic_spec("a:b:c:d:e"), dgcf::ConfigError);
}

TEST_CASE("an empty config yields the documented defaults") {
    dgcf::ConfigBundle cfg = dgcf::parse_config_text("");
    CHECK(cfg.model.d == 128);
    CHECK(cfg.model.history_capacity == 20);
    CHECK(cfg.model.aggregator == dgcf::AggregatorKind::attention);
    CHECK(cfg.model.lambda_u == 1.0);
    CHECK(cfg.model.alpha_v == 1.0);
    CHECK(cfg.model.use_zero);
    CHECK(cfg.model.use_first);
    CHECK(cfg.model.use_second);
    CHECK(cfg.model.squared_loss);
    CHECK(cfg.model.detach_targets);
    CHECK(cfg.train.epochs == 50);
    CHECK(cfg.train.learning_rate == 1e-3);
    CHECK(cfg.train.l2_penalty == 1e-3);
    CHECK(cfg.train.bptt_batches == 1);
    CHECK_FALSE(cfg.train.carry_states);
    CHECK(cfg.train.seed == 42);
}

TEST_CASE("config keys parse into their fields") {
    dgcf::ConfigBundle cfg = dgcf::parse_config_text(
        "# comment line\n"
        "d = 32\n"
        "T = 7\n"
        "aggregator = mean\n"
        "lambda_u = 0.3\n"
        "alpha_v = 0.25\n"
        "theta = tanh\n"
        "phi = leaky_relu\n"
        "fusion = sigmoid\n"
        "squared_loss = false\n"
        "detach_targets = false\n"
        "carry_states = true\n"
        "epochs = 3\n"
        "lr = 0.01 # trailing comment\n"
        "l2 = 0\n"
        "bptt_window = 2\n"
        "segment_max_interactions = 25\n"
        "seed = 2026\n");
    CHECK(cfg.model.d == 32);
    CHECK(cfg.model.history_capacity == 7);
    CHECK(cfg.model.aggregator == dgcf::AggregatorKind::mean);
    CHECK(cfg.model.lambda_u == doctest::Approx(0.3));
    CHECK(cfg.model.alpha_v == doctest::Approx(0.25));
    CHECK(cfg.model.theta == dgcf::Activation::tanh);
    CHECK(cfg.model.phi == dgcf::Activation::leaky_relu);
    CHECK_FALSE(cfg.model.squared_loss);
    CHECK_FALSE(cfg.model.detach_targets);
    CHECK(cfg.train.carry_states);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.learning_rate == doctest::Approx(0.01));
    CHECK(cfg.train.l2_penalty == 0.0);
    CHECK(cfg.train.bptt_batches == 2);
    CHECK(cfg.train.segment_max_interactions == 25);
    CHECK(cfg.train.seed == 2026);
}

TEST_CASE("the mechanisms key selects the update paths") {
    dgcf::ConfigBundle cfg = dgcf::parse_config_text("mechanisms = zero,first\n");
    CHECK(cfg.model.use_zero);
    CHECK(cfg.model.use_first);
    CHECK_FALSE(cfg.model.use_second);
}

TEST_CASE("bad config input names the offending key") {
    auto expect_mentions = [](const std::string& text, const std::string& needle) {
        try {
            dgcf::parse_config_text(text);
            FAIL("expected a config failure for: " << text);
        } catch (const dgcf::ConfigError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
        }
    };
    expect_mentions("aggregator = foo\n", "aggregator");
    expect_mentions("warp_speed = 9\n", "warp_speed");
    expect_mentions("d = fast\n", "d");
    expect_mentions("seed = 12x\n", "seed");
    expect_mentions("epochs = 0\n", "epochs");
    expect_mentions("mechanisms = zero,sixth\n", "mechanisms");
    expect_mentions("d 32\n", "line 1");
}

TEST_CASE("a missing config file is an io failure") {
    CHECK_THROWS_AS(dgcf::parse_config("no_such_config_anywhere.cfg"), dgcf::IoError);
}
