#include "dgcf/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dgcf/error.hpp"

namespace dgcf {

namespace {

struct RawRow {
    std::string user, item;
    double time = 0.0;
    std::vector<double> features;
};

double parse_number(const std::string& field, size_t line_no, const char* what) {
    try {
        size_t used = 0;
        const double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + field + "'");
    }
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

Dataset finalize(std::vector<RawRow> rows) {
    // Stable sort keeps input order among equal timestamps, and ids are
    // assigned along the sorted stream so fixtures stay predictable.
    std::stable_sort(rows.begin(), rows.end(),
                     [](const RawRow& a, const RawRow& b) { return a.time < b.time; });

    Dataset ds;
    std::unordered_map<std::string, int> user_ids, item_ids;
    ds.interactions.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        RawRow& r = rows[i];
        auto u = user_ids.emplace(r.user, static_cast<int>(user_ids.size()));
        auto v = item_ids.emplace(r.item, static_cast<int>(item_ids.size()));
        Interaction x;
        x.seq = static_cast<int>(i);
        x.user = u.first->second;
        x.item = v.first->second;
        x.time = r.time;
        x.features = std::move(r.features);
        ds.interactions.push_back(std::move(x));
    }
    ds.meta.num_users = static_cast<int>(user_ids.size());
    ds.meta.num_items = static_cast<int>(item_ids.size());
    ds.meta.num_interactions = static_cast<int64_t>(ds.interactions.size());
    ds.meta.feature_dim = ds.interactions.empty() ? 0 : static_cast<int>(ds.interactions[0].features.size());
    ds.meta.action_repetition = ds.interactions.empty() ? 0.0 : action_repetition(ds.interactions);
    return ds;
}

} // namespace

Dataset parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open data file '" + path + "'");

    std::vector<RawRow> rows;
    std::string line;
    size_t line_no = 0;
    int feature_dim = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) continue; // header
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() < 4)
            throw ParseError("line " + std::to_string(line_no) + ": expected at least 4 columns, got " +
                             std::to_string(fields.size()));
        RawRow r;
        r.user = fields[0];
        r.item = fields[1];
        r.time = parse_number(fields[2], line_no, "timestamp");
        if (!std::isfinite(r.time) || r.time < 0.0)
            throw ParseError("line " + std::to_string(line_no) + ": timestamp must be a finite non-negative number");
        parse_number(fields[3], line_no, "state label"); // present but unused
        r.features.reserve(fields.size() - 4);
        for (size_t i = 4; i < fields.size(); ++i)
            r.features.push_back(parse_number(fields[i], line_no, "feature"));
        if (feature_dim < 0)
            feature_dim = static_cast<int>(r.features.size());
        else if (feature_dim != static_cast<int>(r.features.size()))
            throw ParseError("line " + std::to_string(line_no) + ": " + std::to_string(r.features.size()) +
                             " features, earlier rows carry " + std::to_string(feature_dim));
        rows.push_back(std::move(r));
    }
    return finalize(std::move(rows));
}

Dataset canonicalize(std::vector<Interaction> events) {
    std::vector<RawRow> rows;
    rows.reserve(events.size());
    for (Interaction& x : events) {
        RawRow r;
        r.user = std::to_string(x.user);
        r.item = std::to_string(x.item);
        r.time = x.time;
        r.features = std::move(x.features);
        rows.push_back(std::move(r));
    }
    return finalize(std::move(rows));
}

Splits split_80_10_10(const std::vector<Interaction>& log) {
    const size_t n = log.size();
    Splits s;
    s.train_end = static_cast<size_t>(std::floor(0.8 * static_cast<double>(n)));
    s.val_end = static_cast<size_t>(std::floor(0.9 * static_cast<double>(n)));
    if (s.train_end == 0 || s.val_end == s.train_end || s.val_end == n)
        std::fprintf(stderr, "warning: degenerate split over %zu interactions (%zu/%zu/%zu)\n", n,
                     s.train_end, s.val_end - s.train_end, n - s.val_end);
    return s;
}

double action_repetition(const std::vector<Interaction>& log) {
    if (log.empty()) throw DomainError("action_repetition of an empty log");
    std::unordered_set<int64_t> seen;
    seen.reserve(log.size());
    int64_t repeats = 0;
    for (const Interaction& x : log) {
        const int64_t key = (static_cast<int64_t>(x.user) << 32) | static_cast<uint32_t>(x.item);
        if (!seen.insert(key).second) ++repeats;
    }
    return static_cast<double>(repeats) / static_cast<double>(log.size());
}

std::vector<Interaction> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.users <= 0 || spec.items <= 0 || spec.events < 0)
        throw DomainError("generate_synthetic: sizes must be positive");
    if (spec.clusters <= 0 || spec.users % spec.clusters != 0 || spec.items % spec.clusters != 0)
        throw DomainError("generate_synthetic: clusters must evenly divide users and items");
    if (spec.off_cluster_prob < 0.0 || spec.off_cluster_prob > 1.0)
        throw DomainError("generate_synthetic: off-cluster probability outside [0,1]");

    const int users_per = spec.users / spec.clusters;
    const int items_per = spec.items / spec.clusters;
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> pick_user(0, spec.users - 1);
    std::uniform_int_distribution<int> pick_any_item(0, spec.items - 1);
    std::uniform_int_distribution<int> pick_block_item(0, items_per - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    std::vector<Interaction> out;
    out.reserve(static_cast<size_t>(spec.events));
    for (int64_t e = 0; e < spec.events; ++e) {
        Interaction x;
        x.seq = static_cast<int>(e);
        x.user = pick_user(rng);
        if (coin(rng) < spec.off_cluster_prob) {
            x.item = pick_any_item(rng);
        } else {
            const int block = x.user / users_per;
            x.item = block * items_per + pick_block_item(rng);
        }
        x.time = static_cast<double>(e);
        out.push_back(std::move(x));
    }
    return out;
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    if (parts.size() != 5)
        throw ConfigError("synthetic spec must be users:items:clusters:events:offclusterprob, got '" + text + "'");
    SyntheticSpec s;
    try {
        s.users = std::stoi(parts[0]);
        s.items = std::stoi(parts[1]);
        s.clusters = std::stoi(parts[2]);
        s.events = std::stoll(parts[3]);
        s.off_cluster_prob = std::stod(parts[4]);
    } catch (const std::exception&) {
        throw ConfigError("synthetic spec holds a non-numeric field: '" + text + "'");
    }
    return s;
}

void write_csv(const std::string& path, const std::vector<Interaction>& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write data file '" + path + "'");
    out << "user_id,item_id,timestamp,state_label";
    const size_t df = log.empty() ? 0 : log[0].features.size();
    for (size_t i = 0; i < df; ++i) out << ",f" << i;
    out << "\n";
    char buf[64];
    for (const Interaction& x : log) {
        std::snprintf(buf, sizeof(buf), "%.17g", x.time);
        out << x.user << ',' << x.item << ',' << buf << ",0";
        for (double f : x.features) {
            std::snprintf(buf, sizeof(buf), "%.17g", f);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("short write to '" + path + "'");
}

void TrainSettings::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (learning_rate < 0.0) throw ConfigError("lr must be non-negative");
    if (l2_penalty < 0.0) throw ConfigError("l2 must be non-negative");
    if (bptt_batches < 1) throw ConfigError("bptt_window must be at least 1");
    if (segment_max_interactions < 1) throw ConfigError("segment_max_interactions must be at least 1");
}

ConfigBundle default_config() { return ConfigBundle{}; }

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double parse_double_value(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' wants a number, got '" + value + "'");
    }
}

int parse_int_value(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' wants an integer, got '" + value + "'");
    }
}

uint64_t parse_u64_value(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return static_cast<uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' wants an unsigned integer, got '" + value + "'");
    }
}

bool parse_bool_value(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "' wants true/false, got '" + value + "'");
}

Activation parse_activation_value(const std::string& key, const std::string& value) {
    if (value == "identity") return Activation::identity;
    if (value == "sigmoid") return Activation::sigmoid;
    if (value == "tanh") return Activation::tanh;
    if (value == "leaky_relu") return Activation::leaky_relu;
    throw ConfigError("key '" + key + "' wants identity|sigmoid|tanh|leaky_relu, got '" + value + "'");
}

} // namespace

ConfigBundle parse_config_text(const std::string& text) {
    ConfigBundle cfg = default_config();
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + " is missing a key or value");

        if (key == "d") cfg.model.d = parse_int_value(key, value);
        else if (key == "T") cfg.model.history_capacity = parse_int_value(key, value);
        else if (key == "aggregator") {
            if (value == "mean") cfg.model.aggregator = AggregatorKind::mean;
            else if (value == "recurrent") cfg.model.aggregator = AggregatorKind::recurrent;
            else if (value == "attention") cfg.model.aggregator = AggregatorKind::attention;
            else throw ConfigError("key 'aggregator' wants mean|recurrent|attention, got '" + value + "'");
        } else if (key == "mechanisms") {
            cfg.model.use_zero = cfg.model.use_first = cfg.model.use_second = false;
            std::istringstream ms(value);
            std::string m;
            while (std::getline(ms, m, ',')) {
                m = trim(m);
                if (m == "zero") cfg.model.use_zero = true;
                else if (m == "first") cfg.model.use_first = true;
                else if (m == "second") cfg.model.use_second = true;
                else throw ConfigError("key 'mechanisms' wants a subset of zero,first,second, got '" + m + "'");
            }
        } else if (key == "lambda_u") cfg.model.lambda_u = parse_double_value(key, value);
        else if (key == "alpha_v") cfg.model.alpha_v = parse_double_value(key, value);
        else if (key == "dt_norm") cfg.model.dt_norm = parse_double_value(key, value);
        else if (key == "leaky_slope") cfg.model.leaky_slope = parse_double_value(key, value);
        else if (key == "theta") cfg.model.theta = parse_activation_value(key, value);
        else if (key == "phi") cfg.model.phi = parse_activation_value(key, value);
        else if (key == "fusion") cfg.model.fusion = parse_activation_value(key, value);
        else if (key == "squared_loss") cfg.model.squared_loss = parse_bool_value(key, value);
        else if (key == "detach_targets") cfg.model.detach_targets = parse_bool_value(key, value);
        else if (key == "feature_mode") {
            if (value == "duplicate") cfg.model.feature_mode = FeatureMode::duplicate;
            else if (value == "split") cfg.model.feature_mode = FeatureMode::split;
            else if (value == "one_hot") cfg.model.feature_mode = FeatureMode::one_hot;
            else throw ConfigError("key 'feature_mode' wants duplicate|split|one_hot, got '" + value + "'");
        } else if (key == "history_policy") {
            if (value == "snapshot") cfg.model.history_policy = HistoryPolicy::snapshot;
            else if (value == "live") cfg.model.history_policy = HistoryPolicy::live;
            else throw ConfigError("key 'history_policy' wants snapshot|live, got '" + value + "'");
        } else if (key == "epochs") cfg.train.epochs = parse_int_value(key, value);
        else if (key == "lr") cfg.train.learning_rate = parse_double_value(key, value);
        else if (key == "l2") cfg.train.l2_penalty = parse_double_value(key, value);
        else if (key == "bptt_window") cfg.train.bptt_batches = parse_int_value(key, value);
        else if (key == "segment_max_interactions")
            cfg.train.segment_max_interactions = parse_int_value(key, value);
        else if (key == "carry_states") cfg.train.carry_states = parse_bool_value(key, value);
        else if (key == "seed") cfg.train.seed = parse_u64_value(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    cfg.model.validate();
    cfg.train.validate();
    return cfg;
}

ConfigBundle parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace dgcf
