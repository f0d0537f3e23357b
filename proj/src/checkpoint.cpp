#include <cstdio>
#include <fstream>

#include "dgcf/trainer.hpp"
#include "serialize.hpp"

namespace dgcf {

uint64_t fnv1a64(const uint8_t* data, size_t n) {
    uint64_t hash = 14695981039346656037ull;
    for (size_t i = 0; i < n; ++i) {
        hash ^= data[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

namespace {

constexpr char kMagic[4] = {'D', 'G', 'C', 'F'};

uint8_t checked_u8(ByteReader& r, uint8_t max, const char* what) {
    const uint8_t v = r.u8();
    if (v > max) throw IntegrityError(std::string("checkpoint holds an invalid ") + what);
    return v;
}

void write_model_config(ByteWriter& w, const ModelConfig& c) {
    w.i32(c.d);
    w.i32(c.feature_dim);
    w.u8(static_cast<uint8_t>(c.feature_mode));
    w.u8(static_cast<uint8_t>(c.aggregator));
    w.u8(c.use_zero ? 1 : 0);
    w.u8(c.use_first ? 1 : 0);
    w.u8(c.use_second ? 1 : 0);
    w.i32(c.history_capacity);
    w.f64(c.lambda_u);
    w.f64(c.alpha_v);
    w.f64(c.dt_norm);
    w.f64(c.leaky_slope);
    w.u8(static_cast<uint8_t>(c.theta));
    w.u8(static_cast<uint8_t>(c.phi));
    w.u8(static_cast<uint8_t>(c.fusion));
    w.u8(c.squared_loss ? 1 : 0);
    w.u8(c.detach_targets ? 1 : 0);
    w.u8(static_cast<uint8_t>(c.history_policy));
}

ModelConfig read_model_config(ByteReader& r) {
    ModelConfig c;
    c.d = r.i32();
    c.feature_dim = r.i32();
    c.feature_mode = static_cast<FeatureMode>(checked_u8(r, 2, "feature mode"));
    c.aggregator = static_cast<AggregatorKind>(checked_u8(r, 2, "aggregator"));
    c.use_zero = r.u8() != 0;
    c.use_first = r.u8() != 0;
    c.use_second = r.u8() != 0;
    c.history_capacity = r.i32();
    c.lambda_u = r.f64();
    c.alpha_v = r.f64();
    c.dt_norm = r.f64();
    c.leaky_slope = r.f64();
    c.theta = static_cast<Activation>(checked_u8(r, 3, "activation"));
    c.phi = static_cast<Activation>(checked_u8(r, 3, "activation"));
    c.fusion = static_cast<Activation>(checked_u8(r, 3, "activation"));
    c.squared_loss = r.u8() != 0;
    c.detach_targets = r.u8() != 0;
    c.history_policy = static_cast<HistoryPolicy>(checked_u8(r, 1, "history policy"));
    return c;
}

void write_train_settings(ByteWriter& w, const TrainSettings& s) {
    w.i32(s.epochs);
    w.f64(s.learning_rate);
    w.f64(s.l2_penalty);
    w.i32(s.bptt_batches);
    w.i32(s.segment_max_interactions);
    w.u8(s.carry_states ? 1 : 0);
    w.u64(s.seed);
}

TrainSettings read_train_settings(ByteReader& r) {
    TrainSettings s;
    s.epochs = r.i32();
    s.learning_rate = r.f64();
    s.l2_penalty = r.f64();
    s.bptt_batches = r.i32();
    s.segment_max_interactions = r.i32();
    s.carry_states = r.u8() != 0;
    s.seed = r.u64();
    return s;
}

std::vector<uint8_t> encode_config_section(const Checkpoint& c) {
    ByteWriter w;
    write_model_config(w, c.model_config);
    write_train_settings(w, c.train_settings);
    w.i32(c.num_users);
    w.i32(c.num_items);
    w.i32(c.epoch);
    w.f64(c.best_val_mrr);
    w.i32(c.best_epoch);
    return std::move(w.buf);
}

std::vector<uint8_t> encode_params_section(const ModelParams& p) {
    ByteWriter w;
    p.visit([&](const char*, const DenseMatrix& m) { w.matrix(m); });
    return std::move(w.buf);
}

std::vector<uint8_t> encode_opt_section(const AdamState& o) {
    ByteWriter w;
    w.f64(o.learning_rate);
    w.f64(o.beta1);
    w.f64(o.beta2);
    w.f64(o.epsilon);
    w.f64(o.weight_decay);
    w.i64(o.step);
    w.u32(static_cast<uint32_t>(o.m.size()));
    for (const DenseMatrix& m : o.m) w.matrix(m);
    w.u32(static_cast<uint32_t>(o.v.size()));
    for (const DenseMatrix& m : o.v) w.matrix(m);
    return std::move(w.buf);
}

void write_entity(ByteWriter& w, const EntityState& e) {
    w.matrix(e.emb.value);
    w.u8(e.last_time.has_value() ? 1 : 0);
    w.f64(e.last_time.value_or(0.0));
    w.u32(static_cast<uint32_t>(e.history.size()));
    for (const HistoryEntry& h : e.history) {
        w.i32(h.partner);
        w.f64(h.time);
        w.matrix(h.snapshot.value);
    }
}

EntityState read_entity(ByteReader& r) {
    EntityState e;
    e.emb.value = r.matrix();
    const bool has_time = r.u8() != 0;
    const double t = r.f64();
    if (has_time) e.last_time = t;
    const uint32_t n = r.u32();
    e.history.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        HistoryEntry h;
        h.partner = r.i32();
        h.time = r.f64();
        h.snapshot.value = r.matrix();
        e.history.push_back(std::move(h));
    }
    return e;
}

std::vector<uint8_t> encode_states_section(const GraphSnapshot& s) {
    ByteWriter w;
    w.i32(s.d);
    w.i32(s.history_capacity);
    w.f64(s.now);
    w.u64(s.users.size());
    w.u64(s.items.size());
    for (const EntityState& e : s.users) write_entity(w, e);
    for (const EntityState& e : s.items) write_entity(w, e);
    return std::move(w.buf);
}

GraphSnapshot read_states_section(ByteReader& r) {
    GraphSnapshot s;
    s.d = r.i32();
    s.history_capacity = r.i32();
    s.now = r.f64();
    const uint64_t nu = r.u64();
    const uint64_t ni = r.u64();
    if (nu > (1ull << 32) || ni > (1ull << 32))
        throw IntegrityError("checkpoint entity counts are implausible");
    s.users.reserve(nu);
    s.items.reserve(ni);
    for (uint64_t i = 0; i < nu; ++i) s.users.push_back(read_entity(r));
    for (uint64_t i = 0; i < ni; ++i) s.items.push_back(read_entity(r));
    return s;
}

void expect_consumed(const ByteReader& r, const char* section) {
    if (!r.done())
        throw IntegrityError(std::string("checkpoint section '") + section +
                             "' carries trailing bytes");
}

} // namespace

std::vector<uint8_t> encode_checkpoint(const Checkpoint& c) {
    ByteWriter w;
    for (char ch : kMagic) w.u8(static_cast<uint8_t>(ch));
    w.u16(c.version);
    const std::vector<uint8_t> sections[4] = {
        encode_config_section(c),
        encode_params_section(c.params),
        encode_opt_section(c.opt),
        encode_states_section(c.states),
    };
    for (const auto& s : sections) {
        w.u64(s.size());
        w.buf.insert(w.buf.end(), s.begin(), s.end());
    }
    w.u64(fnv1a64(w.buf.data(), w.buf.size()));
    return std::move(w.buf);
}

Checkpoint decode_checkpoint(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < sizeof(kMagic) + 2 + 8)
        throw IntegrityError("checkpoint truncated");
    const uint64_t stored = [&] {
        ByteReader tail{bytes.data() + bytes.size() - 8, 8, 0};
        return tail.u64();
    }();
    if (stored != fnv1a64(bytes.data(), bytes.size() - 8))
        throw IntegrityError("checkpoint checksum mismatch");

    ByteReader r{bytes.data(), bytes.size() - 8, 0};
    for (char ch : kMagic)
        if (r.u8() != static_cast<uint8_t>(ch))
            throw IntegrityError("not a checkpoint file");
    Checkpoint c;
    c.version = r.u16();
    if (c.version != 1)
        throw IntegrityError("unsupported checkpoint version " + std::to_string(c.version));

    auto section = [&](const char* name) {
        const uint64_t len = r.u64();
        r.need(len);
        ByteReader sec{r.data + r.pos, static_cast<size_t>(len), 0};
        r.pos += len;
        (void)name;
        return sec;
    };

    {
        ByteReader sec = section("config");
        c.model_config = read_model_config(sec);
        c.train_settings = read_train_settings(sec);
        c.num_users = sec.i32();
        c.num_items = sec.i32();
        c.epoch = sec.i32();
        c.best_val_mrr = sec.f64();
        c.best_epoch = sec.i32();
        expect_consumed(sec, "config");
    }
    {
        ByteReader sec = section("params");
        // Shapes come from the wire; visit order fixes which tensor is which.
        c.params.visit([&](const char*, DenseMatrix& m) { m = sec.matrix(); });
        expect_consumed(sec, "params");
    }
    {
        ByteReader sec = section("optimizer");
        c.opt.learning_rate = sec.f64();
        c.opt.beta1 = sec.f64();
        c.opt.beta2 = sec.f64();
        c.opt.epsilon = sec.f64();
        c.opt.weight_decay = sec.f64();
        c.opt.step = sec.i64();
        const uint32_t nm = sec.u32();
        c.opt.m.reserve(nm);
        for (uint32_t i = 0; i < nm; ++i) c.opt.m.push_back(sec.matrix());
        const uint32_t nv = sec.u32();
        c.opt.v.reserve(nv);
        for (uint32_t i = 0; i < nv; ++i) c.opt.v.push_back(sec.matrix());
        expect_consumed(sec, "optimizer");
    }
    {
        ByteReader sec = section("states");
        c.states = read_states_section(sec);
        expect_consumed(sec, "states");
    }
    if (!r.done()) throw IntegrityError("checkpoint carries trailing bytes");
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    const std::vector<uint8_t> bytes = encode_checkpoint(c);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open '" + path + "'");
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw IoError("read from '" + path + "' failed");
    return decode_checkpoint(bytes);
}

bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return encode_checkpoint(a) == encode_checkpoint(b);
}

uint64_t config_fingerprint(const ModelConfig& model, const TrainSettings& train) {
    ByteWriter w;
    write_model_config(w, model);
    write_train_settings(w, train);
    return fnv1a64(w.buf.data(), w.buf.size());
}

} // namespace dgcf
