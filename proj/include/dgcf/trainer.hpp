// Training and evaluation over the chronological interaction stream.
//
// Training walks the t-batch schedule in order, accumulates the evolutionary
// loss over a truncation window, then backpropagates, applies one Adam step
// and detaches every entity state so gradients never cross window
// boundaries. Evaluation replays interactions with teacher forcing: each
// test interaction is first scored from the current states, then applied.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgcf/adam.hpp"
#include "dgcf/data_io.hpp"
#include "dgcf/metrics.hpp"
#include "dgcf/model.hpp"
#include "dgcf/tbatch.hpp"

namespace dgcf {

struct EpochRow {
    int epoch = 0;                          // 0 is the untrained baseline
    std::optional<double> train_loss;       // mean per interaction; empty for the baseline
    double val_mrr = 0.0;
    double val_recall10 = 0.0;
};

struct Checkpoint {
    uint16_t version = 1;
    ModelConfig model_config;   // fully resolved (feature_dim, dt_norm)
    TrainSettings train_settings;
    int num_users = 0;
    int num_items = 0;
    int epoch = 0;              // completed training epochs
    double best_val_mrr = -1.0;
    int best_epoch = -1;
    ModelParams params;
    AdamState opt;
    GraphSnapshot states;       // entity states at the end of `epoch`
};

struct TrainResult {
    Checkpoint best; // highest validation MRR (ties keep the earlier epoch)
    Checkpoint last; // resume point
    std::vector<EpochRow> log;          // epochs + 1 rows, baseline first
    std::vector<double> epoch_seconds;  // wall clock, parallel to log
};

// Each epoch replays the training stream from a fresh copy of the seeded
// initial states (or from the previous epoch's embeddings when
// settings.carry_states is set). Passing `resume` continues bit-for-bit
// where that checkpoint's run left off (same data, same settings),
// producing the remaining epochs.
TrainResult train(const Dataset& data, const Splits& splits, const ModelConfig& model_config,
                  const TrainSettings& settings, const Checkpoint* resume = nullptr);

struct EvalResult {
    double mrr_value = 0.0;
    double recall10 = 0.0;
    std::vector<RankRecord> records;
};

// Replays `replay` with teacher forcing, then walks `score`: project the
// user state to the interaction time, rank every item by distance, record
// the true item's rank, apply the interaction. States evolve on a copy, the
// checkpoint is untouched.
EvalResult evaluate(const Checkpoint& ckpt, std::span<const Interaction> replay,
                    std::span<const Interaction> score);

// Teacher-forced stream execution without gradients. Rebinds its tape every
// `chunk` steps so memory stays bounded on long streams.
class StreamRunner {
public:
    StreamRunner(const ModelParams& params, const ModelConfig& cfg, GraphSnapshot& snap,
                 int chunk = 256);
    void step(const Interaction& x);
    // Expected partner embedding for a user projected dt_future ahead.
    // feature_source supplies interaction features where the config uses
    // them; the item id is never read.
    DenseMatrix predict(int user, double dt_future, const Interaction& feature_source);
    GraphSnapshot& snap() { return snap_; }

private:
    void maybe_rebind();

    const ModelParams& params_;
    const ModelConfig& cfg_;
    GraphSnapshot& snap_;
    int chunk_;
    int steps_since_bind_ = 0;
    Tape tape_;
    ParamVars pv_;
};

// Mean elapsed time between an entity's consecutive interactions over both
// sides of the training split; 1.0 when the split yields no positive gaps.
double compute_dt_norm(std::span<const Interaction> train);

// For each position, time until that user's next interaction inside the
// same split; 0 for the user's final appearance.
std::vector<double> future_gaps(std::span<const Interaction> split);

// Fills feature_dim from the dataset according to feature_mode and derives
// dt_norm from the training split when it is left at 0.
ModelConfig resolve_model_config(ModelConfig cfg, const DatasetMeta& meta,
                                 std::span<const Interaction> train);

// ---- checkpoint container ---------------------------------------------------
//
// Layout: magic "DGCF", u16 format version, four length-prefixed sections
// (config, params, optimizer, states), then a 64-bit FNV-1a checksum of all
// preceding bytes. Doubles travel as raw little-endian bits, so a round trip
// is exact.

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);
std::vector<uint8_t> encode_checkpoint(const Checkpoint& c);
Checkpoint decode_checkpoint(const std::vector<uint8_t>& bytes);

bool operator==(const Checkpoint& a, const Checkpoint& b); // byte-level equality

uint64_t config_fingerprint(const ModelConfig& model, const TrainSettings& train);
uint64_t fnv1a64(const uint8_t* data, size_t n);

} // namespace dgcf
