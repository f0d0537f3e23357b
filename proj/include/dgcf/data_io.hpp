// Dataset ingestion and generation. The on-disk format is one header line
// followed by `user_id,item_id,timestamp,state_label,f1,f2,...` rows; ids
// are remapped to dense 0-based indices in order of first appearance along
// the time-sorted stream, and the state label column is ignored.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgcf/model.hpp"
#include "dgcf/store.hpp"

namespace dgcf {

struct DatasetMeta {
    int num_users = 0;
    int num_items = 0;
    int64_t num_interactions = 0;
    int feature_dim = 0;
    double action_repetition = 0.0; // share of (user,item) pairs seen before
};

struct Dataset {
    std::vector<Interaction> interactions; // sorted by (time, input order), seq = index
    DatasetMeta meta;
};

Dataset parse_csv(const std::string& path);

// Builds a Dataset from an in-memory event stream (sorting, remapping and
// meta computation identical to parse_csv).
Dataset canonicalize(std::vector<Interaction> events);

// Chronological 80/10/10 cut: train is [0, floor(0.8 n)), validation runs to
// floor(0.9 n), test takes the rest. Warns on stderr when a part is empty.
struct Splits {
    size_t train_end = 0;
    size_t val_end = 0;
};
Splits split_80_10_10(const std::vector<Interaction>& log);

// Share of interactions whose (user, item) pair occurred earlier in the log.
double action_repetition(const std::vector<Interaction>& log);

// Clustered bipartite stream: users and items are partitioned into `clusters`
// equal blocks, every event draws a user uniformly and then an item from the
// user's block, except that with probability `off_cluster_prob` the item is
// drawn uniformly from the whole catalogue. Timestamps are the event index.
struct SyntheticSpec {
    int users = 0;
    int items = 0;
    int clusters = 1;
    int64_t events = 0;
    double off_cluster_prob = 0.0;
    uint64_t seed = 0;
};
std::vector<Interaction> generate_synthetic(const SyntheticSpec& spec);

// "users:items:clusters:events:offclusterprob"
SyntheticSpec parse_synthetic_spec(const std::string& text);

void write_csv(const std::string& path, const std::vector<Interaction>& log);

// Training-run settings that are not part of the model itself.
struct TrainSettings {
    int epochs = 50;
    double learning_rate = 1e-3;
    double l2_penalty = 1e-3;
    int bptt_batches = 1;              // t-batches folded into one backward pass
    int segment_max_interactions = 500; // hard cap per backward pass
    // true: embeddings persist across epochs while clocks and histories reset
    // for the replay; false: every epoch restarts from the seeded initial
    // snapshot. Carrying lets the update map iterate to its fixed point, so
    // states flatten out and ranking degrades; restarting keeps every epoch
    // anchored to the distinct initial embeddings.
    bool carry_states = false;
    uint64_t seed = 42;

    void validate() const;
};

struct ConfigBundle {
    ModelConfig model;
    TrainSettings train;
};

// `key = value` lines, `#` starts a comment, blank lines are fine. Unknown
// keys and ill-typed values raise ConfigError naming the key. An absent or
// empty file yields the defaults above.
ConfigBundle parse_config(const std::string& path);
ConfigBundle parse_config_text(const std::string& text);
ConfigBundle default_config();

} // namespace dgcf
