// Error taxonomy shared across the engine. Each class maps to one failure
// family so callers (and the CLI exit-code mapping) can discriminate.
#pragma once

#include <stdexcept>

namespace dgcf {

// Shape disagreement between operands. Message names both shapes.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input outside an operation's mathematical domain (empty softmax, rank 0, ...).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// API contract breach (non-scalar backward root, neighbor list over capacity, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Timestamp regression against recorded per-entity state or an unsorted log.
struct OrderingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unknown entity id.
struct LookupError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Malformed data file; message carries the line number.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or unknown configuration key/value; message names the key.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint checksum or container mismatch.
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value reached a place that must stay finite.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dgcf
