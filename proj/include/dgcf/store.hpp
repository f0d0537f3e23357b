// Mutable state of the evolving bipartite interaction graph: one embedding,
// one clock and one bounded partner history per entity. Users and items live
// in separate id spaces, both dense and 0-based.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dgcf/tensor.hpp"

namespace dgcf {

enum class Side : uint8_t { user = 0, item = 1 };

inline Side other_side(Side s) { return s == Side::user ? Side::item : Side::user; }

struct Interaction {
    int seq = 0; // position in the chronological log, 0-based
    int user = 0;
    int item = 0;
    double time = 0.0;
    std::vector<double> features; // may be empty
};

// An embedding value plus the tape node it was produced by. node is -1 once
// the state has been detached from its tape (truncation boundary, eval, or
// freshly loaded), in which case the value alone is authoritative.
struct StateRef {
    DenseMatrix value; // d x 1
    int node = -1;
};

struct HistoryEntry {
    int partner = 0; // id on the opposite side
    double time = 0.0;
    StateRef snapshot; // partner embedding frozen when the edge formed
};

struct EntityState {
    StateRef emb;
    std::optional<double> last_time;    // empty until the first interaction
    std::vector<HistoryEntry> history;  // chronological, length <= capacity
};

struct GraphSnapshot {
    int d = 0;
    int history_capacity = 0;
    double now = 0.0; // max time recorded so far
    std::vector<EntityState> users;
    std::vector<EntityState> items;

    EntityState& state(Side s, int id);
    const EntityState& state(Side s, int id) const;

    // Elapsed time since the entity's previous interaction; 0 when it has
    // never been seen.
    double elapsed_since_last(Side s, int id, double t) const;

    // Drops every cached tape node id (states and history snapshots).
    void detach_all();

    // Structural self-check used by tests: history partner ids must exist on
    // the opposite side, histories respect the capacity and stay
    // chronological, last_time never exceeds now.
    void check_consistent() const;
};

// Fresh graph with embeddings drawn i.i.d. from the standard normal
// distribution; the draw order is users then items, each row-major, so a
// seed pins every value.
GraphSnapshot init_states(int num_users, int num_items, int d, int history_capacity, uint64_t seed);

// Applies one interaction: replaces both embeddings, advances both clocks,
// and appends each entity to the partner's history carrying its pre-update
// embedding snapshot. Oldest entries are evicted once a history exceeds the
// capacity. Throws OrderingError when x.time precedes either entity's clock.
void record_interaction(GraphSnapshot& snap, const Interaction& x,
                        StateRef new_user_emb, StateRef new_item_emb);

// History entries of one entity in chronological order, optionally without
// the entries naming exclude_partner. Pointers stay valid until the next
// record_interaction touching this entity.
std::vector<HistoryEntry*> neighbors_for(GraphSnapshot& snap, Side s, int id,
                                         std::optional<int> exclude_partner = std::nullopt);
std::vector<const HistoryEntry*> neighbors_for(const GraphSnapshot& snap, Side s, int id,
                                               std::optional<int> exclude_partner = std::nullopt);

} // namespace dgcf
