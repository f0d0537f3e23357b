// Dependency-preserving batch construction for the interaction stream. Two
// interactions may share a batch only when they touch no common entity, so
// every batch can be processed as one parallel step without reordering any
// entity's personal timeline.
#pragma once

#include <string>
#include <vector>

#include "dgcf/store.hpp"

namespace dgcf {

struct TBatchSchedule {
    // Each batch lists interaction seq ids in their original stream order.
    std::vector<std::vector<int>> batches;
    // Final batch index per entity, -1 for entities that never appear.
    std::vector<int> last_user_batch;
    std::vector<int> last_item_batch;

    size_t interaction_count() const;
};

// Greedy chronological assignment: an interaction lands in the first batch
// after both of its entities' previous batches. The log must be sorted by
// time (ties already resolved by position); an out-of-order log throws
// OrderingError.
TBatchSchedule assign_batches(const std::vector<Interaction>& log);

struct ScheduleCheck {
    bool ok = true;
    std::string violation; // first problem found, empty when ok
};

// Verifies the three schedule invariants: every interaction appears exactly
// once, no batch repeats a user or an item, and each entity's batch indices
// strictly increase along its own timeline. Within-batch order is free.
ScheduleCheck validate_schedule(const TBatchSchedule& schedule, const std::vector<Interaction>& log);

} // namespace dgcf
