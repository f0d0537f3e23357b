#include "dgcf/tbatch.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "dgcf/error.hpp"

namespace dgcf {

size_t TBatchSchedule::interaction_count() const {
    size_t n = 0;
    for (const auto& b : batches) n += b.size();
    return n;
}

TBatchSchedule assign_batches(const std::vector<Interaction>& log) {
    int max_user = -1, max_item = -1;
    for (size_t i = 0; i < log.size(); ++i) {
        if (i > 0 && log[i].time < log[i - 1].time)
            throw OrderingError("log is not sorted by time at position " + std::to_string(i));
        if (log[i].user < 0 || log[i].item < 0)
            throw LookupError("negative entity id at position " + std::to_string(i));
        max_user = std::max(max_user, log[i].user);
        max_item = std::max(max_item, log[i].item);
    }

    TBatchSchedule s;
    s.last_user_batch.assign(max_user + 1, -1);
    s.last_item_batch.assign(max_item + 1, -1);
    for (const Interaction& x : log) {
        const int idx = std::max(s.last_user_batch[x.user], s.last_item_batch[x.item]) + 1;
        if (idx == static_cast<int>(s.batches.size())) s.batches.emplace_back();
        s.batches[idx].push_back(x.seq);
        s.last_user_batch[x.user] = idx;
        s.last_item_batch[x.item] = idx;
    }
    return s;
}

ScheduleCheck validate_schedule(const TBatchSchedule& schedule, const std::vector<Interaction>& log) {
    ScheduleCheck r;
    auto fail = [&](std::string why) {
        r.ok = false;
        r.violation = std::move(why);
        return r;
    };

    std::unordered_map<int, const Interaction*> by_seq;
    by_seq.reserve(log.size());
    for (const Interaction& x : log) by_seq.emplace(x.seq, &x);

    if (schedule.interaction_count() != log.size())
        return fail("schedule holds " + std::to_string(schedule.interaction_count()) +
                    " interactions, log holds " + std::to_string(log.size()));

    std::unordered_set<int> seen;
    seen.reserve(log.size());
    // batch index per entity along its own timeline, for the monotonicity check
    std::unordered_map<int, int> user_prev, item_prev;

    for (size_t b = 0; b < schedule.batches.size(); ++b) {
        std::unordered_set<int> users_here, items_here;
        for (int seq : schedule.batches[b]) {
            auto it = by_seq.find(seq);
            if (it == by_seq.end()) return fail("batch " + std::to_string(b) + " names unknown seq " + std::to_string(seq));
            if (!seen.insert(seq).second) return fail("seq " + std::to_string(seq) + " appears twice");
            const Interaction& x = *it->second;
            if (!users_here.insert(x.user).second)
                return fail("batch " + std::to_string(b) + " repeats user " + std::to_string(x.user));
            if (!items_here.insert(x.item).second)
                return fail("batch " + std::to_string(b) + " repeats item " + std::to_string(x.item));
        }
    }

    // Per-entity monotonicity must hold in stream order, not batch order.
    std::unordered_map<int, int> seq_to_batch;
    seq_to_batch.reserve(log.size());
    for (size_t b = 0; b < schedule.batches.size(); ++b)
        for (int seq : schedule.batches[b]) seq_to_batch[seq] = static_cast<int>(b);
    for (const Interaction& x : log) {
        const int b = seq_to_batch.at(x.seq);
        auto ucheck = user_prev.find(x.user);
        if (ucheck != user_prev.end() && b <= ucheck->second)
            return fail("user " + std::to_string(x.user) + " does not advance at seq " + std::to_string(x.seq));
        auto icheck = item_prev.find(x.item);
        if (icheck != item_prev.end() && b <= icheck->second)
            return fail("item " + std::to_string(x.item) + " does not advance at seq " + std::to_string(x.seq));
        user_prev[x.user] = b;
        item_prev[x.item] = b;
    }
    return r;
}

} // namespace dgcf
