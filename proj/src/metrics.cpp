#include "dgcf/metrics.hpp"

#include <string>

#include "dgcf/error.hpp"

namespace dgcf {

namespace {

void check_ranks(const std::vector<int>& ranks, const char* who) {
    if (ranks.empty()) throw DomainError(std::string(who) + " of an empty rank list");
    for (int r : ranks)
        if (r < 1) throw DomainError(std::string(who) + ": rank " + std::to_string(r) + " is below 1");
}

} // namespace

double mrr(const std::vector<int>& ranks) {
    check_ranks(ranks, "mrr");
    double s = 0.0;
    for (int r : ranks) s += 1.0 / static_cast<double>(r);
    return s / static_cast<double>(ranks.size());
}

double recall_at_k(const std::vector<int>& ranks, int k) {
    check_ranks(ranks, "recall_at_k");
    if (k < 1) throw DomainError("recall_at_k: k must be at least 1");
    size_t hits = 0;
    for (int r : ranks)
        if (r <= k) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::vector<int> ranks_of(const std::vector<RankRecord>& records) {
    std::vector<int> out;
    out.reserve(records.size());
    for (const RankRecord& r : records) out.push_back(r.rank);
    return out;
}

} // namespace dgcf
