// Ranking quality metrics over 1-based ranks of the true item.
#pragma once

#include <vector>

namespace dgcf {

struct RankRecord {
    int seq = 0;  // interaction the rank belongs to
    int rank = 0; // 1-based position of the true item
};

// Mean reciprocal rank. Ranks must be >= 1; an empty list is a domain error.
double mrr(const std::vector<int>& ranks);

// Fraction of ranks <= k. k must be >= 1; an empty list is a domain error.
double recall_at_k(const std::vector<int>& ranks, int k);

std::vector<int> ranks_of(const std::vector<RankRecord>& records);

} // namespace dgcf
