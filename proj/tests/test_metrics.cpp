#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "dgcf/error.hpp"
#include "dgcf/metrics.hpp"

TEST_CASE("a list of perfect ranks scores a full mrr") {
    CHECK(dgcf::mrr({1, 1, 1}) == doctest::Approx(1.0));
}

TEST_CASE("mrr averages the reciprocal ranks") {
    CHECK(dgcf::mrr({1, 2, 4}) == doctest::Approx((1.0 + 0.5 + 0.25) / 3.0));
}

TEST_CASE("recall counts the ranks inside the cutoff") {
    CHECK(dgcf::recall_at_k({1, 11, 10, 12}, 10) == doctest::Approx(0.5));
}

TEST_CASE("recall is zero when every rank misses the cutoff") {
    CHECK(dgcf::recall_at_k({11, 12, 13}, 10) == 0.0);
}

TEST_CASE("recall saturates when the cutoff covers the worst rank") {
    CHECK(dgcf::recall_at_k({3, 7, 2}, 7) == 1.0);
    CHECK(dgcf::recall_at_k({3, 7, 2}, 100) == 1.0);
}

TEST_CASE("degenerate metric inputs are rejected") {
    CHECK_THROWS_AS(dgcf::mrr({}), dgcf::DomainError);
    CHECK_THROWS_AS(dgcf::recall_at_k({}, 10), dgcf::DomainError);
    CHECK_THROWS_AS(dgcf::recall_at_k({1, 2}, 0), dgcf::DomainError);
    CHECK_THROWS_AS(dgcf::mrr({1, 0, 2}), dgcf::DomainError);
    CHECK_THROWS_AS(dgcf::recall_at_k({-1}, 5), dgcf::DomainError);
}

TEST_CASE("metrics agree with brute-force loops on random lists") {
    std::mt19937_64 rng(131);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 40);
        std::vector<int> ranks(n);
        for (int& r : ranks) r = 1 + static_cast<int>(rng() % 100);
        const int k = 1 + static_cast<int>(rng() % 20);
        double sum = 0.0;
        int hits = 0;
        for (int r : ranks) {
            sum += 1.0 / r;
            if (r <= k) ++hits;
        }
        CHECK(dgcf::mrr(ranks) == doctest::Approx(sum / n));
        CHECK(dgcf::recall_at_k(ranks, k) == doctest::Approx(static_cast<double>(hits) / n));
    }
}

TEST_CASE("metrics ignore the order of the rank list") {
    std::mt19937_64 rng(137);
    std::vector<int> ranks{5, 1, 9, 2, 2, 30, 14};
    const double m = dgcf::mrr(ranks);
    const double r = dgcf::recall_at_k(ranks, 10);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(ranks.begin(), ranks.end(), rng);
        CHECK(dgcf::mrr(ranks) == doctest::Approx(m));
        CHECK(dgcf::recall_at_k(ranks, 10) == doctest::Approx(r));
    }
}

TEST_CASE("recall never decreases as the cutoff grows") {
    std::vector<int> ranks{4, 8, 15, 16, 23, 42};
    double prev = 0.0;
    for (int k = 1; k <= 50; ++k) {
        const double r = dgcf::recall_at_k(ranks, k);
        CHECK(r >= prev);
        prev = r;
    }
    CHECK(prev == 1.0);
}

TEST_CASE("improving one rank never hurts either metric") {
    std::vector<int> ranks{3, 12, 7};
    const double m0 = dgcf::mrr(ranks);
    const double r0 = dgcf::recall_at_k(ranks, 10);
    ranks[1] = 5;
    CHECK(dgcf::mrr(ranks) >= m0);
    CHECK(dgcf::recall_at_k(ranks, 10) >= r0);
}

TEST_CASE("metric values stay inside their ranges") {
    std::mt19937_64 rng(139);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 20);
        std::vector<int> ranks(n);
        for (int& r : ranks) r = 1 + static_cast<int>(rng() % 1000);
        const double m = dgcf::mrr(ranks);
        CHECK(m > 0.0);
        CHECK(m <= 1.0);
        const double r = dgcf::recall_at_k(ranks, 10);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("rank records reduce to their rank column") {
    std::vector<dgcf::RankRecord> records{{10, 3}, {11, 1}, {12, 7}};
    CHECK(dgcf::ranks_of(records) == std::vector<int>{3, 1, 7});
}
