#include "cvmask/error.hpp"
#include "cvmask/metrics.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cvmask;

namespace {

std::vector<QueryRanking> rankings(const std::vector<std::size_t>& ranks) {
    std::vector<QueryRanking> out;
    for (std::size_t i = 0; i < ranks.size(); ++i) out.push_back({"q" + std::to_string(i), ranks[i]});
    return out;
}

}  // namespace

TEST_CASE("mrr") {
    CHECK(mrr(rankings({1, 1, 1})) == 1.0);
    CHECK(std::abs(mrr(rankings({1, 2, 4})) - 7.0 / 12.0) < 1e-12);
    CHECK_THROWS_AS(mrr(rankings({})), Error);
    CHECK_THROWS_AS(mrr(rankings({1, 0})), Error);

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> pick(1, 1000);
    std::vector<std::size_t> ranks(100);
    for (auto& r : ranks) r = pick(rng);
    CHECK(std::abs(mrr(rankings(ranks)) - oracle::mrr(ranks)) < 1e-12);
}

TEST_CASE("classification metrics") {
    const std::vector<int> truth{0, 1, 0, 1, 2, 2};
    const auto perfect = classification_metrics(truth, truth, 3);
    CHECK(perfect.macro_f1 == 1.0);
    CHECK(perfect.accuracy == 1.0);

    const std::vector<int> balanced{0, 1, 0, 1};
    const std::vector<int> constant{1, 1, 1, 1};
    const auto r = classification_metrics(constant, balanced, 2);
    CHECK(std::abs(r.macro_f1 - 1.0 / 3.0) < 1e-12);
    CHECK(r.per_class[0].f1 == 0.0);
    CHECK(r.per_class[1].precision == 0.5);
    CHECK(r.per_class[1].recall == 1.0);

    const auto empty = classification_metrics(truth, truth, 4);
    CHECK(empty.per_class[3].f1 == 0.0);
    CHECK(empty.per_class[3].support == 0);
    CHECK(empty.macro_f1 == doctest::Approx(0.75));

    CHECK_THROWS_AS(classification_metrics(std::vector<int>{0}, std::vector<int>{0, 1}, 2), Error);
    CHECK_THROWS_AS(classification_metrics(std::vector<int>{0, 5}, std::vector<int>{0, 1}, 2), Error);
}

TEST_CASE("macro f1 matches an independent implementation") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = 2 + trial % 6;
        std::uniform_int_distribution<int> label(0, k - 1);
        std::vector<int> p(40), t(40);
        for (auto& v : p) v = label(rng);
        for (auto& v : t) v = label(rng);
        CHECK(std::abs(classification_metrics(p, t, k).macro_f1 - oracle::macro_f1(p, t, k)) < 1e-12);
    }
}
