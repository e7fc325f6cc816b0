#include <doctest.h>

#include <cmath>
#include <vector>

#include "traceguard/metrics.hpp"
#include "traceguard/rng.hpp"

using namespace traceguard;

namespace {

// O(n^2) brute-force AUC oracle: fraction of (backdoor, benign) pairs where
// the backdoor scores higher, ties counted 1/2.
double auc_bruteforce(const std::vector<double>& scores, const std::vector<bool>& labels) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("rank-statistic AUC equals the pairwise oracle on 100 random sets") {
    Rng rng(424242);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 20 + static_cast<int>(rng.uniform_int(0, 180));
        std::vector<double> scores;
        std::vector<bool> labels;
        int positives = 0;
        for (int i = 0; i < n; ++i) {
            // coarse grid scores force plenty of ties
            double s = rng.bernoulli(0.3) ? std::floor(rng.uniform() * 8.0) / 8.0 : rng.uniform();
            bool y = rng.bernoulli(0.4);
            scores.push_back(s);
            labels.push_back(y);
            if (y) ++positives;
        }
        if (positives == 0) {
            labels[0] = true;
            ++positives;
        }
        if (positives == n) labels[0] = false;

        auto fast = auc_mann_whitney(scores, labels);
        REQUIRE(fast.has_value());
        CHECK(std::abs(*fast - auc_bruteforce(scores, labels)) <= 1e-12);
    }
}

TEST_CASE("AUC handles hand-checked tie patterns") {
    // all scores identical -> AUC 1/2
    CHECK(*auc_mann_whitney({1.0, 1.0, 1.0, 1.0}, {true, true, false, false}) ==
          doctest::Approx(0.5).epsilon(1e-15));
    // perfect separation
    CHECK(*auc_mann_whitney({0.9, 0.8, 0.2, 0.1}, {true, true, false, false}) == 1.0);
    // perfect inversion
    CHECK(*auc_mann_whitney({0.1, 0.2, 0.8, 0.9}, {true, true, false, false}) == 0.0);
    // three wins plus one tied pair out of four comparisons: (3 + 0.5)/4
    CHECK(*auc_mann_whitney({0.7, 0.5, 0.5, 0.1}, {true, true, false, false}) ==
          doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("AUC is absent when a class is missing") {
    CHECK(!auc_mann_whitney({0.1, 0.5}, {true, true}).has_value());
    CHECK(!auc_mann_whitney({0.1, 0.5}, {false, false}).has_value());
    CHECK(!auc_mann_whitney({}, {}).has_value());
}

TEST_CASE("confusion-derived metrics satisfy their algebraic identities") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 30 + static_cast<int>(rng.uniform_int(0, 70));
        std::vector<double> scores;
        std::vector<bool> labels;
        for (int i = 0; i < n; ++i) {
            scores.push_back(rng.uniform());
            labels.push_back(rng.bernoulli(0.5));
        }
        double thr = rng.uniform();
        EvalMetrics m = compute_metrics(scores, labels, thr);

        CHECK(m.total() == n);
        long pos = 0;
        for (bool y : labels)
            if (y) ++pos;
        CHECK(m.tp + m.fn == pos);
        CHECK(m.fp + m.tn == n - pos);
        CHECK(m.accuracy ==
              doctest::Approx(static_cast<double>(m.tp + m.tn) / n).epsilon(1e-15));
        if (m.tp + m.fp > 0)
            CHECK(m.precision ==
                  doctest::Approx(static_cast<double>(m.tp) / (m.tp + m.fp)).epsilon(1e-15));
        else
            CHECK(m.precision == 0.0);
        if (m.tp + m.fn > 0)
            CHECK(m.recall ==
                  doctest::Approx(static_cast<double>(m.tp) / (m.tp + m.fn)).epsilon(1e-15));
        if (m.precision + m.recall > 0.0)
            CHECK(m.f1 == doctest::Approx(2.0 * m.precision * m.recall /
                                          (m.precision + m.recall))
                              .epsilon(1e-12));
        else
            CHECK(m.f1 == 0.0);
    }
}

TEST_CASE("a score exactly at the threshold counts as benign") {
    EvalMetrics m = compute_metrics({0.5, 0.5, 0.6}, {true, false, true}, 0.5);
    CHECK(m.fn == 1);  // the 0.5 backdoor is predicted benign
    CHECK(m.tn == 1);
    CHECK(m.tp == 1);
}
