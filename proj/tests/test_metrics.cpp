#include <doctest.h>

#include <cmath>

#include "gsteal/errors.hpp"
#include "gsteal/metrics.hpp"
#include "support/fixtures.hpp"

using namespace gsteal;
using namespace gsteal::test;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("roc_auc closed forms") {
    CHECK(roc_auc({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}) == doctest::Approx(1.0));
    CHECK(roc_auc({0.9, 0.6, 0.4, 0.2}, {1, 0, 1, 0}) == doctest::Approx(0.75));
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), UndefinedMetricError);
}

TEST_CASE("roc_auc is invariant under strictly monotone transforms") {
    Pcg32 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 6 + rng.uniform_int(20);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        labels[0] = 0;
        labels[1] = 1;  // both classes present
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.uniform_range(-3.0, 3.0);
            if (i > 1) labels[i] = static_cast<int>(rng.uniform_int(2));
        }
        double base = roc_auc(scores, labels);
        std::vector<double> warped(n);
        for (std::size_t i = 0; i < n; ++i)
            warped[i] = std::exp(0.5 * scores[i]) + scores[i];  // strictly increasing
        CHECK(roc_auc(warped, labels) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("fidelity counts exact agreements") {
    CHECK(fidelity({1, 0, 1}, {1, 0, 1}) == doctest::Approx(1.0));
    CHECK(fidelity({1, 0, 1, 0}, {1, 0, 0, 0}) == doctest::Approx(0.75));
    CHECK(fidelity({1, 0, 1}, {0, 1, 0}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(fidelity({1}, {1, 0}), DimensionError);
}

TEST_CASE("kendall tau closed forms and ties") {
    CHECK(kendall_tau({1, 2, 3, 4}, {1, 2, 3, 4}) == doctest::Approx(1.0));
    CHECK(kendall_tau({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(kendall_tau({1, 2, 3, 4}, {1, 3, 2, 4}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(kendall_tau({1, 1, 1}, {1, 2, 3}), UndefinedMetricError);
    CHECK_THROWS_AS(kendall_tau({1, 2}, {1, 2, 3}), DimensionError);
    // tau-a has no tie correction and a fixed denominator.
    CHECK(kendall_tau_a({1, 2, 3, 4}, {1, 3, 2, 4}) ==
          doctest::Approx(4.0 / 6.0).epsilon(1e-12));
    // pairs: (0,1) tied in x, (0,2) and (1,2) concordant -> (2-0)/3
    CHECK(kendall_tau_a({1, 1, 2}, {1, 2, 3}) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("kendall tau invariances") {
    Pcg32 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 3 + rng.uniform_int(10);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform_range(-2.0, 2.0);
            y[i] = rng.uniform_range(-2.0, 2.0);
        }
        CHECK(kendall_tau(x, x) == doctest::Approx(1.0));
        std::vector<double> neg = x;
        for (double& v : neg) v = -v;
        CHECK(kendall_tau(x, neg) == doctest::Approx(-1.0));
        double base = kendall_tau(x, y);
        std::vector<double> warped = x;
        for (double& v : warped) v = std::tanh(v) * 3.0 + v;  // strictly increasing
        CHECK(kendall_tau(warped, y) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("kendall tau null distribution has mean near zero") {
    Pcg32 rng(11);
    double sum = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> x(8), y(8);
        for (std::size_t i = 0; i < 8; ++i) {
            x[i] = rng.uniform();
            y[i] = rng.uniform();
        }
        sum += kendall_tau(x, y);
    }
    CHECK(std::abs(sum / trials) <= 0.02);
}

TEST_CASE("structural features: single node") {
    Graph g = Graph::make(1, {}, Tensor::zeros({1, 1}));
    StructuralFeatures f = structural_features(g);
    for (double v : f.values) CHECK(v == 0.0);
}

TEST_CASE("structural features: triangle K3") {
    Graph g = Graph::make(3, {{0, 1}, {1, 2}, {0, 2}}, Tensor::zeros({3, 1}));
    StructuralFeatures f = structural_features(g);
    // degree stats: all 2
    for (int i = 0; i < 5; ++i)
        CHECK(f.values[static_cast<std::size_t>(i)] ==
              doctest::Approx(i == 1 ? 0.0 : 2.0).epsilon(1e-12));
    // clustering stats: all 1
    for (int i = 5; i < 10; ++i)
        CHECK(f.values[static_cast<std::size_t>(i)] ==
              doctest::Approx(i == 6 ? 0.0 : 1.0).epsilon(1e-12));
    CHECK(f.values[10] == doctest::Approx(1.0));  // diameter
    // exact spectrum {2, -1, -1}, zero-padded after descending sort
    CHECK(f.values[11] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(f.values[12] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(f.values[13] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(f.values[14] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(f.values[15] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("structural features: 4-path diameter and eigenvalue identities") {
    Graph path = Graph::make(4, {{0, 1}, {1, 2}, {2, 3}}, Tensor::zeros({4, 1}));
    CHECK(structural_features(path).values[10] == doctest::Approx(3.0));

    Pcg32 rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        Graph g = random_graph(rng, 5, 12, 1, 0.4);
        StructuralFeatures f = structural_features(g);
        // top-5 sorted descending
        for (int k = 0; k < 4; ++k)
            CHECK(f.values[static_cast<std::size_t>(11 + k)] >=
                  f.values[static_cast<std::size_t>(12 + k)] - 1e-9);
        // largest eigenvalue bounded by max degree, at least mean degree
        std::vector<int> deg = g.degrees();
        int max_deg = 0;
        double mean_deg = 0;
        for (int d : deg) {
            max_deg = std::max(max_deg, d);
            mean_deg += d;
        }
        mean_deg /= static_cast<double>(deg.size());
        CHECK(f.values[11] <= max_deg + 1e-9);
        CHECK(f.values[11] >= mean_deg - 1e-9);
    }
}

TEST_CASE("structural features are permutation invariant") {
    Pcg32 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        Graph g = random_graph(rng, 4, 10, 1, 0.35);
        std::vector<int> perm = identity_permutation(g.num_nodes);
        rng.shuffle(perm);
        StructuralFeatures a = structural_features(g);
        StructuralFeatures b = structural_features(permute_graph(g, perm));
        for (std::size_t i = 0; i < a.values.size(); ++i)
            CHECK(a.values[i] == doctest::Approx(b.values[i]).epsilon(1e-9));
    }
}

TEST_CASE("mmd: identical sets give zero") {
    Pcg32 rng(19);
    std::vector<StructuralFeatures> a;
    for (int i = 0; i < 10; ++i)
        a.push_back(structural_features(random_graph(rng, 4, 10, 1)));
    CHECK(std::abs(mmd_squared(a, a)) < 1e-12);
}

TEST_CASE("mmd: two-point closed form") {
    // Singletons differing in exactly one dimension. With joint z-scoring
    // (sample std) the normalized squared distance is 2, so
    // mmd^2 = 2 - 2 exp(-gamma * 2) = 2 - 2/e at gamma = 0.5.
    StructuralFeatures x{}, y{};
    y.values[0] = 100.0;
    double v = mmd_squared({x}, {y}, 0.5);
    CHECK(std::abs(v - (2.0 - 2.0 * std::exp(-1.0))) < 1e-9);
}

TEST_CASE("mmd: symmetric and nonnegative") {
    Pcg32 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<StructuralFeatures> a, b;
        for (int i = 0; i < 6; ++i) {
            a.push_back(structural_features(random_graph(rng, 4, 10, 1, 0.3)));
            b.push_back(structural_features(random_graph(rng, 4, 10, 1, 0.6)));
        }
        double ab = mmd_squared(a, b);
        double ba = mmd_squared(b, a);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab >= -1e-12);
        // unbiased estimator runs and is close to the biased one at this size
        double u = mmd_squared(a, b, 0.5, true);
        CHECK(std::isfinite(u));
    }
}

TEST_CASE("summaries: mean and sample std over seeds") {
    MetricSummary s = summarize({0.5, 0.7});
    CHECK(s.mean == doctest::Approx(0.6));
    CHECK(s.std == doctest::Approx(std::sqrt(0.02 / 1.0)).epsilon(1e-12));
    MetricSummary single = summarize({0.4});
    CHECK(single.mean == doctest::Approx(0.4));
    CHECK(single.std == 0.0);
}

TEST_SUITE_END();
