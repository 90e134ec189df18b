#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gsteal/graph.hpp"

namespace gsteal {

// Mann-Whitney AUC: P(score+ > score-) + 0.5 P(tie). Throws
// UndefinedMetricError when only one class is present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Fraction of positions with equal labels.
double fidelity(const std::vector<int>& surrogate_labels,
                const std::vector<int>& target_labels);

// Kendall's tau-b (tie-corrected). Throws UndefinedMetricError when either
// input is constant. tau-a (no tie correction) is available for comparison.
double kendall_tau(const std::vector<double>& x, const std::vector<double>& y);
double kendall_tau_a(const std::vector<double>& x, const std::vector<double>& y);

// 16 structural features per graph:
//   degree mean/std/p25/median/p75, clustering mean/std/p25/median/p75,
//   diameter of the largest component, top-5 adjacency eigenvalues sorted
//   descending (zero-padded when the graph has fewer than 5 nodes).
// std is the population standard deviation; percentiles use linear
// interpolation between closest ranks.
struct StructuralFeatures {
    std::array<double, 16> values{};
};

StructuralFeatures structural_features(const Graph& graph);

// Squared MMD with Gaussian kernel exp(-gamma ||x-y||^2) over jointly
// z-score-normalized features (sample std, epsilon 1e-8). Biased V-statistic
// by default; unbiased U-statistic behind the flag.
double mmd_squared(const std::vector<StructuralFeatures>& a,
                   const std::vector<StructuralFeatures>& b, double gamma = 0.5,
                   bool unbiased = false);

// Mean and standard deviation (sample std over >= 2 values, else 0).
struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;
    std::vector<double> per_seed;
};

MetricSummary summarize(const std::vector<double>& per_seed);

// One evaluation of a surrogate against a target.
struct EvalResult {
    double auc = 0.0;
    double fidelity = 0.0;
    double rank_corr = 0.0;
    std::size_t rank_corr_skipped = 0;  // constant-explanation graphs
    std::size_t rank_corr_total = 0;
};

// Aggregate over seeds.
struct EvalReport {
    MetricSummary auc;
    MetricSummary fidelity;
    MetricSummary rank_corr;
};

EvalReport aggregate(const std::vector<EvalResult>& per_seed);

}  // namespace gsteal
