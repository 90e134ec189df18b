#include "gsteal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "gsteal/errors.hpp"

namespace gsteal {

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw DimensionError("roc_auc: score/label length mismatch");
    std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += (l == 1);
    std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("roc_auc: needs both classes");

    // Rank-sum with average ranks for ties.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    double u = rank_sum_pos - static_cast<double>(n_pos) *
                                  (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double fidelity(const std::vector<int>& surrogate_labels,
                const std::vector<int>& target_labels) {
    if (surrogate_labels.size() != target_labels.size())
        throw DimensionError("fidelity: length mismatch");
    if (surrogate_labels.empty())
        throw DimensionError("fidelity: empty input");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < surrogate_labels.size(); ++i)
        agree += (surrogate_labels[i] == target_labels[i]);
    return static_cast<double>(agree) / static_cast<double>(surrogate_labels.size());
}

namespace {

struct PairCounts {
    double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0, ties_both = 0;
};

PairCounts count_pairs(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("kendall_tau: length mismatch");
    if (x.size() < 2) throw DimensionError("kendall_tau: need at least 2 elements");
    PairCounts c;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            double dx = x[i] - x[j];
            double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) c.ties_both += 1;
            else if (dx == 0.0) c.ties_x += 1;
            else if (dy == 0.0) c.ties_y += 1;
            else if ((dx > 0) == (dy > 0)) c.concordant += 1;
            else c.discordant += 1;
        }
    }
    return c;
}

}  // namespace

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
    PairCounts c = count_pairs(x, y);
    double cd = c.concordant + c.discordant;
    double denom_x = cd + c.ties_y;  // pairs not tied in x
    double denom_y = cd + c.ties_x;  // pairs not tied in y
    if (denom_x == 0.0 || denom_y == 0.0)
        throw UndefinedMetricError("kendall_tau: constant input");
    return (c.concordant - c.discordant) / std::sqrt(denom_x * denom_y);
}

double kendall_tau_a(const std::vector<double>& x, const std::vector<double>& y) {
    PairCounts c = count_pairs(x, y);
    double total = static_cast<double>(x.size()) *
                   (static_cast<double>(x.size()) - 1.0) / 2.0;
    return (c.concordant - c.discordant) / total;
}

namespace {

double percentile_linear(std::vector<double> sorted, double q) {
    // Linear interpolation between closest ranks; input already sorted.
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

void fill_stats(const std::vector<double>& values, double* out) {
    double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;  // population variance
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    out[0] = mean;
    out[1] = std::sqrt(var);
    out[2] = percentile_linear(sorted, 25.0);
    out[3] = percentile_linear(sorted, 50.0);
    out[4] = percentile_linear(sorted, 75.0);
}

// Eigenvalues of a dense symmetric matrix via cyclic Jacobi rotations.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
    if (n == 0) return {};
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double app = a[p * n + p], aqq = a[q * n + q];
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
    return eig;
}

}  // namespace

StructuralFeatures structural_features(const Graph& graph) {
    if (graph.num_nodes < 1)
        throw DimensionError("structural_features: empty graph");
    auto n = static_cast<std::size_t>(graph.num_nodes);
    StructuralFeatures f;

    std::vector<int> deg = graph.degrees();
    std::vector<double> degrees(deg.begin(), deg.end());
    fill_stats(degrees, f.values.data());

    // Local clustering coefficient, 0 for degree < 2.
    auto adj = graph.adjacency();
    std::vector<double> clustering(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        std::size_t d = adj[v].size();
        if (d < 2) continue;
        std::size_t links = 0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i + 1; j < d; ++j)
                if (graph.has_edge(adj[v][i], adj[v][j])) ++links;
        clustering[v] = 2.0 * static_cast<double>(links) /
                        (static_cast<double>(d) * static_cast<double>(d - 1));
    }
    fill_stats(clustering, f.values.data() + 5);

    // Diameter of the largest connected component (by node count; earliest
    // component wins ties). BFS from every node of that component.
    std::vector<int> comp(n, -1);
    int n_comp = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] != -1) continue;
        std::queue<std::size_t> q;
        q.push(s);
        comp[s] = n_comp;
        while (!q.empty()) {
            std::size_t v = q.front();
            q.pop();
            for (int u : adj[v]) {
                if (comp[static_cast<std::size_t>(u)] == -1) {
                    comp[static_cast<std::size_t>(u)] = n_comp;
                    q.push(static_cast<std::size_t>(u));
                }
            }
        }
        ++n_comp;
    }
    std::vector<std::size_t> comp_size(static_cast<std::size_t>(n_comp), 0);
    for (std::size_t v = 0; v < n; ++v) comp_size[static_cast<std::size_t>(comp[v])]++;
    int largest = 0;
    for (int c = 1; c < n_comp; ++c)
        if (comp_size[static_cast<std::size_t>(c)] >
            comp_size[static_cast<std::size_t>(largest)])
            largest = c;
    double diameter = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] != largest) continue;
        std::vector<int> dist(n, -1);
        std::queue<std::size_t> q;
        q.push(s);
        dist[s] = 0;
        while (!q.empty()) {
            std::size_t v = q.front();
            q.pop();
            diameter = std::max(diameter, static_cast<double>(dist[v]));
            for (int u : adj[v]) {
                if (dist[static_cast<std::size_t>(u)] == -1) {
                    dist[static_cast<std::size_t>(u)] = dist[v] + 1;
                    q.push(static_cast<std::size_t>(u));
                }
            }
        }
    }
    f.values[10] = diameter;

    // Top-5 adjacency eigenvalues, descending, zero-padded under 5 nodes.
    std::vector<double> a(n * n, 0.0);
    for (auto [u, v] : graph.edges) {
        a[static_cast<std::size_t>(u) * n + static_cast<std::size_t>(v)] = 1.0;
        a[static_cast<std::size_t>(v) * n + static_cast<std::size_t>(u)] = 1.0;
    }
    std::vector<double> eig = symmetric_eigenvalues(std::move(a), n);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    for (std::size_t k = 0; k < 5; ++k)
        f.values[11 + k] = k < eig.size() ? eig[k] : 0.0;
    return f;
}

double mmd_squared(const std::vector<StructuralFeatures>& a,
                   const std::vector<StructuralFeatures>& b, double gamma,
                   bool unbiased) {
    if (a.empty() || b.empty()) throw DimensionError("mmd_squared: empty set");
    constexpr std::size_t d = 16;
    std::size_t na = a.size(), nb = b.size(), n = na + nb;

    // Joint z-score normalization over both sets (sample std, eps 1e-8).
    std::array<double, d> mean{}, std_dev{};
    auto accumulate = [&](const std::vector<StructuralFeatures>& xs) {
        for (const auto& x : xs)
            for (std::size_t j = 0; j < d; ++j) mean[j] += x.values[j];
    };
    accumulate(a);
    accumulate(b);
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
    auto accumulate_var = [&](const std::vector<StructuralFeatures>& xs) {
        for (const auto& x : xs)
            for (std::size_t j = 0; j < d; ++j) {
                double c = x.values[j] - mean[j];
                std_dev[j] += c * c;
            }
    };
    accumulate_var(a);
    accumulate_var(b);
    for (std::size_t j = 0; j < d; ++j)
        std_dev[j] = n > 1 ? std::sqrt(std_dev[j] / static_cast<double>(n - 1)) : 0.0;

    auto normalize = [&](const std::vector<StructuralFeatures>& xs) {
        std::vector<std::array<double, d>> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (std::size_t j = 0; j < d; ++j)
                out[i][j] = (xs[i].values[j] - mean[j]) / (std_dev[j] + 1e-8);
        return out;
    };
    auto za = normalize(a);
    auto zb = normalize(b);

    auto kernel = [gamma](const std::array<double, d>& x, const std::array<double, d>& y) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double c = x[j] - y[j];
            s += c * c;
        }
        return std::exp(-gamma * s);
    };

    double within_a = 0.0, within_b = 0.0, cross = 0.0;
    if (unbiased) {
        if (na < 2 || nb < 2)
            throw DimensionError("mmd_squared: unbiased estimator needs >= 2 per set");
        for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < na; ++j)
                if (i != j) within_a += kernel(za[i], za[j]);
        within_a /= static_cast<double>(na) * static_cast<double>(na - 1);
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t j = 0; j < nb; ++j)
                if (i != j) within_b += kernel(zb[i], zb[j]);
        within_b /= static_cast<double>(nb) * static_cast<double>(nb - 1);
    } else {
        for (std::size_t i = 0; i < na; ++i)
            for (std::size_t j = 0; j < na; ++j) within_a += kernel(za[i], za[j]);
        within_a /= static_cast<double>(na) * static_cast<double>(na);
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t j = 0; j < nb; ++j) within_b += kernel(zb[i], zb[j]);
        within_b /= static_cast<double>(nb) * static_cast<double>(nb);
    }
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < nb; ++j) cross += kernel(za[i], zb[j]);
    cross /= static_cast<double>(na) * static_cast<double>(nb);

    return within_a + within_b - 2.0 * cross;
}

MetricSummary summarize(const std::vector<double>& per_seed) {
    MetricSummary s;
    s.per_seed = per_seed;
    if (per_seed.empty()) return s;
    for (double v : per_seed) s.mean += v;
    s.mean /= static_cast<double>(per_seed.size());
    if (per_seed.size() > 1) {
        double var = 0.0;
        for (double v : per_seed) var += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(var / static_cast<double>(per_seed.size() - 1));
    }
    return s;
}

EvalReport aggregate(const std::vector<EvalResult>& per_seed) {
    std::vector<double> auc, fid, rank;
    for (const EvalResult& r : per_seed) {
        auc.push_back(r.auc);
        fid.push_back(r.fidelity);
        rank.push_back(r.rank_corr);
    }
    return EvalReport{summarize(auc), summarize(fid), summarize(rank)};
}

}  // namespace gsteal
