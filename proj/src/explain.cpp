#include "gsteal/explain.hpp"

#include <algorithm>
#include <cmath>

#include "gsteal/errors.hpp"

namespace gsteal {

std::string explain_method_name(ExplainMethod m) {
    switch (m) {
        case ExplainMethod::GraphCAM: return "GraphCAM";
        case ExplainMethod::Grad: return "Grad";
        case ExplainMethod::GradCAM: return "GradCAM";
        case ExplainMethod::External: return "External";
    }
    return "unknown";
}

namespace {

void check_class(const ModelState& state, int class_c) {
    if (class_c < 0 || class_c >= state.config.num_classes)
        throw IndexError("explain: class " + std::to_string(class_c) +
                         " out of range");
}

// Gradient of logits[class_c] with respect to the final-layer node
// embeddings, shape [n x hidden].
Tensor embedding_gradient(const ModelState& state, const Graph& graph, int class_c) {
    Tape tape;
    std::vector<Var> params = lift_params(tape, state, false);
    ForwardVars fv = build_forward(tape, params, state.config, graph);
    Tensor seed = Tensor::zeros(fv.logits.value().shape());
    seed.at(0, static_cast<std::size_t>(class_c)) = 1.0;
    tape.backward(fv.logits, seed);
    return fv.node_embeddings.grad();
}

}  // namespace

ExplanationVector graph_cam(const ForwardOutput& fwd, const ModelState& state,
                            int class_c) {
    check_class(state, class_c);
    const Tensor& f = fwd.node_embeddings;
    const Tensor& w = state.classifier_weight();
    if (f.cols() != w.rows())
        throw DimensionError("graph_cam: embedding width != classifier rows");
    ExplanationVector ev;
    ev.class_used = class_c;
    ev.method = ExplainMethod::GraphCAM;
    ev.scores.resize(f.rows());
    for (std::size_t v = 0; v < f.rows(); ++v) {
        double s = 0.0;
        for (std::size_t k = 0; k < f.cols(); ++k)
            s += w.at(k, static_cast<std::size_t>(class_c)) * f.at(v, k);
        ev.scores[v] = s;
    }
    return ev;
}

ExplanationVector grad_explain(const ModelState& state, const Graph& graph,
                               int class_c) {
    check_class(state, class_c);
    Tensor g = embedding_gradient(state, graph, class_c);
    ExplanationVector ev;
    ev.class_used = class_c;
    ev.method = ExplainMethod::Grad;
    ev.scores.resize(g.rows());
    for (std::size_t v = 0; v < g.rows(); ++v) {
        double s = 0.0;
        for (std::size_t k = 0; k < g.cols(); ++k) {
            double r = std::max(0.0, g.at(v, k));
            s += r * r;
        }
        ev.scores[v] = std::sqrt(s);
    }
    return ev;
}

ExplanationVector grad_cam(const ModelState& state, const Graph& graph,
                           int class_c) {
    check_class(state, class_c);
    Tensor g = embedding_gradient(state, graph, class_c);
    ForwardOutput fwd = forward(state, graph);
    const Tensor& f = fwd.node_embeddings;
    std::vector<double> alpha(g.cols(), 0.0);
    for (std::size_t v = 0; v < g.rows(); ++v)
        for (std::size_t k = 0; k < g.cols(); ++k) alpha[k] += g.at(v, k);
    for (double& a : alpha) a /= static_cast<double>(g.rows());
    ExplanationVector ev;
    ev.class_used = class_c;
    ev.method = ExplainMethod::GradCAM;
    ev.scores.resize(f.rows());
    for (std::size_t v = 0; v < f.rows(); ++v) {
        double s = 0.0;
        for (std::size_t k = 0; k < f.cols(); ++k) s += alpha[k] * f.at(v, k);
        ev.scores[v] = std::max(0.0, s);
    }
    return ev;
}

ExplanationVector edges_to_node_scores(
    const std::map<std::pair<int, int>, double>& edge_scores, const Graph& graph) {
    std::vector<double> sums(static_cast<std::size_t>(graph.num_nodes), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(graph.num_nodes), 0);
    for (const auto& [edge, score] : edge_scores) {
        auto [u, v] = edge;
        if (!graph.has_edge(u, v))
            throw KeyError("edges_to_node_scores: edge (" + std::to_string(u) +
                           ", " + std::to_string(v) + ") not in graph");
        sums[static_cast<std::size_t>(u)] += score;
        sums[static_cast<std::size_t>(v)] += score;
        counts[static_cast<std::size_t>(u)]++;
        counts[static_cast<std::size_t>(v)]++;
    }
    ExplanationVector ev;
    ev.class_used = 0;
    ev.method = ExplainMethod::External;
    ev.scores.resize(sums.size());
    for (std::size_t v = 0; v < sums.size(); ++v)
        ev.scores[v] = counts[v] > 0 ? sums[v] / counts[v] : 0.0;
    return ev;
}

}  // namespace gsteal
