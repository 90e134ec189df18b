#include "gsteal/oracle.hpp"

#include "gsteal/errors.hpp"

namespace gsteal {

std::string explainer_name(ExplainerKind k) {
    switch (k) {
        case ExplainerKind::GraphCAM: return "GraphCAM";
        case ExplainerKind::Grad: return "Grad";
        case ExplainerKind::GradCAM: return "GradCAM";
    }
    return "unknown";
}

ExplainerKind explainer_from_name(const std::string& name) {
    if (name == "GraphCAM") return ExplainerKind::GraphCAM;
    if (name == "Grad") return ExplainerKind::Grad;
    if (name == "GradCAM") return ExplainerKind::GradCAM;
    throw ConfigError("unknown explainer: " + name);
}

ExplanationVector explain_with(const ModelState& state, const Graph& graph,
                               const ForwardOutput& fwd, ExplainerKind kind) {
    int c = predicted_class(fwd);
    switch (kind) {
        case ExplainerKind::GraphCAM: return graph_cam(fwd, state, c);
        case ExplainerKind::Grad: return grad_explain(state, graph, c);
        case ExplainerKind::GradCAM: return grad_cam(state, graph, c);
    }
    throw ConfigError("unknown explainer kind");
}

Oracle::Oracle(ModelState target, ExplainerKind explainer, long budget,
               bool return_probs)
    : model_(std::move(target)),
      explainer_(explainer),
      budget_(budget),
      return_probs_(return_probs) {
    if (budget < 0) throw ConfigError("oracle: negative budget");
}

QueryRecord Oracle::query(const Graph& graph) {
    if (graph.feature_dim() != model_.config.feature_dim)
        throw DimensionError("oracle: graph feature width " +
                             std::to_string(graph.feature_dim()) +
                             " != model feature_dim " +
                             std::to_string(model_.config.feature_dim));
    // Atomic commit point: exactly one winner can take the last unit.
    long prev = budget_.fetch_sub(1);
    if (prev <= 0) {
        budget_.fetch_add(1);
        throw BudgetExhaustedError("oracle: budget exhausted");
    }
    ForwardOutput fwd = forward(model_, graph);
    QueryRecord rec;
    rec.graph = graph;
    rec.predicted_label = predicted_class(fwd);
    if (return_probs_) {
        rec.probs = std::vector<double>(fwd.probs.values());
    }
    rec.explanation = explain_with(model_, graph, fwd, explainer_);
    return rec;
}

OracleStatus Oracle::status() {
    return OracleStatus{budget_.load(), explainer_name(explainer_)};
}

}  // namespace gsteal
