#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gsteal/graph.hpp"
#include "gsteal/model.hpp"

namespace gsteal {

enum class ExplainMethod { GraphCAM, Grad, GradCAM, External };

std::string explain_method_name(ExplainMethod m);

// Per-node importance scores for one graph. Raw, unnormalized; consumers
// operate on rankings.
struct ExplanationVector {
    std::vector<double> scores;
    int class_used = 0;
    ExplainMethod method = ExplainMethod::External;
};

// scores[v] = sum_k w_cls[k][c] * node_embeddings[v][k]. The mean over nodes
// equals logits[c] - bias[c] (conservation under mean pooling).
ExplanationVector graph_cam(const ForwardOutput& fwd, const ModelState& state,
                            int class_c);

// scores[v] = || ReLU(d logits[c] / d node_embeddings[v]) ||_2. Under strict
// mean pooling with a linear head this is the same value at every node; the
// formula is implemented as stated regardless.
ExplanationVector grad_explain(const ModelState& state, const Graph& graph,
                               int class_c);

// alpha_k = mean_v d logits[c] / d F[v][k]; scores[v] = ReLU(sum_k alpha_k F[v][k]).
ExplanationVector grad_cam(const ModelState& state, const Graph& graph,
                           int class_c);

// Converts edge importance scores to node scores by averaging over incident
// scored edges; nodes without any scored incident edge get 0. Edge keys may
// be given in either orientation but must exist in the graph.
ExplanationVector edges_to_node_scores(
    const std::map<std::pair<int, int>, double>& edge_scores, const Graph& graph);

}  // namespace gsteal
