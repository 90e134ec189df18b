#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "gsteal/explain.hpp"
#include "gsteal/graph.hpp"
#include "gsteal/model.hpp"

namespace gsteal {

enum class ExplainerKind { GraphCAM, Grad, GradCAM };

std::string explainer_name(ExplainerKind k);
ExplainerKind explainer_from_name(const std::string& name);

struct OracleConfig {
    std::string model_path;
    ExplainerKind explainer = ExplainerKind::GraphCAM;
    long budget = 0;
    bool return_probs = true;
    std::string listen_address;  // "host:port", service mode only
};

// One oracle response: exactly one unit of budget.
struct QueryRecord {
    Graph graph;
    int predicted_label = 0;
    std::optional<std::vector<double>> probs;
    ExplanationVector explanation;
};

struct OracleStatus {
    long remaining_budget = 0;
    std::string explainer;
};

// Shared interface of the in-process oracle and the TCP client, so the
// attack engine is oblivious to which one it talks to.
class QueryService {
public:
    virtual ~QueryService() = default;
    virtual QueryRecord query(const Graph& graph) = 0;
    virtual OracleStatus status() = 0;
};

// The target model behind a hard budget counter. Thread-safe: the counter
// is atomic and inference reads shared immutable state.
class Oracle : public QueryService {
public:
    Oracle(ModelState target, ExplainerKind explainer, long budget,
           bool return_probs = true);

    // Throws BudgetExhaustedError when the budget is spent and
    // DimensionError on feature-width mismatch; neither consumes budget.
    QueryRecord query(const Graph& graph) override;
    OracleStatus status() override;

    long remaining_budget() const { return budget_.load(); }
    const ModelState& model() const { return model_; }
    ExplainerKind explainer() const { return explainer_; }
    bool returns_probs() const { return return_probs_; }

private:
    ModelState model_;
    ExplainerKind explainer_;
    std::atomic<long> budget_;
    bool return_probs_;
};

// Explanation for the model's predicted class using the configured method.
ExplanationVector explain_with(const ModelState& state, const Graph& graph,
                               const ForwardOutput& fwd, ExplainerKind kind);

}  // namespace gsteal
