#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsteal/graph.hpp"
#include "gsteal/tape.hpp"
#include "gsteal/tensor.hpp"

namespace gsteal {

enum class Arch { GIN, GCN };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& name);

struct ModelConfig {
    Arch arch = Arch::GIN;
    int num_layers = 3;
    int hidden_dim = 128;
    int num_classes = 2;
    int feature_dim = 0;
    std::uint64_t seed = 41;
};

// Flat parameter list with a fixed layout:
//   GIN layer l: eps {1,1}, w1 {in,h}, b1 {1,h}, w2 {h,h}, b2 {1,h}
//   GCN layer l: w {in,h}, b {1,h}
//   classifier:  w_cls {h,C}, b_cls {1,C}
// The flat layout keeps Adam, serialization and parameter lifting trivial.
struct ModelState {
    ModelConfig config;
    std::vector<Tensor> params;

    Tensor& classifier_weight() { return params[params.size() - 2]; }
    const Tensor& classifier_weight() const { return params[params.size() - 2]; }
    Tensor& classifier_bias() { return params.back(); }
    const Tensor& classifier_bias() const { return params.back(); }
};

struct ForwardOutput {
    Tensor node_embeddings;  // [n x hidden], final layer, pre-pooling
    Tensor pooled;           // [1 x hidden], column-wise mean
    Tensor logits;           // [1 x C]
    Tensor probs;            // [1 x C], softmax of logits
};

int predicted_class(const ForwardOutput& out);

// Deterministic Glorot-uniform initialization from config.seed.
ModelState init_model(const ModelConfig& config);

// Parameters as tape leaves, in ModelState::params order.
std::vector<Var> lift_params(Tape& tape, const ModelState& state, bool requires_grad);

struct ForwardVars {
    Var node_embeddings;
    Var pooled;
    Var logits;
    Var probs;
};

// Message-passing forward pass over the tape. GIN layers compute
// MLP((1 + eps) h_v + sum_{u in N(v)} h_u); GCN layers apply
// symmetric-normalized aggregation (with self loops) then linear + ReLU.
ForwardVars build_forward(Tape& tape, const std::vector<Var>& params,
                          const ModelConfig& config, const Graph& graph);

// Inference wrapper; runs build_forward on a scratch tape.
ForwardOutput forward(const ModelState& state, const Graph& graph);

// Trains with Adam (lr 0.001) on cross-entropy and returns the checkpoint
// with the highest validation AUC (ties resolved to the earliest epoch).
// val_auc_trace, when given, receives the per-epoch validation AUCs.
ModelState train_model(const ModelConfig& config, const Dataset& train,
                       const Dataset& val, int epochs, int batch_size,
                       std::vector<double>* val_auc_trace = nullptr);

void save_model(const ModelState& state, const std::string& path);
ModelState load_model(const std::string& path);

}  // namespace gsteal
