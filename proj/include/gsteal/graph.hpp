#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gsteal/tensor.hpp"

namespace gsteal {

// Undirected graph with dense node features. Edges are normalized at
// construction: self-loops dropped, endpoints ordered u < v, duplicates
// removed, list sorted.
struct Graph {
    int num_nodes = 0;
    std::vector<std::pair<int, int>> edges;
    Tensor features;  // [num_nodes x feature_dim]
    std::optional<int> label;

    int feature_dim() const {
        return features.empty() ? 0 : static_cast<int>(features.cols());
    }

    // Normalizes and validates the edge list against num_nodes.
    static Graph make(int num_nodes, std::vector<std::pair<int, int>> edges,
                      Tensor features, std::optional<int> label = std::nullopt);

    // Adjacency queries used by augmentation and metrics.
    bool has_edge(int u, int v) const;
    std::vector<int> degrees() const;
    std::vector<std::vector<int>> adjacency() const;
};

struct Dataset {
    std::vector<Graph> graphs;
    int num_classes = 0;
    int feature_dim = 0;
    std::string name;

    std::size_t size() const { return graphs.size(); }
};

// Fractions of the whole dataset going to the target pool, the shadow pool
// and the test pool; val_within_target_frac carves validation graphs out of
// the target pool.
struct SplitSpec {
    double target_train_frac = 0.40;
    double shadow_frac = 0.40;
    double test_frac = 0.20;
    double val_within_target_frac = 0.20;
    std::uint64_t seed = 41;
};

struct SplitResult {
    Dataset target_train;
    Dataset target_val;
    Dataset shadow;
    Dataset test;
};

// Knobs for the synthetic planted-motif generator. Class 1 graphs carry a
// 5-cycle, class 0 graphs a 4-clique; motif nodes are always the last nodes
// of the graph so their indices are known without side metadata.
struct MotifParams {
    int base_nodes_min = 10;
    int base_nodes_max = 20;
    double base_edge_prob = 0.2;
    int num_atom_types = 7;
};

// TU text layout: DS_A.txt, DS_graph_indicator.txt, DS_graph_labels.txt,
// DS_node_labels.txt, all 1-based. Node labels become one-hot features;
// graph labels are remapped to contiguous 0-based classes.
Dataset load_tu_dataset(const std::string& directory, const std::string& name);
void save_tu_dataset(const Dataset& dataset, const std::string& directory,
                     const std::string& name);

Dataset generate_motif_dataset(int n_graphs, std::uint64_t seed,
                               const MotifParams& params = {});

// Number of motif nodes appended by the generator for a class.
int motif_size_for_class(int label);

SplitResult split(const Dataset& dataset, const SplitSpec& spec);

Dataset pad_features(const Dataset& dataset, int target_dim);

// Relabels nodes by perm (new index of node i is perm[i]). Test helper for
// the permutation-invariance properties, but generally useful.
Graph permute_graph(const Graph& g, const std::vector<int>& perm);

}  // namespace gsteal
