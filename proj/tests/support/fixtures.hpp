#pragma once

#include <vector>

#include "gsteal/graph.hpp"
#include "gsteal/model.hpp"
#include "gsteal/rng.hpp"

namespace gsteal::test {

inline Graph random_graph(Pcg32& rng, int min_nodes = 3, int max_nodes = 10,
                          int feature_dim = 4, double edge_prob = 0.35) {
    int n = min_nodes + static_cast<int>(rng.uniform_int(
                            static_cast<std::uint32_t>(max_nodes - min_nodes + 1)));
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (rng.uniform() < edge_prob) edges.emplace_back(u, v);
    Tensor feats = Tensor::zeros({static_cast<std::size_t>(n),
                                  static_cast<std::size_t>(feature_dim)});
    for (double& x : feats.values()) x = rng.uniform_range(-1.0, 1.0);
    return Graph::make(n, std::move(edges), std::move(feats),
                       static_cast<int>(rng.uniform_int(2)));
}

inline ModelState random_model(Pcg32& rng, Arch arch, int feature_dim,
                               int hidden = 6, int layers = 2, int classes = 2) {
    ModelConfig cfg;
    cfg.arch = arch;
    cfg.num_layers = layers;
    cfg.hidden_dim = hidden;
    cfg.num_classes = classes;
    cfg.feature_dim = feature_dim;
    cfg.seed = rng.next_u64();
    return init_model(cfg);
}

inline std::vector<int> identity_permutation(int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    return perm;
}

}  // namespace gsteal::test
