#include "gsteal/graph.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gsteal/errors.hpp"
#include "gsteal/rng.hpp"

namespace gsteal {

Graph Graph::make(int num_nodes, std::vector<std::pair<int, int>> edges,
                  Tensor features, std::optional<int> label) {
    if (num_nodes < 0) throw DimensionError("graph: negative node count");
    if (features.shape().size() != 2 ||
        features.rows() != static_cast<std::size_t>(num_nodes))
        throw DimensionError("graph: feature row count != num_nodes");
    std::vector<std::pair<int, int>> normalized;
    normalized.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
            throw IndexError("graph: edge endpoint out of range");
        if (u == v) continue;
        normalized.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(normalized.begin(), normalized.end());
    normalized.erase(std::unique(normalized.begin(), normalized.end()),
                     normalized.end());
    Graph g;
    g.num_nodes = num_nodes;
    g.edges = std::move(normalized);
    g.features = std::move(features);
    g.label = label;
    return g;
}

bool Graph::has_edge(int u, int v) const {
    if (u == v) return false;
    auto key = std::make_pair(std::min(u, v), std::max(u, v));
    return std::binary_search(edges.begin(), edges.end(), key);
}

std::vector<int> Graph::degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(num_nodes), 0);
    for (auto [u, v] : edges) {
        deg[static_cast<std::size_t>(u)]++;
        deg[static_cast<std::size_t>(v)]++;
    }
    return deg;
}

std::vector<std::vector<int>> Graph::adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_nodes));
    for (auto [u, v] : edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    return adj;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("missing file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    // Trailing blank lines are common in the distributed files.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

long parse_long(const std::string& text, const std::string& path, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        long v = std::stol(text, &pos);
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
        if (pos != text.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": expected integer, got '" + text + "'");
    }
}

}  // namespace

Dataset load_tu_dataset(const std::string& directory, const std::string& name) {
    const std::string prefix = directory + "/" + name;
    auto adj_lines = read_lines(prefix + "_A.txt");
    auto indicator_lines = read_lines(prefix + "_graph_indicator.txt");
    auto graph_label_lines = read_lines(prefix + "_graph_labels.txt");
    auto node_label_lines = read_lines(prefix + "_node_labels.txt");

    const std::string ind_path = prefix + "_graph_indicator.txt";
    std::size_t total_nodes = indicator_lines.size();
    if (node_label_lines.size() != total_nodes)
        throw FormatError(prefix + "_node_labels.txt: expected " +
                          std::to_string(total_nodes) + " lines, got " +
                          std::to_string(node_label_lines.size()));

    std::size_t n_graphs = graph_label_lines.size();
    if (n_graphs == 0) throw FormatError(prefix + "_graph_labels.txt: empty");

    // Node -> graph assignment (both 1-based in the files).
    std::vector<std::size_t> node_graph(total_nodes);
    for (std::size_t i = 0; i < total_nodes; ++i) {
        long g = parse_long(indicator_lines[i], ind_path, i + 1);
        if (g < 1 || static_cast<std::size_t>(g) > n_graphs)
            throw FormatError(ind_path + ":" + std::to_string(i + 1) +
                              ": graph id " + std::to_string(g) + " out of range");
        node_graph[i] = static_cast<std::size_t>(g) - 1;
    }

    // Graph indicator must be non-decreasing so node ids inside a graph are
    // contiguous; the TU distribution guarantees this.
    std::vector<std::size_t> graph_size(n_graphs, 0);
    std::vector<std::size_t> node_local(total_nodes);
    for (std::size_t i = 0; i < total_nodes; ++i) {
        if (i > 0 && node_graph[i] < node_graph[i - 1])
            throw FormatError(ind_path + ":" + std::to_string(i + 1) +
                              ": graph indicator not non-decreasing");
        node_local[i] = graph_size[node_graph[i]]++;
    }

    // Node labels, remapped to a contiguous range in sorted order.
    std::vector<long> raw_node_labels(total_nodes);
    std::set<long> node_label_values;
    const std::string nl_path = prefix + "_node_labels.txt";
    for (std::size_t i = 0; i < total_nodes; ++i) {
        raw_node_labels[i] = parse_long(node_label_lines[i], nl_path, i + 1);
        node_label_values.insert(raw_node_labels[i]);
    }
    std::map<long, int> node_label_index;
    for (long v : node_label_values)
        node_label_index[v] = static_cast<int>(node_label_index.size());
    int fdim = std::max<int>(1, static_cast<int>(node_label_index.size()));

    // Graph labels, remapped to contiguous 0-based classes in sorted order.
    std::vector<long> raw_graph_labels(n_graphs);
    std::set<long> graph_label_values;
    const std::string gl_path = prefix + "_graph_labels.txt";
    for (std::size_t g = 0; g < n_graphs; ++g) {
        raw_graph_labels[g] = parse_long(graph_label_lines[g], gl_path, g + 1);
        graph_label_values.insert(raw_graph_labels[g]);
    }
    std::map<long, int> graph_label_index;
    for (long v : graph_label_values)
        graph_label_index[v] = static_cast<int>(graph_label_index.size());

    // Edges; symmetrization and dedup happen in Graph::make.
    std::vector<std::vector<std::pair<int, int>>> edges(n_graphs);
    const std::string a_path = prefix + "_A.txt";
    for (std::size_t li = 0; li < adj_lines.size(); ++li) {
        const std::string& line = adj_lines[li];
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw FormatError(a_path + ":" + std::to_string(li + 1) +
                              ": expected 'u, v'");
        long u = parse_long(line.substr(0, comma), a_path, li + 1);
        long v = parse_long(line.substr(comma + 1), a_path, li + 1);
        if (u < 1 || v < 1 || static_cast<std::size_t>(u) > total_nodes ||
            static_cast<std::size_t>(v) > total_nodes)
            throw FormatError(a_path + ":" + std::to_string(li + 1) +
                              ": node index out of range");
        std::size_t un = static_cast<std::size_t>(u) - 1;
        std::size_t vn = static_cast<std::size_t>(v) - 1;
        if (node_graph[un] != node_graph[vn])
            throw FormatError(a_path + ":" + std::to_string(li + 1) +
                              ": edge spans two graphs");
        edges[node_graph[un]].emplace_back(static_cast<int>(node_local[un]),
                                           static_cast<int>(node_local[vn]));
    }

    Dataset ds;
    ds.name = name;
    ds.feature_dim = fdim;
    ds.num_classes = static_cast<int>(graph_label_index.size());
    ds.graphs.reserve(n_graphs);
    std::size_t node_cursor = 0;
    for (std::size_t g = 0; g < n_graphs; ++g) {
        std::size_t n = graph_size[g];
        Tensor feats = Tensor::zeros({n, static_cast<std::size_t>(fdim)});
        for (std::size_t i = 0; i < n; ++i) {
            int one = node_label_index.at(raw_node_labels[node_cursor + i]);
            feats.at(i, static_cast<std::size_t>(one)) = 1.0;
        }
        node_cursor += n;
        ds.graphs.push_back(Graph::make(static_cast<int>(n), std::move(edges[g]),
                                        std::move(feats),
                                        graph_label_index.at(raw_graph_labels[g])));
    }
    return ds;
}

void save_tu_dataset(const Dataset& dataset, const std::string& directory,
                     const std::string& name) {
    std::filesystem::create_directories(directory);
    const std::string prefix = directory + "/" + name;
    std::ofstream a(prefix + "_A.txt");
    std::ofstream ind(prefix + "_graph_indicator.txt");
    std::ofstream gl(prefix + "_graph_labels.txt");
    std::ofstream nl(prefix + "_node_labels.txt");
    if (!a || !ind || !gl || !nl)
        throw IngestionError("cannot write TU files under " + directory);
    long node_base = 1;  // 1-based global node ids
    for (std::size_t g = 0; g < dataset.graphs.size(); ++g) {
        const Graph& graph = dataset.graphs[g];
        gl << graph.label.value_or(0) << "\n";
        for (int i = 0; i < graph.num_nodes; ++i) {
            ind << (g + 1) << "\n";
            // Node label = argmax of the one-hot feature row.
            std::size_t best = 0;
            for (std::size_t j = 1; j < graph.features.cols(); ++j)
                if (graph.features.at(static_cast<std::size_t>(i), j) >
                    graph.features.at(static_cast<std::size_t>(i), best))
                    best = j;
            nl << best << "\n";
        }
        for (auto [u, v] : graph.edges) {
            a << (node_base + u) << ", " << (node_base + v) << "\n";
            a << (node_base + v) << ", " << (node_base + u) << "\n";
        }
        node_base += graph.num_nodes;
    }
}

int motif_size_for_class(int label) { return label == 1 ? 5 : 4; }

Dataset generate_motif_dataset(int n_graphs, std::uint64_t seed,
                               const MotifParams& params) {
    if (n_graphs < 2) throw ConfigError("motif generator: need at least 2 graphs");
    Pcg32 rng(seed, rng_stream::kMotif);
    Dataset ds;
    ds.name = "motif";
    ds.num_classes = 2;
    ds.feature_dim = params.num_atom_types;

    // Atom-type mixture per node role. Base nodes cover the low types
    // uniformly. Motif nodes draw from the same high-type support for both
    // classes, with opposite skew: the motif location is visible in the
    // features but the class mostly has to be read off the planted
    // structure.
    auto draw_base_type = [&](Pcg32& r) {
        return static_cast<int>(r.uniform_int(5));  // types 0..4
    };
    auto draw_motif_type = [&](Pcg32& r, int label) {
        double u = r.uniform();
        if (label == 1) {
            if (u < 0.25) return 4;
            if (u < 0.60) return 5;
            return 6;
        }
        if (u < 0.40) return 4;
        if (u < 0.75) return 5;
        return 6;
    };

    for (int idx = 0; idx < n_graphs; ++idx) {
        int label = idx % 2;
        int span = params.base_nodes_max - params.base_nodes_min + 1;
        int n_base = params.base_nodes_min +
                     static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(span)));
        int n_motif = motif_size_for_class(label);
        int n = n_base + n_motif;

        std::vector<std::pair<int, int>> edges;
        // Erdos-Renyi base, fixed pair order.
        for (int u = 0; u < n_base; ++u)
            for (int v = u + 1; v < n_base; ++v)
                if (rng.uniform() < params.base_edge_prob) edges.emplace_back(u, v);
        // Planted motif on the trailing nodes; no other edges between motif
        // nodes, so the induced subgraph is exactly the motif.
        if (label == 1) {
            for (int i = 0; i < n_motif; ++i)
                edges.emplace_back(n_base + i, n_base + (i + 1) % n_motif);
        } else {
            for (int i = 0; i < n_motif; ++i)
                for (int j = i + 1; j < n_motif; ++j)
                    edges.emplace_back(n_base + i, n_base + j);
        }
        // Two attachment edges from the motif into the base graph.
        for (int k = 0; k < 2; ++k) {
            int m = n_base + static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(n_motif)));
            int b = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(n_base)));
            edges.emplace_back(b, m);
        }

        Tensor feats = Tensor::zeros({static_cast<std::size_t>(n),
                                      static_cast<std::size_t>(params.num_atom_types)});
        for (int i = 0; i < n; ++i) {
            int type = i < n_base ? draw_base_type(rng) : draw_motif_type(rng, label);
            feats.at(static_cast<std::size_t>(i), static_cast<std::size_t>(type)) = 1.0;
        }
        ds.graphs.push_back(Graph::make(n, std::move(edges), std::move(feats), label));
    }
    return ds;
}

namespace {
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& idx,
               const std::string& suffix) {
    Dataset out;
    out.num_classes = ds.num_classes;
    out.feature_dim = ds.feature_dim;
    out.name = ds.name + suffix;
    out.graphs.reserve(idx.size());
    for (std::size_t i : idx) out.graphs.push_back(ds.graphs[i]);
    return out;
}
}  // namespace

SplitResult split(const Dataset& dataset, const SplitSpec& spec) {
    if (dataset.graphs.empty()) throw ConfigError("split: empty dataset");
    double total = spec.target_train_frac + spec.shadow_frac + spec.test_frac;
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("split: fractions must sum to 1");
    if (spec.val_within_target_frac < 0.0 || spec.val_within_target_frac >= 1.0)
        throw ConfigError("split: val_within_target_frac must be in [0,1)");

    std::size_t n = dataset.graphs.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Pcg32 rng(spec.seed, rng_stream::kSplit);
    rng.shuffle(order);

    // Floor for the target and shadow pools, remainder to test.
    auto n_target = static_cast<std::size_t>(
        std::floor(spec.target_train_frac * static_cast<double>(n)));
    auto n_shadow = static_cast<std::size_t>(
        std::floor(spec.shadow_frac * static_cast<double>(n)));
    if (n_target + n_shadow > n) throw ConfigError("split: fractions overflow dataset");
    std::size_t n_test = n - n_target - n_shadow;
    auto n_val = static_cast<std::size_t>(
        std::floor(spec.val_within_target_frac * static_cast<double>(n_target)));
    std::size_t n_train = n_target - n_val;

    if (n_train == 0 || n_val == 0 || n_shadow == 0 || n_test == 0)
        throw ConfigError("split: a partition is empty");

    std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<long>(n_train));
    std::vector<std::size_t> val_idx(order.begin() + static_cast<long>(n_train),
                                     order.begin() + static_cast<long>(n_target));
    std::vector<std::size_t> shadow_idx(order.begin() + static_cast<long>(n_target),
                                        order.begin() + static_cast<long>(n_target + n_shadow));
    std::vector<std::size_t> test_idx(order.begin() + static_cast<long>(n_target + n_shadow),
                                      order.end());

    return SplitResult{subset(dataset, train_idx, "/target-train"),
                       subset(dataset, val_idx, "/target-val"),
                       subset(dataset, shadow_idx, "/shadow"),
                       subset(dataset, test_idx, "/test")};
}

Dataset pad_features(const Dataset& dataset, int target_dim) {
    if (target_dim < dataset.feature_dim)
        throw DimensionError("pad_features: target_dim " + std::to_string(target_dim) +
                             " < feature_dim " + std::to_string(dataset.feature_dim));
    if (target_dim == dataset.feature_dim) return dataset;
    Dataset out;
    out.num_classes = dataset.num_classes;
    out.feature_dim = target_dim;
    out.name = dataset.name;
    out.graphs.reserve(dataset.graphs.size());
    for (const Graph& g : dataset.graphs) {
        Tensor padded = Tensor::zeros({static_cast<std::size_t>(g.num_nodes),
                                       static_cast<std::size_t>(target_dim)});
        for (int i = 0; i < g.num_nodes; ++i)
            for (int j = 0; j < g.feature_dim(); ++j)
                padded.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    g.features.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        Graph copy = g;
        copy.features = std::move(padded);
        out.graphs.push_back(std::move(copy));
    }
    return out;
}

Graph permute_graph(const Graph& g, const std::vector<int>& perm) {
    if (perm.size() != static_cast<std::size_t>(g.num_nodes))
        throw DimensionError("permute_graph: permutation size mismatch");
    Tensor feats = Tensor::zeros(g.features.shape());
    for (int i = 0; i < g.num_nodes; ++i)
        for (std::size_t j = 0; j < g.features.cols(); ++j)
            feats.at(static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]), j) =
                g.features.at(static_cast<std::size_t>(i), j);
    std::vector<std::pair<int, int>> edges;
    edges.reserve(g.edges.size());
    for (auto [u, v] : g.edges)
        edges.emplace_back(perm[static_cast<std::size_t>(u)],
                           perm[static_cast<std::size_t>(v)]);
    return Graph::make(g.num_nodes, std::move(edges), std::move(feats), g.label);
}

}  // namespace gsteal
