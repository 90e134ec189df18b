#include "gsteal/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "gsteal/errors.hpp"
#include "gsteal/metrics.hpp"
#include "gsteal/optim.hpp"
#include "gsteal/rng.hpp"

namespace gsteal {

std::string arch_name(Arch a) { return a == Arch::GIN ? "GIN" : "GCN"; }

Arch arch_from_name(const std::string& name) {
    if (name == "GIN") return Arch::GIN;
    if (name == "GCN") return Arch::GCN;
    throw ConfigError("unknown architecture: " + name);
}

int predicted_class(const ForwardOutput& out) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < out.probs.cols(); ++c)
        if (out.probs.at(0, c) > out.probs.at(0, best)) best = c;
    return static_cast<int>(best);
}

namespace {

Tensor glorot(Pcg32& rng, std::size_t fan_in, std::size_t fan_out) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros({fan_in, fan_out});
    for (double& v : t.values()) v = rng.uniform_range(-limit, limit);
    return t;
}

void check_config(const ModelConfig& c) {
    if (c.num_layers < 1) throw ConfigError("model: num_layers must be >= 1");
    if (c.hidden_dim < 1) throw ConfigError("model: hidden_dim must be >= 1");
    if (c.num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
    if (c.feature_dim < 1) throw ConfigError("model: feature_dim must be >= 1");
}

}  // namespace

ModelState init_model(const ModelConfig& config) {
    check_config(config);
    Pcg32 rng(config.seed, rng_stream::kWeightInit);
    ModelState state;
    state.config = config;
    auto h = static_cast<std::size_t>(config.hidden_dim);
    auto c = static_cast<std::size_t>(config.num_classes);
    std::size_t in = static_cast<std::size_t>(config.feature_dim);
    for (int l = 0; l < config.num_layers; ++l) {
        if (config.arch == Arch::GIN) {
            state.params.push_back(Tensor::zeros({1, 1}));  // eps
            state.params.push_back(glorot(rng, in, h));     // w1
            state.params.push_back(Tensor::zeros({1, h}));  // b1
            state.params.push_back(glorot(rng, h, h));      // w2
            state.params.push_back(Tensor::zeros({1, h}));  // b2
        } else {
            state.params.push_back(glorot(rng, in, h));     // w
            state.params.push_back(Tensor::zeros({1, h}));  // b
        }
        in = h;
    }
    state.params.push_back(glorot(rng, h, c));      // w_cls
    state.params.push_back(Tensor::zeros({1, c}));  // b_cls
    return state;
}

std::vector<Var> lift_params(Tape& tape, const ModelState& state, bool requires_grad) {
    std::vector<Var> vars;
    vars.reserve(state.params.size());
    for (const Tensor& p : state.params) vars.push_back(tape.leaf(p, requires_grad));
    return vars;
}

ForwardVars build_forward(Tape& tape, const std::vector<Var>& params,
                          const ModelConfig& config, const Graph& graph) {
    if (graph.feature_dim() != config.feature_dim)
        throw DimensionError("forward: graph feature width " +
                             std::to_string(graph.feature_dim()) +
                             " != model feature_dim " +
                             std::to_string(config.feature_dim));
    auto n = static_cast<std::size_t>(graph.num_nodes);

    // Directed edge arrays (both directions of every undirected edge).
    std::vector<std::size_t> src, dst;
    src.reserve(graph.edges.size() * 2);
    dst.reserve(graph.edges.size() * 2);
    for (auto [u, v] : graph.edges) {
        src.push_back(static_cast<std::size_t>(u));
        dst.push_back(static_cast<std::size_t>(v));
        src.push_back(static_cast<std::size_t>(v));
        dst.push_back(static_cast<std::size_t>(u));
    }

    Var h = tape.leaf(graph.features, false);
    std::size_t p = 0;
    for (int l = 0; l < config.num_layers; ++l) {
        if (config.arch == Arch::GIN) {
            Var eps = params[p++];
            Var w1 = params[p++], b1 = params[p++];
            Var w2 = params[p++], b2 = params[p++];
            Var agg;
            if (!src.empty()) {
                Var msgs = tape.gather_rows(h, src);
                agg = tape.scatter_add_rows(msgs, dst, n);
            } else {
                agg = tape.scale(h, 0.0);
            }
            // (1 + eps) h + sum of neighbors
            Var self_term = tape.add(h, tape.scale_by(h, eps));
            Var combined = tape.add(self_term, agg);
            Var hidden = tape.relu(tape.add(tape.matmul(combined, w1), b1));
            h = tape.add(tape.matmul(hidden, w2), b2);
        } else {
            Var w = params[p++], b = params[p++];
            // Symmetric normalization with self loops:
            // coeff(u->v) = 1/sqrt((deg(u)+1)(deg(v)+1)), plus the self term.
            std::vector<int> deg = graph.degrees();
            std::vector<std::size_t> gsrc = src, gdst = dst;
            std::vector<double> coeffs;
            coeffs.reserve(src.size() + n);
            for (std::size_t e = 0; e < src.size(); ++e)
                coeffs.push_back(1.0 / std::sqrt(static_cast<double>(deg[src[e]] + 1) *
                                                 static_cast<double>(deg[dst[e]] + 1)));
            for (std::size_t v = 0; v < n; ++v) {
                gsrc.push_back(v);
                gdst.push_back(v);
                coeffs.push_back(1.0 / static_cast<double>(deg[v] + 1));
            }
            Var msgs = tape.gather_rows(h, gsrc);
            Var scaled = tape.scale_rows(msgs, std::move(coeffs));
            Var agg = tape.scatter_add_rows(scaled, gdst, n);
            h = tape.relu(tape.add(tape.matmul(agg, w), b));
        }
    }

    ForwardVars out;
    out.node_embeddings = h;
    out.pooled = tape.row_mean(h);
    out.logits = tape.add(tape.matmul(out.pooled, params[p]), params[p + 1]);
    out.probs = tape.softmax_rows(out.logits);
    return out;
}

ForwardOutput forward(const ModelState& state, const Graph& graph) {
    Tape tape;
    std::vector<Var> params = lift_params(tape, state, false);
    ForwardVars fv = build_forward(tape, params, state.config, graph);
    return ForwardOutput{fv.node_embeddings.value(), fv.pooled.value(),
                         fv.logits.value(), fv.probs.value()};
}

namespace {

double validation_auc(const ModelState& state, const Dataset& val) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(val.graphs.size());
    labels.reserve(val.graphs.size());
    for (const Graph& g : val.graphs) {
        ForwardOutput out = forward(state, g);
        scores.push_back(out.probs.at(0, 1));
        labels.push_back(g.label.value());
    }
    return roc_auc(scores, labels);
}

}  // namespace

ModelState train_model(const ModelConfig& config, const Dataset& train,
                       const Dataset& val, int epochs, int batch_size,
                       std::vector<double>* val_auc_trace) {
    if (train.graphs.empty() || val.graphs.empty())
        throw ConfigError("train_model: empty dataset");
    if (batch_size < 1) throw ConfigError("train_model: batch_size must be >= 1");

    ModelState state = init_model(config);
    if (epochs == 0) return state;

    AdamState adam = AdamState::init(state.params);
    Pcg32 shuffle_rng(config.seed, rng_stream::kTrainShuffle);

    std::vector<std::size_t> order(train.graphs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    ModelState best;
    double best_auc = -1.0;

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(batch_size)) {
            std::size_t end = std::min(order.size(),
                                       start + static_cast<std::size_t>(batch_size));
            Tape tape;
            std::vector<Var> params = lift_params(tape, state, true);
            Var batch_logits;
            std::vector<int> labels;
            for (std::size_t i = start; i < end; ++i) {
                const Graph& g = train.graphs[order[i]];
                ForwardVars fv = build_forward(tape, params, config, g);
                labels.push_back(g.label.value());
                batch_logits = (i == start)
                                   ? fv.logits
                                   : tape.concat_rows(batch_logits, fv.logits);
            }
            Var loss = tape.cross_entropy(batch_logits, labels);
            if (!std::isfinite(loss.value().data()[0]))
                throw TrainingError("train_model: non-finite loss", epoch);
            tape.backward(loss);
            std::vector<Tensor> grads;
            grads.reserve(params.size());
            for (const Var& v : params) grads.push_back(v.grad());
            adam_step(state.params, grads, adam);
        }
        double auc = validation_auc(state, val);
        if (val_auc_trace) val_auc_trace->push_back(auc);
        if (auc > best_auc) {
            best_auc = auc;
            best = state;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Serialization: little-endian binary container.
//   magic "GSTLM001" | arch u32 | num_layers u32 | hidden u32 | classes u32 |
//   feature_dim u32 | seed u64 | tensor count u32 | tensors
//   tensor: ndim u32 | dims u32... | f64 data
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'G', 'S', 'T', 'L', 'M', '0', '0', '1'};

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw FormatError(path + ": truncated model file");
    return v;
}
std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw FormatError(path + ": truncated model file");
    return v;
}

}  // namespace

void save_model(const ModelState& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot write model file: " + path);
    out.write(kMagic, sizeof kMagic);
    write_u32(out, static_cast<std::uint32_t>(state.config.arch));
    write_u32(out, static_cast<std::uint32_t>(state.config.num_layers));
    write_u32(out, static_cast<std::uint32_t>(state.config.hidden_dim));
    write_u32(out, static_cast<std::uint32_t>(state.config.num_classes));
    write_u32(out, static_cast<std::uint32_t>(state.config.feature_dim));
    write_u64(out, state.config.seed);
    write_u32(out, static_cast<std::uint32_t>(state.params.size()));
    for (const Tensor& t : state.params) {
        write_u32(out, static_cast<std::uint32_t>(t.shape().size()));
        for (std::size_t d : t.shape()) write_u32(out, static_cast<std::uint32_t>(d));
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw IngestionError("write failed: " + path);
}

ModelState load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open model file: " + path);
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw FormatError(path + ": bad magic or unsupported version");
    ModelState state;
    state.config.arch = static_cast<Arch>(read_u32(in, path));
    state.config.num_layers = static_cast<int>(read_u32(in, path));
    state.config.hidden_dim = static_cast<int>(read_u32(in, path));
    state.config.num_classes = static_cast<int>(read_u32(in, path));
    state.config.feature_dim = static_cast<int>(read_u32(in, path));
    state.config.seed = read_u64(in, path);
    std::uint32_t count = read_u32(in, path);
    state.params.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t ndim = read_u32(in, path);
        std::vector<std::size_t> shape;
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            shape.push_back(read_u32(in, path));
            total *= shape.back();
        }
        Tensor t = Tensor::zeros(shape);
        if (!in.read(reinterpret_cast<char*>(t.data()),
                     static_cast<std::streamsize>(total * sizeof(double))))
            throw FormatError(path + ": truncated model file");
        state.params.push_back(std::move(t));
    }
    return state;
}

}  // namespace gsteal
