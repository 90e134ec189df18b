#include "gsteal/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "gsteal/errors.hpp"
#include "gsteal/optim.hpp"
#include "gsteal/wire.hpp"

namespace gsteal {

std::string align_mode_name(AlignMode m) {
    switch (m) {
        case AlignMode::Rank: return "Rank";
        case AlignMode::MSE: return "MSE";
        case AlignMode::None: return "None";
    }
    return "unknown";
}

AlignMode align_mode_from_name(const std::string& name) {
    if (name == "Rank") return AlignMode::Rank;
    if (name == "MSE") return AlignMode::MSE;
    if (name == "None") return AlignMode::None;
    throw ConfigError("unknown align mode: " + name);
}

StylePlan select_style_nodes(const ExplanationVector& explanation, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw ConfigError("select_style_nodes: alpha must be in [0,1]");
    std::size_t n = explanation.scores.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Ascending by score, ties by ascending node index.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return explanation.scores[static_cast<std::size_t>(a)] <
               explanation.scores[static_cast<std::size_t>(b)];
    });
    auto k = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
    StylePlan plan;
    plan.style_nodes.assign(order.begin(), order.begin() + static_cast<long>(k));
    plan.causal_nodes.assign(order.begin() + static_cast<long>(k), order.end());
    std::sort(plan.style_nodes.begin(), plan.style_nodes.end());
    std::sort(plan.causal_nodes.begin(), plan.causal_nodes.end());
    return plan;
}

std::optional<AugmentedSample> augment_node_drop(const QueryRecord& record,
                                                 const StylePlan& plan,
                                                 double beta, Pcg32& rng,
                                                 std::size_t origin) {
    if (beta < 0.0 || beta > 1.0)
        throw ConfigError("augment_node_drop: beta must be in [0,1]");
    const Graph& g = record.graph;
    auto n_drop = static_cast<std::size_t>(
        std::floor(beta * static_cast<double>(plan.style_nodes.size())));

    // Partial Fisher-Yates over a copy of the style set.
    std::vector<int> pool = plan.style_nodes;
    for (std::size_t i = 0; i < n_drop; ++i) {
        std::size_t j = i + rng.uniform_int(static_cast<std::uint32_t>(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    std::set<int> dropped(pool.begin(), pool.begin() + static_cast<long>(n_drop));

    if (static_cast<std::size_t>(g.num_nodes) == dropped.size())
        return std::nullopt;  // would empty the graph

    // Order-preserving reindexing of survivors.
    std::vector<int> new_index(static_cast<std::size_t>(g.num_nodes), -1);
    int next = 0;
    for (int v = 0; v < g.num_nodes; ++v)
        if (!dropped.count(v)) new_index[static_cast<std::size_t>(v)] = next++;

    std::vector<std::pair<int, int>> edges;
    edges.reserve(g.edges.size());
    for (auto [u, v] : g.edges) {
        int nu = new_index[static_cast<std::size_t>(u)];
        int nv = new_index[static_cast<std::size_t>(v)];
        if (nu >= 0 && nv >= 0) edges.emplace_back(nu, nv);
    }

    Tensor feats = Tensor::zeros({static_cast<std::size_t>(next), g.features.cols()});
    std::vector<double> expl;
    expl.reserve(static_cast<std::size_t>(next));
    for (int v = 0; v < g.num_nodes; ++v) {
        int nv = new_index[static_cast<std::size_t>(v)];
        if (nv < 0) continue;
        for (std::size_t j = 0; j < g.features.cols(); ++j)
            feats.at(static_cast<std::size_t>(nv), j) =
                g.features.at(static_cast<std::size_t>(v), j);
        expl.push_back(record.explanation.scores[static_cast<std::size_t>(v)]);
    }

    AugmentedSample sample;
    sample.graph = Graph::make(next, std::move(edges), std::move(feats),
                               record.predicted_label);
    sample.label = record.predicted_label;
    sample.explanation = std::move(expl);
    sample.origin = origin;
    return sample;
}

AugmentedSample augment_edge_perturb(const QueryRecord& record,
                                     const StylePlan& plan, double p,
                                     Pcg32& rng, std::size_t origin) {
    if (p < 0.0 || p > 1.0)
        throw ConfigError("augment_edge_perturb: p must be in [0,1]");
    const Graph& g = record.graph;
    std::vector<std::pair<int, int>> edges = g.edges;
    // Pairs with both endpoints in the style set, in sorted order; one
    // uniform draw per pair keeps the stream deterministic for any p.
    for (std::size_t a = 0; a < plan.style_nodes.size(); ++a) {
        for (std::size_t b = a + 1; b < plan.style_nodes.size(); ++b) {
            int u = plan.style_nodes[a], v = plan.style_nodes[b];
            bool toggle = rng.uniform() < p;
            if (!toggle) continue;
            auto key = std::make_pair(u, v);
            auto it = std::find(edges.begin(), edges.end(), key);
            if (it != edges.end()) edges.erase(it);
            else edges.push_back(key);
        }
    }
    AugmentedSample sample;
    sample.graph = Graph::make(g.num_nodes, std::move(edges), g.features,
                               record.predicted_label);
    sample.label = record.predicted_label;
    sample.explanation = record.explanation.scores;
    sample.origin = origin;
    return sample;
}

TrainingSet collect_training_set(QueryService& oracle, const Dataset& shadow,
                                 long budget, const AttackConfig& config) {
    if (budget < 0) throw ConfigError("collect: negative budget");
    if (static_cast<long>(shadow.graphs.size()) < budget)
        throw ConfigError("collect: shadow smaller than budget");
    Pcg32 rng(config.seed, rng_stream::kAttack);
    std::vector<std::size_t> order(shadow.graphs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    TrainingSet ts;
    ts.queried.reserve(static_cast<std::size_t>(budget));
    for (long q = 0; q < budget; ++q) {
        // A refusal here means the budget accounting is broken; let it fly.
        QueryRecord rec = oracle.query(shadow.graphs[order[static_cast<std::size_t>(q)]]);
        ts.queried.push_back(std::move(rec));
        if (!config.augment) continue;
        const QueryRecord& stored = ts.queried.back();
        StylePlan plan = select_style_nodes(stored.explanation, config.alpha);
        for (int k = 0; k < config.k_augments; ++k) {
            if (k % 2 == 0) {
                auto sample = augment_node_drop(stored, plan, config.beta, rng,
                                                static_cast<std::size_t>(q));
                if (sample) ts.augmented.push_back(std::move(*sample));
                else ts.skipped_augments++;
            } else {
                ts.augmented.push_back(augment_edge_perturb(
                    stored, plan, config.edge_perturb_prob, rng,
                    static_cast<std::size_t>(q)));
            }
        }
    }
    return ts;
}

namespace {

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

struct RankPair {
    std::size_t i, j;
    double r;
};

std::vector<RankPair> build_pairs(const std::vector<double>& target,
                                  bool sample, int max_pairs, Pcg32* rng) {
    std::size_t n = target.size();
    std::vector<RankPair> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double r = target[i] > target[j] ? 1.0 : (target[i] < target[j] ? 0.0 : 0.5);
            pairs.push_back(RankPair{i, j, r});
        }
    }
    if (sample && rng != nullptr && max_pairs > 0 &&
        pairs.size() > static_cast<std::size_t>(max_pairs)) {
        for (int k = 0; k < max_pairs; ++k) {
            std::size_t j = static_cast<std::size_t>(k) +
                            rng->uniform_int(static_cast<std::uint32_t>(
                                pairs.size() - static_cast<std::size_t>(k)));
            std::swap(pairs[static_cast<std::size_t>(k)], pairs[j]);
        }
        pairs.resize(static_cast<std::size_t>(max_pairs));
    }
    return pairs;
}

Var rank_loss_impl(Tape& tape, Var scores, const std::vector<double>& target,
                   bool sample, int max_pairs, Pcg32* rng) {
    const Tensor& sv = scores.value();
    if (sv.size() != target.size())
        throw DimensionError("rank_alignment_loss: length mismatch");
    if (target.size() < 2) return tape.leaf(Tensor::scalar(0.0));

    std::vector<RankPair> pairs = build_pairs(target, sample, max_pairs, rng);
    double loss = 0.0;
    for (const RankPair& p : pairs) {
        double delta = sv.data()[p.i] - sv.data()[p.j];
        // R(delta, r) = -r log sig(delta) - (1-r) log(1 - sig(delta))
        loss += p.r * softplus(-delta) + (1.0 - p.r) * softplus(delta);
    }
    double inv = 1.0 / static_cast<double>(pairs.size());
    loss *= inv;
    return tape.custom_op(
        Tensor::scalar(loss), {scores},
        [pairs = std::move(pairs), inv](const Tensor& grad_out,
                                        const std::vector<Var>& parents,
                                        const std::vector<Tensor*>& parent_grads) {
            double g = grad_out.data()[0] * inv;
            const Tensor& s = parents[0].value();
            Tensor& gs = *parent_grads[0];
            for (const RankPair& p : pairs) {
                double delta = s.data()[p.i] - s.data()[p.j];
                double d = g * (stable_sigmoid(delta) - p.r);  // dR/ddelta
                gs.values()[p.i] += d;
                gs.values()[p.j] -= d;
            }
        });
}

}  // namespace

Var rank_alignment_loss(Tape& tape, Var surrogate_scores,
                        const std::vector<double>& target_scores) {
    return rank_loss_impl(tape, surrogate_scores, target_scores, false, 0, nullptr);
}

Var rank_alignment_loss_sampled(Tape& tape, Var surrogate_scores,
                                const std::vector<double>& target_scores,
                                int max_pairs, Pcg32& rng) {
    return rank_loss_impl(tape, surrogate_scores, target_scores, true, max_pairs,
                          &rng);
}

Var mse_alignment_loss(Tape& tape, Var surrogate_scores,
                       const std::vector<double>& target_scores) {
    const Tensor& sv = surrogate_scores.value();
    if (sv.size() != target_scores.size())
        throw DimensionError("mse_alignment_loss: length mismatch");
    std::size_t n = target_scores.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = sv.data()[i] - target_scores[i];
        loss += d * d;
    }
    loss /= static_cast<double>(n);
    return tape.custom_op(
        Tensor::scalar(loss), {surrogate_scores},
        [target_scores, n](const Tensor& grad_out, const std::vector<Var>& parents,
                           const std::vector<Tensor*>& parent_grads) {
            double g = grad_out.data()[0];
            const Tensor& s = parents[0].value();
            Tensor& gs = *parent_grads[0];
            for (std::size_t i = 0; i < n; ++i)
                gs.values()[i] +=
                    g * 2.0 * (s.data()[i] - target_scores[i]) / static_cast<double>(n);
        });
}

Var surrogate_cam_scores(Tape& tape, const ForwardVars& fwd,
                         const std::vector<Var>& params, int class_c) {
    Var w_cls = params[params.size() - 2];
    Var column = tape.gather_cols(w_cls, {static_cast<std::size_t>(class_c)});
    return tape.matmul(fwd.node_embeddings, column);
}

namespace {

struct SampleView {
    const Graph* graph;
    int label;
    const std::vector<double>* probs;        // null for hard-label samples
    const std::vector<double>* explanation;  // target scores for alignment
};

}  // namespace

ModelState train_surrogate(const TrainingSet& data, const AttackConfig& config) {
    if (data.queried.empty()) throw ConfigError("train_surrogate: no query records");
    if (config.batch_size < 1) throw ConfigError("train_surrogate: bad batch size");

    std::vector<SampleView> samples;
    samples.reserve(data.queried.size() + data.augmented.size());
    for (const QueryRecord& r : data.queried)
        samples.push_back(SampleView{&r.graph, r.predicted_label,
                                     r.probs ? &*r.probs : nullptr,
                                     &r.explanation.scores});
    for (const AugmentedSample& a : data.augmented)
        samples.push_back(SampleView{&a.graph, a.label, nullptr, &a.explanation});

    ModelState state = init_model(config.surrogate);
    if (config.epochs == 0) return state;

    AdamState adam = AdamState::init(state.params);
    Pcg32 shuffle_rng(config.seed, rng_stream::kTrainShuffle);
    Pcg32 pair_rng(config.seed, rng_stream::kAttack + 100);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            std::size_t end = std::min(order.size(),
                                       start + static_cast<std::size_t>(config.batch_size));
            Tape tape;
            std::vector<Var> params = lift_params(tape, state, true);
            Var total;
            for (std::size_t i = start; i < end; ++i) {
                const SampleView& s = samples[order[i]];
                ForwardVars fv = build_forward(tape, params, config.surrogate, *s.graph);
                Var loss;
                if (s.probs != nullptr) {
                    Tensor target = Tensor::from({1, s.probs->size()}, *s.probs);
                    loss = tape.cross_entropy_soft(fv.logits, target);
                } else {
                    loss = tape.cross_entropy(fv.logits, {s.label});
                }
                if (config.align_mode != AlignMode::None) {
                    const Tensor& probs = fv.probs.value();
                    int c = 0;
                    for (std::size_t k = 1; k < probs.cols(); ++k)
                        if (probs.at(0, k) > probs.at(0, static_cast<std::size_t>(c)))
                            c = static_cast<int>(k);
                    Var cam = surrogate_cam_scores(tape, fv, params, c);
                    Var align;
                    if (config.align_mode == AlignMode::Rank) {
                        align = rank_loss_impl(tape, cam, *s.explanation,
                                               config.pair_sampling, config.max_pairs,
                                               &pair_rng);
                    } else {
                        align = mse_alignment_loss(tape, cam, *s.explanation);
                    }
                    loss = tape.add(loss, tape.scale(align, config.lambda));
                }
                total = total.valid() ? tape.add(total, loss) : loss;
            }
            total = tape.scale(total, 1.0 / static_cast<double>(end - start));
            if (!std::isfinite(total.value().data()[0]))
                throw TrainingError("train_surrogate: non-finite loss", epoch);
            tape.backward(total);
            std::vector<Tensor> grads;
            grads.reserve(params.size());
            for (const Var& v : params) grads.push_back(v.grad());
            adam_step(state.params, grads, adam);
        }
    }
    return state;
}

// ---------------------------------------------------------------------------
// JSONL audit dump
// ---------------------------------------------------------------------------

namespace {

std::string encode_scores(const std::vector<double>& scores) {
    std::string out = "[";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i) out += ',';
        out += wire::format_double(scores[i]);
    }
    return out + "]";
}

}  // namespace

void dump_training_set(const TrainingSet& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write dump: " + path);
    for (const QueryRecord& r : data.queried) {
        out << "{\"type\":\"query\",\"graph\":" << wire::encode_graph(r.graph)
            << ",\"label\":" << r.predicted_label;
        if (r.probs) out << ",\"probs\":" << encode_scores(*r.probs);
        out << ",\"explanation\":" << encode_scores(r.explanation.scores)
            << ",\"class_used\":" << r.explanation.class_used << ",\"method\":\""
            << explain_method_name(r.explanation.method) << "\"}\n";
    }
    for (const AugmentedSample& a : data.augmented) {
        out << "{\"type\":\"augment\",\"origin\":" << a.origin
            << ",\"graph\":" << wire::encode_graph(a.graph)
            << ",\"label\":" << a.label
            << ",\"explanation\":" << encode_scores(a.explanation) << "}\n";
    }
}

TrainingSet load_training_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open dump: " + path);
    TrainingSet ts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw FormatError(path + ":" + std::to_string(line_no) + ": bad JSON");
        std::string type = j.value("type", std::string{});
        auto graph_json = j.at("graph").dump();
        // Reuse the wire decoder via a synthetic query request.
        wire::Request req = wire::parse_request(
            "{\"id\":0,\"op\":\"query\",\"graph\":" + graph_json + "}");
        if (type == "query") {
            QueryRecord rec;
            rec.graph = *req.graph;
            rec.predicted_label = j.at("label").get<int>();
            if (j.contains("probs"))
                rec.probs = j.at("probs").get<std::vector<double>>();
            rec.explanation.scores =
                j.at("explanation").get<std::vector<double>>();
            rec.explanation.class_used = j.value("class_used", rec.predicted_label);
            rec.explanation.method = ExplainMethod::External;
            std::string method = j.value("method", std::string{});
            if (method == "GraphCAM") rec.explanation.method = ExplainMethod::GraphCAM;
            else if (method == "Grad") rec.explanation.method = ExplainMethod::Grad;
            else if (method == "GradCAM") rec.explanation.method = ExplainMethod::GradCAM;
            ts.queried.push_back(std::move(rec));
        } else if (type == "augment") {
            AugmentedSample a;
            a.graph = *req.graph;
            a.graph.label = j.at("label").get<int>();
            a.label = j.at("label").get<int>();
            a.explanation = j.at("explanation").get<std::vector<double>>();
            a.origin = j.at("origin").get<std::size_t>();
            ts.augmented.push_back(std::move(a));
        } else {
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": unknown record type '" + type + "'");
        }
    }
    return ts;
}

}  // namespace gsteal
