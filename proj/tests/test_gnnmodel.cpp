#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "gsteal/errors.hpp"
#include "gsteal/metrics.hpp"
#include "gsteal/model.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace gsteal;
using namespace gsteal::test;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("gnnmodel");

TEST_CASE("isolated GIN node sees only its own features") {
    Pcg32 rng(3);
    ModelState state = random_model(rng, Arch::GIN, 4);
    Tensor f = random_tensor(rng, 1, 4);
    Graph solo = Graph::make(1, {}, f);
    // Same node embedded in a larger edgeless graph.
    Tensor f2 = Tensor::zeros({3, 4});
    for (std::size_t j = 0; j < 4; ++j) {
        f2.at(0, j) = f.at(0, j);
        f2.at(1, j) = 9.0;
        f2.at(2, j) = -3.0;
    }
    Graph trio = Graph::make(3, {}, f2);
    ForwardOutput a = forward(state, solo);
    ForwardOutput b = forward(state, trio);
    for (std::size_t k = 0; k < a.node_embeddings.cols(); ++k)
        CHECK(a.node_embeddings.at(0, k) ==
              doctest::Approx(b.node_embeddings.at(0, k)).epsilon(1e-12));
}

TEST_CASE("one identity-initialized GIN layer matches the hand evaluation") {
    // feature_dim = hidden = 2; W1 = W2 = I, biases 0, eps 0. The layer
    // reduces to ReLU(h_v + sum of neighbor rows).
    ModelConfig cfg;
    cfg.arch = Arch::GIN;
    cfg.num_layers = 1;
    cfg.hidden_dim = 2;
    cfg.num_classes = 2;
    cfg.feature_dim = 2;
    ModelState state = init_model(cfg);
    state.params[0] = Tensor::scalar(0.0);                       // eps
    state.params[1] = Tensor::from({2, 2}, {1, 0, 0, 1});        // w1
    state.params[2] = Tensor::zeros({1, 2});                     // b1
    state.params[3] = Tensor::from({2, 2}, {1, 0, 0, 1});        // w2
    state.params[4] = Tensor::zeros({1, 2});                     // b2

    Graph g = Graph::make(2, {{0, 1}}, Tensor::from({2, 2}, {1.0, -2.0, 0.5, 3.0}));
    ForwardOutput out = forward(state, g);
    // node 0: ReLU([1, -2] + [0.5, 3]) = [1.5, 1]
    CHECK(out.node_embeddings.at(0, 0) == doctest::Approx(1.5));
    CHECK(out.node_embeddings.at(0, 1) == doctest::Approx(1.0));
    // node 1: ReLU([0.5, 3] + [1, -2]) = [1.5, 1]
    CHECK(out.node_embeddings.at(1, 0) == doctest::Approx(1.5));
    CHECK(out.node_embeddings.at(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("permutation invariance of logits, equivariance of embeddings") {
    Pcg32 rng(17);
    for (Arch arch : {Arch::GIN, Arch::GCN}) {
        for (int trial = 0; trial < 25; ++trial) {
            ModelState state = random_model(rng, arch, 4);
            Graph g = random_graph(rng);
            std::vector<int> perm = identity_permutation(g.num_nodes);
            rng.shuffle(perm);
            Graph pg = permute_graph(g, perm);
            ForwardOutput a = forward(state, g);
            ForwardOutput b = forward(state, pg);
            for (std::size_t c = 0; c < a.logits.cols(); ++c)
                CHECK(a.logits.at(0, c) == doctest::Approx(b.logits.at(0, c)).epsilon(1e-9));
            for (int v = 0; v < g.num_nodes; ++v)
                for (std::size_t k = 0; k < a.node_embeddings.cols(); ++k)
                    CHECK(a.node_embeddings.at(static_cast<std::size_t>(v), k) ==
                          doctest::Approx(b.node_embeddings.at(
                                              static_cast<std::size_t>(perm[static_cast<std::size_t>(v)]), k))
                              .epsilon(1e-9));
        }
    }
}

TEST_CASE("pooling and classifier identities hold exactly") {
    Pcg32 rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        Arch arch = trial % 2 == 0 ? Arch::GIN : Arch::GCN;
        ModelState state = random_model(rng, arch, 3);
        Graph g = random_graph(rng, 2, 8, 3);
        ForwardOutput out = forward(state, g);
        auto n = static_cast<double>(g.num_nodes);
        for (std::size_t k = 0; k < out.pooled.cols(); ++k) {
            double mean = 0.0;
            for (std::size_t v = 0; v < out.node_embeddings.rows(); ++v)
                mean += out.node_embeddings.at(v, k);
            mean /= n;
            CHECK(std::abs(mean - out.pooled.at(0, k)) < 1e-12);
        }
        const Tensor& w = state.classifier_weight();
        const Tensor& b = state.classifier_bias();
        double prob_sum = 0.0;
        for (std::size_t c = 0; c < out.logits.cols(); ++c) {
            double logit = b.at(0, c);
            for (std::size_t k = 0; k < w.rows(); ++k)
                logit += out.pooled.at(0, k) * w.at(k, c);
            CHECK(std::abs(logit - out.logits.at(0, c)) < 1e-12);
            prob_sum += out.probs.at(0, c);
        }
        CHECK(prob_sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("feature width mismatch raises a dimension error") {
    Pcg32 rng(31);
    ModelState state = random_model(rng, Arch::GIN, 4);
    Graph g = random_graph(rng, 3, 5, 7);
    CHECK_THROWS_AS(forward(state, g), DimensionError);
}

TEST_CASE("full model gradients against finite differences, both arches") {
    Pcg32 rng(37);
    GradCheck gc;
    for (Arch arch : {Arch::GIN, Arch::GCN}) {
        for (int trial = 0; trial < 10; ++trial) {
            ModelConfig cfg;
            cfg.arch = arch;
            cfg.num_layers = 2;
            cfg.hidden_dim = 4;
            cfg.num_classes = 2;
            cfg.feature_dim = 3;
            cfg.seed = rng.next_u64();
            ModelState state = init_model(cfg);
            // Jitter every parameter (zero-initialized biases included) so no
            // ReLU preactivation sits exactly on the kink, where the analytic
            // subgradient and finite differences legitimately disagree.
            for (Tensor& p : state.params)
                for (double& v : p.values()) v += rng.uniform_range(0.05, 0.35);
            Graph g = random_graph(rng, 3, 6, 3);
            int label = trial % 2;
            double err = gc.run(state.params, [&](Tape& t, const std::vector<Var>& in) {
                ForwardVars fv = build_forward(t, in, cfg, g);
                return t.cross_entropy(fv.logits, {label});
            });
            CHECK(err < gc.tol);
        }
    }
}

TEST_CASE("training: epochs=0 returns the initialization unchanged") {
    Dataset ds = generate_motif_dataset(40, 8);
    SplitSpec spec;
    SplitResult parts = split(ds, spec);
    ModelConfig cfg;
    cfg.hidden_dim = 8;
    cfg.feature_dim = ds.feature_dim;
    cfg.seed = 5;
    ModelState trained = train_model(cfg, parts.target_train, parts.target_val, 0, 16);
    ModelState fresh = init_model(cfg);
    REQUIRE(trained.params.size() == fresh.params.size());
    for (std::size_t i = 0; i < trained.params.size(); ++i)
        CHECK(trained.params[i] == fresh.params[i]);
}

TEST_CASE("training: same config and seed give identical parameters") {
    Dataset ds = generate_motif_dataset(40, 8);
    SplitSpec spec;
    SplitResult parts = split(ds, spec);
    ModelConfig cfg;
    cfg.hidden_dim = 8;
    cfg.feature_dim = ds.feature_dim;
    cfg.seed = 5;
    ModelState a = train_model(cfg, parts.target_train, parts.target_val, 3, 8);
    ModelState b = train_model(cfg, parts.target_train, parts.target_val, 3, 8);
    for (std::size_t i = 0; i < a.params.size(); ++i) CHECK(a.params[i] == b.params[i]);
}

TEST_CASE("training: checkpoint beats every recorded epoch") {
    Dataset ds = generate_motif_dataset(60, 12);
    SplitSpec spec;
    SplitResult parts = split(ds, spec);
    ModelConfig cfg;
    cfg.hidden_dim = 8;
    cfg.feature_dim = ds.feature_dim;
    cfg.seed = 7;
    std::vector<double> trace;
    ModelState best = train_model(cfg, parts.target_train, parts.target_val, 8, 8, &trace);
    REQUIRE(trace.size() == 8);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const Graph& g : parts.target_val.graphs) {
        scores.push_back(forward(best, g).probs.at(0, 1));
        labels.push_back(g.label.value());
    }
    double best_auc = roc_auc(scores, labels);
    for (double epoch_auc : trace) CHECK(best_auc >= epoch_auc - 1e-12);
}

TEST_CASE("training: learns the motif task at reduced scale") {
    Dataset ds = generate_motif_dataset(320, 42);
    SplitSpec spec;
    SplitResult parts = split(ds, spec);
    ModelConfig cfg;
    cfg.hidden_dim = 24;
    cfg.num_layers = 3;
    cfg.feature_dim = ds.feature_dim;
    cfg.seed = 42;
    std::vector<double> trace;
    train_model(cfg, parts.target_train, parts.target_val, 80, 32, &trace);
    double best = 0.0;
    for (double a : trace) best = std::max(best, a);
    CHECK(best >= 0.9);
}

TEST_CASE("training: exploding inputs raise a training error with the epoch") {
    Dataset ds = generate_motif_dataset(40, 8);
    for (Graph& g : ds.graphs)
        for (double& v : g.features.values()) v *= 1e308;
    SplitSpec spec;
    SplitResult parts = split(ds, spec);
    ModelConfig cfg;
    cfg.hidden_dim = 8;
    cfg.feature_dim = ds.feature_dim;
    try {
        train_model(cfg, parts.target_train, parts.target_val, 3, 8);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch >= 1);
    }
}

TEST_CASE("save/load round trip is bitwise and reproduces logits") {
    Pcg32 rng(43);
    ModelState state = random_model(rng, Arch::GIN, 5, 8, 3);
    Graph g = random_graph(rng, 4, 8, 5);
    ForwardOutput before = forward(state, g);

    fs::path path = fs::temp_directory_path() /
                    ("gsteal_model_" + std::to_string(::getpid()) + ".bin");
    save_model(state, path.string());
    ModelState loaded = load_model(path.string());
    REQUIRE(loaded.params.size() == state.params.size());
    for (std::size_t i = 0; i < state.params.size(); ++i)
        CHECK(loaded.params[i] == state.params[i]);

    ForwardOutput after = forward(loaded, g);
    CHECK(before.logits == after.logits);

    // Truncation is a format error.
    auto size = fs::file_size(path);
    fs::resize_file(path, size / 2);
    CHECK_THROWS_AS(load_model(path.string()), FormatError);

    // Bad magic is a format error.
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTAMODEL";
    }
    CHECK_THROWS_AS(load_model(path.string()), FormatError);
    fs::remove(path);
}

TEST_SUITE_END();
