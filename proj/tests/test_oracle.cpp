#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "gsteal/client.hpp"
#include "gsteal/errors.hpp"
#include "gsteal/oracle.hpp"
#include "gsteal/server.hpp"
#include "gsteal/wire.hpp"
#include "support/fixtures.hpp"

using namespace gsteal;
using namespace gsteal::test;

TEST_SUITE_BEGIN("oracle");

TEST_CASE("budget counter: one unit per query, refusal afterwards") {
    Pcg32 rng(3);
    ModelState model = random_model(rng, Arch::GIN, 4);
    Oracle oracle(model, ExplainerKind::GraphCAM, 1);
    Graph g = random_graph(rng, 3, 6, 4);
    QueryRecord rec = oracle.query(g);
    CHECK(oracle.remaining_budget() == 0);
    CHECK_THROWS_AS(oracle.query(g), BudgetExhaustedError);
    CHECK(oracle.remaining_budget() == 0);
    CHECK(rec.explanation.scores.size() == static_cast<std::size_t>(g.num_nodes));
}

TEST_CASE("oracle record equals a direct local forward plus explanation") {
    Pcg32 rng(5);
    ModelState model = random_model(rng, Arch::GIN, 4);
    Oracle oracle(model, ExplainerKind::GraphCAM, 10);
    Graph g = random_graph(rng, 3, 8, 4);
    QueryRecord rec = oracle.query(g);

    ForwardOutput fwd = forward(model, g);
    CHECK(rec.predicted_label == predicted_class(fwd));
    REQUIRE(rec.probs.has_value());
    for (std::size_t c = 0; c < fwd.probs.cols(); ++c)
        CHECK((*rec.probs)[c] == fwd.probs.at(0, c));
    ExplanationVector local = graph_cam(fwd, model, predicted_class(fwd));
    CHECK(rec.explanation.scores == local.scores);
    CHECK(rec.explanation.class_used == local.class_used);
}

TEST_CASE("hard-label mode omits probabilities") {
    Pcg32 rng(7);
    ModelState model = random_model(rng, Arch::GIN, 4);
    Oracle oracle(model, ExplainerKind::GraphCAM, 10, false);
    Graph g = random_graph(rng, 3, 6, 4);
    QueryRecord rec = oracle.query(g);
    CHECK_FALSE(rec.probs.has_value());
    CHECK(rec.predicted_label >= 0);
}

TEST_CASE("dimension mismatch refused without spending budget") {
    Pcg32 rng(9);
    ModelState model = random_model(rng, Arch::GIN, 4);
    Oracle oracle(model, ExplainerKind::GraphCAM, 5);
    Graph wrong = random_graph(rng, 3, 6, 7);
    CHECK_THROWS_AS(oracle.query(wrong), DimensionError);
    CHECK(oracle.remaining_budget() == 5);
}

TEST_CASE("all three explainer kinds answer queries") {
    Pcg32 rng(11);
    ModelState model = random_model(rng, Arch::GIN, 4);
    Graph g = random_graph(rng, 3, 6, 4);
    for (ExplainerKind kind :
         {ExplainerKind::GraphCAM, ExplainerKind::Grad, ExplainerKind::GradCAM}) {
        Oracle oracle(model, kind, 3);
        QueryRecord rec = oracle.query(g);
        CHECK(rec.explanation.scores.size() == static_cast<std::size_t>(g.num_nodes));
        CHECK(oracle.status().explainer == explainer_name(kind));
    }
}

TEST_CASE("wire: graphs round trip bit for bit") {
    Pcg32 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        Graph g = random_graph(rng, 2, 9, 5);
        std::string line = wire::encode_query_request(7, g);
        wire::Request req = wire::parse_request(line);
        CHECK(req.id == 7);
        REQUIRE(req.graph.has_value());
        CHECK(req.graph->num_nodes == g.num_nodes);
        CHECK(req.graph->edges == g.edges);
        CHECK(req.graph->features == g.features);
    }
}

TEST_CASE("wire: 17 significant digits round trip doubles exactly") {
    Pcg32 rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform_range(-12, 12));
        double back = std::strtod(wire::format_double(v).c_str(), nullptr);
        CHECK(back == v);
    }
}

TEST_CASE("wire: malformed requests raise protocol errors") {
    CHECK_THROWS_AS(wire::parse_request("not json"), ProtocolError);
    CHECK_THROWS_AS(wire::parse_request("{\"id\":1}"), ProtocolError);
    CHECK_THROWS_AS(wire::parse_request("{\"id\":1,\"op\":\"frobnicate\"}"),
                    ProtocolError);
    CHECK_THROWS_AS(wire::parse_request("{\"id\":1,\"op\":\"query\"}"), ProtocolError);
}

TEST_CASE("served oracle matches the in-process oracle bit for bit") {
    Pcg32 rng(19);
    ModelState model = random_model(rng, Arch::GIN, 4);
    Oracle local(model, ExplainerKind::GraphCAM, 100);
    Oracle served(model, ExplainerKind::GraphCAM, 100);
    OracleServer server(served, "127.0.0.1:0");
    server.start();
    OracleClient client = OracleClient::connect(server.address());

    for (int i = 0; i < 20; ++i) {
        Graph g = random_graph(rng, 2, 9, 4);
        QueryRecord a = local.query(g);
        QueryRecord b = client.query(g);
        CHECK(a.predicted_label == b.predicted_label);
        REQUIRE(a.probs.has_value());
        REQUIRE(b.probs.has_value());
        CHECK(*a.probs == *b.probs);
        CHECK(a.explanation.scores == b.explanation.scores);
        CHECK(a.explanation.class_used == b.explanation.class_used);
        CHECK(a.explanation.method == b.explanation.method);
    }
    OracleStatus st = client.status();
    CHECK(st.remaining_budget == 80);
    CHECK(st.explainer == "GraphCAM");
    server.stop();
}

TEST_CASE("sequential queries report strictly decreasing budgets") {
    Pcg32 rng(23);
    ModelState model = random_model(rng, Arch::GIN, 4, 4, 1);
    Oracle oracle(model, ExplainerKind::GraphCAM, 64);
    OracleServer server(oracle, "127.0.0.1:0");
    server.start();
    OracleClient client = OracleClient::connect(server.address());
    Graph g = random_graph(rng, 3, 5, 4);
    long last = 64;
    for (int i = 0; i < 64; ++i) {
        client.query(g);
        long remaining = client.last_remaining_budget();
        CHECK(remaining == last - 1);
        last = remaining;
    }
    CHECK_THROWS_AS(client.query(g), BudgetExhaustedError);
    server.stop();
}

TEST_CASE("malformed lines get error responses and the connection survives") {
    Pcg32 rng(29);
    ModelState model = random_model(rng, Arch::GIN, 4, 4, 1);
    Oracle oracle(model, ExplainerKind::GraphCAM, 10);
    OracleServer server(oracle, "127.0.0.1:0");
    server.start();
    OracleClient client = OracleClient::connect(server.address());

    // bad request: wrong feature width -> dimension_mismatch, budget intact
    Graph wrong = random_graph(rng, 3, 5, 6);
    CHECK_THROWS_AS(client.query(wrong), DimensionError);
    CHECK(client.status().remaining_budget == 10);

    // still usable afterwards
    Graph ok = random_graph(rng, 3, 5, 4);
    QueryRecord rec = client.query(ok);
    CHECK(rec.explanation.scores.size() == static_cast<std::size_t>(ok.num_nodes));
    server.stop();
}

TEST_CASE("responses do not depend on query order") {
    Pcg32 rng(41);
    ModelState model = random_model(rng, Arch::GIN, 4);
    Graph a = random_graph(rng, 3, 7, 4);
    Graph b = random_graph(rng, 3, 7, 4);
    Oracle first(model, ExplainerKind::GraphCAM, 10);
    QueryRecord a1 = first.query(a);
    QueryRecord b1 = first.query(b);
    Oracle second(model, ExplainerKind::GraphCAM, 10);
    QueryRecord b2 = second.query(b);
    QueryRecord a2 = second.query(a);
    CHECK(a1.predicted_label == a2.predicted_label);
    CHECK(*a1.probs == *a2.probs);
    CHECK(a1.explanation.scores == a2.explanation.scores);
    CHECK(b1.predicted_label == b2.predicted_label);
    CHECK(*b1.probs == *b2.probs);
    CHECK(b1.explanation.scores == b2.explanation.scores);
}

TEST_CASE("connecting to a closed port is a transport error") {
    CHECK_THROWS_AS(OracleClient::connect("127.0.0.1:1"), TransportError);
}

TEST_CASE("two clients racing the last budget unit: exactly one wins") {
    Pcg32 rng(31);
    ModelState model = random_model(rng, Arch::GIN, 4, 4, 1);
    Graph g = random_graph(rng, 3, 5, 4);
    for (int trial = 0; trial < 25; ++trial) {
        Oracle oracle(model, ExplainerKind::GraphCAM, 1);
        OracleServer server(oracle, "127.0.0.1:0");
        server.start();
        std::atomic<int> wins{0}, refusals{0};
        auto hammer = [&] {
            OracleClient client = OracleClient::connect(server.address());
            try {
                client.query(g);
                wins.fetch_add(1);
            } catch (const BudgetExhaustedError&) {
                refusals.fetch_add(1);
            }
        };
        std::thread t1(hammer), t2(hammer);
        t1.join();
        t2.join();
        CHECK(wins.load() == 1);
        CHECK(refusals.load() == 1);
        server.stop();
    }
}

TEST_CASE("budget conservation across concurrent clients") {
    Pcg32 rng(37);
    ModelState model = random_model(rng, Arch::GIN, 4, 4, 1);
    Graph g = random_graph(rng, 3, 5, 4);
    const long budget = 30;
    Oracle oracle(model, ExplainerKind::GraphCAM, budget);
    OracleServer server(oracle, "127.0.0.1:0");
    server.start();
    std::atomic<long> successes{0};
    auto worker = [&] {
        OracleClient client = OracleClient::connect(server.address());
        for (;;) {
            try {
                client.query(g);
                successes.fetch_add(1);
            } catch (const BudgetExhaustedError&) {
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    CHECK(successes.load() == budget);
    CHECK(oracle.remaining_budget() == 0);
    server.stop();
}

TEST_SUITE_END();
