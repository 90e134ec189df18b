#include "gsteal/wire.hpp"

#include <cstdio>

#include <json.hpp>

#include "gsteal/errors.hpp"

namespace gsteal {
namespace wire {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void append_double_array(std::string& out, const std::vector<double>& values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    out += ']';
}

}  // namespace

std::string encode_graph(const Graph& graph) {
    std::string out = "{\"num_nodes\":" + std::to_string(graph.num_nodes);
    out += ",\"edges\":[";
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        if (i) out += ',';
        out += '[' + std::to_string(graph.edges[i].first) + ',' +
               std::to_string(graph.edges[i].second) + ']';
    }
    out += "],\"features\":[";
    std::size_t d = graph.features.empty() ? 0 : graph.features.cols();
    for (int v = 0; v < graph.num_nodes; ++v) {
        if (v) out += ',';
        out += '[';
        for (std::size_t j = 0; j < d; ++j) {
            if (j) out += ',';
            out += format_double(graph.features.at(static_cast<std::size_t>(v), j));
        }
        out += ']';
    }
    out += "]}";
    return out;
}

std::string encode_query_request(long id, const Graph& graph) {
    return "{\"id\":" + std::to_string(id) + ",\"op\":\"query\",\"graph\":" +
           encode_graph(graph) + "}";
}

std::string encode_status_request(long id) {
    return "{\"id\":" + std::to_string(id) + ",\"op\":\"status\"}";
}

std::string encode_query_response(long id, const QueryRecord& record,
                                  long remaining_budget) {
    std::string out = "{\"id\":" + std::to_string(id) +
                      ",\"label\":" + std::to_string(record.predicted_label);
    if (record.probs) {
        out += ",\"probs\":";
        append_double_array(out, *record.probs);
    }
    out += ",\"explanation\":";
    append_double_array(out, record.explanation.scores);
    out += ",\"remaining_budget\":" + std::to_string(remaining_budget) + "}";
    return out;
}

std::string encode_status_response(long id, const OracleStatus& status) {
    return "{\"id\":" + std::to_string(id) +
           ",\"remaining_budget\":" + std::to_string(status.remaining_budget) +
           ",\"explainer\":\"" + status.explainer + "\"}";
}

std::string encode_error(long id, const std::string& code) {
    return "{\"id\":" + std::to_string(id) + ",\"error\":\"" + code + "\"}";
}

namespace {

Graph decode_graph(const json& j) {
    if (!j.is_object() || !j.contains("num_nodes") || !j.contains("edges") ||
        !j.contains("features"))
        throw ProtocolError("wire: malformed graph object");
    int n = j.at("num_nodes").get<int>();
    if (n < 0) throw ProtocolError("wire: negative num_nodes");
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2)
            throw ProtocolError("wire: malformed edge");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    const auto& feats = j.at("features");
    if (static_cast<int>(feats.size()) != n)
        throw ProtocolError("wire: feature row count != num_nodes");
    std::size_t d = n > 0 ? feats[0].size() : 0;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n) * d);
    for (const auto& row : feats) {
        if (row.size() != d) throw ProtocolError("wire: ragged feature rows");
        for (const auto& x : row) values.push_back(x.get<double>());
    }
    try {
        return Graph::make(n, std::move(edges),
                           Tensor::from({static_cast<std::size_t>(n), d},
                                        std::move(values)));
    } catch (const Error& e) {
        throw ProtocolError(std::string("wire: invalid graph: ") + e.what());
    }
}

}  // namespace

Request parse_request(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ProtocolError("wire: request is not a JSON object");
    Request req;
    req.id = j.value("id", 0L);
    std::string op = j.value("op", std::string{});
    if (op == "query") {
        req.op = RequestOp::Query;
        if (!j.contains("graph")) throw ProtocolError("wire: query without graph");
        req.graph = decode_graph(j.at("graph"));
    } else if (op == "status") {
        req.op = RequestOp::Status;
    } else {
        throw ProtocolError("wire: unknown op '" + op + "'");
    }
    return req;
}

Response parse_response(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ProtocolError("wire: response is not a JSON object");
    Response resp;
    resp.id = j.value("id", 0L);
    if (j.contains("error")) {
        resp.error = j.at("error").get<std::string>();
        return resp;
    }
    if (j.contains("label")) resp.label = j.at("label").get<int>();
    if (j.contains("probs"))
        resp.probs = j.at("probs").get<std::vector<double>>();
    if (j.contains("explanation"))
        resp.explanation = j.at("explanation").get<std::vector<double>>();
    if (j.contains("remaining_budget"))
        resp.remaining_budget = j.at("remaining_budget").get<long>();
    if (j.contains("explainer"))
        resp.explainer = j.at("explainer").get<std::string>();
    return resp;
}

}  // namespace wire
}  // namespace gsteal
