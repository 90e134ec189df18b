#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gsteal/graph.hpp"
#include "gsteal/oracle.hpp"

namespace gsteal {
namespace wire {

// Newline-delimited JSON protocol, one message per line, UTF-8. Doubles are
// serialized with 17 significant digits so a round trip through the wire is
// exact for 64-bit floats. Graphs use 0-based indices with u < v.

std::string format_double(double v);

std::string encode_graph(const Graph& graph);

std::string encode_query_request(long id, const Graph& graph);
std::string encode_status_request(long id);

std::string encode_query_response(long id, const QueryRecord& record,
                                  long remaining_budget);
std::string encode_status_response(long id, const OracleStatus& status);
std::string encode_error(long id, const std::string& code);

enum class RequestOp { Query, Status };

struct Request {
    long id = 0;
    RequestOp op = RequestOp::Status;
    std::optional<Graph> graph;
};

// Throws ProtocolError on anything that is not a well-formed request line.
Request parse_request(const std::string& line);

struct Response {
    long id = 0;
    std::optional<std::string> error;
    // query fields
    std::optional<int> label;
    std::optional<std::vector<double>> probs;
    std::optional<std::vector<double>> explanation;
    std::optional<long> remaining_budget;
    // status fields
    std::optional<std::string> explainer;
};

// Throws ProtocolError on undecodable lines.
Response parse_response(const std::string& line);

}  // namespace wire
}  // namespace gsteal
