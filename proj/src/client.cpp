#include "gsteal/client.hpp"

#include "gsteal/wire.hpp"
#include "net_util.hpp"

namespace gsteal {

struct OracleClient::Impl {
    int fd = -1;
    long next_id = 1;
    long last_budget = -1;
    ExplainMethod method = ExplainMethod::External;
    std::unique_ptr<net::LineReader> reader;

    ~Impl() {
        if (fd >= 0) ::close(fd);
    }

    wire::Response round_trip(const std::string& request_line) {
        net::send_all(fd, request_line + "\n");
        std::string line;
        if (!reader->read_line(line))
            throw TransportError("oracle connection closed");
        return wire::parse_response(line);
    }
};

OracleClient::OracleClient() : impl_(std::make_unique<Impl>()) {}
OracleClient::~OracleClient() = default;
OracleClient::OracleClient(OracleClient&& other) noexcept = default;

OracleClient OracleClient::connect(const std::string& address) {
    auto [host, port] = net::parse_address(address);
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    sockaddr_in addr = net::make_sockaddr(host, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(fd);
        throw TransportError("connect failed to " + address + ": " +
                             std::strerror(errno));
    }
    OracleClient client;
    client.impl_->fd = fd;
    client.impl_->reader = std::make_unique<net::LineReader>(fd);
    // Learn the server's explainer so records are tagged like local ones.
    OracleStatus st = client.status();
    if (st.explainer == "GraphCAM") client.impl_->method = ExplainMethod::GraphCAM;
    else if (st.explainer == "Grad") client.impl_->method = ExplainMethod::Grad;
    else if (st.explainer == "GradCAM") client.impl_->method = ExplainMethod::GradCAM;
    return client;
}

namespace {

[[noreturn]] void raise_error(const std::string& code) {
    if (code == "budget_exhausted")
        throw BudgetExhaustedError("oracle: budget exhausted");
    if (code == "dimension_mismatch")
        throw DimensionError("oracle: dimension mismatch");
    throw ProtocolError("oracle: request rejected (" + code + ")");
}

}  // namespace

QueryRecord OracleClient::query(const Graph& graph) {
    long id = impl_->next_id++;
    wire::Response resp = impl_->round_trip(wire::encode_query_request(id, graph));
    if (resp.error) raise_error(*resp.error);
    if (!resp.label || !resp.explanation || !resp.remaining_budget)
        throw ProtocolError("oracle: incomplete query response");
    impl_->last_budget = *resp.remaining_budget;
    QueryRecord rec;
    rec.graph = graph;
    rec.predicted_label = *resp.label;
    rec.probs = resp.probs;
    rec.explanation.scores = *resp.explanation;
    rec.explanation.class_used = *resp.label;
    rec.explanation.method = impl_->method;
    if (rec.explanation.scores.size() != static_cast<std::size_t>(graph.num_nodes))
        throw ProtocolError("oracle: explanation length != node count");
    return rec;
}

OracleStatus OracleClient::status() {
    long id = impl_->next_id++;
    wire::Response resp = impl_->round_trip(wire::encode_status_request(id));
    if (resp.error) raise_error(*resp.error);
    if (!resp.remaining_budget || !resp.explainer)
        throw ProtocolError("oracle: incomplete status response");
    impl_->last_budget = *resp.remaining_budget;
    return OracleStatus{*resp.remaining_budget, *resp.explainer};
}

long OracleClient::last_remaining_budget() const { return impl_->last_budget; }

}  // namespace gsteal
