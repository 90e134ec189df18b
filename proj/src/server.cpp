#include "gsteal/server.hpp"

#include <atomic>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gsteal/wire.hpp"
#include "net_util.hpp"

namespace gsteal {

namespace {

long best_effort_id(const std::string& line) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_object() && j.contains("id") && j["id"].is_number_integer())
        return j["id"].get<long>();
    return 0;
}

}  // namespace

struct OracleServer::Impl {
    Oracle& oracle;
    int listen_fd = -1;
    int bound_port = 0;
    std::string bound_host;
    std::thread accept_thread;
    std::atomic<bool> stopping{false};
    std::mutex conn_mutex;
    std::vector<int> conn_fds;
    std::vector<std::thread> conn_threads;

    explicit Impl(Oracle& o) : oracle(o) {}

    std::string handle_line(const std::string& line) {
        wire::Request req;
        try {
            req = wire::parse_request(line);
        } catch (const ProtocolError&) {
            return wire::encode_error(best_effort_id(line), "bad_request");
        }
        if (req.op == wire::RequestOp::Status) {
            return wire::encode_status_response(req.id, oracle.status());
        }
        try {
            QueryRecord rec = oracle.query(*req.graph);
            return wire::encode_query_response(req.id, rec,
                                               oracle.remaining_budget());
        } catch (const BudgetExhaustedError&) {
            return wire::encode_error(req.id, "budget_exhausted");
        } catch (const DimensionError&) {
            return wire::encode_error(req.id, "dimension_mismatch");
        }
    }

    void serve_connection(int fd) {
        net::LineReader reader(fd);
        std::string line;
        try {
            while (!stopping.load() && reader.read_line(line)) {
                if (line.empty()) continue;
                net::send_all(fd, handle_line(line) + "\n");
            }
        } catch (const TransportError&) {
            // Peer went away; nothing to do.
        }
        ::close(fd);
    }

    void accept_loop() {
        for (;;) {
            int fd = ::accept(listen_fd, nullptr, nullptr);
            if (fd < 0) {
                if (stopping.load()) return;
                if (errno == EINTR) continue;
                return;
            }
            std::lock_guard<std::mutex> lock(conn_mutex);
            conn_fds.push_back(fd);
            conn_threads.emplace_back([this, fd] { serve_connection(fd); });
        }
    }
};

OracleServer::OracleServer(Oracle& oracle, const std::string& listen_address)
    : impl_(std::make_unique<Impl>(oracle)) {
    auto [host, port] = net::parse_address(listen_address);
    impl_->bound_host = host;
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = net::make_sockaddr(host, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
        ::close(fd);
        throw TransportError("bind failed on " + listen_address + ": " +
                             std::strerror(errno));
    }
    if (::listen(fd, 64) < 0) {
        ::close(fd);
        throw TransportError("listen failed");
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    impl_->bound_port = ntohs(addr.sin_port);
    impl_->listen_fd = fd;
}

OracleServer::~OracleServer() { stop(); }

void OracleServer::start() {
    impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void OracleServer::stop() {
    if (!impl_ || impl_->stopping.exchange(true)) return;
    if (impl_->listen_fd >= 0) {
        ::shutdown(impl_->listen_fd, SHUT_RDWR);
        ::close(impl_->listen_fd);
        impl_->listen_fd = -1;
    }
    if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
    {
        std::lock_guard<std::mutex> lock(impl_->conn_mutex);
        for (int fd : impl_->conn_fds) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : impl_->conn_threads)
        if (t.joinable()) t.join();
}

int OracleServer::port() const { return impl_->bound_port; }

std::string OracleServer::address() const {
    return impl_->bound_host + ":" + std::to_string(impl_->bound_port);
}

}  // namespace gsteal
