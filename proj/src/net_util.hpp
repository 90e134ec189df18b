#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <utility>

#include "gsteal/errors.hpp"

namespace gsteal {
namespace net {

// "host:port" -> (host, port). Host defaults to 127.0.0.1 when empty.
inline std::pair<std::string, int> parse_address(const std::string& address) {
    auto colon = address.rfind(':');
    if (colon == std::string::npos)
        throw ConfigError("address must be host:port, got '" + address + "'");
    std::string host = address.substr(0, colon);
    if (host.empty()) host = "127.0.0.1";
    int port = 0;
    try {
        port = std::stoi(address.substr(colon + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad port in address '" + address + "'");
    }
    if (port < 0 || port > 65535)
        throw ConfigError("port out of range in '" + address + "'");
    return {host, port};
}

inline sockaddr_in make_sockaddr(const std::string& host, int port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw ConfigError("bad IPv4 host '" + host + "'");
    return addr;
}

// Sends the whole buffer; throws TransportError on failure.
inline void send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("send failed: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

// Buffered line reader over a socket. Returns false on orderly shutdown.
class LineReader {
public:
    explicit LineReader(int fd) : fd_(fd) {}

    bool read_line(std::string& line) {
        for (;;) {
            auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return true;
            }
            char chunk[4096];
            ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw TransportError(std::string("recv failed: ") +
                                     std::strerror(errno));
            }
            if (n == 0) return false;
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_;
    std::string buffer_;
};

}  // namespace net
}  // namespace gsteal
