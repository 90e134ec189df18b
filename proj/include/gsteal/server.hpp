#pragma once

#include <memory>
#include <string>

#include "gsteal/oracle.hpp"

namespace gsteal {

// TCP front end for an Oracle: newline-delimited JSON requests, one response
// line per request. Connections are handled concurrently; the budget counter
// inside the Oracle is the only shared mutable state. Malformed lines get a
// bad_request response and the connection stays open.
class OracleServer {
public:
    // Binds and listens immediately; port 0 picks an ephemeral port.
    OracleServer(Oracle& oracle, const std::string& listen_address);
    ~OracleServer();

    OracleServer(const OracleServer&) = delete;
    OracleServer& operator=(const OracleServer&) = delete;

    void start();
    void stop();

    int port() const;
    std::string address() const;  // host:port actually bound

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gsteal
