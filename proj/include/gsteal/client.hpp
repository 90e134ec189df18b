#pragma once

#include <memory>
#include <string>

#include "gsteal/oracle.hpp"

namespace gsteal {

// TCP client mirroring the in-process oracle contract. Connection failures
// raise TransportError (retriable); undecodable responses raise
// ProtocolError (fatal). Server-side refusals map back to the same
// exceptions the in-process Oracle throws.
class OracleClient : public QueryService {
public:
    static OracleClient connect(const std::string& address);
    ~OracleClient() override;

    OracleClient(OracleClient&& other) noexcept;
    OracleClient& operator=(OracleClient&&) = delete;
    OracleClient(const OracleClient&) = delete;
    OracleClient& operator=(const OracleClient&) = delete;

    QueryRecord query(const Graph& graph) override;
    OracleStatus status() override;

    long last_remaining_budget() const;

private:
    OracleClient();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace gsteal
