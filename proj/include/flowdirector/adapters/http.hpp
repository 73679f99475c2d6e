#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "flowdirector/adapters/adapters.hpp"

namespace httplib {
class Client;
}

namespace flowdirector::adapters {

// HTTP client skeletons for the real services.  They speak the wire shapes
// documented below and are validated against the in-process mocks; they have
// never been pointed at a production deployment.
//
//   rule source      GET    /rules?since=<ms>     -> {"now": ms, "events": [...]}
//   circuit provider GET    /endpoints/<site>     -> {"endpoints": ["name", ...]}
//                    POST   /circuits             -> {"circuit_id": "..."}
//                    GET    /circuits/<id>        -> {"status": "ACTIVE"}
//                    PATCH  /circuits/<id>        -> {}
//                    DELETE /circuits/<id>        -> {}
//   transfer tool    PUT    /links/<src>/<dst>/active   body {"active": n}
//                    GET    /jobs/<rule_id>       -> JobStats fields
//   metrics          GET    /throughput?endpoint=<e>&window=<s> -> {"gbps": x}
//
// Errors: 404 maps to the Unknown* error for the route, 409 to EndpointBusy,
// anything else (including transport failures) to the adapter's transient
// error.

class HttpRuleSource : public RuleSource {
public:
    explicit HttpRuleSource(const std::string& base_url);
    ~HttpRuleSource() override;
    std::vector<RuleEvent> poll() override;

private:
    std::unique_ptr<httplib::Client> client_;
    std::int64_t cursor_ms_ = 0;  // advanced only on successful polls
};

class HttpCircuitProvider : public CircuitProvider {
public:
    explicit HttpCircuitProvider(const std::string& base_url);
    ~HttpCircuitProvider() override;

    std::vector<model::Endpoint> list_endpoints(const std::string& site) override;
    std::string create(const CircuitRequest& req, const std::string& idempotency_key) override;
    void modify(const std::string& circuit_id, int bandwidth_gbps) override;
    void teardown(const std::string& circuit_id) override;
    ProviderCircuitStatus status(const std::string& circuit_id) override;

private:
    std::unique_ptr<httplib::Client> client_;
};

class HttpTransferTool : public TransferTool {
public:
    explicit HttpTransferTool(const std::string& base_url);
    ~HttpTransferTool() override;
    void set_active(const std::string& src_site, const std::string& dst_site, int n) override;
    JobStats job_stats(const std::string& rule_id) override;

private:
    std::unique_ptr<httplib::Client> client_;
};

class HttpMetricsSource : public MetricsSource {
public:
    explicit HttpMetricsSource(const std::string& base_url);
    ~HttpMetricsSource() override;
    ThroughputSample throughput(const std::string& endpoint, int window_s) override;

private:
    std::unique_ptr<httplib::Client> client_;
};

// Wire codecs shared by the clients and the mock-backed test servers.
std::string rule_event_to_json(const RuleEvent& ev);
RuleEvent rule_event_from_json(const std::string& text);

}  // namespace flowdirector::adapters
