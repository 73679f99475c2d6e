#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowdirector/model/types.hpp"

namespace flowdirector::adapters {

// --- rule source (the data-management system creating transfer rules) ---

enum class RuleEventKind { NEW, PRIORITY_CHANGED, COMPLETED };

const char* to_string(RuleEventKind k);

struct NewRulePayload {
    std::string rule_id;
    std::vector<std::string> sources;       // multi-source rules are skipped downstream
    std::vector<std::string> destinations;  // same for multi-destination
    int priority = 1;
    std::int64_t total_bytes = 0;
};

struct RuleEvent {
    RuleEventKind kind;
    std::string rule_id;
    std::optional<NewRulePayload> payload;  // set for NEW
    int new_priority = 0;                   // set for PRIORITY_CHANGED
};

class RuleSource {
public:
    virtual ~RuleSource() = default;
    // Every event since the previous successful poll, each delivered at most
    // once.  A throw loses nothing; events reappear on the next poll.
    virtual std::vector<RuleEvent> poll() = 0;  // throws SourceUnavailable
};

// --- circuit provider (the SDN service provisioning the paths) ---

struct CircuitRequest {
    std::string src_endpoint;
    std::string dst_endpoint;
    std::string src_site;
    std::string dst_site;
    int bandwidth_gbps = 0;
};

enum class ProviderCircuitStatus { PENDING, ACTIVE, TORN_DOWN };

class CircuitProvider {
public:
    virtual ~CircuitProvider() = default;
    virtual std::vector<model::Endpoint> list_endpoints(const std::string& site) = 0;
    // idempotency_key (the rule id) makes retried creates return the circuit
    // already provisioned for that key instead of building a second one.
    virtual std::string create(const CircuitRequest& req, const std::string& idempotency_key) = 0;
    virtual void modify(const std::string& circuit_id, int bandwidth_gbps) = 0;
    virtual void teardown(const std::string& circuit_id) = 0;
    virtual ProviderCircuitStatus status(const std::string& circuit_id) = 0;
};

// --- transfer tool (executes the individual file transfers) ---

struct JobStats {
    std::string rule_id;
    std::int64_t finished = 0;
    std::int64_t failed = 0;
    std::int64_t retried = 0;
    double avg_file_throughput_gbps = 0.0;
};

class TransferTool {
public:
    virtual ~TransferTool() = default;
    virtual void set_active(const std::string& src_site, const std::string& dst_site, int n) = 0;
    virtual JobStats job_stats(const std::string& rule_id) = 0;  // throws UnknownRule
};

// --- metrics source (host-level throughput) ---

struct ThroughputSample {
    double gbps = 0.0;
    bool has_data = false;  // false: NoData, treated as 0 with a flag
};

class MetricsSource {
public:
    virtual ~MetricsSource() = default;
    // Mean ingress+egress rate on the endpoint over the window.  Must be
    // safe for concurrent readers.
    virtual ThroughputSample throughput(const std::string& endpoint, int window_s) = 0;
};

struct Adapters {
    RuleSource* rule_source = nullptr;
    CircuitProvider* circuit_provider = nullptr;
    TransferTool* transfer_tool = nullptr;
    MetricsSource* metrics_source = nullptr;
};

}  // namespace flowdirector::adapters
