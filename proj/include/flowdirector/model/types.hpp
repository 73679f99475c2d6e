#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flowdirector::model {

struct Endpoint {
    std::string name;  // hostname-like identifier
    std::string site;
    // Endpoint ownership is two-level: a live rule may hold it, and a
    // circuit may keep it bound after the rule finished (reuse window).
    std::optional<std::string> in_use_by;        // rule id
    std::optional<std::string> held_by_circuit;  // circuit id

    bool assignable_fresh() const { return !in_use_by && !held_by_circuit; }
};

struct Site {
    std::string name;
    int port_capacity = 0;  // Gbps
    std::vector<Endpoint> endpoints;
};

enum class RuleState {
    INITIALIZED,
    ALLOCATED,
    DECIDED,
    PROVISIONING,
    PROVISIONED,
    MODIFYING,
    FINISHED,
    FAILED,
    CANCELLED,
};

const char* to_string(RuleState s);
RuleState rule_state_from_string(const std::string& s);

inline bool is_terminal(RuleState s) {
    return s == RuleState::FINISHED || s == RuleState::CANCELLED;
}

// The exact legal transition relation.  FAILED is retryable (back to
// INITIALIZED) and can still be cancelled; FINISHED and CANCELLED have no
// outgoing edges.  No self-transitions.
bool transition_legal(RuleState from, RuleState to);

// Every legal (from, to) pair, in a fixed order.
std::vector<std::pair<RuleState, RuleState>> legal_transitions();

// allocated_gbps is meaningful only while a bandwidth decision is staged
// or live on a circuit.
inline bool state_carries_allocation(RuleState s) {
    return s == RuleState::DECIDED || s == RuleState::PROVISIONING ||
           s == RuleState::PROVISIONED || s == RuleState::MODIFYING;
}

// Endpoint assignments exist from ALLOCATED until the rule leaves the live
// pipeline; terminal and retried rules have released theirs.
inline bool state_carries_endpoints(RuleState s) {
    return s == RuleState::ALLOCATED || state_carries_allocation(s);
}

struct TransferRule {
    std::string rule_id;
    std::string src;  // site name
    std::string dst;  // site name
    int priority = 1;
    std::int64_t total_bytes = 0;
    RuleState state = RuleState::INITIALIZED;
    std::optional<std::string> src_endpoint;
    std::optional<std::string> dst_endpoint;
    std::optional<int> allocated_gbps;
    std::optional<std::string> circuit_id;
    bool redecide = false;  // priority changed while PROVISIONED
    int attempts = 0;       // consecutive provider failures
    std::int64_t created_at = 0;  // ms since epoch
    std::int64_t updated_at = 0;
};

enum class CircuitStatus { PENDING, ACTIVE, STALE, TORN_DOWN };

const char* to_string(CircuitStatus s);
CircuitStatus circuit_status_from_string(const std::string& s);

struct Circuit {
    std::string circuit_id;
    std::string src_endpoint;
    std::string dst_endpoint;
    std::string src_site;
    std::string dst_site;
    int bandwidth_gbps = 0;
    CircuitStatus status = CircuitStatus::PENDING;
    std::optional<std::int64_t> stale_since;  // set iff status == STALE
};

struct FlowSample {
    std::string rule_id;
    std::int64_t t = 0;
    double observed_gbps = 0.0;
    int allocated_gbps = 0;
    bool idle_flag = false;  // metrics source had no data
};

}  // namespace flowdirector::model
