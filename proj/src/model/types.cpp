#include "flowdirector/model/types.hpp"

#include <array>

#include "flowdirector/errors.hpp"

namespace flowdirector::model {

const char* to_string(RuleState s) {
    switch (s) {
        case RuleState::INITIALIZED: return "INITIALIZED";
        case RuleState::ALLOCATED: return "ALLOCATED";
        case RuleState::DECIDED: return "DECIDED";
        case RuleState::PROVISIONING: return "PROVISIONING";
        case RuleState::PROVISIONED: return "PROVISIONED";
        case RuleState::MODIFYING: return "MODIFYING";
        case RuleState::FINISHED: return "FINISHED";
        case RuleState::FAILED: return "FAILED";
        case RuleState::CANCELLED: return "CANCELLED";
    }
    return "?";
}

RuleState rule_state_from_string(const std::string& s) {
    static const std::array<RuleState, 9> all = {
        RuleState::INITIALIZED, RuleState::ALLOCATED,   RuleState::DECIDED,
        RuleState::PROVISIONING, RuleState::PROVISIONED, RuleState::MODIFYING,
        RuleState::FINISHED,     RuleState::FAILED,      RuleState::CANCELLED,
    };
    for (RuleState st : all)
        if (s == to_string(st)) return st;
    throw StorageCorrupt("unknown rule state: " + s);
}

bool transition_legal(RuleState from, RuleState to) {
    if (from == to) return false;
    switch (from) {
        case RuleState::INITIALIZED:
            return to == RuleState::ALLOCATED || to == RuleState::FAILED ||
                   to == RuleState::CANCELLED;
        case RuleState::ALLOCATED:
            return to == RuleState::DECIDED || to == RuleState::FAILED ||
                   to == RuleState::CANCELLED;
        case RuleState::DECIDED:
            return to == RuleState::PROVISIONING || to == RuleState::FAILED ||
                   to == RuleState::CANCELLED;
        case RuleState::PROVISIONING:
            return to == RuleState::PROVISIONED || to == RuleState::FAILED ||
                   to == RuleState::CANCELLED;
        case RuleState::PROVISIONED:
            return to == RuleState::MODIFYING || to == RuleState::FINISHED ||
                   to == RuleState::FAILED || to == RuleState::CANCELLED;
        case RuleState::MODIFYING:
            return to == RuleState::PROVISIONED || to == RuleState::FAILED ||
                   to == RuleState::CANCELLED;
        case RuleState::FAILED:
            // retry path; a failed rule can also be given up on
            return to == RuleState::INITIALIZED || to == RuleState::CANCELLED;
        case RuleState::FINISHED:
        case RuleState::CANCELLED:
            return false;
    }
    return false;
}

std::vector<std::pair<RuleState, RuleState>> legal_transitions() {
    static const std::array<RuleState, 9> all = {
        RuleState::INITIALIZED, RuleState::ALLOCATED,   RuleState::DECIDED,
        RuleState::PROVISIONING, RuleState::PROVISIONED, RuleState::MODIFYING,
        RuleState::FINISHED,     RuleState::FAILED,      RuleState::CANCELLED,
    };
    std::vector<std::pair<RuleState, RuleState>> out;
    for (RuleState a : all)
        for (RuleState b : all)
            if (transition_legal(a, b)) out.emplace_back(a, b);
    return out;
}

const char* to_string(CircuitStatus s) {
    switch (s) {
        case CircuitStatus::PENDING: return "PENDING";
        case CircuitStatus::ACTIVE: return "ACTIVE";
        case CircuitStatus::STALE: return "STALE";
        case CircuitStatus::TORN_DOWN: return "TORN_DOWN";
    }
    return "?";
}

CircuitStatus circuit_status_from_string(const std::string& s) {
    static const std::array<CircuitStatus, 4> all = {
        CircuitStatus::PENDING,
        CircuitStatus::ACTIVE,
        CircuitStatus::STALE,
        CircuitStatus::TORN_DOWN,
    };
    for (CircuitStatus st : all)
        if (s == to_string(st)) return st;
    throw StorageCorrupt("unknown circuit status: " + s);
}

}  // namespace flowdirector::model
