#include <doctest.h>

#include <set>

#include "flowdirector/model/types.hpp"

using namespace flowdirector::model;

namespace {

// The relation spelled out pair by pair, independent of transition_legal's
// switch, so the two stay honest against each other.
std::set<std::pair<RuleState, RuleState>> expected_relation() {
    using S = RuleState;
    std::set<std::pair<S, S>> rel;
    auto add = [&rel](S a, S b) { rel.insert({a, b}); };

    add(S::INITIALIZED, S::ALLOCATED);
    add(S::ALLOCATED, S::DECIDED);
    add(S::DECIDED, S::PROVISIONING);
    add(S::PROVISIONING, S::PROVISIONED);
    add(S::PROVISIONED, S::MODIFYING);
    add(S::MODIFYING, S::PROVISIONED);
    add(S::PROVISIONED, S::FINISHED);
    for (S s : {S::INITIALIZED, S::ALLOCATED, S::DECIDED, S::PROVISIONING, S::PROVISIONED,
                S::MODIFYING})
        add(s, S::FAILED);
    for (S s : {S::INITIALIZED, S::ALLOCATED, S::DECIDED, S::PROVISIONING, S::PROVISIONED,
                S::MODIFYING, S::FAILED})
        add(s, S::CANCELLED);
    add(S::FAILED, S::INITIALIZED);
    return rel;
}

const RuleState kAllStates[] = {
    RuleState::INITIALIZED, RuleState::ALLOCATED,   RuleState::DECIDED,
    RuleState::PROVISIONING, RuleState::PROVISIONED, RuleState::MODIFYING,
    RuleState::FINISHED,     RuleState::FAILED,      RuleState::CANCELLED,
};

}  // namespace

TEST_CASE("transition relation is exactly the expected set") {
    auto rel = expected_relation();
    for (RuleState a : kAllStates)
        for (RuleState b : kAllStates) {
            CAPTURE(to_string(a));
            CAPTURE(to_string(b));
            CHECK(transition_legal(a, b) == (rel.count({a, b}) == 1));
        }
    CHECK(legal_transitions().size() == rel.size());
}

TEST_CASE("terminal states have no outgoing edges") {
    for (RuleState b : kAllStates) {
        CHECK_FALSE(transition_legal(RuleState::FINISHED, b));
        CHECK_FALSE(transition_legal(RuleState::CANCELLED, b));
    }
    CHECK(is_terminal(RuleState::FINISHED));
    CHECK(is_terminal(RuleState::CANCELLED));
    CHECK_FALSE(is_terminal(RuleState::FAILED));
}

TEST_CASE("modify round-trips back to PROVISIONED") {
    CHECK(transition_legal(RuleState::PROVISIONED, RuleState::MODIFYING));
    CHECK(transition_legal(RuleState::MODIFYING, RuleState::PROVISIONED));
}

TEST_CASE("state names round-trip through strings") {
    for (RuleState s : kAllStates) CHECK(rule_state_from_string(to_string(s)) == s);
    for (CircuitStatus s : {CircuitStatus::PENDING, CircuitStatus::ACTIVE, CircuitStatus::STALE,
                            CircuitStatus::TORN_DOWN})
        CHECK(circuit_status_from_string(to_string(s)) == s);
}

TEST_CASE("field-presence predicates follow the pipeline") {
    CHECK(state_carries_allocation(RuleState::DECIDED));
    CHECK(state_carries_allocation(RuleState::MODIFYING));
    CHECK_FALSE(state_carries_allocation(RuleState::ALLOCATED));
    CHECK_FALSE(state_carries_allocation(RuleState::FINISHED));
    CHECK(state_carries_endpoints(RuleState::ALLOCATED));
    CHECK(state_carries_endpoints(RuleState::PROVISIONED));
    CHECK_FALSE(state_carries_endpoints(RuleState::INITIALIZED));
    CHECK_FALSE(state_carries_endpoints(RuleState::CANCELLED));
}
