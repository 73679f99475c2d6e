#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "flowdirector/clock.hpp"
#include "flowdirector/model/types.hpp"

struct sqlite3;

namespace flowdirector::model {

// Transactional store for rules, circuits, endpoint assignments, flow
// samples and reports.  Backed by SQLite; every mutator runs as a single
// transaction, so a crash leaves the last committed state intact.  Rule
// state changes are compare-and-swap on (rule_id, expected_state); a lost
// race raises ConflictError and the caller re-reads.
//
// Safe for concurrent readers and writers (one connection, serialized).
class Store {
public:
    static std::unique_ptr<Store> open(const std::string& path, ClockPtr clock);
    ~Store();

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    // --- endpoint inventory ---
    void register_endpoint(const std::string& site, const std::string& name);
    std::vector<Endpoint> endpoints(const std::string& site) const;  // name order
    std::vector<Endpoint> all_endpoints() const;

    // --- rules ---
    void insert_rule(TransferRule r);  // must be INITIALIZED
    std::optional<TransferRule> rule(const std::string& id) const;
    std::vector<TransferRule> rules() const;  // rule_id order
    std::vector<TransferRule> rules_in(const std::vector<RuleState>& states) const;

    // Plain CAS state change.  Transitions into a terminal (or retry) state
    // release the rule's endpoints and clear fields that are only meaningful
    // in the live pipeline, all in the same transaction.
    TransferRule transition(const std::string& id, RuleState expected, RuleState target);

    // Priority update; flags the rule for re-decision when a bandwidth
    // figure derived from the old priority is already staged or live.
    TransferRule set_priority(const std::string& id, int priority);
    void clear_redecide(const std::string& id);
    void set_attempts(const std::string& id, int attempts);

    // INITIALIZED -> ALLOCATED plus endpoint bookkeeping; fails with
    // EndpointBusy when either endpoint is already owned by a rule.
    TransferRule assign_endpoints(const std::string& id, const std::string& src_ep,
                                  const std::string& dst_ep);

    // Stage a bandwidth figure.  expected == target is a pure field update
    // (used when re-deciding rules already in DECIDED or MODIFYING).
    TransferRule stage_allocation(const std::string& id, RuleState expected, int gbps,
                                  RuleState target);

    // DECIDED -> PROVISIONING with the circuit id recorded in the same
    // commit, so a restart never re-creates a circuit it already owns.
    TransferRule attach_circuit(const std::string& id, const std::string& circuit_id);

    // --- circuits ---
    void put_circuit(const Circuit& c);  // upsert
    std::optional<Circuit> circuit(const std::string& id) const;
    std::vector<Circuit> circuits() const;  // circuit_id order
    std::vector<Circuit> circuits_in(CircuitStatus status) const;
    void set_circuit(const std::string& id, int bandwidth_gbps, CircuitStatus status,
                     std::optional<std::int64_t> stale_since);
    // Clear held_by_circuit marks after a teardown.
    void release_circuit_hold(const std::string& circuit_id);

    // --- monitoring ---
    void append_sample(const FlowSample& s);
    std::vector<FlowSample> samples(const std::string& rule_id) const;
    std::vector<FlowSample> last_samples(const std::string& rule_id, int n) const;  // oldest first
    void put_report(const std::string& rule_id, const std::string& doc);
    std::optional<std::string> report(const std::string& rule_id) const;
    std::vector<std::string> finished_rules_without_report() const;

    // Consistent multi-table read for the status API.
    struct StatusSnapshot {
        std::vector<TransferRule> rules;      // non-terminal only
        std::vector<Circuit> circuits;        // all
        std::vector<Endpoint> endpoints;      // all
    };
    StatusSnapshot status_snapshot() const;

    // Canonical text dump of all committed state; equal dumps mean equal
    // stores.  Used by recovery tests and the simulator result.
    std::string snapshot() const;

    // Test hook: runs inside every write transaction just before COMMIT.
    // Lets crash tests capture the on-disk state mid-transaction.
    void set_pre_commit_hook(std::function<void()> hook);

private:
    Store(sqlite3* db, ClockPtr clock);

    class Txn;

    TransferRule get_rule_unlocked(const std::string& id) const;
    TransferRule transition_unlocked(const std::string& id, RuleState expected, RuleState target,
                                     Txn& txn);

    sqlite3* db_;
    ClockPtr clock_;
    mutable std::mutex mutex_;
    std::function<void()> pre_commit_hook_;
};

}  // namespace flowdirector::model
