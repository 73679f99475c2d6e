#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "flowdirector/adapters/adapters.hpp"
#include "flowdirector/clock.hpp"

namespace flowdirector::adapters {

// Deterministic in-process stand-ins for the four external services.
// Scripted by tests and the simulator; every one records enough call
// history to assert on ("zero creates", "modify within two ticks", ...).
// Fault injection: fail_next(n) makes the next n calls throw the adapter's
// transient error without consuming scripted state.

class MockRuleSource : public RuleSource {
public:
    explicit MockRuleSource(ClockPtr clock) : clock_(std::move(clock)) {}

    std::vector<RuleEvent> poll() override;

    // Script an event for delivery at virtual time t (ms).
    void push_at(std::int64_t t_ms, RuleEvent ev);
    void fail_next(int n) { fail_budget_ += n; }
    int poll_count() const { return polls_; }

private:
    ClockPtr clock_;
    std::vector<std::pair<std::int64_t, RuleEvent>> pending_;  // kept sorted by time
    int fail_budget_ = 0;
    int polls_ = 0;
};

class MockCircuitProvider : public CircuitProvider {
public:
    explicit MockCircuitProvider(ClockPtr clock, std::int64_t provision_delay_ms = 2000)
        : clock_(std::move(clock)), provision_delay_ms_(provision_delay_ms) {}

    void add_site(const std::string& site, const std::vector<std::string>& endpoint_names);

    std::vector<model::Endpoint> list_endpoints(const std::string& site) override;
    std::string create(const CircuitRequest& req, const std::string& idempotency_key) override;
    void modify(const std::string& circuit_id, int bandwidth_gbps) override;
    void teardown(const std::string& circuit_id) override;
    ProviderCircuitStatus status(const std::string& circuit_id) override;

    void fail_next(int n) { fail_budget_ += n; }

    struct ModifyCall {
        std::string circuit_id;
        int bandwidth_gbps;
        std::int64_t t_ms;
    };

    int create_calls() const { return create_calls_; }
    int create_calls_for(const std::string& idempotency_key) const;
    int modify_calls() const { return static_cast<int>(modify_log_.size()); }
    int teardown_calls() const { return teardown_calls_; }
    const std::vector<ModifyCall>& modify_log() const { return modify_log_; }
    int bandwidth_of(const std::string& circuit_id) const;

private:
    struct MockCircuit {
        std::string id;
        std::string src_endpoint;
        std::string dst_endpoint;
        int bandwidth_gbps = 0;
        std::int64_t ready_at_ms = 0;
        bool torn_down = false;
        std::string idempotency_key;
    };

    MockCircuit* find(const std::string& circuit_id);
    void check_fault(const char* op);

    ClockPtr clock_;
    std::int64_t provision_delay_ms_;
    std::map<std::string, std::vector<std::string>> sites_;
    std::map<std::string, MockCircuit> circuits_;
    int next_id_ = 1;
    int fail_budget_ = 0;
    int create_calls_ = 0;
    std::map<std::string, int> create_calls_by_key_;
    std::vector<ModifyCall> modify_log_;
    int teardown_calls_ = 0;
};

class MockTransferTool : public TransferTool {
public:
    void set_active(const std::string& src_site, const std::string& dst_site, int n) override;
    JobStats job_stats(const std::string& rule_id) override;

    void fail_next(int n) { fail_budget_ += n; }

    // Simulator / test hooks.
    void register_rule(const std::string& rule_id);
    void record_progress(const std::string& rule_id, std::int64_t files_finished,
                         double avg_throughput_gbps);
    void inject_job_failures(const std::string& rule_id, std::int64_t count);

    int active_for(const std::string& src_site, const std::string& dst_site) const;
    struct SetActiveCall {
        std::string src, dst;
        int n;
    };
    const std::vector<SetActiveCall>& set_active_log() const { return set_active_log_; }

private:
    static std::string pair_key(const std::string& a, const std::string& b);

    int fail_budget_ = 0;
    std::map<std::string, int> active_;   // unordered pair -> n
    std::map<std::string, JobStats> stats_;
    std::vector<SetActiveCall> set_active_log_;
};

class MockMetricsSource : public MetricsSource {
public:
    explicit MockMetricsSource(std::uint64_t seed = 0, double noise_fraction = 0.0)
        : rng_(seed), noise_fraction_(noise_fraction) {}

    ThroughputSample throughput(const std::string& endpoint, int window_s) override;

    void set_rate(const std::string& endpoint, double gbps);
    void forget(const std::string& endpoint);
    void fail_next(int n);  // next n queries report NoData

private:
    int fail_budget_ = 0;
    mutable std::mutex mutex_;  // concurrent readers allowed by contract
    std::mt19937_64 rng_;
    double noise_fraction_;
    std::map<std::string, double> rates_;
};

}  // namespace flowdirector::adapters
