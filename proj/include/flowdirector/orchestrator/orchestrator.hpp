#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "flowdirector/adapters/adapters.hpp"
#include "flowdirector/clock.hpp"
#include "flowdirector/config.hpp"
#include "flowdirector/model/store.hpp"
#include "flowdirector/monitor/monitor.hpp"

namespace flowdirector::orchestrator {

// Active-transfer count for a link: per-transfer achievable rate is capped
// by both a flat per-transfer ceiling and the window/rtt limit; the link
// needs enough streams to cover the allocated bandwidth.
int tune_transfers(double bandwidth_gbps, double rtt_ms, const TuningConfig& cfg);

struct OrchestratorConfig {
    std::int64_t granularity_gbps = 5;
    std::int64_t reuse_window_ms = 600'000;
    int max_retries = 3;
    std::int64_t backoff_start_ms = 1'000;
    std::int64_t backoff_cap_ms = 60'000;
    int metrics_window_s = 60;
    TuningConfig tuning;
    monitor::MonitorConfig monitor;
};

// The per-lifecycle-stage daemons.  Every daemon is a step() function; the
// threaded runner and the simulator drive the same code, one through
// periodic threads and one through a round-robin virtual-clock loop.
// Cross-daemon coordination happens only through committed store state.
class Orchestrator {
public:
    Orchestrator(model::Store& store, adapters::Adapters adapters, ClockPtr clock,
                 OrchestratorConfig cfg,
                 std::vector<std::pair<std::string, std::int64_t>> sites,
                 std::function<double(const std::string&, const std::string&)> rtt_ms);

    // Pull the provider's endpoint inventory into the store.
    void seed_endpoints();

    void ingest_step();
    void endpoint_step();
    void decision_step();
    void provision_step();
    void finish_step();
    void reaper_step();
    void sample_step();

    // One full round in the simulator's fixed order.
    void step_all();

    void cancel_rule(const std::string& rule_id);

    monitor::Monitor& flow_monitor() { return monitor_; }
    const std::vector<std::pair<std::string, std::int64_t>>& sites() const { return sites_; }

private:
    std::int64_t site_capacity(const std::string& site) const;
    std::map<std::string, std::int64_t> effective_capacities() const;
    void handle_event(const adapters::RuleEvent& ev);
    void finish_rule_circuit(const model::Circuit& c, bool teardown);
    void provision_failure(const model::TransferRule& rule, const std::string& what);
    bool backoff_pending(const std::string& rule_id) const;
    void tune_pair(const std::string& site_a, const std::string& site_b);
    void apply_modify(const model::TransferRule& rule);
    void provision_decided(const model::TransferRule& rule);

    model::Store& store_;
    adapters::Adapters adapters_;
    ClockPtr clock_;
    OrchestratorConfig cfg_;
    std::vector<std::pair<std::string, std::int64_t>> sites_;
    std::function<double(const std::string&, const std::string&)> rtt_ms_;
    monitor::Monitor monitor_;

    std::mutex decision_mutex_;  // never two concurrent decisions
    std::map<std::string, std::int64_t> next_attempt_ms_;  // provider backoff per rule
    std::map<std::string, int> tuned_base_;                // last normal tune per site pair
};

}  // namespace flowdirector::orchestrator
