#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "flowdirector/adapters/adapters.hpp"
#include "flowdirector/clock.hpp"
#include "flowdirector/model/store.hpp"

namespace flowdirector::monitor {

enum class Verdict { HEALTHY, UNDERPERFORMING, IDLE };

const char* to_string(Verdict v);

struct MonitorConfig {
    double theta = 0.8;        // underperformance threshold
    int window = 3;            // consecutive samples needed for a verdict
    double idle_epsilon = 0.01;
    int metrics_window_s = 60;
};

// Periodic throughput sampling of provisioned rules, window-based
// underperformance detection, and per-rule flow reports correlating the
// host-level samples with job-level transfer-tool stats.
class Monitor {
public:
    Monitor(model::Store& store, adapters::MetricsSource* metrics,
            adapters::TransferTool* transfer_tool, ClockPtr clock, MonitorConfig cfg);

    // Underperformance hook; installed by the orchestrator, which re-tunes
    // the affected link with a doubled stream count.
    void set_remediation(std::function<void(const model::TransferRule&)> fn);

    // One sample per provisioned rule per cycle.
    void sample_step();

    // Pure function of the stored sample window and the thresholds.
    Verdict detect(const std::string& rule_id) const;  // throws InsufficientData
    Verdict detect(const std::string& rule_id, double theta, int window) const;

    // Aggregated report over the rule's provisioned lifetime; persisted
    // reports (finished rules) are returned as stored.
    std::string report_json(const std::string& rule_id) const;  // throws UnknownRule
    void persist_final_report(const std::string& rule_id);

    const MonitorConfig& config() const { return cfg_; }

private:
    Verdict classify(const std::vector<model::FlowSample>& window_samples, double theta) const;
    std::string build_report(const model::TransferRule& rule) const;

    model::Store& store_;
    adapters::MetricsSource* metrics_;
    adapters::TransferTool* transfer_tool_;
    ClockPtr clock_;
    MonitorConfig cfg_;
    std::function<void(const model::TransferRule&)> remediation_;
    std::set<std::string> remediated_;  // one remediation per episode
};

}  // namespace flowdirector::monitor
