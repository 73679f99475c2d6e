#include "flowdirector/monitor/monitor.hpp"

#include <json.hpp>

#include <cmath>

#include "flowdirector/errors.hpp"
#include "flowdirector/log.hpp"

namespace flowdirector::monitor {

using model::FlowSample;
using model::RuleState;
using model::TransferRule;

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::HEALTHY: return "HEALTHY";
        case Verdict::UNDERPERFORMING: return "UNDERPERFORMING";
        case Verdict::IDLE: return "IDLE";
    }
    return "?";
}

Monitor::Monitor(model::Store& store, adapters::MetricsSource* metrics,
                 adapters::TransferTool* transfer_tool, ClockPtr clock, MonitorConfig cfg)
    : store_(store),
      metrics_(metrics),
      transfer_tool_(transfer_tool),
      clock_(std::move(clock)),
      cfg_(cfg) {}

void Monitor::set_remediation(std::function<void(const model::TransferRule&)> fn) {
    remediation_ = std::move(fn);
}

void Monitor::sample_step() {
    for (const TransferRule& rule : store_.rules_in({RuleState::PROVISIONED})) {
        FlowSample s;
        s.rule_id = rule.rule_id;
        s.t = clock_->now_ms();
        s.allocated_gbps = rule.allocated_gbps.value_or(0);
        adapters::ThroughputSample tp{0.0, false};
        if (rule.src_endpoint)
            tp = metrics_->throughput(*rule.src_endpoint, cfg_.metrics_window_s);
        s.observed_gbps = tp.gbps;
        s.idle_flag = !tp.has_data;
        store_.append_sample(s);

        auto window = store_.last_samples(rule.rule_id, cfg_.window);
        if (static_cast<int>(window.size()) < cfg_.window) continue;
        Verdict v = classify(window, cfg_.theta);
        if (v == Verdict::UNDERPERFORMING) {
            if (remediated_.insert(rule.rule_id).second) {
                log::warn("monitor") << "rule " << rule.rule_id << " underperforming ("
                                     << window.back().observed_gbps << " of "
                                     << s.allocated_gbps << " Gbps)";
                if (remediation_) remediation_(rule);
            }
        } else {
            remediated_.erase(rule.rule_id);
        }
    }
}

Verdict Monitor::classify(const std::vector<FlowSample>& window_samples, double theta) const {
    if (window_samples.empty()) return Verdict::IDLE;
    bool all_idle = true;
    bool all_under = true;
    for (const FlowSample& s : window_samples) {
        double alloc = static_cast<double>(s.allocated_gbps);
        double idle_limit = alloc > 0 ? cfg_.idle_epsilon * alloc : cfg_.idle_epsilon;
        double under_limit = alloc > 0 ? theta * alloc : cfg_.idle_epsilon;
        if (!(s.observed_gbps < idle_limit)) all_idle = false;
        if (!(s.observed_gbps < under_limit)) all_under = false;
    }
    if (all_idle) return Verdict::IDLE;
    if (all_under) return Verdict::UNDERPERFORMING;
    return Verdict::HEALTHY;
}

Verdict Monitor::detect(const std::string& rule_id) const {
    return detect(rule_id, cfg_.theta, cfg_.window);
}

Verdict Monitor::detect(const std::string& rule_id, double theta, int window) const {
    auto samples = store_.last_samples(rule_id, window);
    if (static_cast<int>(samples.size()) < window)
        throw InsufficientData("rule " + rule_id + " has " + std::to_string(samples.size()) +
                               " samples, need " + std::to_string(window));
    return classify(samples, theta);
}

std::string Monitor::build_report(const TransferRule& rule) const {
    auto samples = store_.samples(rule.rule_id);

    double mean = 0.0;
    for (const FlowSample& s : samples) mean += s.observed_gbps;
    if (!samples.empty()) mean /= static_cast<double>(samples.size());

    int allocated = rule.allocated_gbps.value_or(0);
    if (allocated == 0 && !samples.empty()) allocated = samples.back().allocated_gbps;

    int w = std::min<int>(cfg_.window, static_cast<int>(samples.size()));
    std::vector<FlowSample> tail(samples.end() - w, samples.end());
    Verdict verdict = classify(tail, cfg_.theta);

    nlohmann::json job = {{"finished", 0}, {"failed", 0}, {"retried", 0},
                          {"avg_file_throughput_gbps", 0.0}};
    try {
        adapters::JobStats stats = transfer_tool_->job_stats(rule.rule_id);
        job = {{"finished", stats.finished},
               {"failed", stats.failed},
               {"retried", stats.retried},
               {"avg_file_throughput_gbps", stats.avg_file_throughput_gbps}};
    } catch (const Error&) {
        // tool does not know the rule; report zeros
    }

    nlohmann::json doc;
    doc["rule_id"] = rule.rule_id;
    doc["window"] = {{"t_start", samples.empty() ? rule.created_at : samples.front().t},
                     {"t_end", samples.empty() ? rule.updated_at : samples.back().t}};
    doc["mean_observed_gbps"] = mean;
    doc["allocated_gbps"] = allocated;
    doc["efficiency"] = allocated > 0 ? mean / allocated : 0.0;
    doc["verdict"] = to_string(verdict);
    doc["samples"] = samples.size();
    doc["job_stats"] = job;
    return doc.dump();
}

std::string Monitor::report_json(const std::string& rule_id) const {
    if (auto stored = store_.report(rule_id)) return *stored;
    auto rule = store_.rule(rule_id);
    if (!rule) throw UnknownRule("no such rule: " + rule_id);
    return build_report(*rule);
}

void Monitor::persist_final_report(const std::string& rule_id) {
    if (store_.report(rule_id)) return;  // exactly one per finished rule
    auto rule = store_.rule(rule_id);
    if (!rule) throw UnknownRule("no such rule: " + rule_id);
    store_.put_report(rule_id, build_report(*rule));
}

}  // namespace flowdirector::monitor
