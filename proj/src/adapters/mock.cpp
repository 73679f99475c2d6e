#include "flowdirector/adapters/mock.hpp"

#include <algorithm>

#include "flowdirector/errors.hpp"

namespace flowdirector::adapters {

const char* to_string(RuleEventKind k) {
    switch (k) {
        case RuleEventKind::NEW: return "NEW";
        case RuleEventKind::PRIORITY_CHANGED: return "PRIORITY_CHANGED";
        case RuleEventKind::COMPLETED: return "COMPLETED";
    }
    return "?";
}

// --- MockRuleSource ---

std::vector<RuleEvent> MockRuleSource::poll() {
    ++polls_;
    if (fail_budget_ > 0) {
        --fail_budget_;
        throw SourceUnavailable("rule source scripted outage");
    }
    const std::int64_t now = clock_->now_ms();
    std::vector<RuleEvent> due;
    auto it = pending_.begin();
    while (it != pending_.end()) {
        if (it->first <= now) {
            due.push_back(it->second);
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }
    return due;
}

void MockRuleSource::push_at(std::int64_t t_ms, RuleEvent ev) {
    auto pos = std::upper_bound(
        pending_.begin(), pending_.end(), t_ms,
        [](std::int64_t t, const auto& entry) { return t < entry.first; });
    pending_.insert(pos, {t_ms, std::move(ev)});
}

// --- MockCircuitProvider ---

void MockCircuitProvider::add_site(const std::string& site,
                                   const std::vector<std::string>& endpoint_names) {
    auto& names = sites_[site];
    names = endpoint_names;
    std::sort(names.begin(), names.end());
}

std::vector<model::Endpoint> MockCircuitProvider::list_endpoints(const std::string& site) {
    auto it = sites_.find(site);
    if (it == sites_.end()) throw UnknownSite("no such site: " + site);
    std::vector<model::Endpoint> out;
    for (const std::string& name : it->second)
        out.push_back({name, site, std::nullopt, std::nullopt});
    return out;
}

void MockCircuitProvider::check_fault(const char* op) {
    if (fail_budget_ > 0) {
        --fail_budget_;
        throw ProviderError(std::string("circuit provider scripted failure on ") + op);
    }
}

std::string MockCircuitProvider::create(const CircuitRequest& req,
                                        const std::string& idempotency_key) {
    ++create_calls_;
    ++create_calls_by_key_[idempotency_key];
    check_fault("create");

    // Retried create for a key we already served: same circuit, no new one.
    for (auto& [id, c] : circuits_)
        if (!c.torn_down && c.idempotency_key == idempotency_key) return id;

    for (const auto& [id, c] : circuits_) {
        if (c.torn_down) continue;
        if (c.src_endpoint == req.src_endpoint || c.dst_endpoint == req.src_endpoint ||
            c.src_endpoint == req.dst_endpoint || c.dst_endpoint == req.dst_endpoint)
            throw EndpointBusy("endpoint already attached to circuit " + id);
    }

    MockCircuit c;
    c.id = "circuit-" + std::to_string(next_id_++);
    c.src_endpoint = req.src_endpoint;
    c.dst_endpoint = req.dst_endpoint;
    c.bandwidth_gbps = req.bandwidth_gbps;
    c.ready_at_ms = clock_->now_ms() + provision_delay_ms_;
    c.idempotency_key = idempotency_key;
    std::string id = c.id;
    circuits_.emplace(id, std::move(c));
    return id;
}

MockCircuitProvider::MockCircuit* MockCircuitProvider::find(const std::string& circuit_id) {
    auto it = circuits_.find(circuit_id);
    if (it == circuits_.end() || it->second.torn_down)
        throw UnknownCircuit("no such circuit: " + circuit_id);
    return &it->second;
}

void MockCircuitProvider::modify(const std::string& circuit_id, int bandwidth_gbps) {
    check_fault("modify");
    MockCircuit* c = find(circuit_id);
    c->bandwidth_gbps = bandwidth_gbps;
    modify_log_.push_back({circuit_id, bandwidth_gbps, clock_->now_ms()});
}

void MockCircuitProvider::teardown(const std::string& circuit_id) {
    check_fault("teardown");
    MockCircuit* c = find(circuit_id);
    c->torn_down = true;
    ++teardown_calls_;
}

ProviderCircuitStatus MockCircuitProvider::status(const std::string& circuit_id) {
    auto it = circuits_.find(circuit_id);
    if (it == circuits_.end()) throw UnknownCircuit("no such circuit: " + circuit_id);
    if (it->second.torn_down) return ProviderCircuitStatus::TORN_DOWN;
    return clock_->now_ms() >= it->second.ready_at_ms ? ProviderCircuitStatus::ACTIVE
                                                      : ProviderCircuitStatus::PENDING;
}

int MockCircuitProvider::create_calls_for(const std::string& idempotency_key) const {
    auto it = create_calls_by_key_.find(idempotency_key);
    return it == create_calls_by_key_.end() ? 0 : it->second;
}

int MockCircuitProvider::bandwidth_of(const std::string& circuit_id) const {
    auto it = circuits_.find(circuit_id);
    if (it == circuits_.end()) throw UnknownCircuit("no such circuit: " + circuit_id);
    return it->second.bandwidth_gbps;
}

// --- MockTransferTool ---

std::string MockTransferTool::pair_key(const std::string& a, const std::string& b) {
    return a < b ? a + "|" + b : b + "|" + a;
}

void MockTransferTool::set_active(const std::string& src_site, const std::string& dst_site,
                                  int n) {
    if (fail_budget_ > 0) {
        --fail_budget_;
        throw ToolUnavailable("transfer tool scripted outage");
    }
    active_[pair_key(src_site, dst_site)] = n;
    set_active_log_.push_back({src_site, dst_site, n});
}

JobStats MockTransferTool::job_stats(const std::string& rule_id) {
    auto it = stats_.find(rule_id);
    if (it == stats_.end()) throw UnknownRule("transfer tool does not know rule " + rule_id);
    return it->second;
}

void MockTransferTool::register_rule(const std::string& rule_id) {
    stats_.emplace(rule_id, JobStats{rule_id, 0, 0, 0, 0.0});
}

void MockTransferTool::record_progress(const std::string& rule_id, std::int64_t files_finished,
                                       double avg_throughput_gbps) {
    auto it = stats_.find(rule_id);
    if (it == stats_.end()) return;
    it->second.finished = files_finished;
    it->second.avg_file_throughput_gbps = avg_throughput_gbps;
}

void MockTransferTool::inject_job_failures(const std::string& rule_id, std::int64_t count) {
    auto it = stats_.find(rule_id);
    if (it == stats_.end()) return;
    it->second.failed += count;
    it->second.retried += count;
}

int MockTransferTool::active_for(const std::string& src_site, const std::string& dst_site) const {
    auto it = active_.find(pair_key(src_site, dst_site));
    return it == active_.end() ? 0 : it->second;
}

// --- MockMetricsSource ---

ThroughputSample MockMetricsSource::throughput(const std::string& endpoint, int window_s) {
    (void)window_s;  // the model keeps one current rate per endpoint
    std::lock_guard<std::mutex> lk(mutex_);
    if (fail_budget_ > 0) {
        --fail_budget_;
        return {0.0, false};
    }
    auto it = rates_.find(endpoint);
    if (it == rates_.end()) return {0.0, false};
    double rate = it->second;
    if (noise_fraction_ > 0.0) {
        std::uniform_real_distribution<double> dist(-noise_fraction_, noise_fraction_);
        rate *= 1.0 + dist(rng_);
    }
    return {rate, true};
}

void MockMetricsSource::set_rate(const std::string& endpoint, double gbps) {
    std::lock_guard<std::mutex> lk(mutex_);
    rates_[endpoint] = gbps;
}

void MockMetricsSource::forget(const std::string& endpoint) {
    std::lock_guard<std::mutex> lk(mutex_);
    rates_.erase(endpoint);
}

void MockMetricsSource::fail_next(int n) {
    std::lock_guard<std::mutex> lk(mutex_);
    fail_budget_ += n;
}

}  // namespace flowdirector::adapters
