#include "flowdirector/orchestrator/orchestrator.hpp"

#include <algorithm>
#include <cmath>

#include "flowdirector/allocator/allocator.hpp"
#include "flowdirector/errors.hpp"
#include "flowdirector/log.hpp"

namespace flowdirector::orchestrator {

using adapters::RuleEvent;
using adapters::RuleEventKind;
using model::Circuit;
using model::CircuitStatus;
using model::RuleState;
using model::TransferRule;

int tune_transfers(double bandwidth_gbps, double rtt_ms, const TuningConfig& cfg) {
    if (bandwidth_gbps < 0) throw std::invalid_argument("bandwidth must be >= 0");
    if (rtt_ms <= 0) throw std::invalid_argument("rtt must be positive");
    double per_transfer = std::min(cfg.per_transfer_cap_gbps, cfg.window_gbit / (rtt_ms / 1000.0));
    int wanted = static_cast<int>(std::ceil(bandwidth_gbps / per_transfer));
    return std::clamp(wanted, cfg.min_active, cfg.max_active);
}

Orchestrator::Orchestrator(model::Store& store, adapters::Adapters adapters, ClockPtr clock,
                           OrchestratorConfig cfg,
                           std::vector<std::pair<std::string, std::int64_t>> sites,
                           std::function<double(const std::string&, const std::string&)> rtt_ms)
    : store_(store),
      adapters_(adapters),
      clock_(clock),
      cfg_(cfg),
      sites_(std::move(sites)),
      rtt_ms_(std::move(rtt_ms)),
      monitor_(store, adapters.metrics_source, adapters.transfer_tool, clock, cfg.monitor) {
    monitor_.set_remediation([this](const TransferRule& rule) {
        // Detection's prescribed fix: push the link harder.
        auto key = rule.src < rule.dst ? rule.src + "|" + rule.dst : rule.dst + "|" + rule.src;
        auto it = tuned_base_.find(key);
        int base = it != tuned_base_.end() ? it->second : cfg_.tuning.min_active;
        int doubled = std::min(base * 2, cfg_.tuning.max_active);
        try {
            adapters_.transfer_tool->set_active(rule.src, rule.dst, doubled);
            log::info("monitor") << "raised active transfers for " << rule.src << "<->"
                                 << rule.dst << " to " << doubled;
        } catch (const ToolUnavailable& e) {
            log::warn("monitor") << "transfer tool unavailable: " << e.what();
        }
    });
}

void Orchestrator::seed_endpoints() {
    for (const auto& [site, capacity] : sites_) {
        (void)capacity;
        try {
            for (const model::Endpoint& ep : adapters_.circuit_provider->list_endpoints(site))
                store_.register_endpoint(site, ep.name);
        } catch (const UnknownSite& e) {
            log::warn("orchestrator") << "no endpoint inventory for " << site << ": " << e.what();
        }
    }
}

std::int64_t Orchestrator::site_capacity(const std::string& site) const {
    for (const auto& [name, capacity] : sites_)
        if (name == site) return capacity;
    return -1;
}

// --- ingest ---

void Orchestrator::handle_event(const RuleEvent& ev) {
    switch (ev.kind) {
        case RuleEventKind::NEW: {
            if (!ev.payload) {
                log::warn("ingest") << "NEW event without payload for " << ev.rule_id;
                return;
            }
            const auto& p = *ev.payload;
            if (p.sources.size() != 1 || p.destinations.size() != 1) {
                log::warn("ingest") << "skipping rule " << ev.rule_id
                                    << ": multi-source/multi-destination rules are not eligible";
                return;
            }
            if (site_capacity(p.sources[0]) < 0 || site_capacity(p.destinations[0]) < 0) {
                log::warn("ingest") << "skipping rule " << ev.rule_id << ": unknown site";
                return;
            }
            if (store_.rule(ev.rule_id)) {
                log::warn("ingest") << "duplicate NEW for rule " << ev.rule_id;
                return;
            }
            TransferRule r;
            r.rule_id = ev.rule_id;
            r.src = p.sources[0];
            r.dst = p.destinations[0];
            r.priority = p.priority;
            r.total_bytes = p.total_bytes;
            store_.insert_rule(r);
            log::info("ingest") << "rule " << ev.rule_id << " " << r.src << " -> " << r.dst
                                << " priority " << r.priority;
            break;
        }
        case RuleEventKind::PRIORITY_CHANGED: {
            try {
                store_.set_priority(ev.rule_id, ev.new_priority);
                log::info("ingest") << "rule " << ev.rule_id << " priority now "
                                    << ev.new_priority;
            } catch (const UnknownRule&) {
                log::warn("ingest") << "priority change for unknown rule " << ev.rule_id;
            }
            break;
        }
        case RuleEventKind::COMPLETED: {
            auto rule = store_.rule(ev.rule_id);
            if (!rule) {
                log::warn("ingest") << "completion for unknown rule " << ev.rule_id;
                return;
            }
            try {
                if (rule->state == RuleState::MODIFYING)
                    rule = store_.transition(ev.rule_id, RuleState::MODIFYING,
                                             RuleState::PROVISIONED);
                if (rule->state == RuleState::PROVISIONED)
                    store_.transition(ev.rule_id, RuleState::PROVISIONED, RuleState::FINISHED);
                else
                    log::warn("ingest") << "completion for rule " << ev.rule_id << " in state "
                                        << to_string(rule->state);
            } catch (const ConflictError& e) {
                log::warn("ingest") << e.what();
            }
            break;
        }
    }
}

void Orchestrator::ingest_step() {
    std::vector<RuleEvent> events;
    try {
        events = adapters_.rule_source->poll();
    } catch (const SourceUnavailable& e) {
        log::warn("ingest") << "rule source unavailable: " << e.what();
        return;  // nothing consumed, nothing committed
    }
    for (const RuleEvent& ev : events) handle_event(ev);
}

// --- endpoint allocation ---

void Orchestrator::endpoint_step() {
    auto waiting = store_.rules_in({RuleState::INITIALIZED});
    if (waiting.empty()) return;

    for (const TransferRule& rule : waiting) {
        std::string src_ep, dst_ep;

        // Prefer the endpoints of a reusable stale circuit on this site pair
        // so the provision daemon can modify instead of create.
        for (const Circuit& c : store_.circuits_in(CircuitStatus::STALE)) {
            bool forward = c.src_site == rule.src && c.dst_site == rule.dst;
            bool reverse = c.src_site == rule.dst && c.dst_site == rule.src;
            if (!forward && !reverse) continue;
            bool free = true;
            for (const model::Endpoint& ep : store_.all_endpoints())
                if ((ep.name == c.src_endpoint || ep.name == c.dst_endpoint) && ep.in_use_by)
                    free = false;
            if (!free) continue;
            src_ep = forward ? c.src_endpoint : c.dst_endpoint;
            dst_ep = forward ? c.dst_endpoint : c.src_endpoint;
            break;
        }

        if (src_ep.empty()) {
            auto pick_free = [this](const std::string& site) -> std::string {
                for (const model::Endpoint& ep : store_.endpoints(site))
                    if (ep.assignable_fresh()) return ep.name;  // name order = lowest first
                return {};
            };
            src_ep = pick_free(rule.src);
            dst_ep = pick_free(rule.dst);
            if (src_ep.empty() || dst_ep.empty()) {
                log::warn("endpoint") << "no free endpoint for rule " << rule.rule_id << " ("
                                      << rule.src << " -> " << rule.dst << "); will retry";
                continue;
            }
        }

        try {
            store_.assign_endpoints(rule.rule_id, src_ep, dst_ep);
        } catch (const EndpointBusy& e) {
            log::warn("endpoint") << e.what();
        } catch (const ConflictError& e) {
            log::warn("endpoint") << e.what();
        }
    }
}

// --- decision ---

std::map<std::string, std::int64_t> Orchestrator::effective_capacities() const {
    std::map<std::string, std::int64_t> caps;
    for (const auto& [name, capacity] : sites_) caps[name] = capacity;

    // Stale circuits hold their minimized allocation; rules mid-provisioning
    // hold the figure already staged for them.  Both come off the table
    // before optimizing, so ports are never oversubscribed.
    for (const Circuit& c : store_.circuits_in(CircuitStatus::STALE)) {
        for (const std::string& site : {c.src_site, c.dst_site}) {
            auto it = caps.find(site);
            if (it != caps.end())
                it->second = std::max<std::int64_t>(0, it->second - c.bandwidth_gbps);
        }
    }
    for (const TransferRule& r :
         store_.rules_in({RuleState::DECIDED, RuleState::PROVISIONING})) {
        std::int64_t held = r.allocated_gbps.value_or(0);
        for (const std::string& site : {r.src, r.dst}) {
            auto it = caps.find(site);
            if (it != caps.end()) it->second = std::max<std::int64_t>(0, it->second - held);
        }
    }
    return caps;
}

void Orchestrator::decision_step() {
    std::lock_guard<std::mutex> lk(decision_mutex_);

    auto live = store_.rules_in(
        {RuleState::ALLOCATED, RuleState::PROVISIONED, RuleState::MODIFYING});
    bool triggered = false;
    for (const TransferRule& r : live)
        if (r.state == RuleState::ALLOCATED || r.redecide) triggered = true;
    if (!triggered) return;

    auto caps = effective_capacities();
    std::vector<std::pair<std::string, std::int64_t>> sites_eff;
    sites_eff.reserve(sites_.size());
    for (const auto& [name, capacity] : sites_) sites_eff.emplace_back(name, caps.at(name));

    auto allocations =
        allocator::allocate(live, sites_eff, cfg_.granularity_gbps);

    for (std::size_t i = 0; i < live.size(); ++i) {
        const TransferRule& rule = live[i];
        const std::int64_t gbps = allocations[i].bandwidth_gbps;
        try {
            switch (rule.state) {
                case RuleState::ALLOCATED:
                    if (gbps >= cfg_.granularity_gbps) {
                        store_.stage_allocation(rule.rule_id, RuleState::ALLOCATED,
                                                static_cast<int>(gbps), RuleState::DECIDED);
                    } else {
                        log::warn("decision") << "no capacity for rule " << rule.rule_id
                                              << " yet; keeping it ALLOCATED";
                    }
                    break;
                case RuleState::PROVISIONED:
                    if (gbps != rule.allocated_gbps.value_or(0) && gbps >= cfg_.granularity_gbps) {
                        store_.stage_allocation(rule.rule_id, RuleState::PROVISIONED,
                                                static_cast<int>(gbps), RuleState::MODIFYING);
                    } else if (rule.redecide) {
                        store_.clear_redecide(rule.rule_id);
                    }
                    break;
                case RuleState::MODIFYING:
                    if (gbps != rule.allocated_gbps.value_or(0) && gbps >= cfg_.granularity_gbps) {
                        store_.stage_allocation(rule.rule_id, RuleState::MODIFYING,
                                                static_cast<int>(gbps), RuleState::MODIFYING);
                    } else if (rule.redecide) {
                        store_.clear_redecide(rule.rule_id);
                    }
                    break;
                default:
                    break;
            }
        } catch (const ConflictError& e) {
            log::warn("decision") << e.what();  // racer moved the rule; next cycle re-reads
        }
    }
}

// --- provisioning ---

bool Orchestrator::backoff_pending(const std::string& rule_id) const {
    auto it = next_attempt_ms_.find(rule_id);
    return it != next_attempt_ms_.end() && clock_->now_ms() < it->second;
}

void Orchestrator::provision_failure(const TransferRule& rule, const std::string& what) {
    int attempts = rule.attempts + 1;
    if (attempts > cfg_.max_retries) {
        log::error("provision") << "rule " << rule.rule_id << " failed after " << attempts
                                << " attempts: " << what;
        try {
            store_.transition(rule.rule_id, rule.state, RuleState::FAILED);
        } catch (const Error& e) {
            log::warn("provision") << e.what();
        }
        next_attempt_ms_.erase(rule.rule_id);
        return;
    }
    store_.set_attempts(rule.rule_id, attempts);
    std::int64_t backoff = cfg_.backoff_start_ms << (attempts - 1);
    backoff = std::min(backoff, cfg_.backoff_cap_ms);
    next_attempt_ms_[rule.rule_id] = clock_->now_ms() + backoff;
    log::warn("provision") << "rule " << rule.rule_id << " attempt " << attempts << " failed ("
                           << what << "); retrying in " << backoff << " ms";
}

void Orchestrator::tune_pair(const std::string& site_a, const std::string& site_b) {
    std::int64_t pair_bw = 0;
    for (const Circuit& c : store_.circuits_in(CircuitStatus::ACTIVE)) {
        bool same = (c.src_site == site_a && c.dst_site == site_b) ||
                    (c.src_site == site_b && c.dst_site == site_a);
        if (same) pair_bw += c.bandwidth_gbps;
    }
    int n = tune_transfers(static_cast<double>(pair_bw), rtt_ms_(site_a, site_b), cfg_.tuning);
    auto key = site_a < site_b ? site_a + "|" + site_b : site_b + "|" + site_a;
    tuned_base_[key] = n;
    try {
        adapters_.transfer_tool->set_active(site_a, site_b, n);
    } catch (const ToolUnavailable& e) {
        log::warn("provision") << "transfer tool unavailable: " << e.what();
    }
}

void Orchestrator::apply_modify(const TransferRule& rule) {
    if (!rule.circuit_id || !rule.allocated_gbps) {
        log::error("provision") << "MODIFYING rule " << rule.rule_id << " missing circuit/figure";
        return;
    }
    try {
        adapters_.circuit_provider->modify(*rule.circuit_id, *rule.allocated_gbps);
    } catch (const UnknownCircuit& e) {
        provision_failure(rule, e.what());
        return;
    } catch (const ProviderError& e) {
        provision_failure(rule, e.what());
        return;
    }
    store_.set_circuit(*rule.circuit_id, *rule.allocated_gbps, CircuitStatus::ACTIVE,
                       std::nullopt);
    try {
        store_.transition(rule.rule_id, RuleState::MODIFYING, RuleState::PROVISIONED);
    } catch (const ConflictError& e) {
        log::warn("provision") << e.what();
        return;
    }
    if (rule.attempts > 0) store_.set_attempts(rule.rule_id, 0);
    next_attempt_ms_.erase(rule.rule_id);
    tune_pair(rule.src, rule.dst);
}

void Orchestrator::provision_decided(const TransferRule& rule) {
    if (!rule.allocated_gbps) {
        log::error("provision") << "DECIDED rule " << rule.rule_id << " has no bandwidth figure";
        return;
    }
    if (!rule.src_endpoint || !rule.dst_endpoint) {
        log::error("provision") << "DECIDED rule " << rule.rule_id << " has no endpoints";
        return;
    }

    // Reuse: a stale circuit on exactly this endpoint pair is modified, not
    // re-created.
    for (const Circuit& c : store_.circuits_in(CircuitStatus::STALE)) {
        bool forward = c.src_endpoint == *rule.src_endpoint && c.dst_endpoint == *rule.dst_endpoint;
        bool reverse = c.src_endpoint == *rule.dst_endpoint && c.dst_endpoint == *rule.src_endpoint;
        if (!forward && !reverse) continue;
        TransferRule staged;
        try {
            staged = store_.attach_circuit(rule.rule_id, c.circuit_id);
        } catch (const ConflictError& e) {
            log::warn("provision") << e.what();
            return;
        }
        try {
            adapters_.circuit_provider->modify(c.circuit_id, *rule.allocated_gbps);
        } catch (const Error& e) {
            provision_failure(staged, e.what());
            return;
        }
        store_.set_circuit(c.circuit_id, *rule.allocated_gbps, CircuitStatus::ACTIVE,
                           std::nullopt);
        try {
            store_.transition(rule.rule_id, RuleState::PROVISIONING, RuleState::PROVISIONED);
        } catch (const ConflictError& e) {
            log::warn("provision") << e.what();
            return;
        }
        if (rule.attempts > 0) store_.set_attempts(rule.rule_id, 0);
        next_attempt_ms_.erase(rule.rule_id);
        log::info("provision") << "rule " << rule.rule_id << " reusing stale circuit "
                               << c.circuit_id;
        tune_pair(rule.src, rule.dst);
        return;
    }

    adapters::CircuitRequest req;
    req.src_endpoint = *rule.src_endpoint;
    req.dst_endpoint = *rule.dst_endpoint;
    req.src_site = rule.src;
    req.dst_site = rule.dst;
    req.bandwidth_gbps = static_cast<int>(*rule.allocated_gbps);

    std::string circuit_id;
    try {
        circuit_id = adapters_.circuit_provider->create(req, rule.rule_id);
    } catch (const Error& e) {
        provision_failure(rule, e.what());
        return;
    }

    try {
        store_.attach_circuit(rule.rule_id, circuit_id);
    } catch (const ConflictError& e) {
        // Rule moved under us after the create; the circuit stays keyed to
        // the rule id, so a retry will not duplicate it.
        log::warn("provision") << e.what();
        return;
    }
    Circuit row;
    row.circuit_id = circuit_id;
    row.src_endpoint = req.src_endpoint;
    row.dst_endpoint = req.dst_endpoint;
    row.src_site = rule.src;
    row.dst_site = rule.dst;
    row.bandwidth_gbps = req.bandwidth_gbps;
    row.status = CircuitStatus::PENDING;
    store_.put_circuit(row);
    if (rule.attempts > 0) store_.set_attempts(rule.rule_id, 0);
    next_attempt_ms_.erase(rule.rule_id);
    log::info("provision") << "rule " << rule.rule_id << " creating circuit " << circuit_id
                           << " at " << req.bandwidth_gbps << " Gbps";
}

void Orchestrator::provision_step() {
    // Rules waiting on the provider: promote once the circuit is up.
    for (const TransferRule& rule : store_.rules_in({RuleState::PROVISIONING})) {
        if (!rule.circuit_id) continue;
        adapters::ProviderCircuitStatus st;
        try {
            st = adapters_.circuit_provider->status(*rule.circuit_id);
        } catch (const Error& e) {
            log::warn("provision") << e.what();
            continue;
        }
        if (st != adapters::ProviderCircuitStatus::ACTIVE) continue;
        auto row = store_.circuit(*rule.circuit_id);
        if (row)
            store_.set_circuit(*rule.circuit_id, row->bandwidth_gbps, CircuitStatus::ACTIVE,
                               std::nullopt);
        try {
            store_.transition(rule.rule_id, RuleState::PROVISIONING, RuleState::PROVISIONED);
        } catch (const ConflictError& e) {
            log::warn("provision") << e.what();
            continue;
        }
        tune_pair(rule.src, rule.dst);
    }

    // Bandwidth reductions first; they make room for creations and raises.
    auto modifying = store_.rules_in({RuleState::MODIFYING});
    bool decreases_ok = true;
    for (const TransferRule& rule : modifying) {
        if (!rule.circuit_id || !rule.allocated_gbps) continue;
        auto row = store_.circuit(*rule.circuit_id);
        int current = row ? row->bandwidth_gbps : 0;
        if (*rule.allocated_gbps < current) {
            if (backoff_pending(rule.rule_id)) {
                decreases_ok = false;
                continue;
            }
            apply_modify(rule);
            auto after = store_.rule(rule.rule_id);
            if (!after || after->state == RuleState::MODIFYING ||
                after->state == RuleState::FAILED)
                decreases_ok = false;
        }
    }
    if (!decreases_ok) {
        log::warn("provision") << "holding creations until pending reductions apply";
        return;
    }

    for (const TransferRule& rule : store_.rules_in({RuleState::DECIDED})) {
        if (backoff_pending(rule.rule_id)) continue;
        provision_decided(rule);
    }

    for (const TransferRule& rule : store_.rules_in({RuleState::MODIFYING})) {
        if (backoff_pending(rule.rule_id)) continue;
        apply_modify(rule);
    }
}

// --- finish / stale circuits ---

void Orchestrator::finish_rule_circuit(const Circuit& c, bool teardown) {
    if (teardown) {
        try {
            adapters_.circuit_provider->teardown(c.circuit_id);
        } catch (const UnknownCircuit&) {
            // provider already dropped it; fall through to bookkeeping
        } catch (const Error& e) {
            log::warn("finish") << "teardown of " << c.circuit_id << " failed: " << e.what()
                                << "; retrying next cycle";
            return;
        }
        store_.set_circuit(c.circuit_id, 0, CircuitStatus::TORN_DOWN, std::nullopt);
        store_.release_circuit_hold(c.circuit_id);
        return;
    }
    int minimized = static_cast<int>(cfg_.granularity_gbps);
    try {
        adapters_.circuit_provider->modify(c.circuit_id, minimized);
    } catch (const Error& e) {
        log::warn("finish") << "minimizing " << c.circuit_id << " failed: " << e.what()
                            << "; retrying next cycle";
        return;
    }
    store_.set_circuit(c.circuit_id, minimized, CircuitStatus::STALE, clock_->now_ms());
    log::info("finish") << "circuit " << c.circuit_id << " kept stale at " << minimized
                        << " Gbps";
}

void Orchestrator::finish_step() {
    auto rules = store_.rules();
    for (const Circuit& c : store_.circuits()) {
        if (c.status != CircuitStatus::ACTIVE && c.status != CircuitStatus::PENDING) continue;

        bool live_owner = false;
        bool finished_owner = false;
        for (const TransferRule& r : rules) {
            if (!r.circuit_id || *r.circuit_id != c.circuit_id) continue;
            if (r.state == RuleState::FINISHED)
                finished_owner = true;
            else if (r.state != RuleState::FAILED && r.state != RuleState::CANCELLED)
                live_owner = true;
        }
        if (live_owner) continue;
        // finished -> stale; failed, cancelled and orphaned -> torn down
        finish_rule_circuit(c, /*teardown=*/!finished_owner);
    }

    // Offline half of monitoring: exactly one persisted report per finished
    // rule.
    for (const std::string& rule_id : store_.finished_rules_without_report()) {
        try {
            monitor_.persist_final_report(rule_id);
        } catch (const Error& e) {
            log::warn("finish") << "report for " << rule_id << " failed: " << e.what();
        }
    }
}

// --- reaper ---

void Orchestrator::reaper_step() {
    const std::int64_t now = clock_->now_ms();
    for (const Circuit& c : store_.circuits_in(CircuitStatus::STALE)) {
        if (!c.stale_since || now - *c.stale_since <= cfg_.reuse_window_ms) continue;

        // A rule may have claimed the endpoints for reuse but not yet
        // modified the circuit; never reap under it.
        bool claimed = false;
        for (const model::Endpoint& ep : store_.all_endpoints())
            if (ep.held_by_circuit == c.circuit_id && ep.in_use_by) claimed = true;
        if (claimed) continue;

        try {
            adapters_.circuit_provider->teardown(c.circuit_id);
        } catch (const UnknownCircuit&) {
            // already gone
        } catch (const Error& e) {
            log::warn("reaper") << "teardown of " << c.circuit_id << " failed: " << e.what();
            continue;
        }
        store_.set_circuit(c.circuit_id, 0, CircuitStatus::TORN_DOWN, std::nullopt);
        store_.release_circuit_hold(c.circuit_id);
        log::info("reaper") << "reaped stale circuit " << c.circuit_id;
    }
}

void Orchestrator::sample_step() { monitor_.sample_step(); }

void Orchestrator::step_all() {
    ingest_step();
    endpoint_step();
    decision_step();
    provision_step();
    finish_step();
    reaper_step();
    sample_step();
}

void Orchestrator::cancel_rule(const std::string& rule_id) {
    for (int tries = 0; tries < 3; ++tries) {
        auto rule = store_.rule(rule_id);
        if (!rule) throw UnknownRule("no such rule: " + rule_id);
        if (model::is_terminal(rule->state)) return;
        try {
            store_.transition(rule_id, rule->state, RuleState::CANCELLED);
            return;
        } catch (const ConflictError&) {
            continue;  // racer moved it; re-read
        }
    }
    log::warn("orchestrator") << "could not cancel rule " << rule_id;
}

}  // namespace flowdirector::orchestrator
