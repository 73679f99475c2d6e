#include "flowdirector/simulator/simulator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowdirector/errors.hpp"

namespace flowdirector::simulator {

using adapters::RuleEvent;
using adapters::RuleEventKind;
using model::Circuit;
using model::CircuitStatus;
using model::RuleState;
using model::TransferRule;
using nlohmann::json;

namespace {

SimEventKind kind_from_string(const std::string& s) {
    if (s == "ADD_RULE") return SimEventKind::ADD_RULE;
    if (s == "SET_PRIORITY") return SimEventKind::SET_PRIORITY;
    if (s == "CANCEL_RULE") return SimEventKind::CANCEL_RULE;
    if (s == "FAULT") return SimEventKind::FAULT;
    if (s == "METRICS_SCALE") return SimEventKind::METRICS_SCALE;
    throw ScenarioInvalid("unknown event kind: " + s);
}

std::vector<std::string> string_list(const json& j) {
    if (j.is_string()) return {j.get<std::string>()};
    return j.get<std::vector<std::string>>();
}

}  // namespace

Scenario Scenario::from_json(const std::string& text, const std::string& origin) {
    json doc = parse_json_document(text, origin);
    Scenario sc;
    try {
        if (!doc.contains("sites") || !doc["sites"].is_array())
            throw ScenarioInvalid(origin + ": scenario needs a 'sites' list");
        for (const json& s : doc["sites"]) {
            ScenarioSite site;
            site.name = s.at("name").get<std::string>();
            site.capacity_gbps = s.value("capacity_gbps", 0);
            if (s.contains("endpoints")) {
                site.endpoints = s["endpoints"].get<std::vector<std::string>>();
            } else {
                int n = s.value("endpoint_count", 2);
                for (int i = 1; i <= n; ++i) {
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "-ep-%02d", i);
                    std::string lower = site.name;
                    std::transform(lower.begin(), lower.end(), lower.begin(),
                                   [](unsigned char c) { return std::tolower(c); });
                    site.endpoints.push_back(lower + buf);
                }
            }
            sc.sites.push_back(std::move(site));
        }
        for (const json& l : doc.value("links", json::array()))
            sc.links.push_back({l.at("a").get<std::string>(), l.at("b").get<std::string>(),
                                l.value("rtt_ms", 50.0)});
        if (doc.contains("model")) {
            const json& m = doc["model"];
            sc.per_transfer_rate_gbps = m.value("per_transfer_rate_gbps", 2.0);
            sc.noise_fraction = m.value("noise_fraction", 0.0);
            sc.seed = m.value("seed", 1);
            sc.file_size_bytes = m.value("file_size_bytes", std::int64_t{1'000'000'000});
        }
        for (const json& e : doc.value("events", json::array())) {
            SimEvent ev;
            ev.t = e.at("t").get<std::int64_t>();
            ev.kind = kind_from_string(e.at("kind").get<std::string>());
            switch (ev.kind) {
                case SimEventKind::ADD_RULE: {
                    const json& r = e.at("rule");
                    ev.rule_id = r.at("id").get<std::string>();
                    ev.sources = string_list(r.contains("sources") ? r["sources"] : r.at("src"));
                    ev.destinations =
                        string_list(r.contains("destinations") ? r["destinations"] : r.at("dst"));
                    ev.priority = r.value("priority", 1);
                    ev.total_bytes = r.value("total_bytes", std::int64_t{0});
                    break;
                }
                case SimEventKind::SET_PRIORITY:
                    ev.rule_id = e.at("rule_id").get<std::string>();
                    ev.new_priority = e.at("priority").get<int>();
                    break;
                case SimEventKind::CANCEL_RULE:
                    ev.rule_id = e.at("rule_id").get<std::string>();
                    break;
                case SimEventKind::FAULT:
                    ev.adapter = e.at("adapter").get<std::string>();
                    ev.count = e.at("count").get<int>();
                    break;
                case SimEventKind::METRICS_SCALE:
                    ev.rule_id = e.at("rule_id").get<std::string>();
                    ev.factor = e.at("factor").get<double>();
                    break;
            }
            sc.events.push_back(std::move(ev));
        }
        if (doc.contains("config")) sc.overrides = Config(doc["config"]);
    } catch (const json::exception& e) {
        throw ScenarioInvalid(origin + ": " + e.what());
    }
    sc.validate();
    return sc;
}

Scenario Scenario::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioInvalid("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str(), path);
}

void Scenario::validate() const {
    std::set<std::string> site_names;
    for (const ScenarioSite& s : sites) {
        if (s.capacity_gbps < 0) throw ScenarioInvalid("site " + s.name + ": negative capacity");
        if (!site_names.insert(s.name).second)
            throw ScenarioInvalid("duplicate site: " + s.name);
    }
    std::int64_t prev_t = 0;
    std::set<std::string> rule_ids;
    for (const SimEvent& ev : events) {
        if (ev.t < prev_t) throw ScenarioInvalid("events must be sorted by time");
        prev_t = ev.t;
        if (ev.kind == SimEventKind::ADD_RULE) {
            if (!rule_ids.insert(ev.rule_id).second)
                throw ScenarioInvalid("duplicate rule id: " + ev.rule_id);
            for (const std::string& s : ev.sources)
                if (!site_names.count(s))
                    throw ScenarioInvalid("rule " + ev.rule_id + " references unknown site " + s);
            for (const std::string& s : ev.destinations)
                if (!site_names.count(s))
                    throw ScenarioInvalid("rule " + ev.rule_id + " references unknown site " + s);
            if (ev.priority < 1)
                throw ScenarioInvalid("rule " + ev.rule_id + " has priority < 1");
            if (ev.total_bytes < 0)
                throw ScenarioInvalid("rule " + ev.rule_id + " has negative size");
        }
        if (ev.kind == SimEventKind::FAULT && ev.adapter != "rule_source" &&
            ev.adapter != "circuit_provider" && ev.adapter != "transfer_tool" &&
            ev.adapter != "metrics_source")
            throw ScenarioInvalid("unknown adapter in FAULT event: " + ev.adapter);
    }
}

// --- Simulation ---

Simulation::Simulation(Scenario scenario, std::string store_path)
    : scenario_(std::move(scenario)), store_path_(std::move(store_path)), noise_rng_(scenario_.seed) {
    if (store_path_.empty()) {
        auto dir = std::filesystem::temp_directory_path();
        store_path_ =
            (dir / ("flowdirector-sim-" + std::to_string(std::random_device{}()) + ".db"))
                .string();
        owns_store_file_ = true;
    }

    clock_ = std::make_shared<VirtualClock>(0);
    const Config& cfg = scenario_.overrides;

    rule_source_ = std::make_unique<adapters::MockRuleSource>(clock_);
    circuit_provider_ = std::make_unique<adapters::MockCircuitProvider>(
        clock_, cfg.get<std::int64_t>("mock.provision_delay", 2) * 1000);
    transfer_tool_ = std::make_unique<adapters::MockTransferTool>();
    metrics_source_ =
        std::make_unique<adapters::MockMetricsSource>(scenario_.seed + 1, scenario_.noise_fraction);

    for (const ScenarioSite& s : scenario_.sites) circuit_provider_->add_site(s.name, s.endpoints);

    // Rule-source traffic is scripted up front; the mock delivers on time.
    for (const SimEvent& ev : scenario_.events) {
        if (ev.kind == SimEventKind::ADD_RULE) {
            RuleEvent re;
            re.kind = RuleEventKind::NEW;
            re.rule_id = ev.rule_id;
            re.payload = adapters::NewRulePayload{ev.rule_id, ev.sources, ev.destinations,
                                                  ev.priority, ev.total_bytes};
            rule_source_->push_at(ev.t * 1000, re);
            transfer_tool_->register_rule(ev.rule_id);
        } else if (ev.kind == SimEventKind::SET_PRIORITY) {
            RuleEvent re;
            re.kind = RuleEventKind::PRIORITY_CHANGED;
            re.rule_id = ev.rule_id;
            re.new_priority = ev.new_priority;
            rule_source_->push_at(ev.t * 1000, re);
        }
    }

    orch_cfg_.granularity_gbps = cfg.get<std::int64_t>("allocator.granularity_gbps", 5);
    orch_cfg_.reuse_window_ms = cfg.get<std::int64_t>("orchestrator.reuse_window_s", 600) * 1000;
    orch_cfg_.max_retries = cfg.get<int>("orchestrator.max_retries", 3);
    orch_cfg_.tuning = cfg.tuning();
    orch_cfg_.monitor.theta = cfg.get<double>("monitor.theta", 0.8);
    orch_cfg_.monitor.window = cfg.get<int>("monitor.window", 3);
    orch_cfg_.monitor.idle_epsilon = cfg.get<double>("monitor.idle_epsilon", 0.01);

    open_service();
}

Simulation::~Simulation() {
    orchestrator_.reset();
    store_.reset();
    if (owns_store_file_) {
        std::error_code ec;
        std::filesystem::remove(store_path_, ec);
        std::filesystem::remove(store_path_ + "-journal", ec);
    }
}

void Simulation::open_service() {
    store_ = model::Store::open(store_path_, clock_);

    std::vector<std::pair<std::string, std::int64_t>> sites;
    for (const ScenarioSite& s : scenario_.sites) sites.emplace_back(s.name, s.capacity_gbps);

    std::vector<ScenarioLink> links = scenario_.links;
    auto rtt = [links](const std::string& a, const std::string& b) -> double {
        for (const ScenarioLink& l : links)
            if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return l.rtt_ms;
        return 50.0;
    };

    adapters::Adapters ad;
    ad.rule_source = rule_source_.get();
    ad.circuit_provider = circuit_provider_.get();
    ad.transfer_tool = transfer_tool_.get();
    ad.metrics_source = metrics_source_.get();

    orchestrator_ =
        std::make_unique<orchestrator::Orchestrator>(*store_, ad, clock_, orch_cfg_, sites, rtt);
    orchestrator_->seed_endpoints();
}

void Simulation::restart() {
    note("service restart (crash model)");
    orchestrator_.reset();
    store_.reset();
    open_service();
}

void Simulation::note(const std::string& line) {
    std::ostringstream out;
    out << "[" << next_tick_ << "] " << line;
    result_.log.push_back(out.str());
}

void Simulation::apply_event(const SimEvent& ev) {
    switch (ev.kind) {
        case SimEventKind::ADD_RULE:
            note("event ADD_RULE " + ev.rule_id);  // payload already queued at the source
            break;
        case SimEventKind::SET_PRIORITY:
            note("event SET_PRIORITY " + ev.rule_id + " -> " + std::to_string(ev.new_priority));
            break;
        case SimEventKind::CANCEL_RULE:
            note("event CANCEL_RULE " + ev.rule_id);
            try {
                orchestrator_->cancel_rule(ev.rule_id);
            } catch (const UnknownRule&) {
                note("cancel for unknown rule " + ev.rule_id);
            }
            break;
        case SimEventKind::FAULT:
            note("event FAULT " + ev.adapter + " x" + std::to_string(ev.count));
            if (ev.adapter == "rule_source") rule_source_->fail_next(ev.count);
            if (ev.adapter == "circuit_provider") circuit_provider_->fail_next(ev.count);
            if (ev.adapter == "transfer_tool") transfer_tool_->fail_next(ev.count);
            if (ev.adapter == "metrics_source") metrics_source_->fail_next(ev.count);
            break;
        case SimEventKind::METRICS_SCALE:
            note("event METRICS_SCALE " + ev.rule_id + " x" + std::to_string(ev.factor));
            scale_factor_[ev.rule_id] = ev.factor;
            break;
    }
}

void Simulation::advance_transfers() {
    std::set<std::string> touched;
    for (const TransferRule& rule :
         store_->rules_in({RuleState::PROVISIONED, RuleState::MODIFYING})) {
        if (!rule.circuit_id || !rule.allocated_gbps) continue;
        auto circuit = store_->circuit(*rule.circuit_id);
        if (!circuit || circuit->status != CircuitStatus::ACTIVE) continue;

        const double allocated = static_cast<double>(*rule.allocated_gbps);
        int n_active = transfer_tool_->active_for(rule.src, rule.dst);
        if (n_active <= 0) n_active = orch_cfg_.tuning.min_active;

        double base = std::min(allocated, n_active * scenario_.per_transfer_rate_gbps);
        auto fit = scale_factor_.find(rule.rule_id);
        if (fit != scale_factor_.end()) base = std::min(base * fit->second, allocated);

        double noise = 0.0;
        if (scenario_.noise_fraction > 0.0) {
            std::uniform_real_distribution<double> dist(-scenario_.noise_fraction,
                                                        scenario_.noise_fraction);
            noise = dist(noise_rng_);
        }
        const double rate = base * (1.0 + noise);

        const double total_gbit = static_cast<double>(rule.total_bytes) * 8.0 / 1e9;
        double& delivered = delivered_gbit_[rule.rule_id];
        delivered = std::min(total_gbit, delivered + rate);

        if (rule.src_endpoint) {
            metrics_source_->set_rate(*rule.src_endpoint, rate);
            touched.insert(*rule.src_endpoint);
        }
        if (rule.dst_endpoint) {
            metrics_source_->set_rate(*rule.dst_endpoint, rate);
            touched.insert(*rule.dst_endpoint);
        }

        if (scenario_.file_size_bytes > 0 && rule.total_bytes > 0) {
            double fraction = total_gbit > 0 ? delivered / total_gbit : 1.0;
            std::int64_t files = (rule.total_bytes + scenario_.file_size_bytes - 1) /
                                 scenario_.file_size_bytes;
            transfer_tool_->record_progress(
                rule.rule_id, static_cast<std::int64_t>(fraction * static_cast<double>(files)),
                rate / static_cast<double>(n_active));
        }

        if (delivered >= total_gbit && !completed_.count(rule.rule_id)) {
            completed_.insert(rule.rule_id);
            result_.completion_t[rule.rule_id] = next_tick_;
            RuleEvent done;
            done.kind = RuleEventKind::COMPLETED;
            done.rule_id = rule.rule_id;
            rule_source_->push_at(clock_->now_ms(), done);
            note("rule " + rule.rule_id + " delivered all bytes");
        }
    }

    // Idle endpoints read as zero flow.
    for (const std::string& ep : rated_endpoints_)
        if (!touched.count(ep)) metrics_source_->set_rate(ep, 0.0);
    rated_endpoints_ = std::move(touched);
}

void Simulation::check_invariants() {
    std::map<std::string, std::int64_t> used;
    for (const Circuit& c : store_->circuits()) {
        if (c.status != CircuitStatus::ACTIVE && c.status != CircuitStatus::STALE) continue;
        used[c.src_site] += c.bandwidth_gbps;
        used[c.dst_site] += c.bandwidth_gbps;
    }
    for (const ScenarioSite& s : scenario_.sites) {
        auto it = used.find(s.name);
        if (it != used.end() && it->second > s.capacity_gbps) {
            std::ostringstream msg;
            msg << "tick " << next_tick_ << ": site " << s.name << " carries " << it->second
                << " Gbps over capacity " << s.capacity_gbps;
            result_.capacity_violations.push_back(msg.str());
        }
    }
    for (const auto& [rule_id, gbit] : delivered_gbit_) {
        auto rule = store_->rule(rule_id);
        if (!rule) continue;
        double total = static_cast<double>(rule->total_bytes) * 8.0 / 1e9;
        if (gbit > total + 1e-6) {
            std::ostringstream msg;
            msg << "tick " << next_tick_ << ": rule " << rule_id << " delivered " << gbit
                << " of " << total << " Gbit";
            result_.conservation_violations.push_back(msg.str());
        }
    }
}

void Simulation::diff_states() {
    for (const TransferRule& r : store_->rules()) {
        std::string state = model::to_string(r.state);
        auto it = last_seen_state_.find(r.rule_id);
        if (it == last_seen_state_.end() || it->second != state) {
            note("rule " + r.rule_id + ": " + (it == last_seen_state_.end() ? "-" : it->second) +
                 " -> " + state);
            last_seen_state_[r.rule_id] = state;
        }
    }
}

void Simulation::tick() {
    clock_->set_ms(next_tick_ * 1000);

    while (next_event_ < scenario_.events.size() &&
           scenario_.events[next_event_].t <= next_tick_) {
        apply_event(scenario_.events[next_event_]);
        ++next_event_;
    }

    orchestrator_->step_all();
    advance_transfers();
    diff_states();
    check_invariants();

    ++next_tick_;
    result_.ticks = next_tick_;
}

void Simulation::run_until(std::int64_t t_s) {
    while (next_tick_ <= t_s) tick();
}

SimResult Simulation::result() {
    result_.final_snapshot = store_->snapshot();
    result_.final_states.clear();
    for (const TransferRule& r : store_->rules()) result_.final_states[r.rule_id] = r.state;
    return result_;
}

}  // namespace flowdirector::simulator
