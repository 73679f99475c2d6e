#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "flowdirector/adapters/mock.hpp"
#include "flowdirector/clock.hpp"
#include "flowdirector/config.hpp"
#include "flowdirector/model/store.hpp"
#include "flowdirector/orchestrator/orchestrator.hpp"

namespace flowdirector::simulator {

enum class SimEventKind { ADD_RULE, SET_PRIORITY, CANCEL_RULE, FAULT, METRICS_SCALE };

struct SimEvent {
    std::int64_t t = 0;  // virtual seconds
    SimEventKind kind;
    // ADD_RULE
    std::string rule_id;
    std::vector<std::string> sources;
    std::vector<std::string> destinations;
    int priority = 1;
    std::int64_t total_bytes = 0;
    // SET_PRIORITY
    int new_priority = 1;
    // FAULT
    std::string adapter;
    int count = 0;
    // METRICS_SCALE
    double factor = 1.0;
};

struct ScenarioSite {
    std::string name;
    std::int64_t capacity_gbps = 0;
    std::vector<std::string> endpoints;
};

struct ScenarioLink {
    std::string a, b;
    double rtt_ms = 50.0;
};

struct Scenario {
    std::vector<ScenarioSite> sites;
    std::vector<ScenarioLink> links;
    std::vector<SimEvent> events;  // must be sorted by t

    double per_transfer_rate_gbps = 2.0;
    double noise_fraction = 0.0;
    std::uint64_t seed = 1;
    std::int64_t file_size_bytes = 1'000'000'000;

    Config overrides;  // orchestrator/monitor/tuning config knobs

    static Scenario from_json(const std::string& text, const std::string& origin);
    static Scenario from_file(const std::string& path);
    void validate() const;  // throws ScenarioInvalid
};

struct SimResult {
    std::vector<std::string> log;
    std::string final_snapshot;
    std::map<std::string, std::int64_t> completion_t;  // rule -> tick of last byte
    std::map<std::string, model::RuleState> final_states;
    std::vector<std::string> capacity_violations;  // empty on a clean run
    std::vector<std::string> conservation_violations;
    std::int64_t ticks = 0;

    bool clean() const { return capacity_violations.empty() && conservation_violations.empty(); }
};

// Virtual-clock scenario engine.  One tick is one virtual second; every tick
// delivers due events, steps each daemon once in a fixed order, then
// advances transfer progress.  Identical (scenario, seed) gives an
// identical SimResult.  The mock services live as long as the Simulation,
// so restart() models a crash of the orchestration service alone.
class Simulation {
public:
    explicit Simulation(Scenario scenario, std::string store_path = "");
    ~Simulation();

    void tick();
    void run_until(std::int64_t t_s);
    SimResult result();

    // Crash model: drop the orchestrator and store handles mid-flight,
    // reopen from the store file.  Virtual time and external services
    // persist.
    void restart();

    std::int64_t now_s() const { return next_tick_; }
    model::Store& store() { return *store_; }
    orchestrator::Orchestrator& orchestrator() { return *orchestrator_; }
    adapters::MockRuleSource& rule_source() { return *rule_source_; }
    adapters::MockCircuitProvider& circuit_provider() { return *circuit_provider_; }
    adapters::MockTransferTool& transfer_tool() { return *transfer_tool_; }
    adapters::MockMetricsSource& metrics_source() { return *metrics_source_; }

private:
    void open_service();
    void apply_event(const SimEvent& ev);
    void advance_transfers();
    void check_invariants();
    void note(const std::string& line);
    void diff_states();

    Scenario scenario_;
    std::string store_path_;
    bool owns_store_file_ = false;

    std::shared_ptr<VirtualClock> clock_;
    std::unique_ptr<adapters::MockRuleSource> rule_source_;
    std::unique_ptr<adapters::MockCircuitProvider> circuit_provider_;
    std::unique_ptr<adapters::MockTransferTool> transfer_tool_;
    std::unique_ptr<adapters::MockMetricsSource> metrics_source_;

    std::unique_ptr<model::Store> store_;
    std::unique_ptr<orchestrator::Orchestrator> orchestrator_;
    orchestrator::OrchestratorConfig orch_cfg_;

    std::int64_t next_tick_ = 0;
    std::size_t next_event_ = 0;
    std::mt19937_64 noise_rng_;

    std::map<std::string, double> delivered_gbit_;
    std::map<std::string, double> scale_factor_;
    std::set<std::string> completed_;
    std::set<std::string> rated_endpoints_;
    std::map<std::string, std::string> last_seen_state_;

    SimResult result_;
};

}  // namespace flowdirector::simulator
