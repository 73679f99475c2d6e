#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <csignal>
#include <iomanip>
#include <iostream>

#include "flowdirector/adapters/http.hpp"
#include "flowdirector/adapters/mock.hpp"
#include "flowdirector/allocator/allocator.hpp"
#include "flowdirector/config.hpp"
#include "flowdirector/errors.hpp"
#include "flowdirector/service/api.hpp"
#include "flowdirector/simulator/simulator.hpp"

namespace fd = flowdirector;
using nlohmann::json;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

int run_allocate(const std::string& topo_file, std::int64_t granularity, bool as_json,
                 const std::string& out_file) {
    json doc = fd::load_json_file(topo_file);

    std::vector<std::pair<std::string, std::int64_t>> sites;
    if (!doc.contains("sites")) throw fd::ConfigError(topo_file + ": missing field 'sites'");
    for (const json& s : doc["sites"])
        sites.emplace_back(s.at("name").get<std::string>(), s.at("capacity_gbps").get<std::int64_t>());

    std::vector<fd::model::TransferRule> rules;
    if (!doc.contains("rules")) throw fd::ConfigError(topo_file + ": missing field 'rules'");
    for (const json& r : doc["rules"]) {
        fd::model::TransferRule rule;
        rule.rule_id = r.at("id").get<std::string>();
        rule.src = r.at("src").get<std::string>();
        rule.dst = r.at("dst").get<std::string>();
        rule.priority = r.at("priority").get<int>();
        rules.push_back(std::move(rule));
    }

    auto allocations = fd::allocator::allocate(rules, sites, granularity);

    json machine = json::array();
    for (const auto& a : allocations)
        machine.push_back({{"rule_id", a.rule_id}, {"bandwidth_gbps", a.bandwidth_gbps}});

    if (as_json) {
        std::cout << json{{"allocations", machine}}.dump(2) << "\n";
    } else {
        for (const auto& a : allocations)
            std::cout << a.rule_id << " " << a.bandwidth_gbps << "\n";
    }
    if (!out_file.empty()) {
        std::ofstream out(out_file);
        if (!out) throw fd::ConfigError("cannot write " + out_file);
        out << json{{"allocations", machine}}.dump(2) << "\n";
    }
    return 0;
}

int run_simulate(const std::string& scenario_file, std::optional<std::uint64_t> seed,
                 std::optional<std::int64_t> until, const std::string& store_path, bool quiet) {
    fd::simulator::Scenario scenario = fd::simulator::Scenario::from_file(scenario_file);
    if (seed) scenario.seed = *seed;

    std::int64_t horizon = until.value_or(0);
    if (horizon == 0) {
        for (const auto& ev : scenario.events) horizon = std::max(horizon, ev.t);
        horizon += 120;  // enough slack for provisioning and completion
    }

    fd::simulator::Simulation sim(scenario, store_path);
    sim.run_until(horizon);
    fd::simulator::SimResult result = sim.result();

    if (!quiet)
        for (const std::string& line : result.log) std::cout << line << "\n";

    std::cout << "--- assertions ---\n";
    std::cout << "capacity safety: "
              << (result.capacity_violations.empty()
                      ? "OK"
                      : "VIOLATED x" + std::to_string(result.capacity_violations.size()))
              << "\n";
    for (const std::string& v : result.capacity_violations) std::cout << "  " << v << "\n";
    std::cout << "byte conservation: "
              << (result.conservation_violations.empty()
                      ? "OK"
                      : "VIOLATED x" + std::to_string(result.conservation_violations.size()))
              << "\n";
    std::cout << "--- final states ---\n";
    for (const auto& [rule, state] : result.final_states)
        std::cout << rule << " " << fd::model::to_string(state) << "\n";

    return result.clean() ? 0 : 1;
}

int run_status(const std::string& url) {
    httplib::Client client(url);
    auto res = client.Get("/api/v1/status");
    if (!res || res->status != 200) {
        std::cerr << "status query to " << url << " failed"
                  << (res ? " with http " + std::to_string(res->status) : "") << "\n";
        return 1;
    }
    json doc = json::parse(res->body);

    std::cout << std::left << std::setw(24) << "RULE" << std::setw(10) << "PRIORITY"
              << std::setw(14) << "STATE" << std::setw(10) << "GBPS"
              << "ROUTE\n";
    for (const json& r : doc["rules"]) {
        std::string gbps = r["allocated_gbps"].is_null()
                               ? "-"
                               : std::to_string(r["allocated_gbps"].get<std::int64_t>());
        std::cout << std::left << std::setw(24) << r["rule_id"].get<std::string>()
                  << std::setw(10) << r["priority"].get<int>() << std::setw(14)
                  << r["state"].get<std::string>() << std::setw(10) << gbps
                  << r["src"].get<std::string>() + " -> " + r["dst"].get<std::string>() << "\n";
    }
    std::cout << "\n"
              << std::left << std::setw(24) << "SITE" << std::setw(14) << "CAPACITY"
              << std::setw(14) << "ALLOCATED"
              << "FREE ENDPOINTS\n";
    for (const json& s : doc["sites"]) {
        std::cout << std::left << std::setw(24) << s["name"].get<std::string>() << std::setw(14)
                  << s["capacity_gbps"].get<std::int64_t>() << std::setw(14)
                  << s["allocated_gbps"].get<std::int64_t>() << s["free_endpoints"].get<int>()
                  << "\n";
    }
    return 0;
}

int run_serve(const std::string& config_file) {
    fd::Config cfg = fd::Config::from_file(config_file);

    auto clock = std::make_shared<fd::SystemClock>();
    auto store = fd::model::Store::open(cfg.get<std::string>("store.path", "flowdirector.db"),
                                        clock);

    std::vector<std::pair<std::string, std::int64_t>> sites;
    for (const fd::SiteConfig& s : cfg.sites()) sites.emplace_back(s.name, s.capacity_gbps);

    // Adapter construction by mode; mock mode runs a self-contained instance.
    std::string mode = cfg.get<std::string>("adapters.mode", "mock");
    std::unique_ptr<fd::adapters::RuleSource> rule_source;
    std::unique_ptr<fd::adapters::CircuitProvider> circuit_provider;
    std::unique_ptr<fd::adapters::TransferTool> transfer_tool;
    std::unique_ptr<fd::adapters::MetricsSource> metrics_source;
    if (mode == "mock") {
        rule_source = std::make_unique<fd::adapters::MockRuleSource>(clock);
        auto provider = std::make_unique<fd::adapters::MockCircuitProvider>(
            clock, cfg.get<std::int64_t>("mock.provision_delay", 2) * 1000);
        for (const fd::SiteConfig& s : cfg.sites()) provider->add_site(s.name, s.endpoints);
        circuit_provider = std::move(provider);
        transfer_tool = std::make_unique<fd::adapters::MockTransferTool>();
        metrics_source = std::make_unique<fd::adapters::MockMetricsSource>();
    } else if (mode == "http") {
        rule_source = std::make_unique<fd::adapters::HttpRuleSource>(
            cfg.get<std::string>("adapters.rule_source_url", "http://127.0.0.1:9100"));
        circuit_provider = std::make_unique<fd::adapters::HttpCircuitProvider>(
            cfg.get<std::string>("adapters.circuit_provider_url", "http://127.0.0.1:9101"));
        transfer_tool = std::make_unique<fd::adapters::HttpTransferTool>(
            cfg.get<std::string>("adapters.transfer_tool_url", "http://127.0.0.1:9102"));
        metrics_source = std::make_unique<fd::adapters::HttpMetricsSource>(
            cfg.get<std::string>("adapters.metrics_url", "http://127.0.0.1:9103"));
    } else {
        throw fd::ConfigError("adapters.mode must be 'mock' or 'http', got '" + mode + "'");
    }

    fd::orchestrator::OrchestratorConfig ocfg;
    ocfg.granularity_gbps = cfg.get<std::int64_t>("allocator.granularity_gbps", 5);
    ocfg.reuse_window_ms = cfg.get<std::int64_t>("orchestrator.reuse_window_s", 600) * 1000;
    ocfg.max_retries = cfg.get<int>("orchestrator.max_retries", 3);
    ocfg.tuning = cfg.tuning();
    ocfg.monitor.theta = cfg.get<double>("monitor.theta", 0.8);
    ocfg.monitor.window = cfg.get<int>("monitor.window", 3);
    ocfg.monitor.idle_epsilon = cfg.get<double>("monitor.idle_epsilon", 0.01);

    fd::adapters::Adapters ad;
    ad.rule_source = rule_source.get();
    ad.circuit_provider = circuit_provider.get();
    ad.transfer_tool = transfer_tool.get();
    ad.metrics_source = metrics_source.get();

    fd::orchestrator::Orchestrator orch(
        *store, ad, clock, ocfg, sites,
        [&cfg](const std::string& a, const std::string& b) { return cfg.rtt_ms(a, b); });
    orch.seed_endpoints();

    fd::service::ApiServer api(*store, orch.flow_monitor(), sites);
    api.start(cfg.get<std::string>("api.listen", "127.0.0.1:8080"));

    fd::service::DaemonRunner runner(orch, cfg.get<double>("orchestrator.poll_interval", 10.0));
    runner.start();

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "flowdirector serving on port " << api.port() << "; ctrl-c to stop\n";
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));

    runner.stop();
    api.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowdirector: priority-weighted bandwidth orchestration for transfer rules"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "run the orchestration service");
    std::string config_file;
    serve->add_option("--config", config_file, "configuration file")->required();

    auto* allocate = app.add_subcommand("allocate", "run the bandwidth allocator offline");
    std::string topo_file;
    std::int64_t granularity = 5;
    bool as_json = false;
    std::string out_file;
    allocate->add_option("topology", topo_file, "topology file")->required();
    allocate->add_option("--granularity", granularity, "allocation quantum in Gbps");
    allocate->add_flag("--json", as_json, "print the machine-readable document");
    allocate->add_option("--out", out_file, "also write the machine-readable document here");

    auto* simulate = app.add_subcommand("simulate", "replay a scenario on the mock services");
    std::string scenario_file, sim_store;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> until;
    bool quiet = false;
    simulate->add_option("scenario", scenario_file, "scenario file")->required();
    simulate->add_option("--seed", seed, "override the scenario seed");
    simulate->add_option("--until", until, "virtual seconds to run");
    simulate->add_option("--store", sim_store, "store file (default: throwaway temp file)");
    simulate->add_flag("--quiet", quiet, "suppress the event log");

    auto* status = app.add_subcommand("status", "render /api/v1/status as a table");
    std::string url = "http://127.0.0.1:8080";
    status->add_option("--url", url, "service base url");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*serve) return run_serve(config_file);
        if (*allocate) return run_allocate(topo_file, granularity, as_json, out_file);
        if (*simulate) return run_simulate(scenario_file, seed, until, sim_store, quiet);
        if (*status) return run_status(url);
    } catch (const fd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fd::ScenarioInvalid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
