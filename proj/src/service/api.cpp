#include "flowdirector/service/api.hpp"

#include <httplib.h>
#include <json.hpp>

#include "flowdirector/errors.hpp"
#include "flowdirector/log.hpp"

namespace flowdirector::service {

using model::CircuitStatus;
using model::RuleState;
using model::TransferRule;
using nlohmann::json;

ApiServer::ApiServer(model::Store& store, monitor::Monitor& monitor,
                     std::vector<std::pair<std::string, std::int64_t>> sites)
    : store_(store), monitor_(monitor), sites_(std::move(sites)) {}

ApiServer::~ApiServer() { stop(); }

std::pair<int, std::string> ApiServer::allocation_doc(const std::string& rule_id) const {
    auto rule = store_.rule(rule_id);
    if (!rule) return {404, json{{"error", "unknown rule"}}.dump()};
    if (!rule->src_endpoint || !rule->dst_endpoint)
        return {409, json{{"error", "rule not yet allocated; retry"},
                          {"state", model::to_string(rule->state)}}
                         .dump()};
    return {200, json{{"source_endpoint", *rule->src_endpoint},
                      {"dest_endpoint", *rule->dst_endpoint}}
                     .dump()};
}

std::string ApiServer::status_doc() const {
    model::Store::StatusSnapshot snap = store_.status_snapshot();

    json rules = json::array();
    for (const TransferRule& r : snap.rules) {
        json entry = {{"rule_id", r.rule_id},   {"src", r.src},
                      {"dst", r.dst},           {"priority", r.priority},
                      {"state", model::to_string(r.state)}};
        entry["allocated_gbps"] = r.allocated_gbps ? json(*r.allocated_gbps) : json(nullptr);
        if (r.circuit_id) {
            entry["circuit_id"] = *r.circuit_id;
            for (const model::Circuit& c : snap.circuits)
                if (c.circuit_id == *r.circuit_id)
                    entry["circuit_status"] = model::to_string(c.status);
        }
        rules.push_back(std::move(entry));
    }

    json sites = json::array();
    for (const auto& [name, capacity] : sites_) {
        std::int64_t allocated = 0;
        for (const model::Circuit& c : snap.circuits) {
            if (c.status != CircuitStatus::ACTIVE && c.status != CircuitStatus::STALE) continue;
            if (c.src_site == name || c.dst_site == name) allocated += c.bandwidth_gbps;
        }
        int free_endpoints = 0;
        for (const model::Endpoint& ep : snap.endpoints)
            if (ep.site == name && ep.assignable_fresh()) ++free_endpoints;
        sites.push_back({{"name", name},
                         {"capacity_gbps", capacity},
                         {"allocated_gbps", allocated},
                         {"free_endpoints", free_endpoints}});
    }

    return json{{"rules", std::move(rules)}, {"sites", std::move(sites)}}.dump();
}

std::pair<int, std::string> ApiServer::report_doc(const std::string& rule_id) const {
    try {
        return {200, monitor_.report_json(rule_id)};
    } catch (const UnknownRule&) {
        return {404, json{{"error", "no report for rule"}}.dump()};
    }
}

void ApiServer::start(const std::string& listen) {
    std::string host = "127.0.0.1";
    int port = 8080;
    auto colon = listen.rfind(':');
    if (colon != std::string::npos) {
        host = listen.substr(0, colon);
        port = std::stoi(listen.substr(colon + 1));
    } else if (!listen.empty()) {
        host = listen;
    }

    server_ = std::make_unique<httplib::Server>();
    server_->Get(R"(/api/v1/allocation/(.+))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     auto [status, body] = allocation_doc(req.matches[1]);
                     res.status = status;
                     res.set_content(body, "application/json");
                 });
    server_->Get("/api/v1/status", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(status_doc(), "application/json");
    });
    server_->Get(R"(/api/v1/reports/(.+))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     auto [status, body] = report_doc(req.matches[1]);
                     res.status = status;
                     res.set_content(body, "application/json");
                 });

    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ < 0) throw ConfigError("cannot bind API listener on " + host);
    } else {
        if (!server_->bind_to_port(host, port))
            throw ConfigError("cannot bind API listener on " + listen);
        port_ = port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    log::info("api") << "listening on " << host << ":" << port_;
}

void ApiServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
    server_.reset();
}

// --- DaemonRunner ---

DaemonRunner::DaemonRunner(orchestrator::Orchestrator& orch, double poll_interval_s)
    : orch_(orch), poll_interval_s_(poll_interval_s) {}

DaemonRunner::~DaemonRunner() { stop(); }

void DaemonRunner::start() {
    stop_ = false;
    for (int i = 0; i < 7; ++i) threads_.emplace_back([this, i] { loop(i); });
}

void DaemonRunner::stop() {
    stop_ = true;
    wake_decision_.notify_all();
    for (std::thread& t : threads_)
        if (t.joinable()) t.join();
    threads_.clear();
}

void DaemonRunner::loop(int which) {
    const auto interval =
        std::chrono::milliseconds(static_cast<std::int64_t>(poll_interval_s_ * 1000));
    while (!stop_) {
        try {
            switch (which) {
                case 0: {
                    orch_.ingest_step();
                    std::lock_guard<std::mutex> lk(mutex_);
                    decision_flag_ = true;
                    wake_decision_.notify_one();
                    break;
                }
                case 1: orch_.endpoint_step(); break;
                case 2: orch_.decision_step(); break;
                case 3: orch_.provision_step(); break;
                case 4: orch_.finish_step(); break;
                case 5: orch_.reaper_step(); break;
                case 6: orch_.sample_step(); break;
            }
        } catch (const std::exception& e) {
            log::error("daemon") << "daemon " << which << " step failed: " << e.what();
        }
        if (which == 2) {
            std::unique_lock<std::mutex> lk(mutex_);
            wake_decision_.wait_for(lk, interval, [this] { return decision_flag_ || stop_; });
            decision_flag_ = false;
        } else {
            std::unique_lock<std::mutex> lk(mutex_);
            wake_decision_.wait_for(lk, interval, [this] { return stop_.load(); });
        }
    }
}

}  // namespace flowdirector::service
