#include "flowdirector/adapters/http.hpp"

#include <httplib.h>
#include <json.hpp>

#include "flowdirector/errors.hpp"

namespace flowdirector::adapters {

using nlohmann::json;

namespace {

json event_to_obj(const RuleEvent& ev) {
    json j;
    j["kind"] = to_string(ev.kind);
    j["rule_id"] = ev.rule_id;
    if (ev.kind == RuleEventKind::NEW && ev.payload) {
        j["payload"] = {{"rule_id", ev.payload->rule_id},
                        {"sources", ev.payload->sources},
                        {"destinations", ev.payload->destinations},
                        {"priority", ev.payload->priority},
                        {"total_bytes", ev.payload->total_bytes}};
    }
    if (ev.kind == RuleEventKind::PRIORITY_CHANGED) j["new_priority"] = ev.new_priority;
    return j;
}

RuleEvent event_from_obj(const json& j) {
    RuleEvent ev;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "NEW")
        ev.kind = RuleEventKind::NEW;
    else if (kind == "PRIORITY_CHANGED")
        ev.kind = RuleEventKind::PRIORITY_CHANGED;
    else if (kind == "COMPLETED")
        ev.kind = RuleEventKind::COMPLETED;
    else
        throw SourceUnavailable("unknown event kind in response: " + kind);
    ev.rule_id = j.at("rule_id").get<std::string>();
    if (j.contains("payload")) {
        const json& p = j["payload"];
        NewRulePayload payload;
        payload.rule_id = p.at("rule_id").get<std::string>();
        payload.sources = p.at("sources").get<std::vector<std::string>>();
        payload.destinations = p.at("destinations").get<std::vector<std::string>>();
        payload.priority = p.at("priority").get<int>();
        payload.total_bytes = p.at("total_bytes").get<std::int64_t>();
        ev.payload = std::move(payload);
    }
    if (j.contains("new_priority")) ev.new_priority = j["new_priority"].get<int>();
    return ev;
}

template <typename ErrorT>
const httplib::Response& require_2xx(const httplib::Result& res, const char* what) {
    if (!res) throw ErrorT(std::string(what) + ": transport failure");
    if (res->status == 404) throw ErrorT(std::string(what) + ": not found");
    if (res->status < 200 || res->status >= 300)
        throw ErrorT(std::string(what) + ": http status " + std::to_string(res->status));
    return *res;
}

json parse_body(const std::string& body, const char* what) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw ProviderError(std::string(what) + ": bad response body: " + e.what());
    }
}

}  // namespace

std::string rule_event_to_json(const RuleEvent& ev) { return event_to_obj(ev).dump(); }

RuleEvent rule_event_from_json(const std::string& text) {
    return event_from_obj(json::parse(text));
}

// --- HttpRuleSource ---

HttpRuleSource::HttpRuleSource(const std::string& base_url)
    : client_(std::make_unique<httplib::Client>(base_url)) {}
HttpRuleSource::~HttpRuleSource() = default;

std::vector<RuleEvent> HttpRuleSource::poll() {
    auto res = client_->Get("/rules?since=" + std::to_string(cursor_ms_));
    if (!res || res->status != 200)
        throw SourceUnavailable("rule source poll failed" +
                                (res ? ": http " + std::to_string(res->status) : ""));
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::exception& e) {
        throw SourceUnavailable(std::string("rule source sent a bad body: ") + e.what());
    }
    std::vector<RuleEvent> events;
    try {
        for (const json& j : body.at("events")) events.push_back(event_from_obj(j));
        // Cursor moves only after the whole batch parsed; a failure above
        // redelivers everything on the next poll.
        cursor_ms_ = body.at("now").get<std::int64_t>();
    } catch (const json::exception& e) {
        throw SourceUnavailable(std::string("rule source sent a bad event: ") + e.what());
    }
    return events;
}

// --- HttpCircuitProvider ---

HttpCircuitProvider::HttpCircuitProvider(const std::string& base_url)
    : client_(std::make_unique<httplib::Client>(base_url)) {}
HttpCircuitProvider::~HttpCircuitProvider() = default;

std::vector<model::Endpoint> HttpCircuitProvider::list_endpoints(const std::string& site) {
    auto res = client_->Get("/endpoints/" + site);
    const auto& r = require_2xx<UnknownSite>(res, "list_endpoints");
    json body = parse_body(r.body, "list_endpoints");
    std::vector<model::Endpoint> out;
    for (const json& name : body.at("endpoints"))
        out.push_back({name.get<std::string>(), site, std::nullopt, std::nullopt});
    return out;
}

std::string HttpCircuitProvider::create(const CircuitRequest& req,
                                        const std::string& idempotency_key) {
    json body = {{"src_endpoint", req.src_endpoint}, {"dst_endpoint", req.dst_endpoint},
                 {"src_site", req.src_site},         {"dst_site", req.dst_site},
                 {"bandwidth_gbps", req.bandwidth_gbps}, {"idempotency_key", idempotency_key}};
    auto res = client_->Post("/circuits", body.dump(), "application/json");
    if (res && res->status == 409) throw EndpointBusy("create: endpoint busy");
    const auto& r = require_2xx<ProviderError>(res, "create");
    return parse_body(r.body, "create").at("circuit_id").get<std::string>();
}

void HttpCircuitProvider::modify(const std::string& circuit_id, int bandwidth_gbps) {
    json body = {{"bandwidth_gbps", bandwidth_gbps}};
    auto res = client_->Patch("/circuits/" + circuit_id, body.dump(), "application/json");
    if (res && res->status == 404) throw UnknownCircuit("modify: no such circuit " + circuit_id);
    require_2xx<ProviderError>(res, "modify");
}

void HttpCircuitProvider::teardown(const std::string& circuit_id) {
    auto res = client_->Delete("/circuits/" + circuit_id);
    if (res && res->status == 404) throw UnknownCircuit("teardown: no such circuit " + circuit_id);
    require_2xx<ProviderError>(res, "teardown");
}

ProviderCircuitStatus HttpCircuitProvider::status(const std::string& circuit_id) {
    auto res = client_->Get("/circuits/" + circuit_id);
    if (res && res->status == 404) throw UnknownCircuit("status: no such circuit " + circuit_id);
    const auto& r = require_2xx<ProviderError>(res, "status");
    std::string s = parse_body(r.body, "status").at("status").get<std::string>();
    if (s == "PENDING") return ProviderCircuitStatus::PENDING;
    if (s == "ACTIVE") return ProviderCircuitStatus::ACTIVE;
    if (s == "TORN_DOWN") return ProviderCircuitStatus::TORN_DOWN;
    throw ProviderError("status: unexpected circuit status " + s);
}

// --- HttpTransferTool ---

HttpTransferTool::HttpTransferTool(const std::string& base_url)
    : client_(std::make_unique<httplib::Client>(base_url)) {}
HttpTransferTool::~HttpTransferTool() = default;

void HttpTransferTool::set_active(const std::string& src_site, const std::string& dst_site,
                                  int n) {
    json body = {{"active", n}};
    auto res = client_->Put("/links/" + src_site + "/" + dst_site + "/active", body.dump(),
                            "application/json");
    require_2xx<ToolUnavailable>(res, "set_active");
}

JobStats HttpTransferTool::job_stats(const std::string& rule_id) {
    auto res = client_->Get("/jobs/" + rule_id);
    if (res && res->status == 404) throw UnknownRule("job_stats: no such rule " + rule_id);
    const auto& r = require_2xx<ToolUnavailable>(res, "job_stats");
    json body = parse_body(r.body, "job_stats");
    JobStats stats;
    stats.rule_id = rule_id;
    stats.finished = body.value("finished", 0);
    stats.failed = body.value("failed", 0);
    stats.retried = body.value("retried", 0);
    stats.avg_file_throughput_gbps = body.value("avg_file_throughput_gbps", 0.0);
    return stats;
}

// --- HttpMetricsSource ---

HttpMetricsSource::HttpMetricsSource(const std::string& base_url)
    : client_(std::make_unique<httplib::Client>(base_url)) {}
HttpMetricsSource::~HttpMetricsSource() = default;

ThroughputSample HttpMetricsSource::throughput(const std::string& endpoint, int window_s) {
    auto res = client_->Get("/throughput?endpoint=" + endpoint +
                            "&window=" + std::to_string(window_s));
    if (res && res->status == 404) return {0.0, false};  // NoData is not an error
    if (!res || res->status != 200)
        return {0.0, false};
    try {
        json body = json::parse(res->body);
        return {body.at("gbps").get<double>(), true};
    } catch (const json::exception&) {
        return {0.0, false};
    }
}

}  // namespace flowdirector::adapters
