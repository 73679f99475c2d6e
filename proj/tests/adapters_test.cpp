#include <doctest.h>

#include "flowdirector/adapters/mock.hpp"
#include "flowdirector/errors.hpp"

using namespace flowdirector;
using namespace flowdirector::adapters;

namespace {

RuleEvent new_rule_event(const std::string& id, int priority = 3) {
    RuleEvent ev;
    ev.kind = RuleEventKind::NEW;
    ev.rule_id = id;
    ev.payload = NewRulePayload{id, {"site-a"}, {"site-b"}, priority, 1000};
    return ev;
}

}  // namespace

TEST_CASE("rule source delivers scripted events at most once") {
    auto clock = std::make_shared<VirtualClock>(0);
    MockRuleSource source(clock);
    source.push_at(0, new_rule_event("r1"));
    RuleEvent pc;
    pc.kind = RuleEventKind::PRIORITY_CHANGED;
    pc.rule_id = "r1";
    pc.new_priority = 8;
    source.push_at(5000, pc);

    clock->set_ms(1000);
    auto first = source.poll();
    REQUIRE(first.size() == 1);
    CHECK(first[0].kind == RuleEventKind::NEW);
    CHECK(source.poll().empty());  // at most once

    clock->set_ms(6000);
    auto second = source.poll();
    REQUIRE(second.size() == 1);
    CHECK(second[0].kind == RuleEventKind::PRIORITY_CHANGED);
    CHECK(second[0].new_priority == 8);
}

TEST_CASE("a failed poll loses nothing") {
    auto clock = std::make_shared<VirtualClock>(1000);
    MockRuleSource source(clock);
    source.push_at(0, new_rule_event("r1"));
    source.fail_next(1);
    CHECK_THROWS_AS(source.poll(), SourceUnavailable);
    auto events = source.poll();  // redelivered
    REQUIRE(events.size() == 1);
    CHECK(events[0].rule_id == "r1");
}

TEST_CASE("endpoint inventory is complete and stable") {
    auto clock = std::make_shared<VirtualClock>(0);
    MockCircuitProvider provider(clock);
    provider.add_site("site-a", {"a-ep-02", "a-ep-01", "a-ep-03"});
    auto eps = provider.list_endpoints("site-a");
    REQUIRE(eps.size() == 3);
    CHECK(eps[0].name == "a-ep-01");  // sorted, deterministic
    CHECK(provider.list_endpoints("site-a")[0].name == eps[0].name);
    CHECK_THROWS_AS(provider.list_endpoints("nowhere"), UnknownSite);
}

TEST_CASE("circuits go active after the provisioning delay") {
    auto clock = std::make_shared<VirtualClock>(0);
    MockCircuitProvider provider(clock, 2000);
    provider.add_site("site-a", {"a-ep-01"});
    provider.add_site("site-b", {"b-ep-01"});

    auto id = provider.create({"a-ep-01", "b-ep-01", "site-a", "site-b", 100}, "r1");
    CHECK(provider.status(id) == ProviderCircuitStatus::PENDING);
    clock->set_ms(1999);
    CHECK(provider.status(id) == ProviderCircuitStatus::PENDING);
    clock->set_ms(2000);
    CHECK(provider.status(id) == ProviderCircuitStatus::ACTIVE);
}

TEST_CASE("busy endpoints cannot host a second circuit") {
    auto clock = std::make_shared<VirtualClock>(0);
    MockCircuitProvider provider(clock, 0);
    provider.add_site("site-a", {"a-ep-01", "a-ep-02"});
    provider.add_site("site-b", {"b-ep-01", "b-ep-02"});
    provider.create({"a-ep-01", "b-ep-01", "site-a", "site-b", 50}, "r1");
    CHECK_THROWS_AS(provider.create({"a-ep-01", "b-ep-02", "site-a", "site-b", 50}, "r2"),
                    EndpointBusy);
}

TEST_CASE("create is idempotent per key") {
    auto clock = std::make_shared<VirtualClock>(0);
    MockCircuitProvider provider(clock, 0);
    provider.add_site("site-a", {"a-ep-01"});
    provider.add_site("site-b", {"b-ep-01"});
    auto first = provider.create({"a-ep-01", "b-ep-01", "site-a", "site-b", 50}, "r1");
    auto second = provider.create({"a-ep-01", "b-ep-01", "site-a", "site-b", 50}, "r1");
    CHECK(first == second);
    CHECK(provider.create_calls() == 2);         // both invocations counted
    CHECK(provider.create_calls_for("r1") == 2);
}

TEST_CASE("modify and teardown lifecycle") {
    auto clock = std::make_shared<VirtualClock>(0);
    MockCircuitProvider provider(clock, 0);
    provider.add_site("site-a", {"a-ep-01"});
    provider.add_site("site-b", {"b-ep-01"});
    auto id = provider.create({"a-ep-01", "b-ep-01", "site-a", "site-b", 100}, "r1");

    provider.modify(id, 200);
    CHECK(provider.bandwidth_of(id) == 200);
    CHECK_THROWS_AS(provider.modify("circuit-999", 10), UnknownCircuit);

    provider.teardown(id);
    CHECK(provider.status(id) == ProviderCircuitStatus::TORN_DOWN);
    CHECK_THROWS_AS(provider.teardown(id), UnknownCircuit);  // double teardown

    // endpoints are free again
    auto again = provider.create({"a-ep-01", "b-ep-01", "site-a", "site-b", 50}, "r2");
    CHECK(provider.status(again) == ProviderCircuitStatus::ACTIVE);
}

TEST_CASE("scripted failures clear after the budget") {
    auto clock = std::make_shared<VirtualClock>(0);
    MockCircuitProvider provider(clock, 0);
    provider.add_site("site-a", {"a-ep-01"});
    provider.add_site("site-b", {"b-ep-01"});
    provider.fail_next(2);
    CircuitRequest req{"a-ep-01", "b-ep-01", "site-a", "site-b", 50};
    CHECK_THROWS_AS(provider.create(req, "r1"), ProviderError);
    CHECK_THROWS_AS(provider.create(req, "r1"), ProviderError);
    CHECK_NOTHROW(provider.create(req, "r1"));  // third attempt succeeds
    CHECK(provider.create_calls_for("r1") == 3);
}

TEST_CASE("transfer tool records concurrency and job stats") {
    MockTransferTool tool;
    tool.set_active("site-a", "site-b", 42);
    CHECK(tool.active_for("site-a", "site-b") == 42);
    CHECK(tool.active_for("site-b", "site-a") == 42);  // unordered pair

    CHECK_THROWS_AS(tool.job_stats("ghost"), UnknownRule);
    tool.register_rule("r1");
    auto fresh = tool.job_stats("r1");
    CHECK(fresh.finished == 0);
    CHECK(fresh.failed == 0);
    CHECK(fresh.retried == 0);

    tool.inject_job_failures("r1", 2);
    CHECK(tool.job_stats("r1").failed == 2);

    tool.record_progress("r1", 7, 1.5);
    CHECK(tool.job_stats("r1").finished == 7);

    tool.fail_next(1);
    CHECK_THROWS_AS(tool.set_active("site-a", "site-b", 10), ToolUnavailable);
}

TEST_CASE("metrics source reports rates and NoData") {
    MockMetricsSource metrics(7, 0.0);
    CHECK_FALSE(metrics.throughput("ghost-ep", 60).has_data);  // NoData, not an error

    metrics.set_rate("a-ep-01", 80.0);
    auto sample = metrics.throughput("a-ep-01", 60);
    CHECK(sample.has_data);
    CHECK(sample.gbps == 80.0);

    metrics.set_rate("a-ep-01", 0.0);
    CHECK(metrics.throughput("a-ep-01", 60).gbps == 0.0);

    metrics.fail_next(1);
    CHECK_FALSE(metrics.throughput("a-ep-01", 60).has_data);
    CHECK(metrics.throughput("a-ep-01", 60).has_data);
}

TEST_CASE("metrics noise is seeded and deterministic") {
    MockMetricsSource a(42, 0.1), b(42, 0.1);
    a.set_rate("ep", 100.0);
    b.set_rate("ep", 100.0);
    for (int i = 0; i < 10; ++i) {
        auto sa = a.throughput("ep", 60);
        auto sb = b.throughput("ep", 60);
        CHECK(sa.gbps == sb.gbps);
        CHECK(sa.gbps >= 90.0);
        CHECK(sa.gbps <= 110.0);
    }
}
