#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include "flowdirector/errors.hpp"
#include "flowdirector/model/store.hpp"
#include "test_util.hpp"

using namespace flowdirector;
using model::Circuit;
using model::CircuitStatus;
using model::RuleState;
using model::Store;
using model::TransferRule;
using testutil::TempFile;

namespace {

TransferRule sample_rule(const std::string& id, int priority = 3) {
    TransferRule r;
    r.rule_id = id;
    r.src = "site-a";
    r.dst = "site-b";
    r.priority = priority;
    r.total_bytes = 1'000'000'000;
    return r;
}

std::unique_ptr<Store> open_with_endpoints(const std::string& path, ClockPtr clock) {
    auto store = Store::open(path, clock);
    for (const char* ep : {"a-ep-01", "a-ep-02"}) store->register_endpoint("site-a", ep);
    for (const char* ep : {"b-ep-01", "b-ep-02"}) store->register_endpoint("site-b", ep);
    return store;
}

// Drive a rule through the live pipeline up to PROVISIONED.
void provision(Store& store, const std::string& id) {
    store.insert_rule(sample_rule(id));
    store.assign_endpoints(id, "a-ep-01", "b-ep-01");
    store.stage_allocation(id, RuleState::ALLOCATED, 100, RuleState::DECIDED);
    store.attach_circuit(id, "circuit-1");
    Circuit c;
    c.circuit_id = "circuit-1";
    c.src_endpoint = "a-ep-01";
    c.dst_endpoint = "b-ep-01";
    c.src_site = "site-a";
    c.dst_site = "site-b";
    c.bandwidth_gbps = 100;
    c.status = CircuitStatus::ACTIVE;
    store.put_circuit(c);
    store.transition(id, RuleState::PROVISIONING, RuleState::PROVISIONED);
}

}  // namespace

TEST_CASE("rules survive a close and reopen unchanged") {
    TempFile tmp("reopen");
    auto clock = std::make_shared<VirtualClock>(1000);
    std::string before;
    {
        auto store = Store::open(tmp.path, clock);
        store->insert_rule(sample_rule("r1", 1));
        store->insert_rule(sample_rule("r2", 5));
        store->insert_rule(sample_rule("r3", 9));
        store->transition("r2", RuleState::INITIALIZED, RuleState::CANCELLED);
        before = store->snapshot();
    }
    auto store = Store::open(tmp.path, clock);
    CHECK(store->snapshot() == before);
    auto rules = store->rules();
    REQUIRE(rules.size() == 3);
    CHECK(rules[0].state == RuleState::INITIALIZED);
    CHECK(rules[1].state == RuleState::CANCELLED);
    CHECK(rules[2].priority == 9);
}

TEST_CASE("empty store reopens empty") {
    TempFile tmp("empty");
    auto clock = std::make_shared<VirtualClock>(0);
    { Store::open(tmp.path, clock); }
    auto store = Store::open(tmp.path, clock);
    CHECK(store->rules().empty());
    CHECK(store->circuits().empty());
}

TEST_CASE("recovery is idempotent") {
    TempFile tmp("idem");
    auto clock = std::make_shared<VirtualClock>(0);
    std::string first, second;
    {
        auto store = Store::open(tmp.path, clock);
        store->insert_rule(sample_rule("r1"));
        first = store->snapshot();
    }
    { second = Store::open(tmp.path, clock)->snapshot(); }
    CHECK(first == second);
    CHECK(Store::open(tmp.path, clock)->snapshot() == second);
}

TEST_CASE("a crash mid-transaction leaves only the committed state") {
    TempFile tmp("crash");
    TempFile copy("crash-copy");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    store->insert_rule(sample_rule("r1"));
    std::string committed = store->snapshot();

    // The hook fires inside the endpoint-assignment transaction, after its
    // statements ran but before COMMIT; the file copy is what a power cut
    // would have left on disk.
    store->set_pre_commit_hook([&] {
        std::filesystem::copy_file(tmp.path, copy.path,
                                   std::filesystem::copy_options::overwrite_existing);
        if (std::filesystem::exists(tmp.path + "-journal"))
            std::filesystem::copy_file(tmp.path + "-journal", copy.path + "-journal",
                                       std::filesystem::copy_options::overwrite_existing);
        throw std::runtime_error("injected crash");
    });
    CHECK_THROWS(store->assign_endpoints("r1", "a-ep-01", "b-ep-01"));
    store->set_pre_commit_hook(nullptr);

    auto recovered = Store::open(copy.path, clock);
    CHECK(recovered->snapshot() == committed);
    auto r1 = recovered->rule("r1");
    REQUIRE(r1.has_value());
    CHECK(r1->state == RuleState::INITIALIZED);
    for (const model::Endpoint& ep : recovered->all_endpoints()) CHECK_FALSE(ep.in_use_by);
}

TEST_CASE("garbage files are refused, not reinitialized") {
    TempFile tmp("garbage");
    {
        std::ofstream out(tmp.path, std::ios::binary);
        out << "this is not a store file, do not touch it";
    }
    auto clock = std::make_shared<VirtualClock>(0);
    CHECK_THROWS_AS(Store::open(tmp.path, clock), StorageCorrupt);
    // the file must be byte-for-byte untouched
    std::ifstream in(tmp.path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "this is not a store file, do not touch it");
}

TEST_CASE("plain transitions follow the state machine") {
    TempFile tmp("transitions");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    store->insert_rule(sample_rule("r1"));

    auto allocated = store->assign_endpoints("r1", "a-ep-01", "b-ep-01");
    CHECK(allocated.state == RuleState::ALLOCATED);
    CHECK(allocated.src_endpoint == "a-ep-01");

    CHECK_THROWS_AS(store->transition("r1", RuleState::FINISHED, RuleState::PROVISIONED),
                    IllegalTransition);
    CHECK_THROWS_AS(store->transition("r1", RuleState::ALLOCATED, RuleState::PROVISIONED),
                    IllegalTransition);
    CHECK_THROWS_AS(store->transition("missing", RuleState::INITIALIZED, RuleState::CANCELLED),
                    UnknownRule);

    // stale expectation loses the CAS
    CHECK_THROWS_AS(store->transition("r1", RuleState::INITIALIZED, RuleState::ALLOCATED),
                    ConflictError);
}

TEST_CASE("modify round-trip keeps PROVISIONED fields intact") {
    TempFile tmp("modify");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    provision(*store, "r1");

    auto modifying =
        store->stage_allocation("r1", RuleState::PROVISIONED, 50, RuleState::MODIFYING);
    CHECK(modifying.state == RuleState::MODIFYING);
    CHECK(modifying.allocated_gbps == 50);
    auto back = store->transition("r1", RuleState::MODIFYING, RuleState::PROVISIONED);
    CHECK(back.state == RuleState::PROVISIONED);
    CHECK(back.allocated_gbps == 50);
    CHECK(back.src_endpoint == "a-ep-01");
    CHECK(back.circuit_id == "circuit-1");
}

TEST_CASE("terminal transitions release endpoints to the circuit") {
    TempFile tmp("release");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    provision(*store, "r1");

    auto finished = store->transition("r1", RuleState::PROVISIONED, RuleState::FINISHED);
    CHECK_FALSE(finished.allocated_gbps);
    CHECK_FALSE(finished.src_endpoint);
    CHECK(finished.circuit_id == "circuit-1");  // kept for the stale-circuit path

    for (const model::Endpoint& ep : store->all_endpoints()) {
        CHECK_FALSE(ep.in_use_by);
        if (ep.name == "a-ep-01" || ep.name == "b-ep-01")
            CHECK(ep.held_by_circuit == "circuit-1");
        else
            CHECK_FALSE(ep.held_by_circuit);
    }

    store->release_circuit_hold("circuit-1");
    for (const model::Endpoint& ep : store->all_endpoints()) CHECK_FALSE(ep.held_by_circuit);
}

TEST_CASE("failed retry wipes the slate") {
    TempFile tmp("retry");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    provision(*store, "r1");
    store->set_attempts("r1", 3);
    store->transition("r1", RuleState::PROVISIONED, RuleState::FAILED);

    auto retried = store->transition("r1", RuleState::FAILED, RuleState::INITIALIZED);
    CHECK(retried.state == RuleState::INITIALIZED);
    CHECK_FALSE(retried.circuit_id);
    CHECK_FALSE(retried.src_endpoint);
    CHECK(retried.attempts == 0);
}

TEST_CASE("endpoint exclusivity: one owner at a time") {
    TempFile tmp("exclusive");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    store->insert_rule(sample_rule("r1"));
    store->insert_rule(sample_rule("r2"));
    store->assign_endpoints("r1", "a-ep-01", "b-ep-01");
    CHECK_THROWS_AS(store->assign_endpoints("r2", "a-ep-01", "b-ep-02"), EndpointBusy);

    // at every committed state no endpoint belongs to two rules
    std::map<std::string, int> owners;
    for (const model::Endpoint& ep : store->all_endpoints())
        if (ep.in_use_by) owners[*ep.in_use_by]++;
    CHECK(owners["r1"] == 2);
    CHECK(owners.count("r2") == 0);
}

TEST_CASE("two contenders, exactly one CAS winner") {
    TempFile tmp("race");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    store->insert_rule(sample_rule("r1"));

    std::atomic<int> wins{0}, conflicts{0};
    auto contender = [&] {
        try {
            store->transition("r1", RuleState::INITIALIZED, RuleState::CANCELLED);
            ++wins;
        } catch (const ConflictError&) {
            ++conflicts;
        }
    };
    std::thread t1(contender), t2(contender);
    t1.join();
    t2.join();
    CHECK(wins == 1);
    CHECK(conflicts == 1);
    CHECK(store->rule("r1")->state == RuleState::CANCELLED);
}

TEST_CASE("two rules racing for the last endpoint") {
    TempFile tmp("ep-race");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = Store::open(tmp.path, clock);
    store->register_endpoint("site-a", "a-ep-01");
    store->register_endpoint("site-b", "b-ep-01");
    store->insert_rule(sample_rule("r1"));
    store->insert_rule(sample_rule("r2"));

    std::atomic<int> wins{0}, busy{0};
    auto contender = [&](const char* id) {
        try {
            store->assign_endpoints(id, "a-ep-01", "b-ep-01");
            ++wins;
        } catch (const EndpointBusy&) {
            ++busy;
        }
    };
    std::thread t1(contender, "r1"), t2(contender, "r2");
    t1.join();
    t2.join();
    CHECK(wins == 1);
    CHECK(busy == 1);
}

TEST_CASE("priority changes flag live rules for re-decision") {
    TempFile tmp("priority");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    provision(*store, "r1");
    store->insert_rule(sample_rule("r2"));

    auto live = store->set_priority("r1", 8);
    CHECK(live.priority == 8);
    CHECK(live.redecide);

    auto idle = store->set_priority("r2", 8);
    CHECK(idle.priority == 8);
    CHECK_FALSE(idle.redecide);  // nothing staged yet; the pipeline handles it

    store->clear_redecide("r1");
    CHECK_FALSE(store->rule("r1")->redecide);
}

TEST_CASE("samples and reports persist") {
    TempFile tmp("samples");
    auto clock = std::make_shared<VirtualClock>(0);
    auto store = open_with_endpoints(tmp.path, clock);
    provision(*store, "r1");
    for (int i = 0; i < 5; ++i)
        store->append_sample({"r1", 1000 * i, 80.0 + i, 100, false});

    CHECK(store->samples("r1").size() == 5);
    auto last = store->last_samples("r1", 3);
    REQUIRE(last.size() == 3);
    CHECK(last.front().t == 2000);
    CHECK(last.back().observed_gbps == 84.0);

    store->transition("r1", RuleState::PROVISIONED, RuleState::FINISHED);
    CHECK(store->finished_rules_without_report() == std::vector<std::string>{"r1"});
    store->put_report("r1", "{\"verdict\":\"HEALTHY\"}");
    CHECK(store->finished_rules_without_report().empty());
    CHECK(store->report("r1") == "{\"verdict\":\"HEALTHY\"}");
}
