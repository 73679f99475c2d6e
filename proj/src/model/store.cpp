#include "flowdirector/model/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <sstream>

#include "flowdirector/errors.hpp"

namespace flowdirector::model {

namespace {

constexpr int kSchemaVersion = 1;

const char* kSchema = R"sql(
CREATE TABLE meta(key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE rules(
  rule_id TEXT PRIMARY KEY,
  src TEXT NOT NULL,
  dst TEXT NOT NULL,
  priority INTEGER NOT NULL,
  total_bytes INTEGER NOT NULL,
  state TEXT NOT NULL,
  src_endpoint TEXT,
  dst_endpoint TEXT,
  allocated_gbps INTEGER,
  circuit_id TEXT,
  redecide INTEGER NOT NULL DEFAULT 0,
  attempts INTEGER NOT NULL DEFAULT 0,
  created_at INTEGER NOT NULL,
  updated_at INTEGER NOT NULL
);
CREATE TABLE endpoints(
  site TEXT NOT NULL,
  name TEXT NOT NULL,
  in_use_by TEXT,
  held_by_circuit TEXT,
  PRIMARY KEY(site, name)
);
CREATE TABLE circuits(
  circuit_id TEXT PRIMARY KEY,
  src_endpoint TEXT NOT NULL,
  dst_endpoint TEXT NOT NULL,
  src_site TEXT NOT NULL,
  dst_site TEXT NOT NULL,
  bandwidth_gbps INTEGER NOT NULL,
  status TEXT NOT NULL,
  stale_since INTEGER
);
CREATE TABLE samples(
  rule_id TEXT NOT NULL,
  t INTEGER NOT NULL,
  observed_gbps REAL NOT NULL,
  allocated_gbps INTEGER NOT NULL,
  idle_flag INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE reports(rule_id TEXT PRIMARY KEY, doc TEXT NOT NULL);
)sql";

// Thin RAII wrapper for one prepared statement.
class Stmt {
public:
    Stmt(sqlite3* db, const std::string& sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK)
            throw StorageCorrupt(std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
    ~Stmt() { sqlite3_finalize(stmt_); }

    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int idx, std::int64_t v) {
        sqlite3_bind_int64(stmt_, idx, v);
        return *this;
    }
    Stmt& bind(int idx, int v) { return bind(idx, static_cast<std::int64_t>(v)); }
    Stmt& bind(int idx, double v) {
        sqlite3_bind_double(stmt_, idx, v);
        return *this;
    }
    Stmt& bind(int idx, const std::string& v) {
        sqlite3_bind_text(stmt_, idx, v.c_str(), -1, SQLITE_TRANSIENT);
        return *this;
    }
    Stmt& bind_null(int idx) {
        sqlite3_bind_null(stmt_, idx);
        return *this;
    }
    Stmt& bind(int idx, const std::optional<std::string>& v) {
        return v ? bind(idx, *v) : bind_null(idx);
    }
    Stmt& bind(int idx, const std::optional<std::int64_t>& v) {
        return v ? bind(idx, *v) : bind_null(idx);
    }
    Stmt& bind(int idx, const std::optional<int>& v) {
        return v ? bind(idx, static_cast<std::int64_t>(*v)) : bind_null(idx);
    }

    bool step() {
        int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StorageCorrupt(std::string("step failed: ") + sqlite3_errmsg(db_));
    }
    void exec() {
        while (step()) {
        }
    }

    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::int64_t col_int64(int col) const { return sqlite3_column_int64(stmt_, col); }
    double col_double(int col) const { return sqlite3_column_double(stmt_, col); }
    std::string col_text(int col) const {
        const unsigned char* p = sqlite3_column_text(stmt_, col);
        return p ? reinterpret_cast<const char*>(p) : "";
    }
    std::optional<std::string> col_opt_text(int col) const {
        if (is_null(col)) return std::nullopt;
        return col_text(col);
    }
    std::optional<std::int64_t> col_opt_int64(int col) const {
        if (is_null(col)) return std::nullopt;
        return col_int64(col);
    }

private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec_all(sqlite3* db, const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown sqlite error";
        sqlite3_free(err);
        throw StorageCorrupt("sqlite exec failed: " + msg);
    }
}

TransferRule read_rule_row(const Stmt& s) {
    TransferRule r;
    r.rule_id = s.col_text(0);
    r.src = s.col_text(1);
    r.dst = s.col_text(2);
    r.priority = static_cast<int>(s.col_int64(3));
    r.total_bytes = s.col_int64(4);
    r.state = rule_state_from_string(s.col_text(5));
    r.src_endpoint = s.col_opt_text(6);
    r.dst_endpoint = s.col_opt_text(7);
    if (!s.is_null(8)) r.allocated_gbps = static_cast<int>(s.col_int64(8));
    r.circuit_id = s.col_opt_text(9);
    r.redecide = s.col_int64(10) != 0;
    r.attempts = static_cast<int>(s.col_int64(11));
    r.created_at = s.col_int64(12);
    r.updated_at = s.col_int64(13);
    return r;
}

constexpr const char* kRuleColumns =
    "rule_id, src, dst, priority, total_bytes, state, src_endpoint, dst_endpoint, "
    "allocated_gbps, circuit_id, redecide, attempts, created_at, updated_at";

Circuit read_circuit_row(const Stmt& s) {
    Circuit c;
    c.circuit_id = s.col_text(0);
    c.src_endpoint = s.col_text(1);
    c.dst_endpoint = s.col_text(2);
    c.src_site = s.col_text(3);
    c.dst_site = s.col_text(4);
    c.bandwidth_gbps = static_cast<int>(s.col_int64(5));
    c.status = circuit_status_from_string(s.col_text(6));
    c.stale_since = s.col_opt_int64(7);
    return c;
}

constexpr const char* kCircuitColumns =
    "circuit_id, src_endpoint, dst_endpoint, src_site, dst_site, bandwidth_gbps, status, "
    "stale_since";

}  // namespace

// Write transaction guard; rolls back unless commit() ran.
class Store::Txn {
public:
    Txn(Store& store) : store_(store) { exec_all(store.db_, "BEGIN IMMEDIATE"); }
    ~Txn() {
        if (!done_) sqlite3_exec(store_.db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        if (store_.pre_commit_hook_) store_.pre_commit_hook_();
        exec_all(store_.db_, "COMMIT");
        done_ = true;
    }

private:
    Store& store_;
    bool done_ = false;
};

std::unique_ptr<Store> Store::open(const std::string& path, ClockPtr clock) {
    sqlite3* db = nullptr;
    int rc = sqlite3_open_v2(path.c_str(), &db,
                             SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                             nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = db ? sqlite3_errmsg(db) : "cannot open";
        sqlite3_close(db);
        throw StorageCorrupt("cannot open store at " + path + ": " + msg);
    }
    std::unique_ptr<Store> store(new Store(db, std::move(clock)));

    // Probe before touching anything: a non-database file fails here, and we
    // refuse to reinitialize it.
    int tables = 0;
    try {
        Stmt probe(db, "SELECT count(*) FROM sqlite_master WHERE type='table'");
        probe.step();
        tables = static_cast<int>(probe.col_int64(0));
    } catch (const StorageCorrupt&) {
        throw StorageCorrupt("not a valid store file: " + path);
    }

    if (tables == 0) {
        exec_all(db, "BEGIN IMMEDIATE");
        exec_all(db, kSchema);
        Stmt ver(db, "INSERT INTO meta(key, value) VALUES('schema_version', ?1)");
        ver.bind(1, std::to_string(kSchemaVersion)).exec();
        exec_all(db, "COMMIT");
    } else {
        try {
            Stmt ver(db, "SELECT value FROM meta WHERE key = 'schema_version'");
            if (!ver.step()) throw StorageCorrupt("store has no schema version");
            if (ver.col_text(0) != std::to_string(kSchemaVersion))
                throw StorageCorrupt("unsupported store schema version " + ver.col_text(0));
        } catch (const StorageCorrupt&) {
            throw;
        }
    }
    exec_all(db, "PRAGMA foreign_keys = ON");
    return store;
}

Store::Store(sqlite3* db, ClockPtr clock) : db_(db), clock_(std::move(clock)) {}

Store::~Store() { sqlite3_close(db_); }

void Store::set_pre_commit_hook(std::function<void()> hook) {
    std::lock_guard<std::mutex> lk(mutex_);
    pre_commit_hook_ = std::move(hook);
}

// --- endpoints ---

void Store::register_endpoint(const std::string& site, const std::string& name) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_, "INSERT OR IGNORE INTO endpoints(site, name) VALUES(?1, ?2)");
    s.bind(1, site).bind(2, name).exec();
    txn.commit();
}

std::vector<Endpoint> Store::endpoints(const std::string& site) const {
    std::lock_guard<std::mutex> lk(mutex_);
    Stmt s(db_,
           "SELECT site, name, in_use_by, held_by_circuit FROM endpoints WHERE site = ?1 "
           "ORDER BY name");
    s.bind(1, site);
    std::vector<Endpoint> out;
    while (s.step())
        out.push_back({s.col_text(1), s.col_text(0), s.col_opt_text(2), s.col_opt_text(3)});
    return out;
}

std::vector<Endpoint> Store::all_endpoints() const {
    std::lock_guard<std::mutex> lk(mutex_);
    Stmt s(db_,
           "SELECT site, name, in_use_by, held_by_circuit FROM endpoints ORDER BY site, name");
    std::vector<Endpoint> out;
    while (s.step())
        out.push_back({s.col_text(1), s.col_text(0), s.col_opt_text(2), s.col_opt_text(3)});
    return out;
}

// --- rules ---

void Store::insert_rule(TransferRule r) {
    if (r.state != RuleState::INITIALIZED)
        throw IllegalTransition("new rules must start INITIALIZED");
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    r.created_at = clock_->now_ms();
    r.updated_at = r.created_at;
    Stmt s(db_,
           "INSERT INTO rules(rule_id, src, dst, priority, total_bytes, state, created_at, "
           "updated_at) VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)");
    s.bind(1, r.rule_id)
        .bind(2, r.src)
        .bind(3, r.dst)
        .bind(4, r.priority)
        .bind(5, r.total_bytes)
        .bind(6, std::string(to_string(r.state)))
        .bind(7, r.created_at)
        .bind(8, r.updated_at);
    try {
        s.exec();
    } catch (const StorageCorrupt&) {
        throw ConflictError("rule already exists: " + r.rule_id);
    }
    txn.commit();
}

TransferRule Store::get_rule_unlocked(const std::string& id) const {
    Stmt s(db_, std::string("SELECT ") + kRuleColumns + " FROM rules WHERE rule_id = ?1");
    s.bind(1, id);
    if (!s.step()) throw UnknownRule("no such rule: " + id);
    return read_rule_row(s);
}

std::optional<TransferRule> Store::rule(const std::string& id) const {
    std::lock_guard<std::mutex> lk(mutex_);
    try {
        return get_rule_unlocked(id);
    } catch (const UnknownRule&) {
        return std::nullopt;
    }
}

std::vector<TransferRule> Store::rules() const {
    std::lock_guard<std::mutex> lk(mutex_);
    Stmt s(db_, std::string("SELECT ") + kRuleColumns + " FROM rules ORDER BY rule_id");
    std::vector<TransferRule> out;
    while (s.step()) out.push_back(read_rule_row(s));
    return out;
}

std::vector<TransferRule> Store::rules_in(const std::vector<RuleState>& states) const {
    std::vector<TransferRule> out;
    for (const TransferRule& r : rules())
        if (std::find(states.begin(), states.end(), r.state) != states.end()) out.push_back(r);
    return out;
}

TransferRule Store::transition_unlocked(const std::string& id, RuleState expected,
                                        RuleState target, Txn& txn) {
    if (!transition_legal(expected, target))
        throw IllegalTransition(std::string("illegal transition ") + to_string(expected) + " -> " +
                                to_string(target) + " for rule " + id);

    TransferRule before = get_rule_unlocked(id);  // UnknownRule when absent

    const bool drop_allocation = !state_carries_allocation(target);
    const bool drop_endpoints = !state_carries_endpoints(target);
    const bool retry = target == RuleState::INITIALIZED;

    std::string sql = "UPDATE rules SET state = ?1, updated_at = ?2";
    if (drop_allocation) sql += ", allocated_gbps = NULL";
    if (drop_endpoints) sql += ", src_endpoint = NULL, dst_endpoint = NULL";
    if (retry) sql += ", circuit_id = NULL, attempts = 0, redecide = 0";
    sql += " WHERE rule_id = ?3 AND state = ?4";

    Stmt s(db_, sql);
    s.bind(1, std::string(to_string(target)))
        .bind(2, clock_->now_ms())
        .bind(3, id)
        .bind(4, std::string(to_string(expected)));
    s.exec();
    if (sqlite3_changes(db_) == 0)
        throw ConflictError("rule " + id + " is no longer in " + to_string(expected));

    if (drop_endpoints && before.src_endpoint) {
        // Release the rule's hold; a FINISHED rule's circuit keeps the
        // endpoints bound until the circuit is reaped or reused.
        std::optional<std::string> hold =
            (target != RuleState::INITIALIZED) ? before.circuit_id : std::nullopt;
        Stmt rel(db_,
                 "UPDATE endpoints SET in_use_by = NULL, held_by_circuit = "
                 "COALESCE(?1, held_by_circuit) WHERE in_use_by = ?2");
        rel.bind(1, hold).bind(2, id).exec();
    }

    TransferRule after = get_rule_unlocked(id);
    txn.commit();
    return after;
}

TransferRule Store::transition(const std::string& id, RuleState expected, RuleState target) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    return transition_unlocked(id, expected, target, txn);
}

TransferRule Store::set_priority(const std::string& id, int priority) {
    if (priority < 1) throw std::invalid_argument("priority must be >= 1");
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_,
           "UPDATE rules SET priority = ?1, updated_at = ?2, redecide = CASE WHEN state IN "
           "('DECIDED','PROVISIONING','PROVISIONED','MODIFYING') THEN 1 ELSE redecide END "
           "WHERE rule_id = ?3");
    s.bind(1, priority).bind(2, clock_->now_ms()).bind(3, id).exec();
    if (sqlite3_changes(db_) == 0) throw UnknownRule("no such rule: " + id);
    TransferRule after = get_rule_unlocked(id);
    txn.commit();
    return after;
}

void Store::clear_redecide(const std::string& id) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_, "UPDATE rules SET redecide = 0 WHERE rule_id = ?1");
    s.bind(1, id).exec();
    txn.commit();
}

void Store::set_attempts(const std::string& id, int attempts) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_, "UPDATE rules SET attempts = ?1 WHERE rule_id = ?2");
    s.bind(1, attempts).bind(2, id).exec();
    if (sqlite3_changes(db_) == 0) throw UnknownRule("no such rule: " + id);
    txn.commit();
}

TransferRule Store::assign_endpoints(const std::string& id, const std::string& src_ep,
                                     const std::string& dst_ep) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);

    TransferRule r = get_rule_unlocked(id);
    const std::pair<std::string, std::string> wanted[] = {{r.src, src_ep}, {r.dst, dst_ep}};
    for (const auto& [site, ep] : wanted) {
        Stmt chk(db_, "SELECT in_use_by FROM endpoints WHERE site = ?1 AND name = ?2");
        chk.bind(1, site).bind(2, ep);
        if (!chk.step()) throw UnknownSite("endpoint not in inventory: " + site + "/" + ep);
        if (!chk.is_null(0)) throw EndpointBusy("endpoint " + ep + " owned by " + chk.col_text(0));
    }
    for (const auto& [site, ep] : wanted) {
        Stmt claim(db_, "UPDATE endpoints SET in_use_by = ?1 WHERE site = ?2 AND name = ?3");
        claim.bind(1, id).bind(2, site).bind(3, ep).exec();
    }

    Stmt s(db_,
           "UPDATE rules SET state = 'ALLOCATED', src_endpoint = ?1, dst_endpoint = ?2, "
           "updated_at = ?3 WHERE rule_id = ?4 AND state = 'INITIALIZED'");
    s.bind(1, src_ep).bind(2, dst_ep).bind(3, clock_->now_ms()).bind(4, id).exec();
    if (sqlite3_changes(db_) == 0)
        throw ConflictError("rule " + id + " is no longer INITIALIZED");

    TransferRule after = get_rule_unlocked(id);
    txn.commit();
    return after;
}

TransferRule Store::stage_allocation(const std::string& id, RuleState expected, int gbps,
                                     RuleState target) {
    if (gbps < 0) throw std::invalid_argument("allocated bandwidth must be >= 0");
    if (expected != target && !transition_legal(expected, target))
        throw IllegalTransition(std::string("illegal transition ") + to_string(expected) +
                                " -> " + to_string(target));
    if (!state_carries_allocation(target))
        throw IllegalTransition(std::string("cannot stage a bandwidth in state ") +
                                to_string(target));
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    get_rule_unlocked(id);
    Stmt s(db_,
           "UPDATE rules SET state = ?1, allocated_gbps = ?2, redecide = 0, updated_at = ?3 "
           "WHERE rule_id = ?4 AND state = ?5");
    s.bind(1, std::string(to_string(target)))
        .bind(2, gbps)
        .bind(3, clock_->now_ms())
        .bind(4, id)
        .bind(5, std::string(to_string(expected)));
    s.exec();
    if (sqlite3_changes(db_) == 0)
        throw ConflictError("rule " + id + " is no longer in " + to_string(expected));
    TransferRule after = get_rule_unlocked(id);
    txn.commit();
    return after;
}

TransferRule Store::attach_circuit(const std::string& id, const std::string& circuit_id) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    get_rule_unlocked(id);
    Stmt s(db_,
           "UPDATE rules SET state = 'PROVISIONING', circuit_id = ?1, updated_at = ?2 "
           "WHERE rule_id = ?3 AND state = 'DECIDED'");
    s.bind(1, circuit_id).bind(2, clock_->now_ms()).bind(3, id).exec();
    if (sqlite3_changes(db_) == 0) throw ConflictError("rule " + id + " is no longer DECIDED");
    TransferRule after = get_rule_unlocked(id);
    txn.commit();
    return after;
}

// --- circuits ---

void Store::put_circuit(const Circuit& c) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_,
           "INSERT INTO circuits(circuit_id, src_endpoint, dst_endpoint, src_site, dst_site, "
           "bandwidth_gbps, status, stale_since) VALUES(?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8) "
           "ON CONFLICT(circuit_id) DO UPDATE SET bandwidth_gbps = ?6, status = ?7, "
           "stale_since = ?8");
    s.bind(1, c.circuit_id)
        .bind(2, c.src_endpoint)
        .bind(3, c.dst_endpoint)
        .bind(4, c.src_site)
        .bind(5, c.dst_site)
        .bind(6, c.bandwidth_gbps)
        .bind(7, std::string(to_string(c.status)))
        .bind(8, c.stale_since);
    s.exec();
    txn.commit();
}

std::optional<Circuit> Store::circuit(const std::string& id) const {
    std::lock_guard<std::mutex> lk(mutex_);
    Stmt s(db_, std::string("SELECT ") + kCircuitColumns + " FROM circuits WHERE circuit_id = ?1");
    s.bind(1, id);
    if (!s.step()) return std::nullopt;
    return read_circuit_row(s);
}

std::vector<Circuit> Store::circuits() const {
    std::lock_guard<std::mutex> lk(mutex_);
    Stmt s(db_, std::string("SELECT ") + kCircuitColumns + " FROM circuits ORDER BY circuit_id");
    std::vector<Circuit> out;
    while (s.step()) out.push_back(read_circuit_row(s));
    return out;
}

std::vector<Circuit> Store::circuits_in(CircuitStatus status) const {
    std::vector<Circuit> out;
    for (const Circuit& c : circuits())
        if (c.status == status) out.push_back(c);
    return out;
}

void Store::set_circuit(const std::string& id, int bandwidth_gbps, CircuitStatus status,
                        std::optional<std::int64_t> stale_since) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_,
           "UPDATE circuits SET bandwidth_gbps = ?1, status = ?2, stale_since = ?3 "
           "WHERE circuit_id = ?4");
    s.bind(1, bandwidth_gbps).bind(2, std::string(to_string(status))).bind(3, stale_since).bind(4, id);
    s.exec();
    if (sqlite3_changes(db_) == 0) throw UnknownCircuit("no such circuit: " + id);
    txn.commit();
}

void Store::release_circuit_hold(const std::string& circuit_id) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_, "UPDATE endpoints SET held_by_circuit = NULL WHERE held_by_circuit = ?1");
    s.bind(1, circuit_id).exec();
    txn.commit();
}

// --- monitoring ---

void Store::append_sample(const FlowSample& sample) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_,
           "INSERT INTO samples(rule_id, t, observed_gbps, allocated_gbps, idle_flag) "
           "VALUES(?1, ?2, ?3, ?4, ?5)");
    s.bind(1, sample.rule_id)
        .bind(2, sample.t)
        .bind(3, sample.observed_gbps)
        .bind(4, sample.allocated_gbps)
        .bind(5, sample.idle_flag ? 1 : 0);
    s.exec();
    txn.commit();
}

std::vector<FlowSample> Store::samples(const std::string& rule_id) const {
    std::lock_guard<std::mutex> lk(mutex_);
    Stmt s(db_,
           "SELECT rule_id, t, observed_gbps, allocated_gbps, idle_flag FROM samples "
           "WHERE rule_id = ?1 ORDER BY t");
    s.bind(1, rule_id);
    std::vector<FlowSample> out;
    while (s.step())
        out.push_back({s.col_text(0), s.col_int64(1), s.col_double(2),
                       static_cast<int>(s.col_int64(3)), s.col_int64(4) != 0});
    return out;
}

std::vector<FlowSample> Store::last_samples(const std::string& rule_id, int n) const {
    std::vector<FlowSample> all = samples(rule_id);
    if (static_cast<int>(all.size()) <= n) return all;
    return {all.end() - n, all.end()};
}

void Store::put_report(const std::string& rule_id, const std::string& doc) {
    std::lock_guard<std::mutex> lk(mutex_);
    Txn txn(*this);
    Stmt s(db_,
           "INSERT INTO reports(rule_id, doc) VALUES(?1, ?2) "
           "ON CONFLICT(rule_id) DO UPDATE SET doc = ?2");
    s.bind(1, rule_id).bind(2, doc).exec();
    txn.commit();
}

std::optional<std::string> Store::report(const std::string& rule_id) const {
    std::lock_guard<std::mutex> lk(mutex_);
    Stmt s(db_, "SELECT doc FROM reports WHERE rule_id = ?1");
    s.bind(1, rule_id);
    if (!s.step()) return std::nullopt;
    return s.col_text(0);
}

std::vector<std::string> Store::finished_rules_without_report() const {
    std::lock_guard<std::mutex> lk(mutex_);
    Stmt s(db_,
           "SELECT rule_id FROM rules WHERE state = 'FINISHED' AND rule_id NOT IN "
           "(SELECT rule_id FROM reports) ORDER BY rule_id");
    std::vector<std::string> out;
    while (s.step()) out.push_back(s.col_text(0));
    return out;
}

Store::StatusSnapshot Store::status_snapshot() const {
    std::lock_guard<std::mutex> lk(mutex_);
    StatusSnapshot snap;
    {
        Stmt s(db_, std::string("SELECT ") + kRuleColumns +
                        " FROM rules WHERE state NOT IN ('FINISHED','CANCELLED') ORDER BY rule_id");
        while (s.step()) snap.rules.push_back(read_rule_row(s));
    }
    {
        Stmt s(db_,
               std::string("SELECT ") + kCircuitColumns + " FROM circuits ORDER BY circuit_id");
        while (s.step()) snap.circuits.push_back(read_circuit_row(s));
    }
    {
        Stmt s(db_,
               "SELECT site, name, in_use_by, held_by_circuit FROM endpoints ORDER BY site, name");
        while (s.step())
            snap.endpoints.push_back(
                {s.col_text(1), s.col_text(0), s.col_opt_text(2), s.col_opt_text(3)});
    }
    return snap;
}

std::string Store::snapshot() const {
    std::lock_guard<std::mutex> lk(mutex_);
    std::ostringstream out;
    auto dump_rows = [&](const char* title, const std::string& sql, int ncols) {
        out << "== " << title << "\n";
        Stmt s(db_, sql);
        while (s.step()) {
            for (int c = 0; c < ncols; ++c) {
                if (c > 0) out << "|";
                if (s.is_null(c))
                    out << "~";
                else
                    out << s.col_text(c);
            }
            out << "\n";
        }
    };
    dump_rows("rules", std::string("SELECT ") + kRuleColumns + " FROM rules ORDER BY rule_id", 14);
    dump_rows("endpoints",
              "SELECT site, name, in_use_by, held_by_circuit FROM endpoints ORDER BY site, name",
              4);
    dump_rows("circuits",
              std::string("SELECT ") + kCircuitColumns + " FROM circuits ORDER BY circuit_id", 8);
    dump_rows("samples",
              "SELECT rule_id, t, observed_gbps, allocated_gbps, idle_flag FROM samples "
              "ORDER BY rule_id, t",
              5);
    dump_rows("reports", "SELECT rule_id, doc FROM reports ORDER BY rule_id", 2);
    return out.str();
}

}  // namespace flowdirector::model
