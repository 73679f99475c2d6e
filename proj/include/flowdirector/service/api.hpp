#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "flowdirector/model/store.hpp"
#include "flowdirector/monitor/monitor.hpp"
#include "flowdirector/orchestrator/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace flowdirector::service {

// Read-only REST surface.  Handlers only read committed store state; they
// never call out to adapters, so the endpoint-allocation route stays quick
// no matter what provisioning is doing in the background.
//
//   GET /api/v1/allocation/{rule_id} -> {"source_endpoint","dest_endpoint"}
//       404 unknown rule, 409 known but not yet allocated (caller retries)
//   GET /api/v1/status   -> every non-terminal rule + per-site summary
//   GET /api/v1/reports/{rule_id} -> flow report document, 404 while absent
class ApiServer {
public:
    ApiServer(model::Store& store, monitor::Monitor& monitor,
              std::vector<std::pair<std::string, std::int64_t>> sites);
    ~ApiServer();

    // listen address "host:port"; port 0 picks a free one.  Serves on a
    // background thread until stop().
    void start(const std::string& listen);
    void stop();
    int port() const { return port_; }

    // Handler cores, callable in-process (the CLI and tests use these).
    std::pair<int, std::string> allocation_doc(const std::string& rule_id) const;
    std::string status_doc() const;
    std::pair<int, std::string> report_doc(const std::string& rule_id) const;

private:
    model::Store& store_;
    monitor::Monitor& monitor_;
    std::vector<std::pair<std::string, std::int64_t>> sites_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

// One periodic thread per daemon; the decision daemon also wakes up as soon
// as the ingest daemon commits anything, for prompt priority response.
class DaemonRunner {
public:
    DaemonRunner(orchestrator::Orchestrator& orch, double poll_interval_s);
    ~DaemonRunner();

    void start();
    void stop();

private:
    void loop(int which);

    orchestrator::Orchestrator& orch_;
    double poll_interval_s_;
    std::atomic<bool> stop_{false};
    std::mutex mutex_;
    std::condition_variable wake_decision_;
    bool decision_flag_ = false;
    std::vector<std::thread> threads_;
};

}  // namespace flowdirector::service
