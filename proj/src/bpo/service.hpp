#pragma once

#include <memory>
#include <string>

#include "bpo/common.hpp"

namespace bpo::svc {

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080; // 0 → pick any free port
    std::string data_dir = "bpo-data";
    int http_threads = 128;
    int job_workers = 2;

    std::string to_json() const;
    static ServerConfig from_json(const std::string& text);
};

// JSON-over-HTTP control plane. Long-running work (simulation, scheduler
// training) runs as background jobs persisted under data_dir/jobs/<id>/;
// request handling never blocks on them.
//
//   GET  /health
//   POST /processes                GET /processes/{id}
//   POST /simulations → job        GET /simulations/{id}/kpis | /log
//   GET  /jobs/{id}
//   POST /quality/assess
//   POST /anomaly/score
//   POST /scheduler/train → job    POST /scheduler/evaluate
class Server {
public:
    explicit Server(ServerConfig config);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    void start(); // throws Error{Io} on bind failure
    void stop();  // graceful; joins workers
    int port() const;
    const ServerConfig& config() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace bpo::svc
