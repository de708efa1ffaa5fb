#include "bpo/load_test.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bpo/rng.hpp"
#include "bpo/sim_engine.hpp"

namespace bpo::svc {

using nlohmann::json;
using nlohmann::ordered_json;

std::string LoadTestConfig::to_json() const {
    ordered_json j;
    j["base_url"] = base_url;
    j["concurrency"] = concurrency;
    j["duration_seconds"] = duration_seconds;
    j["seed"] = seed;
    ordered_json eps = ordered_json::array();
    for (const auto& [path, weight] : endpoints) {
        ordered_json e;
        e["path"] = path;
        e["weight"] = weight;
        eps.push_back(std::move(e));
    }
    j["endpoints"] = std::move(eps);
    return j.dump();
}

LoadTestConfig LoadTestConfig::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Config, "ConfigError: load-test config must be a JSON object");
    LoadTestConfig c;
    c.base_url = j.value("base_url", c.base_url);
    c.concurrency = j.value("concurrency", c.concurrency);
    c.duration_seconds = j.value("duration_seconds", c.duration_seconds);
    c.seed = j.value("seed", c.seed);
    if (j.contains("endpoints")) {
        c.endpoints.clear();
        for (const auto& e : j["endpoints"])
            c.endpoints.push_back({e.at("path").get<std::string>(), e.value("weight", 1.0)});
    }
    if (c.concurrency < 1 || !(c.duration_seconds > 0.0) || c.endpoints.empty())
        fail(ErrorCode::Config, "ConfigError: load-test config out of range");
    return c;
}

std::string ReliabilityReport::to_json() const {
    ordered_json j;
    j["requests"] = requests;
    j["errors"] = errors;
    j["error_rate"] = error_rate;
    j["availability"] = availability;
    j["probes"] = probes;
    j["latency_p50_ms"] = p50_ms;
    j["latency_p95_ms"] = p95_ms;
    j["latency_p99_ms"] = p99_ms;
    j["latency_max_ms"] = max_ms;
    j["duration_seconds"] = duration_seconds;
    j["concurrency"] = concurrency;
    return j.dump(2) + "\n";
}

ReliabilityReport load_test(const LoadTestConfig& config) {
    using clock = std::chrono::steady_clock;

    {
        httplib::Client probe(config.base_url);
        probe.set_connection_timeout(2, 0);
        probe.set_read_timeout(5, 0);
        const auto res = probe.Get(config.endpoints.front().first);
        if (!res) fail(ErrorCode::Io, "TargetUnreachable: " + config.base_url);
    }

    std::vector<double> weights;
    for (const auto& [path, weight] : config.endpoints) weights.push_back(weight);

    const auto deadline =
        clock::now() + std::chrono::duration_cast<clock::duration>(
                           std::chrono::duration<double>(config.duration_seconds));

    struct WorkerStats {
        std::vector<double> latencies_ms;
        std::int64_t requests = 0;
        std::int64_t errors = 0;
    };
    std::vector<WorkerStats> stats(static_cast<std::size_t>(config.concurrency));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(config.concurrency));

    for (int w = 0; w < config.concurrency; ++w) {
        threads.emplace_back([&, w] {
            WorkerStats& mine = stats[static_cast<std::size_t>(w)];
            Rng rng(Rng::mix(config.seed, static_cast<std::uint64_t>(w) + 1));
            httplib::Client cli(config.base_url);
            cli.set_connection_timeout(5, 0);
            cli.set_read_timeout(20, 0);
            cli.set_keep_alive(true);
            while (clock::now() < deadline) {
                const auto& path =
                    config.endpoints[rng.pick_weighted(weights)].first;
                const auto t0 = clock::now();
                const auto res = cli.Get(path);
                const auto t1 = clock::now();
                mine.requests += 1;
                if (!res || res->status >= 400) mine.errors += 1;
                if (res)
                    mine.latencies_ms.push_back(
                        std::chrono::duration<double, std::milli>(t1 - t0).count());
            }
        });
    }

    // Availability probe once per second with its own connection.
    std::int64_t probes = 0, probe_ok = 0;
    {
        httplib::Client prober(config.base_url);
        prober.set_connection_timeout(1, 0);
        prober.set_read_timeout(1, 0);
        while (clock::now() < deadline) {
            const auto res = prober.Get("/health");
            ++probes;
            if (res && res->status == 200) ++probe_ok;
            const auto next = clock::now() + std::chrono::seconds(1);
            if (next >= deadline) break;
            std::this_thread::sleep_until(next);
        }
    }

    for (auto& t : threads) t.join();

    ReliabilityReport report;
    report.concurrency = config.concurrency;
    report.duration_seconds = config.duration_seconds;
    std::vector<double> all;
    for (const auto& s : stats) {
        report.requests += s.requests;
        report.errors += s.errors;
        all.insert(all.end(), s.latencies_ms.begin(), s.latencies_ms.end());
    }
    report.error_rate =
        report.requests > 0 ? static_cast<double>(report.errors) / static_cast<double>(report.requests)
                            : 0.0;
    report.probes = probes;
    report.availability =
        probes > 0 ? static_cast<double>(probe_ok) / static_cast<double>(probes) : 0.0;
    if (!all.empty()) {
        report.p50_ms = sim::nearest_rank(all, 0.50);
        report.p95_ms = sim::nearest_rank(all, 0.95);
        report.p99_ms = sim::nearest_rank(all, 0.99);
        report.max_ms = *std::max_element(all.begin(), all.end());
    }
    return report;
}

} // namespace bpo::svc
