#include "bpo/bench.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bpo::bench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << content;
}

sim::PolicyKind parse_policy(const json& j, const char* key, sim::PolicyKind fallback) {
    if (!j.contains(key)) return fallback;
    const auto s = j.at(key).get<std::string>();
    const auto kind = sim::policy_kind_from_string(s);
    if (!kind) fail(ErrorCode::Config, "ConfigError: unknown policy '" + s + "'");
    return *kind;
}

} // namespace

BenchMatrix BenchMatrix::from_json(const std::string& text, const std::string& base_dir) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Config, "ConfigError: bench matrix must be a JSON object");

    BenchMatrix matrix;
    matrix.repetitions = j.value("repetitions", 5);
    if (matrix.repetitions < 1)
        fail(ErrorCode::Config, "ConfigError: repetitions must be >= 1");
    if (!j.contains("scenarios") || !j["scenarios"].is_array() || j["scenarios"].empty())
        fail(ErrorCode::Config, "ConfigError: bench matrix needs at least one scenario");

    for (const auto& js : j["scenarios"]) {
        BenchScenario sc;
        sc.label = js.value("label", "scenario-" + std::to_string(matrix.scenarios.size()));
        try {
        if (js.contains("process")) {
            sc.def = model::parse_process(js["process"].dump());
        } else if (js.contains("model")) {
            std::filesystem::path p = js["model"].get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
            sc.def = model::parse_process(read_file(p));
        } else {
            fail(ErrorCode::Config,
                 "ConfigError: scenario '" + sc.label + "' needs 'process' or 'model'");
        }
        sc.arrival_rate = js.value("arrival_rate", 0.0);
        sc.horizon = js.value("horizon", 0.0);
        if (!(sc.arrival_rate > 0.0) || !(sc.horizon > 0.0))
            fail(ErrorCode::Config,
                 "ConfigError: scenario '" + sc.label + "' needs arrival_rate > 0 and horizon > 0");
        // Desk-scale mapping of Table-2 style daily counts: one day ≈ 1000 time units.
        sc.scale = js.value("scale", sc.arrival_rate * 1000.0);
        sc.max_in_flight = js.value("max_in_flight", 500);
        sc.baseline = parse_policy(js, "baseline_policy", sim::PolicyKind::Fifo);
        sc.optimized = parse_policy(js, "optimized_policy", sim::PolicyKind::Spt);
        if (sc.optimized == sim::PolicyKind::Learned || sc.baseline == sim::PolicyKind::Learned) {
            if (!js.contains("policy_checkpoint"))
                fail(ErrorCode::Config, "ConfigError: scenario '" + sc.label +
                                            "' uses a learned policy without policy_checkpoint");
            std::filesystem::path p = js["policy_checkpoint"].get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
            sc.learned = dqn::SchedulerPolicy::from_checkpoint_json(read_file(p));
        }
        if (js.contains("seeds")) sc.seeds = js["seeds"].get<std::vector<std::uint64_t>>();
        if (sc.seeds.empty())
            for (int i = 0; i < matrix.repetitions; ++i)
                sc.seeds.push_back(static_cast<std::uint64_t>(i + 1));
        } catch (const std::exception& e) {
            // fault isolation: a broken scenario fails its own row at run time
            sc.setup_error = e.what();
        }
        matrix.scenarios.push_back(std::move(sc));
    }
    return matrix;
}

namespace {

sim::KpiReport mean_kpis(const std::vector<sim::KpiReport>& reports) {
    sim::KpiReport m;
    const double n = static_cast<double>(reports.size());
    double cases = 0.0;
    for (const auto& r : reports) {
        cases += static_cast<double>(r.case_count);
        m.mean_cycle_time += r.mean_cycle_time;
        m.median_cycle_time += r.median_cycle_time;
        m.p95_cycle_time += r.p95_cycle_time;
        m.throughput += r.throughput;
        m.overall_utilization += r.overall_utilization;
        m.total_cost += r.total_cost;
        m.arrivals += r.arrivals;
        m.rejected += r.rejected;
        m.in_flight += r.in_flight;
        for (const auto& [k, v] : r.utilization) m.utilization[k] += v;
        for (const auto& [k, v] : r.mean_wait) m.mean_wait[k] += v;
    }
    m.case_count = static_cast<std::int64_t>(std::llround(cases / n));
    m.arrivals = static_cast<std::int64_t>(std::llround(static_cast<double>(m.arrivals) / n));
    m.rejected = static_cast<std::int64_t>(std::llround(static_cast<double>(m.rejected) / n));
    m.in_flight = static_cast<std::int64_t>(std::llround(static_cast<double>(m.in_flight) / n));
    m.mean_cycle_time /= n;
    m.median_cycle_time /= n;
    m.p95_cycle_time /= n;
    m.throughput /= n;
    m.overall_utilization /= n;
    m.total_cost /= n;
    for (auto& [k, v] : m.utilization) v /= n;
    for (auto& [k, v] : m.mean_wait) v /= n;
    return m;
}

sim::KpiReport run_policy(const BenchScenario& sc, sim::PolicyKind kind, std::uint64_t seed) {
    sim::ScenarioConfig config;
    config.arrival_rate = sc.arrival_rate;
    config.horizon = sc.horizon;
    config.max_in_flight = sc.max_in_flight;
    config.seed = seed;
    config.policy = kind;
    std::unique_ptr<dqn::LearnedPolicy> wrapper;
    sim::SchedulingPolicy* external = nullptr;
    if (kind == sim::PolicyKind::Learned) {
        wrapper = std::make_unique<dqn::LearnedPolicy>(*sc.learned);
        external = wrapper.get();
    }
    return sim::run_simulation(sc.def, config, external).kpis;
}

} // namespace

BenchReport run_bench(const BenchMatrix& matrix) {
    BenchReport report;
    const auto t_total = std::chrono::steady_clock::now();

    for (const auto& sc : matrix.scenarios) {
        ScenarioResult res;
        res.label = sc.label;
        res.scale = sc.scale;
        const auto t0 = std::chrono::steady_clock::now();
        if (!sc.setup_error.empty()) {
            res.failed = true;
            res.error = sc.setup_error;
            report.scenarios.push_back(std::move(res));
            continue;
        }
        try {
            std::vector<sim::KpiReport> base, opt;
            for (const auto seed : sc.seeds) {
                base.push_back(run_policy(sc, sc.baseline, seed));
                opt.push_back(run_policy(sc, sc.optimized, seed));
            }
            res.baseline_mean = mean_kpis(base);
            res.optimized_mean = mean_kpis(opt);
            res.improvement = sim::compare_runs(res.baseline_mean, res.optimized_mean);
        } catch (const std::exception& e) {
            res.failed = true;
            res.error = e.what();
        }
        res.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.scenarios.push_back(std::move(res));
    }

    std::vector<std::pair<double, double>> points;
    for (const auto& res : report.scenarios)
        if (!res.failed && res.improvement.cycle_time_pct)
            points.push_back({res.scale, *res.improvement.cycle_time_pct});
    if (points.size() >= 2) {
        bool degenerate = true;
        for (const auto& [x, y] : points)
            if (x != points[0].first) degenerate = false;
        if (!degenerate) report.regression = opt::regress_improvement(points);
    }

    report.total_wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_total).count();
    return report;
}

std::string BenchReport::to_json() const {
    ordered_json j;
    ordered_json arr = ordered_json::array();
    for (const auto& s : scenarios) {
        ordered_json e;
        e["label"] = s.label;
        e["scale"] = s.scale;
        e["failed"] = s.failed;
        if (s.failed) {
            e["error"] = s.error;
        } else {
            e["baseline"] = json::parse(s.baseline_mean.to_json());
            e["optimized"] = json::parse(s.optimized_mean.to_json());
            e["improvement"] = json::parse(s.improvement.to_json());
        }
        e["wall_seconds"] = s.wall_seconds;
        arr.push_back(std::move(e));
    }
    j["scenarios"] = std::move(arr);
    j["regression"] = regression ? json::parse(regression->to_json()) : json(nullptr);
    j["total_wall_seconds"] = total_wall_seconds;
    return j.dump(2) + "\n";
}

std::string BenchReport::improvements_csv() const {
    std::string out = "scale,improvement_pct\n";
    char buf[96];
    for (const auto& s : scenarios) {
        if (s.failed || !s.improvement.cycle_time_pct) continue;
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", s.scale, *s.improvement.cycle_time_pct);
        out += buf;
    }
    return out;
}

std::string BenchReport::summary_text() const {
    std::ostringstream out;
    out << "bench: " << scenarios.size() << " scenario(s)\n";
    for (const auto& s : scenarios) {
        out << "  " << s.label << " (scale " << s.scale << "): ";
        if (s.failed) {
            out << "FAILED: " << s.error << "\n";
            continue;
        }
        out << "cycle " << s.baseline_mean.mean_cycle_time << " -> "
            << s.optimized_mean.mean_cycle_time;
        if (s.improvement.cycle_time_pct)
            out << " (" << *s.improvement.cycle_time_pct << "% better)";
        out << ", " << s.wall_seconds << "s\n";
    }
    if (regression)
        out << "  regression: slope " << regression->slope << ", intercept "
            << regression->intercept << ", R^2 " << regression->r_squared << "\n";
    out << "  total " << total_wall_seconds << "s\n";
    return out.str();
}

BenchReport run_bench_to_dir(const BenchMatrix& matrix, const std::string& out_dir) {
    const auto report = run_bench(matrix);
    std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / "bench_report.json", report.to_json());
    write_file(dir / "improvements.csv", report.improvements_csv());
    write_file(dir / "regression.json",
               report.regression ? report.regression->to_json() : std::string("null\n"));
    write_file(dir / "summary.txt", report.summary_text());
    return report;
}

} // namespace bpo::bench
