#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bpo/bottleneck.hpp"
#include "bpo/dqn.hpp"
#include "bpo/sim_engine.hpp"

namespace bpo::bench {

struct BenchScenario {
    std::string label;
    std::string setup_error; // set when the scenario could not be loaded
    model::ProcessDefinition def;
    double arrival_rate = 0.0;
    double horizon = 0.0;
    double scale = 0.0; // cases/day for the regression x axis
    int max_in_flight = 500;
    sim::PolicyKind baseline = sim::PolicyKind::Fifo;
    sim::PolicyKind optimized = sim::PolicyKind::Spt;
    std::optional<dqn::SchedulerPolicy> learned; // when optimized == Learned
    std::vector<std::uint64_t> seeds;
};

struct BenchMatrix {
    std::vector<BenchScenario> scenarios;
    int repetitions = 5; // default seed count when a scenario lists none

    // Scenario models come either inline (`process`) or from `model` paths
    // resolved relative to `base_dir`.
    static BenchMatrix from_json(const std::string& text, const std::string& base_dir);
};

struct ScenarioResult {
    std::string label;
    double scale = 0.0;
    bool failed = false;
    std::string error;
    sim::KpiReport baseline_mean;
    sim::KpiReport optimized_mean;
    sim::ImprovementReport improvement;
    double wall_seconds = 0.0;
};

struct BenchReport {
    std::vector<ScenarioResult> scenarios;
    std::optional<opt::RegressionResult> regression;
    double total_wall_seconds = 0.0;

    std::string to_json() const;
    std::string improvements_csv() const; // scale,improvement_pct
    std::string summary_text() const;
};

BenchReport run_bench(const BenchMatrix& matrix);

// Runs the matrix and writes bench_report.json, improvements.csv,
// regression.json and summary.txt into out_dir.
BenchReport run_bench_to_dir(const BenchMatrix& matrix, const std::string& out_dir);

} // namespace bpo::bench
