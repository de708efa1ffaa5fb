#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpo/sim_engine.hpp"

namespace bpo::opt {

struct ActivityWait {
    std::string activity;
    double mean_wait = 0.0;
    double share = 0.0; // of total queue time; shares sum to 1 when total > 0
};

struct BottleneckReport {
    std::vector<ActivityWait> ranking; // mean_wait descending, ties by activity id
    std::map<std::string, double> role_utilization;

    std::string to_json() const;
};

BottleneckReport find_bottlenecks(const sim::EventLog& log, const model::ProcessDefinition& def,
                                  double horizon);

struct Recommendation {
    enum class Kind { AddUnit, MoveUnit };
    Kind kind = Kind::AddUnit;
    std::string role;      // target role
    std::string from_role; // MoveUnit only
    sim::ImprovementReport predicted;
    double cost_delta = 0.0; // currency per time unit

    std::string label() const;
};

std::string recommendations_to_json(const BottleneckReport& report,
                                    std::span<const Recommendation> recs);

// Candidate pool edits (AddUnit to the top-3 bottleneck roles within budget,
// MoveUnit from the least-utilized role to each top-3) are re-simulated on the
// given seeds and kept when they improve mean cycle time.
std::vector<Recommendation> recommend(const model::ProcessDefinition& def,
                                      const sim::ScenarioConfig& scenario,
                                      const BottleneckReport& report, int budget,
                                      std::span<const std::uint64_t> seeds);

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::int64_t n = 0;

    std::string to_json() const;
};

// Ordinary least squares of improvement on scale; R² = 1 − SS_res/SS_tot.
RegressionResult regress_improvement(std::span<const std::pair<double, double>> points);

} // namespace bpo::opt
