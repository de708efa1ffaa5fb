#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bpo/event_log.hpp"
#include "bpo/process_model.hpp"

namespace bpo::sim {

enum class PolicyKind { Fifo, Random, Spt, Learned };

const char* to_string(PolicyKind kind);
std::optional<PolicyKind> policy_kind_from_string(const std::string& s);

struct ScenarioConfig {
    std::optional<double> arrival_rate; // Poisson when set
    std::vector<double> arrivals;       // explicit arrival times otherwise
    double horizon = 0.0;
    std::uint64_t seed = 0;
    int max_in_flight = 500;
    PolicyKind policy = PolicyKind::Fifo;

    void check() const; // throws Error{Config}
    std::string to_json() const;
    static ScenarioConfig from_json(const std::string& text);
};

struct PendingTask {
    double enqueue_time = 0.0;
    std::int64_t case_id = 0;
    int node_idx = 0;
    int visit = 0; // per (case, node) visit counter, keys the duration stream
};

// Snapshot handed to scheduling policies at every decision instant.
struct SimView {
    double clock = 0.0;
    double horizon = 0.0;
    double wait_integral = 0.0; // ∫ queued-task count dt over all roles
    int in_flight = 0;
    int max_in_flight = 0;
    std::span<const int> queue_len;     // per task activity, def.task_node_indexes() order
    std::span<const int> role_free;     // per pool, definition order
    std::span<const int> role_capacity; // per pool
    std::span<const double> role_wait_integral; // ∫ queued dt per pool
    const model::ProcessDefinition* def = nullptr;
};

// Invoked once per free unit whenever a unit frees up or a task is enqueued.
// Returning nullopt leaves the unit idle until the next decision instant.
class SchedulingPolicy {
public:
    virtual ~SchedulingPolicy() = default;
    virtual std::optional<std::size_t> choose(const SimView& view, int role_idx,
                                              std::span<const PendingTask> pending) = 0;
    virtual void episode_finished(const SimView& /*final_view*/) {}
};

std::unique_ptr<SchedulingPolicy> make_builtin_policy(PolicyKind kind,
                                                      const model::ProcessDefinition& def,
                                                      std::uint64_t seed);

struct KpiReport {
    std::int64_t case_count = 0;
    std::int64_t arrivals = 0;
    std::int64_t rejected = 0;
    std::int64_t in_flight = 0;
    double mean_cycle_time = 0.0;
    double median_cycle_time = 0.0;
    double p95_cycle_time = 0.0;
    double throughput = 0.0;
    double overall_utilization = 0.0; // Σ busy / (Σ capacity · horizon)
    double total_cost = 0.0;
    std::map<std::string, double> utilization; // role → fraction
    std::map<std::string, double> mean_wait;   // activity → time units

    std::string to_json() const;
    static KpiReport from_json(const std::string& text);
};

struct ImprovementReport {
    // Percentage deltas, positive = improvement; absent when the baseline
    // indicator is zero (undefined delta).
    std::optional<double> cycle_time_pct;
    std::optional<double> utilization_pct;
    std::optional<double> cost_pct;

    std::string to_json() const;
    static ImprovementReport from_json(const std::string& text);
};

struct SimResult {
    EventLog log;
    KpiReport kpis;
};

// Token-game execution over the resource pools. Requires validate(def) empty.
// `external_policy` supplies the Learned policy (or a training adapter); the
// built-in kinds are constructed internally from the scenario.
SimResult run_simulation(const model::ProcessDefinition& def, const ScenarioConfig& scenario,
                         SchedulingPolicy* external_policy = nullptr);

KpiReport compute_kpis(const EventLog& log, const model::ProcessDefinition& def, double horizon);

ImprovementReport compare_runs(const KpiReport& baseline, const KpiReport& optimized);

// Nearest-rank percentile: smallest sample value whose rank >= ceil(p*n).
double nearest_rank(std::vector<double> values, double p);

} // namespace bpo::sim
