#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "bpo/neural.hpp"
#include "bpo/sim_engine.hpp"

namespace bpo::dqn {

using nn::Vec;

// Fixed-length state layout derived from a process definition:
//   queue length per task activity, free capacity and busy fraction per role,
//   normalized clock and in-flight count, the acting role (one-hot), and the
//   first `slots` pending entries of the acting role (activity one-hot,
//   occupied flag, normalized age). The slot block is what lets the Q-network
//   tell apart pending tasks of different types behind one role.
struct EncodingSpec {
    std::vector<std::string> activities; // task activity ids, definition order
    std::vector<std::string> roles;      // pool roles, definition order
    int max_in_flight = 500;
    int slots = 8; // K: action space is Assign(0..K-1) ∪ {Wait}

    static EncodingSpec from_definition(const model::ProcessDefinition& def, int max_in_flight,
                                        int slots);
    int state_dim() const;
    int action_count() const { return slots + 1; }
    int wait_action() const { return slots; }
};

Vec encode_state(const sim::SimView& view, int acting_role,
                 std::span<const sim::PendingTask> pending, const EncodingSpec& spec);

// Valid actions for a decision with `pending_count` queued tasks.
std::vector<std::uint8_t> action_mask(const EncodingSpec& spec, std::size_t pending_count);

// Masked argmax over Q(state, ·); ties break to the lowest action index.
int act_greedy(const nn::Mlp& qnet, const Vec& state, std::span<const std::uint8_t> valid);

struct Transition {
    Vec s;
    int a = 0;
    double r = 0.0;
    Vec s2;
    bool done = false;
    std::vector<std::uint8_t> mask2; // action validity at s2
};

class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::uint64_t seed);
    void push(Transition t);
    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }
    // Uniform without replacement within the batch.
    std::vector<const Transition*> sample(std::size_t batch);
    const Transition& at(std::size_t logical) const; // 0 = oldest

private:
    std::size_t capacity_;
    std::vector<Transition> buffer_; // ring
    std::size_t next_ = 0;
    bool full_ = false;
    Rng rng_;
};

// y_i = r_i                                   for terminal transitions
//     = r_i + γ·Q_target(s2, argmax_a Q_online(s2, a))   otherwise,
// with the argmax restricted to valid actions.
std::vector<double> q_targets_double(std::span<const Transition* const> batch,
                                     const nn::Mlp& online, const nn::Mlp& target, double gamma);

struct TrainConfig {
    double gamma = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_fraction = 0.5; // decay over the first half of the iterations
    int target_sync = 1000;
    int batch_size = 64;
    int iterations = 20000; // environment steps (one per scheduling decision)
    int buffer_capacity = 10000;
    double lr = 0.001;
    std::vector<int> hidden = {64, 64};
    int slots = 8;
    double episode_horizon = 0.0; // 0 → train on the scenario horizon
    // Per-episode multipliers on the Poisson arrival rate, cycled in order.
    // Overload factors give the net data on long-queue states that a decent
    // policy never visits at the nominal load.
    std::vector<double> rate_factors = {1.0};
    // Potential-based shaping: Φ(s) = −shaping·queued/horizon is folded into
    // the stored rewards as r + γΦ(s′) − Φ(s). Policy-invariant; it removes
    // the queue-proportional bulk of the value so the per-action gaps carry
    // the learning signal. 0 disables.
    double shaping = 0.0;
    std::uint64_t seed = 0;

    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
    void check() const;
};

struct SchedulerPolicy {
    EncodingSpec spec;
    nn::Mlp qnet;

    std::string to_checkpoint_json() const;
    static SchedulerPolicy from_checkpoint_json(const std::string& text);
};

// Greedy wrapper satisfying the engine's policy interface.
class LearnedPolicy : public sim::SchedulingPolicy {
public:
    explicit LearnedPolicy(const SchedulerPolicy& policy) : policy_(policy) {}
    std::optional<std::size_t> choose(const sim::SimView& view, int role_idx,
                                      std::span<const sim::PendingTask> pending) override;

private:
    const SchedulerPolicy& policy_;
};

struct EpisodeRow {
    int episode = 0;
    int steps = 0;
    double episode_return = 0.0;
    double mean_cycle_time = 0.0;
    double epsilon = 0.0;
};

struct TrainResult {
    SchedulerPolicy policy;
    std::vector<EpisodeRow> episodes;

    std::string train_log_csv() const; // episode,steps,return,mean_cycle_time,epsilon
};

TrainResult train_scheduler(const model::ProcessDefinition& def,
                            const sim::ScenarioConfig& scenario, const TrainConfig& config);

struct EvalReport {
    std::vector<std::uint64_t> seeds;
    std::map<std::string, sim::KpiReport> mean_kpis;              // per policy name
    std::map<std::string, std::vector<double>> cycle_times;       // per-seed means
    std::map<std::string, sim::ImprovementReport> vs_fifo;

    std::string to_json() const;
};

// Paired comparison: every policy sees identical seeds.
EvalReport evaluate_policy(const model::ProcessDefinition& def,
                           const sim::ScenarioConfig& scenario,
                           const std::vector<sim::PolicyKind>& kinds,
                           const SchedulerPolicy* learned, std::span<const std::uint64_t> seeds);

} // namespace bpo::dqn
