#include "bpo/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bpo::dqn {

using nlohmann::json;
using nlohmann::ordered_json;

EncodingSpec EncodingSpec::from_definition(const model::ProcessDefinition& def, int max_in_flight,
                                           int slots) {
    EncodingSpec spec;
    for (int ti : def.task_node_indexes()) spec.activities.push_back(def.node(ti).id);
    for (const auto& p : def.pools) spec.roles.push_back(p.role);
    spec.max_in_flight = max_in_flight;
    spec.slots = slots;
    if (spec.activities.empty())
        fail(ErrorCode::Config, "ConfigError: definition has no task activities to schedule");
    return spec;
}

int EncodingSpec::state_dim() const {
    const int n_act = static_cast<int>(activities.size());
    const int n_roles = static_cast<int>(roles.size());
    return n_act + 2 * n_roles + 2 + n_roles + slots * (n_act + 3);
}

Vec encode_state(const sim::SimView& view, int acting_role,
                 std::span<const sim::PendingTask> pending, const EncodingSpec& spec) {
    const int n_act = static_cast<int>(spec.activities.size());
    const int n_roles = static_cast<int>(spec.roles.size());
    Vec s;
    s.reserve(static_cast<std::size_t>(spec.state_dim()));

    // Queue counts use a cap tied to the visible window, not max_in_flight:
    // typical queues are a handful of tasks and would vanish against a cap of
    // hundreds. Slot ages use a saturating transform so the feature scale
    // does not depend on the horizon.
    const double cap = static_cast<double>(spec.max_in_flight);
    const double queue_cap = 8.0 * static_cast<double>(spec.slots);
    for (int i = 0; i < n_act; ++i)
        s.push_back(std::min(
            1.0, static_cast<double>(view.queue_len[static_cast<std::size_t>(i)]) / queue_cap));
    for (int r = 0; r < n_roles; ++r)
        s.push_back(static_cast<double>(view.role_free[static_cast<std::size_t>(r)]) /
                    static_cast<double>(view.role_capacity[static_cast<std::size_t>(r)]));
    for (int r = 0; r < n_roles; ++r) {
        const double c = static_cast<double>(view.role_capacity[static_cast<std::size_t>(r)]);
        s.push_back((c - static_cast<double>(view.role_free[static_cast<std::size_t>(r)])) / c);
    }
    s.push_back(view.horizon > 0.0 ? view.clock / view.horizon : 0.0);
    s.push_back(std::min(1.0, static_cast<double>(view.in_flight) / cap));
    for (int r = 0; r < n_roles; ++r) s.push_back(r == acting_role ? 1.0 : 0.0);

    // Activity position lookup against the view's task ordering: both follow
    // definition order, so queue_len index == spec activity index.
    const auto& def = *view.def;
    const auto task_nodes = def.task_node_indexes();
    for (int k = 0; k < spec.slots; ++k) {
        if (k < static_cast<int>(pending.size())) {
            const int node_idx = pending[static_cast<std::size_t>(k)].node_idx;
            for (std::size_t a = 0; a < task_nodes.size(); ++a)
                s.push_back(task_nodes[a] == node_idx ? 1.0 : 0.0);
            s.push_back(1.0);
            const double age = std::max(0.0, view.clock -
                                                 pending[static_cast<std::size_t>(k)].enqueue_time);
            s.push_back(age / (age + 10.0));
            const double mean_dur = def.node(node_idx).duration->mean_value();
            s.push_back(mean_dur / (mean_dur + 5.0));
        } else {
            for (int a = 0; a < n_act; ++a) s.push_back(0.0);
            s.push_back(0.0);
            s.push_back(0.0);
            s.push_back(0.0);
        }
    }
    return s;
}

std::vector<std::uint8_t> action_mask(const EncodingSpec& spec, std::size_t pending_count) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(spec.action_count()), 0);
    const std::size_t assignable = std::min<std::size_t>(pending_count,
                                                         static_cast<std::size_t>(spec.slots));
    for (std::size_t k = 0; k < assignable; ++k) mask[k] = 1;
    // Work-conserving mask: idling while assignable work is pending is a
    // dominated action here (no preemption, no arrival information), so Wait
    // is only offered when nothing can be assigned.
    if (assignable == 0) mask[static_cast<std::size_t>(spec.wait_action())] = 1;
    return mask;
}

int act_greedy(const nn::Mlp& qnet, const Vec& state, std::span<const std::uint8_t> valid) {
    const Vec q = nn::mlp_forward(qnet, state);
    if (q.size() != valid.size())
        fail(ErrorCode::Runtime, "ShapeMismatch: Q output vs mask size");
    int best = -1;
    double best_q = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < q.size(); ++a) {
        if (!valid[a]) continue;
        if (q[a] > best_q) {
            best_q = q[a];
            best = static_cast<int>(a);
        }
    }
    if (best < 0) fail(ErrorCode::Runtime, "no valid action in mask");
    return best;
}

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(Rng::mix(seed, 0xB0FF)) {
    if (capacity_ == 0) fail(ErrorCode::Config, "ConfigError: replay capacity must be >= 1");
    buffer_.reserve(capacity_);
}

void ReplayBuffer::push(Transition t) {
    if (buffer_.size() < capacity_) {
        buffer_.push_back(std::move(t));
    } else {
        buffer_[next_] = std::move(t);
        full_ = true;
    }
    next_ = (next_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t logical) const {
    if (logical >= buffer_.size()) fail(ErrorCode::Runtime, "replay index out of range");
    if (buffer_.size() < capacity_ && !full_) return buffer_[logical];
    return buffer_[(next_ + logical) % capacity_];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch) {
    if (batch > buffer_.size())
        fail(ErrorCode::Config, "ConfigError: batch_size exceeds buffer size");
    // Partial Fisher-Yates over an index vector.
    std::vector<std::size_t> idx(buffer_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<const Transition*> out;
    out.reserve(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng_.uniform_int(idx.size() - i));
        std::swap(idx[i], idx[j]);
        out.push_back(&buffer_[idx[i]]);
    }
    return out;
}

std::vector<double> q_targets_double(std::span<const Transition* const> batch,
                                     const nn::Mlp& online, const nn::Mlp& target, double gamma) {
    std::vector<double> y;
    y.reserve(batch.size());
    for (const Transition* t : batch) {
        if (t->done) {
            y.push_back(t->r);
            continue;
        }
        const int a_star = act_greedy(online, t->s2, t->mask2);
        const Vec qt = nn::mlp_forward(target, t->s2);
        y.push_back(t->r + gamma * qt[static_cast<std::size_t>(a_star)]);
    }
    return y;
}

// ---------------------------------------------------------------------------
// Config

void TrainConfig::check() const {
    if (!(gamma >= 0.0 && gamma < 1.0))
        fail(ErrorCode::Config, "ConfigError: gamma must lie in [0,1)");
    if (target_sync < 1) fail(ErrorCode::Config, "ConfigError: target_sync must be >= 1");
    if (batch_size < 1) fail(ErrorCode::Config, "ConfigError: batch_size must be >= 1");
    if (iterations < 0) fail(ErrorCode::Config, "ConfigError: iterations must be >= 0");
    if (buffer_capacity < batch_size)
        fail(ErrorCode::Config, "ConfigError: buffer_capacity must be >= batch_size");
    if (!(lr > 0.0)) fail(ErrorCode::Config, "ConfigError: lr must be > 0");
    if (slots < 1) fail(ErrorCode::Config, "ConfigError: slots must be >= 1");
    if (hidden.empty()) fail(ErrorCode::Config, "ConfigError: at least one hidden layer");
    if (rate_factors.empty())
        fail(ErrorCode::Config, "ConfigError: rate_factors must not be empty");
    if (shaping < 0.0) fail(ErrorCode::Config, "ConfigError: shaping must be >= 0");
    for (double f : rate_factors)
        if (!(f > 0.0)) fail(ErrorCode::Config, "ConfigError: rate_factors must be > 0");
    if (!(epsilon_fraction > 0.0 && epsilon_fraction <= 1.0))
        fail(ErrorCode::Config, "ConfigError: epsilon_fraction must lie in (0,1]");
}

std::string TrainConfig::to_json() const {
    ordered_json j;
    j["gamma"] = gamma;
    j["epsilon_start"] = epsilon_start;
    j["epsilon_end"] = epsilon_end;
    j["epsilon_fraction"] = epsilon_fraction;
    j["target_sync"] = target_sync;
    j["batch_size"] = batch_size;
    j["iterations"] = iterations;
    j["buffer_capacity"] = buffer_capacity;
    j["lr"] = lr;
    j["hidden"] = hidden;
    j["slots"] = slots;
    j["episode_horizon"] = episode_horizon;
    j["rate_factors"] = rate_factors;
    j["shaping"] = shaping;
    j["seed"] = seed;
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Config, "ConfigError: train config must be a JSON object");
    TrainConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "gamma") c.gamma = it.value().get<double>();
        else if (k == "epsilon_start") c.epsilon_start = it.value().get<double>();
        else if (k == "epsilon_end") c.epsilon_end = it.value().get<double>();
        else if (k == "epsilon_fraction") c.epsilon_fraction = it.value().get<double>();
        else if (k == "target_sync") c.target_sync = it.value().get<int>();
        else if (k == "batch_size") c.batch_size = it.value().get<int>();
        else if (k == "iterations") c.iterations = it.value().get<int>();
        else if (k == "buffer_capacity") c.buffer_capacity = it.value().get<int>();
        else if (k == "lr") c.lr = it.value().get<double>();
        else if (k == "hidden") c.hidden = it.value().get<std::vector<int>>();
        else if (k == "slots") c.slots = it.value().get<int>();
        else if (k == "episode_horizon") c.episode_horizon = it.value().get<double>();
        else if (k == "rate_factors") c.rate_factors = it.value().get<std::vector<double>>();
        else if (k == "shaping") c.shaping = it.value().get<double>();
        else if (k == "seed") c.seed = it.value().get<std::uint64_t>();
        else fail(ErrorCode::Config, "ConfigError: unknown train config key '" + k + "'");
    }
    c.check();
    return c;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string SchedulerPolicy::to_checkpoint_json() const {
    ordered_json j;
    j["format_version"] = 1;
    j["kind"] = "policy";
    ordered_json enc;
    enc["activities"] = spec.activities;
    enc["roles"] = spec.roles;
    enc["max_in_flight"] = spec.max_in_flight;
    enc["slots"] = spec.slots;
    j["encoding"] = std::move(enc);
    std::vector<int> sizes;
    sizes.push_back(qnet.layers.front().W.cols);
    for (const auto& l : qnet.layers) sizes.push_back(l.W.rows);
    j["arch"] = {{"sizes", sizes}};
    nn::ParamRegistry reg;
    reg.add_mlp("qnet", const_cast<nn::Mlp&>(qnet));
    j["params"] = reg.to_json();
    return j.dump() + "\n";
}

SchedulerPolicy SchedulerPolicy::from_checkpoint_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Syntax, "SyntaxError: checkpoint must be a JSON object");
    if (j.value("format_version", 0) != 1)
        fail(ErrorCode::Syntax, "SyntaxError: unsupported checkpoint format_version");
    if (j.value("kind", "") != "policy")
        fail(ErrorCode::Syntax, "SyntaxError: checkpoint kind is not 'policy'");
    SchedulerPolicy p;
    try {
        const auto& enc = j.at("encoding");
        p.spec.activities = enc.at("activities").get<std::vector<std::string>>();
        p.spec.roles = enc.at("roles").get<std::vector<std::string>>();
        p.spec.max_in_flight = enc.at("max_in_flight").get<int>();
        p.spec.slots = enc.at("slots").get<int>();
        const auto sizes = j.at("arch").at("sizes").get<std::vector<int>>();
        Rng rng(0);
        p.qnet = nn::make_mlp(sizes, rng);
        nn::ParamRegistry reg;
        reg.add_mlp("qnet", p.qnet);
        reg.from_json(j.at("params"));
    } catch (const json::exception& e) {
        fail(ErrorCode::Syntax, std::string("SyntaxError: policy checkpoint: ") + e.what());
    }
    return p;
}

std::optional<std::size_t> LearnedPolicy::choose(const sim::SimView& view, int role_idx,
                                                 std::span<const sim::PendingTask> pending) {
    if (pending.empty()) return std::nullopt;
    const Vec s = encode_state(view, role_idx, pending, policy_.spec);
    const auto mask = action_mask(policy_.spec, pending.size());
    const int a = act_greedy(policy_.qnet, s, mask);
    if (a == policy_.spec.wait_action()) return std::nullopt;
    return static_cast<std::size_t>(a);
}

// ---------------------------------------------------------------------------
// Training

namespace {

struct Learner {
    const TrainConfig& cfg;
    EncodingSpec spec;
    nn::Mlp online;
    nn::Mlp target;
    nn::Mlp grads;
    nn::ParamRegistry param_reg, grad_reg;
    nn::AdamState adam;
    ReplayBuffer buffer;
    Rng explore_rng;
    int global_step = 0;
    int learn_steps = 0;

    Learner(const TrainConfig& config, const EncodingSpec& enc)
        : cfg(config), spec(enc),
          buffer(static_cast<std::size_t>(config.buffer_capacity), config.seed),
          explore_rng(Rng::mix(config.seed, 0xE9)) {
        std::vector<int> sizes;
        sizes.push_back(spec.state_dim());
        for (int h : cfg.hidden) sizes.push_back(h);
        sizes.push_back(spec.action_count());
        Rng init_rng(Rng::mix(cfg.seed, 0x12EA));
        online = nn::make_mlp(sizes, init_rng);
        // Pessimistic prior on Wait: in a work-conserving system idling is
        // almost always dominated, so start it below the assign actions and
        // let the data argue otherwise.
        online.layers.back().b[static_cast<std::size_t>(spec.wait_action())] = -0.5;
        target = online;
        grads = online; // same shapes; zeroed before use
        param_reg.add_mlp("qnet", online);
        grad_reg.add_mlp("qnet", grads);
        adam = nn::make_adam(param_reg.total(), cfg.lr);
    }

    double epsilon() const {
        const double span = cfg.epsilon_fraction * static_cast<double>(cfg.iterations);
        if (span <= 0.0) return cfg.epsilon_end;
        const double frac = std::min(1.0, static_cast<double>(global_step) / span);
        return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start);
    }

    void learn() {
        if (buffer.size() < static_cast<std::size_t>(cfg.batch_size)) return;
        const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size));
        const auto y = q_targets_double(batch, online, target, cfg.gamma);

        for (auto& e : grad_reg.entries) std::fill(e.data, e.data + e.size, 0.0);
        const double scale = 1.0 / static_cast<double>(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            nn::MlpCache cache;
            const Vec q = nn::mlp_forward(online, batch[i]->s, &cache);
            Vec dq(q.size(), 0.0);
            const std::size_t a = static_cast<std::size_t>(batch[i]->a);
            dq[a] = 2.0 * (q[a] - y[i]) * scale; // MSE on the taken action
            nn::mlp_backward(online, cache, dq, grads);
        }
        Vec flat_p, flat_g;
        param_reg.gather(flat_p);
        grad_reg.gather(flat_g);
        nn::adam_step(flat_p, flat_g, adam);
        param_reg.scatter(flat_p);
        ++learn_steps;
    }

    void post_step() {
        ++global_step;
        if (global_step % cfg.target_sync == 0) target = online;
    }
};

// ε-greedy adapter driving the simulator during training; records transitions
// and performs one learning step per decision. Decisions of different roles
// chain independently so that each role's transition pays for its own queue:
// a role's reward covers the waiting its queue accrued since that role's
// previous decision, and s2 is the state at its next one.
class TrainingAdapter : public sim::SchedulingPolicy {
public:
    TrainingAdapter(Learner& learner, double horizon, std::size_t n_roles)
        : learner_(learner), horizon_(horizon), chains_(n_roles) {}

    std::optional<std::size_t> choose(const sim::SimView& view, int role_idx,
                                      std::span<const sim::PendingTask> pending) override {
        const Vec s = encode_state(view, role_idx, pending, learner_.spec);
        const auto mask = action_mask(learner_.spec, pending.size());
        auto& chain = chains_[static_cast<std::size_t>(role_idx)];
        finish_chain(chain, role_integral(view, role_idx), potential(view, role_idx), s, mask,
                     false);

        int action;
        if (learner_.explore_rng.next_double() < learner_.epsilon()) {
            std::vector<int> valid;
            for (std::size_t a = 0; a < mask.size(); ++a)
                if (mask[a]) valid.push_back(static_cast<int>(a));
            action = valid[static_cast<std::size_t>(
                learner_.explore_rng.uniform_int(valid.size()))];
        } else {
            action = act_greedy(learner_.online, s, mask);
        }

        chain.state = s;
        chain.action = action;
        chain.integral = role_integral(view, role_idx);
        chain.phi = potential(view, role_idx);
        chain.open = true;
        steps_this_episode_ += 1;
        learner_.post_step();

        if (action == learner_.spec.wait_action()) return std::nullopt;
        return static_cast<std::size_t>(action);
    }

    void episode_finished(const sim::SimView& view) override {
        for (std::size_t role = 0; role < chains_.size(); ++role)
            finish_chain(chains_[role], role_integral(view, static_cast<int>(role)), 0.0, {}, {},
                         true);
    }

    double episode_return() const { return episode_return_; }
    int steps_this_episode() const { return steps_this_episode_; }

private:
    struct Chain {
        Vec state;
        int action = 0;
        double integral = 0.0;
        double phi = 0.0;
        bool open = false;
    };

    static double role_integral(const sim::SimView& view, int role_idx) {
        return view.role_wait_integral[static_cast<std::size_t>(role_idx)];
    }

    double potential(const sim::SimView& view, int role_idx) const {
        if (learner_.cfg.shaping == 0.0) return 0.0;
        // queued work of the acting role
        std::int64_t queued = 0;
        const auto tasks = view.def->task_node_indexes();
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const auto& node = view.def->node(tasks[i]);
            if (view.def->pool_index(node.role) == role_idx)
                queued += view.queue_len[i];
        }
        return -learner_.cfg.shaping * static_cast<double>(queued) / horizon_;
    }

    void finish_chain(Chain& chain, double integral_now, double phi2, const Vec& s2,
                      const std::vector<std::uint8_t>& mask2, bool done) {
        if (!chain.open) return;
        const double env_reward = -(integral_now - chain.integral) / horizon_;
        Transition t;
        t.s = chain.state;
        t.a = chain.action;
        t.r = env_reward + learner_.cfg.gamma * phi2 - chain.phi;
        t.s2 = s2;
        t.done = done;
        t.mask2 = mask2;
        episode_return_ += env_reward; // the training log keeps the unshaped return
        learner_.buffer.push(std::move(t));
        learner_.learn();
        if (done) chain.open = false;
    }

    Learner& learner_;
    double horizon_;
    std::vector<Chain> chains_;
    double episode_return_ = 0.0;
    int steps_this_episode_ = 0;
};

} // namespace

TrainResult train_scheduler(const model::ProcessDefinition& def,
                            const sim::ScenarioConfig& scenario, const TrainConfig& config) {
    config.check();
    scenario.check();
    const auto violations = model::validate(def);
    if (!violations.empty())
        fail(ErrorCode::Validation,
             "train_scheduler requires a valid definition: " + violations.front().to_text());

    EncodingSpec spec = EncodingSpec::from_definition(def, scenario.max_in_flight, config.slots);
    Learner learner(config, spec);

    TrainResult result;
    int episode = 0;
    while (learner.global_step < config.iterations) {
        sim::ScenarioConfig ep = scenario;
        ep.seed = Rng::mix(scenario.seed, static_cast<std::uint64_t>(episode));
        if (config.episode_horizon > 0.0) ep.horizon = config.episode_horizon;
        if (ep.arrival_rate) {
            const double factor = config.rate_factors[static_cast<std::size_t>(episode) %
                                                      config.rate_factors.size()];
            ep.arrival_rate = *ep.arrival_rate * factor;
        }
        TrainingAdapter adapter(learner, ep.horizon, def.pools.size());
        const auto sim_result = sim::run_simulation(def, ep, &adapter);

        EpisodeRow row;
        row.episode = episode;
        row.steps = adapter.steps_this_episode();
        row.episode_return = adapter.episode_return();
        row.mean_cycle_time = sim_result.kpis.mean_cycle_time;
        row.epsilon = learner.epsilon();
        result.episodes.push_back(row);
        ++episode;
        if (row.steps == 0) break; // no scheduling decisions in this scenario
    }

    result.policy.spec = spec;
    result.policy.qnet = learner.online;
    return result;
}

std::string TrainResult::train_log_csv() const {
    std::string out = "episode,steps,return,mean_cycle_time,epsilon\n";
    char buf[160];
    for (const auto& r : episodes) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%.6f\n", r.episode, r.steps,
                      r.episode_return, r.mean_cycle_time, r.epsilon);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

sim::KpiReport mean_report(const std::vector<sim::KpiReport>& reports) {
    sim::KpiReport m;
    if (reports.empty()) return m;
    const double n = static_cast<double>(reports.size());
    double cases = 0;
    for (const auto& r : reports) {
        cases += static_cast<double>(r.case_count);
        m.arrivals += r.arrivals;
        m.rejected += r.rejected;
        m.in_flight += r.in_flight;
        m.mean_cycle_time += r.mean_cycle_time;
        m.median_cycle_time += r.median_cycle_time;
        m.p95_cycle_time += r.p95_cycle_time;
        m.throughput += r.throughput;
        m.overall_utilization += r.overall_utilization;
        m.total_cost += r.total_cost;
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

} // namespace

EvalReport evaluate_policy(const model::ProcessDefinition& def,
                           const sim::ScenarioConfig& scenario,
                           const std::vector<sim::PolicyKind>& kinds,
                           const SchedulerPolicy* learned, std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) fail(ErrorCode::Config, "ConfigError: evaluation needs at least one seed");

    EvalReport report;
    report.seeds.assign(seeds.begin(), seeds.end());

    std::map<std::string, std::vector<sim::KpiReport>> per_policy;
    for (const auto kind : kinds) {
        const std::string name = sim::to_string(kind);
        for (const auto seed : seeds) {
            sim::ScenarioConfig sc = scenario;
            sc.seed = seed;
            sc.policy = kind;
            std::unique_ptr<LearnedPolicy> wrapper;
            sim::SchedulingPolicy* external = nullptr;
            if (kind == sim::PolicyKind::Learned) {
                if (!learned)
                    fail(ErrorCode::Config, "ConfigError: learned policy requested without a checkpoint");
                wrapper = std::make_unique<LearnedPolicy>(*learned);
                external = wrapper.get();
            }
            const auto res = sim::run_simulation(def, sc, external);
            per_policy[name].push_back(res.kpis);
            report.cycle_times[name].push_back(res.kpis.mean_cycle_time);
        }
    }

    for (const auto& [name, reports] : per_policy) report.mean_kpis[name] = mean_report(reports);

    const auto fifo_it = report.mean_kpis.find("fifo");
    if (fifo_it != report.mean_kpis.end()) {
        for (const auto& [name, kpis] : report.mean_kpis)
            if (name != "fifo") report.vs_fifo[name] = sim::compare_runs(fifo_it->second, kpis);
    }
    return report;
}

std::string EvalReport::to_json() const {
    ordered_json j;
    j["seeds"] = seeds;
    ordered_json pol = ordered_json::object();
    for (const auto& [name, kpis] : mean_kpis) {
        ordered_json p;
        p["mean_kpis"] = json::parse(kpis.to_json());
        p["mean_cycle_time_per_seed"] = cycle_times.at(name);
        pol[name] = std::move(p);
    }
    j["policies"] = std::move(pol);
    ordered_json imp = ordered_json::object();
    for (const auto& [name, rep] : vs_fifo) imp[name] = json::parse(rep.to_json());
    j["improvement_vs_fifo"] = std::move(imp);
    return j.dump(2) + "\n";
}

} // namespace bpo::dqn
