#include "bpo/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <set>
#include <unordered_map>

#include <json.hpp>

namespace bpo::sim {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {
constexpr std::uint64_t kArrivalSalt = 0xA11A;
constexpr std::uint64_t kBranchSalt = 0xB4A2C4;
constexpr std::uint64_t kDurationSalt = 0xD07A;
constexpr std::uint64_t kPolicySalt = 0x70715C;
constexpr int kMaxInstantHops = 10000;
} // namespace

const char* to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Fifo: return "fifo";
        case PolicyKind::Random: return "random";
        case PolicyKind::Spt: return "spt";
        case PolicyKind::Learned: return "learned";
    }
    return "?";
}

std::optional<PolicyKind> policy_kind_from_string(const std::string& s) {
    if (s == "fifo") return PolicyKind::Fifo;
    if (s == "random") return PolicyKind::Random;
    if (s == "spt") return PolicyKind::Spt;
    if (s == "learned") return PolicyKind::Learned;
    return std::nullopt;
}

void ScenarioConfig::check() const {
    if (!(horizon > 0.0)) fail(ErrorCode::Config, "ConfigError: horizon must be > 0");
    if (arrival_rate && !arrivals.empty())
        fail(ErrorCode::Config, "ConfigError: give either arrival_rate or arrivals, not both");
    if (!arrival_rate && arrivals.empty())
        fail(ErrorCode::Config, "ConfigError: one of arrival_rate or arrivals is required");
    if (arrival_rate && !(*arrival_rate > 0.0))
        fail(ErrorCode::Config, "ConfigError: arrival_rate must be > 0");
    for (double t : arrivals)
        if (t < 0.0) fail(ErrorCode::Config, "ConfigError: arrival times must be >= 0");
    if (max_in_flight < 1) fail(ErrorCode::Config, "ConfigError: max_in_flight must be >= 1");
}

std::string ScenarioConfig::to_json() const {
    ordered_json j;
    if (arrival_rate) j["arrival_rate"] = *arrival_rate;
    else j["arrivals"] = arrivals;
    j["horizon"] = horizon;
    j["seed"] = seed;
    j["max_in_flight"] = max_in_flight;
    j["policy"] = to_string(policy);
    return j.dump();
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Config, "ConfigError: scenario must be a JSON object");
    ScenarioConfig sc;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "arrival_rate") sc.arrival_rate = it.value().get<double>();
        else if (k == "arrivals") sc.arrivals = it.value().get<std::vector<double>>();
        else if (k == "horizon") sc.horizon = it.value().get<double>();
        else if (k == "seed") sc.seed = it.value().get<std::uint64_t>();
        else if (k == "max_in_flight") sc.max_in_flight = it.value().get<int>();
        else if (k == "policy") {
            auto p = policy_kind_from_string(it.value().get<std::string>());
            if (!p) fail(ErrorCode::Config, "ConfigError: unknown policy '" +
                                                it.value().get<std::string>() + "'");
            sc.policy = *p;
        } else {
            fail(ErrorCode::Config, "ConfigError: unknown scenario key '" + k + "'");
        }
    }
    sc.check();
    return sc;
}

// ---------------------------------------------------------------------------
// Built-in policies

namespace {

class FifoPolicy : public SchedulingPolicy {
public:
    std::optional<std::size_t> choose(const SimView&, int,
                                      std::span<const PendingTask> pending) override {
        return pending.empty() ? std::nullopt : std::optional<std::size_t>(0);
    }
};

class RandomPolicy : public SchedulingPolicy {
public:
    explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
    std::optional<std::size_t> choose(const SimView&, int,
                                      std::span<const PendingTask> pending) override {
        if (pending.empty()) return std::nullopt;
        return static_cast<std::size_t>(rng_.uniform_int(pending.size()));
    }

private:
    Rng rng_;
};

class SptPolicy : public SchedulingPolicy {
public:
    explicit SptPolicy(const model::ProcessDefinition& def) {
        mean_by_node_.resize(def.nodes.size(), 0.0);
        for (int ti : def.task_node_indexes())
            mean_by_node_[static_cast<std::size_t>(ti)] = def.node(ti).duration->mean_value();
    }
    std::optional<std::size_t> choose(const SimView&, int,
                                      std::span<const PendingTask> pending) override {
        if (pending.empty()) return std::nullopt;
        std::size_t best = 0;
        for (std::size_t i = 1; i < pending.size(); ++i)
            if (mean_by_node_[static_cast<std::size_t>(pending[i].node_idx)] <
                mean_by_node_[static_cast<std::size_t>(pending[best].node_idx)])
                best = i;
        return best;
    }

private:
    std::vector<double> mean_by_node_;
};

} // namespace

std::unique_ptr<SchedulingPolicy> make_builtin_policy(PolicyKind kind,
                                                      const model::ProcessDefinition& def,
                                                      std::uint64_t seed) {
    switch (kind) {
        case PolicyKind::Fifo: return std::make_unique<FifoPolicy>();
        case PolicyKind::Random:
            return std::make_unique<RandomPolicy>(Rng::mix(seed, kPolicySalt));
        case PolicyKind::Spt: return std::make_unique<SptPolicy>(def);
        case PolicyKind::Learned:
            fail(ErrorCode::Config, "ConfigError: learned policy requires a policy instance");
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

struct SimEvent {
    double time;
    int type; // 0 = arrival, 1 = task completion
    std::int64_t case_id;
    int node_idx;
    int unit;
    double enqueue_time; // completions: when the task entered the queue
    std::uint64_t seq;
};

struct EventLater {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

class Engine {
public:
    Engine(const model::ProcessDefinition& def, const ScenarioConfig& scenario,
           SchedulingPolicy& policy)
        : def_(def), sc_(scenario), policy_(policy), out_(def.outgoing()), in_(def.incoming()) {
        task_pos_.resize(def.nodes.size(), -1);
        const auto tasks = def.task_node_indexes();
        for (std::size_t p = 0; p < tasks.size(); ++p)
            task_pos_[static_cast<std::size_t>(tasks[p])] = static_cast<int>(p);
        queue_len_.resize(tasks.size(), 0);
        role_of_node_.resize(def.nodes.size(), -1);
        for (int ti : tasks)
            role_of_node_[static_cast<std::size_t>(ti)] = def.pool_index(def.node(ti).role);
        for (const auto& p : def.pools) {
            capacity_.push_back(p.capacity);
            free_.push_back(p.capacity);
            unit_busy_.emplace_back(static_cast<std::size_t>(p.capacity), false);
        }
        role_queued_.assign(def.pools.size(), 0);
        role_wait_integral_.assign(def.pools.size(), 0.0);
        pending_.resize(def.pools.size());
        for (std::size_t i = 0; i < def.nodes.size(); ++i)
            if (def.nodes[i].kind == model::NodeKind::StartEvent) start_idx_ = static_cast<int>(i);
    }

    SimResult run() {
        generate_arrivals();
        while (!events_.empty()) {
            SimEvent ev = events_.top();
            if (ev.time > sc_.horizon) break;
            events_.pop();
            advance_accrual(ev.time);
            clock_ = ev.time;
            if (ev.type == 0) handle_arrival(ev);
            else handle_completion(ev);
            decision_loop();
        }
        advance_accrual(sc_.horizon);
        clock_ = sc_.horizon;
        policy_.episode_finished(view());

        log_.sort_canonical();
        log_.meta.seed = sc_.seed;
        log_.meta.arrivals = arrivals_total_;
        log_.meta.completed = completed_;
        log_.meta.rejected = rejected_;
        log_.meta.in_flight = arrivals_total_ - completed_ - rejected_;
        log_.meta.scenario_echo = sc_.to_json();

        SimResult result;
        result.kpis = compute_kpis(log_, def_, sc_.horizon);
        result.log = std::move(log_);
        return result;
    }

private:
    SimView view() {
        SimView v;
        v.clock = clock_;
        v.horizon = sc_.horizon;
        v.wait_integral = wait_integral_;
        v.in_flight = in_flight_;
        v.max_in_flight = sc_.max_in_flight;
        v.queue_len = queue_len_;
        v.role_free = free_;
        v.role_capacity = capacity_;
        v.role_wait_integral = role_wait_integral_;
        v.def = &def_;
        return v;
    }

    void generate_arrivals() {
        if (sc_.arrival_rate) {
            Rng rng(Rng::mix(sc_.seed, kArrivalSalt));
            double t = rng.exponential(*sc_.arrival_rate);
            std::int64_t case_id = 1;
            while (t <= sc_.horizon) {
                events_.push({t, 0, case_id++, start_idx_, -1, t, seq_++});
                t += rng.exponential(*sc_.arrival_rate);
            }
        } else {
            std::vector<double> ts = sc_.arrivals;
            std::sort(ts.begin(), ts.end());
            std::int64_t case_id = 1;
            for (double t : ts)
                if (t <= sc_.horizon) events_.push({t, 0, case_id++, start_idx_, -1, t, seq_++});
        }
    }

    void advance_accrual(double t) {
        const double dt = t - accrual_time_;
        wait_integral_ += dt * static_cast<double>(total_queued_);
        for (std::size_t r = 0; r < role_queued_.size(); ++r)
            role_wait_integral_[r] += dt * static_cast<double>(role_queued_[r]);
        accrual_time_ = t;
    }

    void handle_arrival(const SimEvent& ev) {
        ++arrivals_total_;
        if (in_flight_ >= sc_.max_in_flight) {
            ++rejected_;
            return;
        }
        ++in_flight_;
        open_cases_.insert(ev.case_id);
        move_token(ev.case_id, start_idx_, ev.time, 0);
    }

    void handle_completion(const SimEvent& ev) {
        unit_busy_[static_cast<std::size_t>(role_of_node_[static_cast<std::size_t>(ev.node_idx)])]
                  [static_cast<std::size_t>(ev.unit)] = false;
        ++free_[static_cast<std::size_t>(role_of_node_[static_cast<std::size_t>(ev.node_idx)])];
        const auto& node = def_.node(ev.node_idx);
        Event e;
        e.case_id = ev.case_id;
        e.activity = node.id;
        e.resource = node.role + "#" + std::to_string(ev.unit);
        e.enqueue_time = ev.enqueue_time;
        e.start_time = start_time_of_completion_.at(ev.seq);
        e.complete_time = ev.time;
        start_time_of_completion_.erase(ev.seq);
        log_.events.push_back(std::move(e));
        move_token(ev.case_id, ev.node_idx, ev.time, 0, /*from_completion=*/true);
    }

    void log_instant(std::int64_t case_id, int node_idx, double t) {
        Event e;
        e.case_id = case_id;
        e.activity = def_.node(node_idx).id;
        e.enqueue_time = t;
        e.start_time = t;
        e.complete_time = t;
        log_.events.push_back(std::move(e));
    }

    void forward(std::int64_t case_id, int node_idx, double t, int hops) {
        for (int fi : out_[static_cast<std::size_t>(node_idx)]) {
            const int dst = def_.node_index(def_.flows[static_cast<std::size_t>(fi)].target);
            move_token(case_id, dst, t, hops + 1);
        }
    }

    void move_token(std::int64_t case_id, int node_idx, double t, int hops,
                    bool from_completion = false) {
        if (hops > kMaxInstantHops)
            fail(ErrorCode::Runtime, "gateway loop without task progress"); // unreachable for validated defs
        const auto& node = def_.node(node_idx);
        switch (node.kind) {
            case model::NodeKind::StartEvent:
                log_instant(case_id, node_idx, t);
                forward(case_id, node_idx, t, hops);
                break;
            case model::NodeKind::EndEvent:
                log_instant(case_id, node_idx, t);
                if (open_cases_.erase(case_id) > 0) {
                    --in_flight_;
                    ++completed_;
                }
                break;
            case model::NodeKind::Task: {
                if (from_completion) { // task just finished, move downstream
                    forward(case_id, node_idx, t, hops);
                    break;
                }
                const int visit = ++visit_count_[key(case_id, node_idx)];
                pending_[static_cast<std::size_t>(role_of_node_[static_cast<std::size_t>(node_idx)])]
                    .push_back({t, case_id, node_idx, visit});
                ++queue_len_[static_cast<std::size_t>(task_pos_[static_cast<std::size_t>(node_idx)])];
                ++role_queued_[static_cast<std::size_t>(role_of_node_[static_cast<std::size_t>(node_idx)])];
                ++total_queued_;
                break;
            }
            case model::NodeKind::XorGateway: {
                log_instant(case_id, node_idx, t);
                const auto& flows = out_[static_cast<std::size_t>(node_idx)];
                std::vector<double> weights;
                weights.reserve(flows.size());
                for (int fi : flows)
                    weights.push_back(*def_.flows[static_cast<std::size_t>(fi)].probability);
                const int visit = ++visit_count_[key(case_id, node_idx) ^ kBranchSalt];
                Rng branch_rng(branch_seed(case_id, node_idx, visit));
                const std::size_t pick = branch_rng.pick_weighted(weights);
                const int dst =
                    def_.node_index(def_.flows[static_cast<std::size_t>(flows[pick])].target);
                move_token(case_id, dst, t, hops + 1);
                break;
            }
            case model::NodeKind::AndGatewaySplit:
                log_instant(case_id, node_idx, t);
                forward(case_id, node_idx, t, hops);
                break;
            case model::NodeKind::AndGatewayJoin: {
                const int needed = static_cast<int>(in_[static_cast<std::size_t>(node_idx)].size());
                int& got = join_count_[key(case_id, node_idx)];
                if (++got < needed) break;
                got = 0;
                log_instant(case_id, node_idx, t);
                forward(case_id, node_idx, t, hops);
                break;
            }
        }
    }

    void decision_loop() {
        // A role that chose Wait is not re-asked within the same instant, even
        // if other roles make assignments meanwhile.
        std::vector<bool> waited(pending_.size(), false);
        bool progressed = true;
        while (progressed) {
            progressed = false;
            for (std::size_t role = 0; role < pending_.size(); ++role) {
                while (!waited[role] && free_[role] > 0 && !pending_[role].empty()) {
                    std::vector<PendingTask> snapshot(pending_[role].begin(), pending_[role].end());
                    const auto pick = policy_.choose(view(), static_cast<int>(role), snapshot);
                    if (!pick) {
                        waited[role] = true;
                        break;
                    }
                    if (*pick >= pending_[role].size())
                        fail(ErrorCode::Runtime, "policy returned an out-of-range pending index");
                    start_task(static_cast<int>(role), *pick);
                    progressed = true;
                }
            }
        }
    }

    void start_task(int role, std::size_t pending_idx) {
        PendingTask task = pending_[static_cast<std::size_t>(role)]
                               [static_cast<std::size_t>(pending_idx)];
        pending_[static_cast<std::size_t>(role)].erase(
            pending_[static_cast<std::size_t>(role)].begin() +
            static_cast<std::ptrdiff_t>(pending_idx));
        --queue_len_[static_cast<std::size_t>(task_pos_[static_cast<std::size_t>(task.node_idx)])];
        --role_queued_[static_cast<std::size_t>(role)];
        --total_queued_;

        int unit = -1;
        auto& busy = unit_busy_[static_cast<std::size_t>(role)];
        for (std::size_t u = 0; u < busy.size(); ++u)
            if (!busy[u]) { unit = static_cast<int>(u); break; }
        busy[static_cast<std::size_t>(unit)] = true;
        --free_[static_cast<std::size_t>(role)];

        Rng dur_rng(duration_seed(task.case_id, task.node_idx, task.visit));
        const double duration = def_.node(task.node_idx).duration->sample(dur_rng);
        const std::uint64_t completion_seq = seq_++;
        start_time_of_completion_[completion_seq] = clock_;
        events_.push({clock_ + duration, 1, task.case_id, task.node_idx, unit, task.enqueue_time,
                      completion_seq});
    }

    std::uint64_t key(std::int64_t case_id, int node_idx) const {
        return Rng::mix(static_cast<std::uint64_t>(case_id),
                        static_cast<std::uint64_t>(node_idx));
    }

    std::uint64_t duration_seed(std::int64_t case_id, int node_idx, int visit) const {
        return Rng::mix(Rng::mix(Rng::mix(sc_.seed, kDurationSalt), key(case_id, node_idx)),
                        static_cast<std::uint64_t>(visit));
    }

    std::uint64_t branch_seed(std::int64_t case_id, int node_idx, int visit) const {
        return Rng::mix(Rng::mix(Rng::mix(sc_.seed, kBranchSalt), key(case_id, node_idx)),
                        static_cast<std::uint64_t>(visit));
    }

    const model::ProcessDefinition& def_;
    const ScenarioConfig& sc_;
    SchedulingPolicy& policy_;
    std::vector<std::vector<int>> out_, in_;
    std::vector<int> task_pos_;     // node idx → task-activity position or -1
    std::vector<int> role_of_node_; // node idx → pool idx or -1
    std::vector<int> capacity_, free_;
    std::vector<std::vector<bool>> unit_busy_;
    std::vector<std::deque<PendingTask>> pending_;
    std::vector<int> queue_len_;
    std::vector<std::int64_t> role_queued_;
    std::vector<double> role_wait_integral_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, EventLater> events_;
    std::unordered_map<std::uint64_t, int> visit_count_;
    std::unordered_map<std::uint64_t, int> join_count_;
    std::unordered_map<std::uint64_t, double> start_time_of_completion_;
    std::set<std::int64_t> open_cases_;
    EventLog log_;
    double clock_ = 0.0;
    double accrual_time_ = 0.0;
    double wait_integral_ = 0.0;
    std::uint64_t seq_ = 0;
    int start_idx_ = -1;
    int in_flight_ = 0;
    std::int64_t total_queued_ = 0;
    std::int64_t arrivals_total_ = 0, completed_ = 0, rejected_ = 0;
};

} // namespace

SimResult run_simulation(const model::ProcessDefinition& def, const ScenarioConfig& scenario,
                         SchedulingPolicy* external_policy) {
    scenario.check();
    const auto violations = model::validate(def);
    if (!violations.empty())
        fail(ErrorCode::Validation, "run_simulation requires a valid definition: " +
                                        violations.front().to_text());
    std::unique_ptr<SchedulingPolicy> owned;
    SchedulingPolicy* policy = external_policy;
    if (!policy) {
        owned = make_builtin_policy(scenario.policy, def, scenario.seed);
        policy = owned.get();
    }
    Engine engine(def, scenario, *policy);
    return engine.run();
}

// ---------------------------------------------------------------------------
// KPIs

double nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    return values[rank - 1];
}

KpiReport compute_kpis(const EventLog& log, const model::ProcessDefinition& def, double horizon) {
    if (!(horizon > 0.0)) fail(ErrorCode::Config, "ConfigError: horizon must be > 0");

    KpiReport r;
    std::map<std::int64_t, double> case_start, case_end;
    std::map<std::string, double> busy_by_role;
    std::map<std::string, std::pair<double, std::int64_t>> wait_by_activity;
    double task_cost = 0.0;

    for (const auto& e : log.events) {
        const int ni = def.node_index(e.activity);
        if (ni < 0)
            fail(ErrorCode::Validation, "InconsistentLog: unknown activity '" + e.activity + "'");
        if (!(e.enqueue_time <= e.start_time && e.start_time <= e.complete_time))
            fail(ErrorCode::Validation, "InconsistentLog: unordered timestamps for case " +
                                            std::to_string(e.case_id));
        const auto& node = def.node(ni);
        if (node.kind == model::NodeKind::StartEvent) {
            auto it = case_start.find(e.case_id);
            if (it == case_start.end()) case_start[e.case_id] = e.enqueue_time;
        } else if (node.kind == model::NodeKind::EndEvent) {
            auto it = case_end.find(e.case_id);
            if (it == case_end.end()) case_end[e.case_id] = e.complete_time;
        } else if (node.kind == model::NodeKind::Task) {
            const double busy = e.complete_time - e.start_time;
            busy_by_role[node.role] += busy;
            task_cost += busy * node.cost_rate;
        }
        auto& w = wait_by_activity[e.activity];
        w.first += e.start_time - e.enqueue_time;
        w.second += 1;
    }

    std::vector<double> cycles;
    for (const auto& [case_id, end_t] : case_end) {
        auto it = case_start.find(case_id);
        if (it != case_start.end()) cycles.push_back(end_t - it->second);
    }
    r.case_count = static_cast<std::int64_t>(cycles.size());
    if (!cycles.empty()) {
        double sum = 0.0;
        for (double c : cycles) sum += c;
        r.mean_cycle_time = sum / static_cast<double>(cycles.size());
        r.median_cycle_time = nearest_rank(cycles, 0.5);
        r.p95_cycle_time = nearest_rank(cycles, 0.95);
    }
    r.throughput = static_cast<double>(r.case_count) / horizon;

    double total_busy = 0.0;
    double total_capacity = 0.0;
    double pool_cost = 0.0;
    for (const auto& p : def.pools) {
        const double busy = busy_by_role.count(p.role) ? busy_by_role[p.role] : 0.0;
        r.utilization[p.role] = busy / (static_cast<double>(p.capacity) * horizon);
        total_busy += busy;
        total_capacity += static_cast<double>(p.capacity);
        pool_cost += static_cast<double>(p.capacity) * horizon * p.cost_rate;
    }
    r.overall_utilization = total_capacity > 0.0 ? total_busy / (total_capacity * horizon) : 0.0;
    r.total_cost = task_cost + pool_cost;

    for (const auto& [act, w] : wait_by_activity)
        r.mean_wait[act] = w.second > 0 ? w.first / static_cast<double>(w.second) : 0.0;

    if (log.meta.arrivals > 0) {
        r.arrivals = log.meta.arrivals;
        r.rejected = log.meta.rejected;
        r.in_flight = log.meta.in_flight;
    } else {
        std::set<std::int64_t> cases;
        for (const auto& e : log.events) cases.insert(e.case_id);
        r.arrivals = static_cast<std::int64_t>(cases.size());
        r.rejected = 0;
        r.in_flight = r.arrivals - r.case_count;
    }
    return r;
}

std::string KpiReport::to_json() const {
    ordered_json j;
    j["case_count"] = case_count;
    j["arrivals"] = arrivals;
    j["rejected"] = rejected;
    j["in_flight"] = in_flight;
    j["mean_cycle_time"] = mean_cycle_time;
    j["median_cycle_time"] = median_cycle_time;
    j["p95_cycle_time"] = p95_cycle_time;
    j["throughput"] = throughput;
    j["overall_utilization"] = overall_utilization;
    j["total_cost"] = total_cost;
    j["utilization"] = utilization;
    j["mean_wait"] = mean_wait;
    return j.dump(2) + "\n";
}

KpiReport KpiReport::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Syntax, "SyntaxError: KPI report must be a JSON object");
    KpiReport r;
    try {
        r.case_count = j.at("case_count").get<std::int64_t>();
        r.arrivals = j.value("arrivals", std::int64_t{0});
        r.rejected = j.value("rejected", std::int64_t{0});
        r.in_flight = j.value("in_flight", std::int64_t{0});
        r.mean_cycle_time = j.at("mean_cycle_time").get<double>();
        r.median_cycle_time = j.at("median_cycle_time").get<double>();
        r.p95_cycle_time = j.at("p95_cycle_time").get<double>();
        r.throughput = j.at("throughput").get<double>();
        r.overall_utilization = j.at("overall_utilization").get<double>();
        r.total_cost = j.at("total_cost").get<double>();
        if (j.contains("utilization"))
            r.utilization = j["utilization"].get<std::map<std::string, double>>();
        if (j.contains("mean_wait"))
            r.mean_wait = j["mean_wait"].get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        fail(ErrorCode::Syntax, std::string("SyntaxError: KPI report: ") + e.what());
    }
    return r;
}

ImprovementReport compare_runs(const KpiReport& baseline, const KpiReport& optimized) {
    ImprovementReport rep;
    // Lower is better for cycle time and cost; higher is better for utilization.
    if (baseline.mean_cycle_time != 0.0)
        rep.cycle_time_pct =
            100.0 * (baseline.mean_cycle_time - optimized.mean_cycle_time) / baseline.mean_cycle_time;
    if (baseline.overall_utilization != 0.0)
        rep.utilization_pct = 100.0 * (optimized.overall_utilization - baseline.overall_utilization) /
                              baseline.overall_utilization;
    if (baseline.total_cost != 0.0)
        rep.cost_pct = 100.0 * (baseline.total_cost - optimized.total_cost) / baseline.total_cost;
    return rep;
}

std::string ImprovementReport::to_json() const {
    ordered_json j;
    j["cycle_time_pct"] = cycle_time_pct ? ordered_json(*cycle_time_pct) : ordered_json(nullptr);
    j["utilization_pct"] = utilization_pct ? ordered_json(*utilization_pct) : ordered_json(nullptr);
    j["cost_pct"] = cost_pct ? ordered_json(*cost_pct) : ordered_json(nullptr);
    return j.dump(2) + "\n";
}

ImprovementReport ImprovementReport::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Syntax, "SyntaxError: improvement report must be a JSON object");
    ImprovementReport r;
    auto get = [&](const char* k) -> std::optional<double> {
        if (!j.contains(k) || j[k].is_null()) return std::nullopt;
        return j[k].get<double>();
    };
    r.cycle_time_pct = get("cycle_time_pct");
    r.utilization_pct = get("utilization_pct");
    r.cost_pct = get("cost_pct");
    return r;
}

} // namespace bpo::sim
