// Acceptance suite: runs every gate criterion end to end and prints one
// PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "bpo/anomaly.hpp"
#include "bpo/bench.hpp"
#include "bpo/bottleneck.hpp"
#include "bpo/data_quality.hpp"
#include "bpo/dqn.hpp"
#include "bpo/load_test.hpp"
#include "bpo/process_model.hpp"
#include "bpo/service.hpp"
#include "bpo/sim_engine.hpp"

using namespace bpo;
using nlohmann::json;

namespace {

int g_failures = 0;

struct Criterion {
    std::string name;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::vector<std::string> notes;

    explicit Criterion(std::string n) : name(std::move(n)) {}

    void expect(bool condition, const std::string& what) {
        if (!condition) ok = false;
        notes.push_back(std::string(condition ? "ok  " : "BAD ") + what);
    }

    void finish(double budget_seconds) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs >= budget_seconds) {
            ok = false;
            notes.push_back("BAD runtime " + std::to_string(secs) + "s exceeds budget " +
                            std::to_string(budget_seconds) + "s");
        }
        std::cout << (ok ? "PASS " : "FAIL ") << name << "  [" << secs << "s]\n";
        for (const auto& n : notes) std::cout << "      " << n << "\n";
        if (!ok) ++g_failures;
        std::cout.flush();
    }
};

std::string fmt(double v) {
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

// ---------------------------------------------------------------------------
// model builders

model::DurationDistribution det(double v) {
    model::DurationDistribution d;
    d.kind = model::DistKind::Deterministic;
    d.value = v;
    return d;
}

model::DurationDistribution expo(double rate) {
    model::DurationDistribution d;
    d.kind = model::DistKind::Exponential;
    d.rate = rate;
    return d;
}

model::Node make_task(const std::string& id, const std::string& role,
                      model::DurationDistribution dist, double cost_rate = 0.0) {
    model::Node t;
    t.id = id;
    t.kind = model::NodeKind::Task;
    t.duration = dist;
    t.role = role;
    t.cost_rate = cost_rate;
    return t;
}

model::ProcessDefinition queue_model(model::DurationDistribution service,
                                     const std::string& id = "queue") {
    model::ProcessDefinition def;
    def.id = id;
    def.name = "single server";
    def.nodes.push_back({"start", model::NodeKind::StartEvent, std::nullopt, "", 0.0});
    def.nodes.push_back(make_task("serve", "server", service));
    def.nodes.push_back({"end", model::NodeKind::EndEvent, std::nullopt, "", 0.0});
    def.flows.push_back({"f1", "start", "serve", std::nullopt});
    def.flows.push_back({"f2", "serve", "end", std::nullopt});
    def.pools.push_back({"server", 1, 0.0});
    return def;
}

model::ProcessDefinition fanout_model(const std::vector<double>& durations) {
    model::ProcessDefinition def;
    def.id = "fanout" + std::to_string(durations.size());
    def.name = "release at zero";
    def.nodes.push_back({"start", model::NodeKind::StartEvent, std::nullopt, "", 0.0});
    def.nodes.push_back({"split", model::NodeKind::AndGatewaySplit, std::nullopt, "", 0.0});
    for (std::size_t i = 0; i < durations.size(); ++i)
        def.nodes.push_back(make_task("t" + std::to_string(i), "m", det(durations[i])));
    def.nodes.push_back({"join", model::NodeKind::AndGatewayJoin, std::nullopt, "", 0.0});
    def.nodes.push_back({"end", model::NodeKind::EndEvent, std::nullopt, "", 0.0});
    def.flows.push_back({"fi", "start", "split", std::nullopt});
    for (std::size_t i = 0; i < durations.size(); ++i) {
        def.flows.push_back({"fa" + std::to_string(i), "split", "t" + std::to_string(i),
                             std::nullopt});
        def.flows.push_back({"fb" + std::to_string(i), "t" + std::to_string(i), "join",
                             std::nullopt});
    }
    def.flows.push_back({"fo", "join", "end", std::nullopt});
    def.pools.push_back({"m", 1, 0.0});
    return def;
}

// Two task types behind a capacity-1 desk at 85% load, fronted by a light
// capacity-2 intake stage.
model::ProcessDefinition congested_two_role_model() {
    model::ProcessDefinition def;
    def.id = "tworole";
    def.name = "congested two-role";
    def.nodes.push_back({"start", model::NodeKind::StartEvent, std::nullopt, "", 0.0});
    def.nodes.push_back(make_task("intake", "front", det(0.5)));
    def.nodes.push_back({"route", model::NodeKind::XorGateway, std::nullopt, "", 0.0});
    def.nodes.push_back(make_task("quick", "desk", det(0.5)));
    def.nodes.push_back(make_task("slow", "desk", det(8.0)));
    def.nodes.push_back({"end", model::NodeKind::EndEvent, std::nullopt, "", 0.0});
    def.flows.push_back({"f1", "start", "intake", std::nullopt});
    def.flows.push_back({"f2", "intake", "route", std::nullopt});
    def.flows.push_back({"f3", "route", "quick", 0.7});
    def.flows.push_back({"f4", "route", "slow", 0.3});
    def.flows.push_back({"f5", "quick", "end", std::nullopt});
    def.flows.push_back({"f6", "slow", "end", std::nullopt});
    def.pools.push_back({"front", 2, 0.0});
    def.pools.push_back({"desk", 1, 0.0});
    return def;
}

model::ProcessDefinition six_activity_model() {
    model::ProcessDefinition def;
    def.id = "six";
    def.name = "trace benchmark";
    def.nodes.push_back({"start", model::NodeKind::StartEvent, std::nullopt, "", 0.0});
    def.nodes.push_back(make_task("A", "crew", expo(1.0)));
    def.nodes.push_back({"x1", model::NodeKind::XorGateway, std::nullopt, "", 0.0});
    def.nodes.push_back(make_task("B", "crew", expo(1.0)));
    def.nodes.push_back(make_task("C", "crew", expo(1.0)));
    def.nodes.push_back(make_task("D", "crew", expo(1.0)));
    def.nodes.push_back({"x2", model::NodeKind::XorGateway, std::nullopt, "", 0.0});
    def.nodes.push_back(make_task("E", "crew", expo(1.0)));
    def.nodes.push_back(make_task("F", "crew", expo(1.0)));
    def.nodes.push_back({"end", model::NodeKind::EndEvent, std::nullopt, "", 0.0});
    int f = 0;
    auto flow = [&](const std::string& s, const std::string& t,
                    std::optional<double> p = std::nullopt) {
        def.flows.push_back({"f" + std::to_string(f++), s, t, p});
    };
    flow("start", "A");
    flow("A", "x1");
    flow("x1", "B", 0.6);
    flow("x1", "C", 0.4);
    flow("B", "D");
    flow("C", "D");
    flow("D", "x2");
    flow("x2", "E", 0.55);
    flow("x2", "F", 0.45);
    flow("E", "end");
    flow("F", "end");
    def.pools.push_back({"crew", 50, 0.0});
    return def;
}

// ---------------------------------------------------------------------------

void criterion_1_queueing_oracle() {
    Criterion c("1. queueing-oracle (M/M/1 and M/D/1 vs analytic waits)");

    { // M/M/1: λ = 0.5, μ = 1 → Wq = λ/(μ(μ−λ)) = 1.0
        const auto t0 = std::chrono::steady_clock::now();
        sim::ScenarioConfig sc;
        sc.arrival_rate = 0.5;
        sc.horizon = 200000.0;
        sc.seed = 424242;
        sc.max_in_flight = 100000;
        const auto res = sim::run_simulation(queue_model(expo(1.0)), sc);
        const double wait = res.kpis.mean_wait.at("serve");
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        c.expect(std::fabs(wait - 1.0) < 0.05,
                 "M/M/1 mean wait " + fmt(wait) + " within 5% of 1.0");
        c.expect(secs < 30.0, "M/M/1 runtime " + fmt(secs) + "s < 30s");
    }
    { // M/D/1: λ = 1, μ = 2 (deterministic service 0.5) → Wq = λ/(2μ(μ−λ)) = 0.25
        const auto t0 = std::chrono::steady_clock::now();
        sim::ScenarioConfig sc;
        sc.arrival_rate = 1.0;
        sc.horizon = 200000.0;
        sc.seed = 424242;
        sc.max_in_flight = 100000;
        const auto res = sim::run_simulation(queue_model(det(0.5)), sc);
        const double wait = res.kpis.mean_wait.at("serve");
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        c.expect(std::fabs(wait - 0.25) / 0.25 < 0.05,
                 "M/D/1 mean wait " + fmt(wait) + " within 5% of 0.25");
        c.expect(secs < 30.0, "M/D/1 runtime " + fmt(secs) + "s < 30s");
    }
    c.finish(90.0);
}

double enumeration_optimal_flowtime(std::vector<double> durations) {
    std::sort(durations.begin(), durations.end());
    double best = std::numeric_limits<double>::infinity();
    do {
        double t = 0.0, total = 0.0;
        for (double d : durations) {
            t += d;
            total += t;
        }
        best = std::min(best, total);
    } while (std::next_permutation(durations.begin(), durations.end()));
    return best;
}

void criterion_2_scheduler_optimality() {
    Criterion c("2. scheduler-optimality (n=4 release-at-zero vs enumeration, 10 seeds)");
    const std::vector<double> durations{1.0, 3.0, 5.0, 7.0};
    const auto def = fanout_model(durations);
    const double best = enumeration_optimal_flowtime(durations);

    sim::ScenarioConfig sc;
    sc.arrivals = {0.0};
    sc.horizon = 64.0;

    int optimal_seeds = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        dqn::TrainConfig cfg;
        cfg.iterations = 4000;
        cfg.batch_size = 32;
        cfg.buffer_capacity = 4096;
        cfg.target_sync = 200;
        cfg.hidden = {32, 32};
        cfg.lr = 1e-3;
        cfg.slots = 4;
        cfg.gamma = 0.99;
        cfg.seed = seed;
        const auto result = dqn::train_scheduler(def, sc, cfg);
        dqn::LearnedPolicy greedy(result.policy);
        sim::ScenarioConfig esc = sc;
        esc.policy = sim::PolicyKind::Learned;
        const auto res = sim::run_simulation(def, esc, &greedy);
        double flow = 0.0;
        for (const auto& e : res.log.events)
            if (!e.resource.empty()) flow += e.complete_time;
        if (std::fabs(flow - best) < 1e-9) ++optimal_seeds;
    }
    c.expect(optimal_seeds >= 9, "optimal total flow time on " + std::to_string(optimal_seeds) +
                                     "/10 training seeds (need >= 9, optimum " + fmt(best) + ")");
    c.finish(300.0);
}

void criterion_3_scheduler_improvement() {
    Criterion c("3. scheduler-improvement (congested two-role, learned <= 0.85 x FIFO)");
    const auto def = congested_two_role_model();

    sim::ScenarioConfig scenario; // desk load: 0.31 × (0.7·0.5 + 0.3·8.0) = 0.85
    scenario.arrival_rate = 0.31;
    scenario.horizon = 10000.0;
    scenario.seed = 7;

    dqn::TrainConfig cfg;
    cfg.iterations = 100000;
    cfg.episode_horizon = 150.0;
    cfg.gamma = 0.9995;
    cfg.target_sync = 250;
    cfg.batch_size = 128;
    cfg.buffer_capacity = 20000;
    cfg.hidden = {32, 32};
    cfg.lr = 1e-3;
    cfg.slots = 8;
    cfg.shaping = 40.0;
    cfg.rate_factors = {0.7, 1.0, 1.3};
    cfg.seed = 0;
    const auto trained = dqn::train_scheduler(def, scenario, cfg);

    const std::vector<std::uint64_t> seeds{11, 22, 33, 44, 55}; // 5 paired repetitions
    const auto report = dqn::evaluate_policy(
        def, scenario, {sim::PolicyKind::Fifo, sim::PolicyKind::Learned, sim::PolicyKind::Spt},
        &trained.policy, seeds);
    const double fifo = report.mean_kpis.at("fifo").mean_cycle_time;
    const double learned = report.mean_kpis.at("learned").mean_cycle_time;
    const double spt = report.mean_kpis.at("spt").mean_cycle_time;
    c.expect(learned <= 0.85 * fifo, "learned mean cycle " + fmt(learned) + " <= 0.85 x FIFO " +
                                         fmt(fifo) + " (ratio " + fmt(learned / fifo) +
                                         ", SPT reference " + fmt(spt) + ")");
    c.finish(900.0);
}

void criterion_4_gradient_fidelity() {
    Criterion c("4. gradient-fidelity (LSTM+attention+softmax and Q-network, fd check)");

    { // next-activity stack: hidden 4, 2 layers, sequence 5, vocab 6.
        // The check runs at a converged operating point with a wide step:
        // near the optimum the higher derivatives are tiny, so a 1e-3 step
        // keeps the central-difference truncation negligible while dividing
        // the floating-point cancellation noise that would otherwise swamp
        // near-zero coordinates under the 1e-8 denominator floor.
        std::vector<anomaly::Trace> corpus(20, anomaly::Trace{"p", "q", "r", "p"});
        anomaly::DetectorConfig dcfg;
        dcfg.hidden = 4;
        dcfg.layers = 2;
        dcfg.epochs = 400;
        dcfg.lr = 0.01;
        dcfg.seed = 1;
        auto trained = anomaly::train_detector_on_traces(corpus, dcfg);
        const int vocab = trained.model.encoding.size(); // 3 activities + BOS/EOS/UNK
        const int hidden = 4;
        nn::LstmStack& stack = trained.model.stack;
        nn::Attention& attention = trained.model.attention;
        nn::Dense& head = trained.model.head;

        // sequence of 5 transitions: BOS, p, q, r, p → targets p,q,r,p,EOS
        std::vector<int> ids;
        ids.push_back(trained.model.encoding.bos);
        for (const char* a : {"p", "q", "r", "p"})
            ids.push_back(trained.model.encoding.index_of(a));
        ids.push_back(trained.model.encoding.eos);

        nn::LstmStack grad_stack = stack;
        nn::Attention grad_att = attention;
        nn::Dense grad_head = head;
        auto zero_grads = [&]() {
            for (auto& l : grad_stack.layers) {
                for (nn::Matrix* m : {&l.Wi, &l.Wf, &l.Wo, &l.Wg, &l.Ui, &l.Uf, &l.Uo, &l.Ug})
                    std::fill(m->a.begin(), m->a.end(), 0.0);
                for (nn::Vec* v : {&l.bi, &l.bf, &l.bo, &l.bg}) std::fill(v->begin(), v->end(), 0.0);
            }
            std::fill(grad_att.W.a.begin(), grad_att.W.a.end(), 0.0);
            std::fill(grad_att.v.begin(), grad_att.v.end(), 0.0);
            std::fill(grad_head.W.a.begin(), grad_head.W.a.end(), 0.0);
            std::fill(grad_head.b.begin(), grad_head.b.end(), 0.0);
        };

        auto loss_with_grads = [&]() {
            zero_grads();
            std::vector<nn::Vec> inputs;
            for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
                nn::Vec x(static_cast<std::size_t>(vocab), 0.0);
                x[static_cast<std::size_t>(ids[t])] = 1.0;
                inputs.push_back(std::move(x));
            }
            nn::LstmCache cache;
            const auto fwd = nn::lstm_forward(stack, inputs, &cache);
            std::vector<nn::Vec> dtop(inputs.size());
            double total = 0.0; // mean cross-entropy per transition, as trained
            const double scale = 1.0 / static_cast<double>(inputs.size());
            for (std::size_t t = 0; t < inputs.size(); ++t) {
                std::span<const nn::Vec> prefix(fwd.top_hidden.data(), t + 1);
                nn::AttnCache acache;
                const auto att = nn::attention_forward(attention, prefix, &acache);
                nn::Vec logits = nn::matvec(head.W, att.context);
                nn::add_scaled(logits, head.b);
                nn::Vec dlogits;
                total += nn::cross_entropy_from_logits(logits, ids[t + 1], &dlogits) * scale;
                for (auto& v : dlogits) v *= scale;
                nn::add_outer(grad_head.W, dlogits, att.context);
                nn::add_scaled(grad_head.b, dlogits);
                const nn::Vec dcontext = nn::matvec_transposed(head.W, dlogits);
                nn::attention_backward(attention, acache, prefix, dcontext, grad_att, dtop);
            }
            for (auto& d : dtop)
                if (d.empty()) d.assign(static_cast<std::size_t>(hidden), 0.0);
            const auto lg = nn::lstm_backward(stack, cache, dtop);
            for (std::size_t l = 0; l < lg.params.layers.size(); ++l) {
                auto& dst = grad_stack.layers[l];
                const auto& src = lg.params.layers[l];
                auto acc = [](nn::Matrix& a, const nn::Matrix& b) {
                    for (std::size_t k = 0; k < a.a.size(); ++k) a.a[k] += b.a[k];
                };
                acc(dst.Wi, src.Wi);
                acc(dst.Wf, src.Wf);
                acc(dst.Wo, src.Wo);
                acc(dst.Wg, src.Wg);
                acc(dst.Ui, src.Ui);
                acc(dst.Uf, src.Uf);
                acc(dst.Uo, src.Uo);
                acc(dst.Ug, src.Ug);
                nn::add_scaled(dst.bi, src.bi);
                nn::add_scaled(dst.bf, src.bf);
                nn::add_scaled(dst.bo, src.bo);
                nn::add_scaled(dst.bg, src.bg);
            }
            return total;
        };

        nn::ParamRegistry params, grads;
        params.add_stack("lstm", stack);
        params.add("att.W", attention.W);
        params.add("att.v", attention.v);
        params.add("head.W", head.W);
        params.add("head.b", head.b);
        grads.add_stack("lstm", grad_stack);
        grads.add("att.W", grad_att.W);
        grads.add("att.v", grad_att.v);
        grads.add("head.W", grad_head.W);
        grads.add("head.b", grad_head.b);
        c.expect(vocab == 6, "stack head width is 6");
        const double err = nn::grad_check(loss_with_grads, params, grads, 1e-3);
        c.expect(err < 1e-4, "LSTM+attention+softmax max relative error " + fmt(err) + " < 1e-4");
    }

    { // Q-network MLP with the MSE head used in training
        Rng rng(123);
        auto net = nn::make_mlp({10, 16, 16, 5}, rng);
        auto grads = net;
        nn::Vec x(10), y(5);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        for (auto& v : y) v = rng.uniform(-1.0, 1.0);
        nn::ParamRegistry params, grad_reg;
        params.add_mlp("q", net);
        grad_reg.add_mlp("q", grads);
        auto loss_fn = [&]() {
            for (auto& l : grads.layers) {
                std::fill(l.W.a.begin(), l.W.a.end(), 0.0);
                std::fill(l.b.begin(), l.b.end(), 0.0);
            }
            nn::MlpCache cache;
            const nn::Vec q = nn::mlp_forward(net, x, &cache);
            double loss = 0.0;
            nn::Vec dq(q.size());
            for (std::size_t i = 0; i < q.size(); ++i) {
                loss += (q[i] - y[i]) * (q[i] - y[i]);
                dq[i] = 2.0 * (q[i] - y[i]);
            }
            nn::mlp_backward(net, cache, dq, grads);
            return loss;
        };
        const double err = nn::grad_check(loss_fn, params, grad_reg, 1e-5);
        c.expect(err < 1e-4, "Q-network max relative error " + fmt(err) + " < 1e-4");
    }
    c.finish(10.0);
}

anomaly::Trace mutate_trace(const anomaly::Trace& t, Rng& rng,
                            const std::vector<std::string>& activities) {
    anomaly::Trace out = t;
    if (out.size() >= 2 && rng.next_double() < 0.5) {
        const std::size_t i = rng.uniform_int(out.size() - 1); // adjacent swap
        std::swap(out[i], out[i + 1]);
    } else {
        const std::size_t pos = rng.uniform_int(out.size() + 1); // random insertion
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos),
                   activities[rng.uniform_int(activities.size())]);
    }
    return out;
}

void criterion_5_detector_quality() {
    Criterion c("5. detector-quality (synthetic benchmark, AUC >= 0.9 on seeds 0-4)");
    const auto def = six_activity_model();
    const std::vector<std::string> activities{"A", "B", "C", "D", "E", "F"};

    double min_auc = 1.0;
    double max_flag_rate = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        sim::ScenarioConfig sc;
        sc.arrival_rate = 0.5;
        sc.seed = 1000 + seed;
        sc.horizon = 1500.0;
        const auto train_log = sim::run_simulation(def, sc).log;
        sc.seed = 2000 + seed;
        sc.horizon = 800.0;
        const auto val_log = sim::run_simulation(def, sc).log;
        sc.seed = 3000 + seed;
        sc.horizon = 1000.0;
        const auto test_log = sim::run_simulation(def, sc).log;

        std::vector<anomaly::Trace> train, val, held_out;
        for (auto& [cid, t] : anomaly::traces_from_log(train_log))
            if (!t.empty()) train.push_back(t);
        for (auto& [cid, t] : anomaly::traces_from_log(val_log))
            if (!t.empty()) val.push_back(t);
        for (auto& [cid, t] : anomaly::traces_from_log(test_log))
            if (!t.empty()) held_out.push_back(t);

        anomaly::DetectorConfig cfg;
        cfg.epochs = 20;
        cfg.hidden = 32;
        cfg.layers = 2;
        cfg.lr = 0.005;
        cfg.seed = seed;
        auto trained = anomaly::train_detector_on_traces(train, cfg);
        anomaly::calibrate_threshold(trained.model, val, 0.005);

        Rng rng(Rng::mix(77, seed));
        std::vector<std::pair<anomaly::Trace, bool>> labeled;
        std::size_t normals = 0, flagged_normals = 0;
        for (const auto& t : held_out) {
            if (rng.next_double() < 0.10) { // 10% anomaly rate
                labeled.push_back({mutate_trace(t, rng, activities), true});
            } else {
                labeled.push_back({t, false});
                ++normals;
                if (anomaly::score_trace(trained.model, t).flagged) ++flagged_normals;
            }
        }
        const auto metrics = anomaly::evaluate_detector(trained.model, labeled);
        const double auc = metrics.auc.value_or(0.0);
        const double flag_rate =
            normals > 0 ? static_cast<double>(flagged_normals) / static_cast<double>(normals)
                        : 0.0;
        min_auc = std::min(min_auc, auc);
        max_flag_rate = std::max(max_flag_rate, flag_rate);
        c.expect(auc >= 0.9, "seed " + std::to_string(seed) + ": AUC " + fmt(auc) + " >= 0.9");
    }
    c.expect(max_flag_rate <= 0.01,
             "held-out normal flag rate <= 1% on every seed (worst " + fmt(max_flag_rate) + ")");
    c.notes.push_back("min AUC across seeds: " + fmt(min_auc));
    c.finish(300.0);
}

void criterion_6_quality_exactness() {
    Criterion c("6. quality-metric exactness (closed-loop injection on 10,000-event logs)");

    // a real simulated log truncated to exactly 10,000 rows
    const auto def = queue_model(expo(1.0));
    sim::ScenarioConfig sc;
    sc.arrival_rate = 0.5;
    sc.horizon = 10000.0;
    sc.seed = 99;
    const auto log = sim::run_simulation(def, sc).log;
    auto table = quality::LogTable::from_csv(log.to_csv());
    if (table.rows.size() < 10000) {
        c.expect(false, "simulated log too small for the closed loop");
        c.finish(120.0);
        return;
    }
    table.rows.resize(10000);

    const auto rules = quality::FieldRules::defaults();
    const quality::QualityTargets targets;
    for (const double rate : {0.001, 0.01, 0.05}) {
        const auto dirty = quality::inject_defects(table, rate, rate, 0.0, 4242, rules);
        const auto report = quality::assess_quality(dirty, rules, targets);
        c.expect(report.missing_rate == rate, "missing rate " + fmt(rate) +
                                                  " recovered exactly (got " +
                                                  fmt(report.missing_rate) + ")");
        c.expect(report.anomaly_rate == rate, "anomaly rate " + fmt(rate) +
                                                  " recovered exactly (got " +
                                                  fmt(report.anomaly_rate) + ")");
        // hand-computed pass flags: strict comparison against 0.001 / 0.005 / 60
        c.expect(report.pass_missing == (rate < 0.001),
                 "missing pass flag matches hand computation at rate " + fmt(rate));
        c.expect(report.pass_anomaly == (rate < 0.005),
                 "anomaly pass flag matches hand computation at rate " + fmt(rate));
        c.expect(report.pass_latency, "latency passes with no ingest shift");
    }
    { // latency flags, hand computed: 30 < 60 passes, 90 >= 60 fails
        const auto shifted30 = quality::inject_defects(table, 0.0, 0.0, 30.0, 1, rules);
        const auto shifted90 = quality::inject_defects(table, 0.0, 0.0, 90.0, 1, rules);
        c.expect(quality::assess_quality(shifted30, rules, targets).pass_latency,
                 "latency 30 < 60 passes");
        c.expect(!quality::assess_quality(shifted90, rules, targets).pass_latency,
                 "latency 90 >= 60 fails");
    }
    c.finish(120.0);
}

// subprocess helpers for the CLI-facing criteria
std::string cli_path() {
    const char* env = std::getenv("BPO_CLI");
    return env ? env : "";
}

int run_cli(const std::string& args, const std::string& log_file) {
    const std::string cmd = cli_path() + " " + args + " > " + log_file + " 2>&1";
    return std::system(cmd.c_str());
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

void criterion_7_determinism() {
    Criterion c("7. determinism (CLI logs, checkpoint reload, DQN training)");
    const auto dir = std::filesystem::temp_directory_path() / "bpo-acceptance-determinism";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    if (cli_path().empty()) {
        c.expect(false, "BPO_CLI environment variable not set");
        c.finish(300.0);
        return;
    }

    { // byte-identical simulate runs through the CLI
        const auto def = queue_model(expo(1.0));
        write_file(dir / "model.json", model::serialize_process(def));
        const std::string base = " simulate " + (dir / "model.json").string() +
                                 " --rate 0.5 --horizon 1000 --seed 7 --log ";
        const int rc1 = run_cli(base + (dir / "a.csv").string(), (dir / "out1.txt").string());
        const int rc2 = run_cli(base + (dir / "b.csv").string(), (dir / "out2.txt").string());
        c.expect(rc1 == 0 && rc2 == 0, "CLI simulate runs exit 0");
        c.expect(!read_file(dir / "a.csv").empty() &&
                     read_file(dir / "a.csv") == read_file(dir / "b.csv"),
                 "equal seeds give byte-identical log CSVs");
    }

    { // checkpoint reload reproduces scores bit-identically
        std::vector<anomaly::Trace> corpus(30, anomaly::Trace{"A", "B", "C"});
        anomaly::DetectorConfig cfg;
        cfg.epochs = 15;
        cfg.hidden = 12;
        cfg.layers = 1;
        cfg.lr = 0.01;
        auto trained = anomaly::train_detector_on_traces(corpus, cfg);
        anomaly::calibrate_threshold(trained.model, corpus, 0.05);
        const auto reloaded =
            anomaly::DetectorModel::from_checkpoint_json(trained.model.to_checkpoint_json());
        bool bit_identical = true;
        for (const auto& t : std::vector<anomaly::Trace>{
                 {"A", "B", "C"}, {"C", "B", "A"}, {"A"}, {"A", "zz", "C"}})
            if (trained.model.score(t) != reloaded.score(t)) bit_identical = false;
        c.expect(bit_identical, "detector checkpoint reload reproduces scores bit-identically");
    }

    { // DQN training reproduces the training log
        const auto def = fanout_model({1.0, 3.0});
        sim::ScenarioConfig sc;
        sc.arrivals = {0.0};
        sc.horizon = 30.0;
        dqn::TrainConfig cfg;
        cfg.iterations = 300;
        cfg.batch_size = 16;
        cfg.buffer_capacity = 512;
        cfg.hidden = {16};
        cfg.seed = 3;
        const auto a = dqn::train_scheduler(def, sc, cfg);
        const auto b = dqn::train_scheduler(def, sc, cfg);
        c.expect(a.train_log_csv() == b.train_log_csv(),
                 "equal seeds reproduce the DQN training log");
        c.expect(a.policy.to_checkpoint_json() == b.policy.to_checkpoint_json(),
                 "equal seeds reproduce the final Q-network parameters");
    }
    c.finish(300.0);
}

void criterion_8_bench_regression() {
    Criterion c("8. bench-regression (improvement grows with scale; closed-form R^2)");

    { // three-scenario matrix with increasing load, fifo vs spt
        json matrix;
        matrix["repetitions"] = 3;
        json scenarios = json::array();
        const auto def = congested_two_role_model();
        const std::string model_json = model::serialize_process(def);
        int idx = 0;
        for (const double rate : {0.22, 0.27, 0.31}) {
            json s;
            s["label"] = "scale-" + std::to_string(idx++);
            s["process"] = json::parse(model_json);
            s["arrival_rate"] = rate;
            s["horizon"] = 4000.0;
            s["scale"] = rate * 1000.0;
            s["baseline_policy"] = "fifo";
            s["optimized_policy"] = "spt";
            scenarios.push_back(std::move(s));
        }
        matrix["scenarios"] = std::move(scenarios);
        const auto bench_matrix = bench::BenchMatrix::from_json(matrix.dump(), "");
        const auto report = bench::run_bench(bench_matrix);
        c.expect(report.regression.has_value(), "regression computed over 3 scenarios");
        if (report.regression)
            c.expect(report.regression->slope > 0.0,
                     "improvement-vs-scale slope " + fmt(report.regression->slope) + " > 0");
    }

    { // closed-form check on the reported scale/improvement triple
        const std::vector<std::pair<double, double>> pts{{1000.0, 35.0}, {3000.0, 42.0},
                                                         {6000.0, 48.0}};
        const auto r = opt::regress_improvement(pts);
        c.expect(r.slope > 0.0, "slope " + fmt(r.slope) + " > 0");
        c.expect(std::fabs(r.r_squared - 0.9946) <= 1e-3,
                 "R^2 on (1000,35),(3000,42),(6000,48) within 1e-3 of 0.9946 (measured " +
                     fmt(r.r_squared) + ")");
    }
    c.finish(600.0);
}

void criterion_9_service_reliability() {
    Criterion c("9. service-reliability (load test at concurrency 100 for 60s)");
    const auto dir = std::filesystem::temp_directory_path() / "bpo-acceptance-service";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    svc::ServerConfig config;
    config.port = 0;
    config.data_dir = dir.string();
    config.http_threads = 128;
    config.job_workers = 2;
    svc::Server server(config);
    server.start();
    const std::string base_url = "http://127.0.0.1:" + std::to_string(server.port());

    // a stored process and one finished simulation give the KPI read endpoint
    httplib::Client client("127.0.0.1", server.port());
    client.set_read_timeout(30, 0);
    const auto def = queue_model(expo(1.0));
    auto created = client.Post("/processes", model::serialize_process(def), "application/json");
    c.expect(created && created->status == 201, "process stored");
    json sim_req;
    sim_req["process_id"] = def.id;
    sim_req["scenario"] = {{"arrival_rate", 0.5}, {"horizon", 2000.0}, {"seed", 5}};
    auto submitted = client.Post("/simulations", sim_req.dump(), "application/json");
    c.expect(submitted && submitted->status == 202, "simulation job submitted");
    std::string job_id;
    if (submitted) job_id = json::parse(submitted->body)["job_id"];
    bool job_done = false;
    for (int i = 0; i < 600 && !job_done; ++i) {
        auto res = client.Get(("/jobs/" + job_id).c_str());
        if (res && json::parse(res->body)["status"] == "Done") job_done = true;
        else std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    c.expect(job_done, "simulation job finished");

    svc::LoadTestConfig lt;
    lt.base_url = base_url;
    lt.concurrency = 100;
    lt.duration_seconds = 60.0;
    lt.seed = 1;
    lt.endpoints = {{"/health", 1.0}, {"/simulations/" + job_id + "/kpis", 1.0}};
    const auto report = svc::load_test(lt);
    server.stop();

    c.expect(report.requests > 0, "issued " + std::to_string(report.requests) + " requests");
    c.expect(report.error_rate < 0.001, "error rate " + fmt(report.error_rate) +
                                            " < 0.1% (errors " + std::to_string(report.errors) +
                                            ")");
    c.expect(report.p95_ms < 200.0, "p95 latency " + fmt(report.p95_ms) + "ms < 200ms");
    c.notes.push_back("availability " + fmt(report.availability) + ", p50 " + fmt(report.p50_ms) +
                      "ms, p99 " + fmt(report.p99_ms) + "ms, max " + fmt(report.max_ms) + "ms");
    c.finish(300.0);
}

void criterion_10_format_closure() {
    Criterion c("10. format-closure (CLI artifacts re-consumable; 10-model corpus)");
    const auto dir = std::filesystem::temp_directory_path() / "bpo-acceptance-closure";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    if (cli_path().empty()) {
        c.expect(false, "BPO_CLI environment variable not set");
        c.finish(600.0);
        return;
    }

    // ten deterministic models covering every node kind and distribution
    std::vector<model::ProcessDefinition> corpus;
    corpus.push_back(queue_model(expo(1.0), "q-exp"));
    corpus.push_back(queue_model(det(2.0), "q-det"));
    {
        model::DurationDistribution u;
        u.kind = model::DistKind::Uniform;
        u.low = 1.0;
        u.high = 3.0;
        corpus.push_back(queue_model(u, "q-uniform"));
    }
    {
        model::DurationDistribution tn;
        tn.kind = model::DistKind::TruncatedNormal;
        tn.mean = 2.0;
        tn.stddev = 0.5;
        corpus.push_back(queue_model(tn, "q-normal"));
    }
    corpus.push_back(six_activity_model());
    corpus.push_back(congested_two_role_model());
    corpus.push_back(fanout_model({1.0, 2.0}));
    corpus.push_back(fanout_model({1.0, 3.0, 5.0}));
    {
        auto def = six_activity_model();
        def.id = "six-costed";
        for (auto& n : def.nodes)
            if (n.kind == model::NodeKind::Task) n.cost_rate = 1.25;
        def.pools[0].cost_rate = 0.75;
        corpus.push_back(def);
    }
    {
        auto def = congested_two_role_model();
        def.id = "tworole-wide";
        def.pools[1].capacity = 3;
        corpus.push_back(def);
    }

    bool parse_identity = true;
    for (const auto& def : corpus) {
        const auto text = model::serialize_process(def);
        const auto again = model::parse_process(text);
        if (model::serialize_process(again) != text) parse_identity = false;
    }
    c.expect(parse_identity, "parse -> serialize -> parse identity on all 10 models");

    int cli_ok = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto model_path = dir / ("model" + std::to_string(i) + ".json");
        write_file(model_path, model::serialize_process(corpus[i]));
        if (run_cli("validate " + model_path.string(), (dir / "v.txt").string()) == 0) ++cli_ok;
    }
    c.expect(cli_ok == 10,
             "CLI validate accepts every serialized model (" + std::to_string(cli_ok) + "/10)");

    // one emitted log flows unmodified through kpis, quality and detect
    const auto model_path = dir / "model4.json"; // the six-activity model
    const auto log_path = dir / "log.csv";
    int rc = run_cli("simulate " + model_path.string() +
                         " --rate 0.4 --horizon 600 --seed 3 --log " + log_path.string(),
                     (dir / "s.txt").string());
    c.expect(rc == 0, "CLI simulate emits a log");
    rc = run_cli("kpis " + model_path.string() + " " + log_path.string() +
                     " --horizon 600 --out " + (dir / "kpis.json").string(),
                 (dir / "k.txt").string());
    c.expect(rc == 0, "CLI kpis consumes the emitted log");
    rc = run_cli("quality " + log_path.string() + " --out " + (dir / "quality.json").string(),
                 (dir / "q.txt").string());
    c.expect(rc == 0, "CLI quality consumes the emitted log");
    rc = run_cli("train-detector " + log_path.string() + " --epochs 3 --hidden 8 --layers 1" +
                     " --out " + (dir / "detector.json").string(),
                 (dir / "t.txt").string());
    c.expect(rc == 0, "CLI train-detector consumes the emitted log");
    rc = run_cli("detect " + (dir / "detector.json").string() + " " + log_path.string() +
                     " --out " + (dir / "detect.json").string(),
                 (dir / "d.txt").string());
    c.expect(rc == 0, "CLI detect consumes the checkpoint and the log");
    c.expect(!read_file(dir / "kpis.json").empty() && !read_file(dir / "quality.json").empty() &&
                 !read_file(dir / "detect.json").empty(),
             "artifacts written and non-empty");

    // inject -> quality closes the loop at the CLI level too
    rc = run_cli("inject " + log_path.string() + " --missing 0.01 --seed 2 --out " +
                     (dir / "dirty.csv").string(),
                 (dir / "i.txt").string());
    c.expect(rc == 0, "CLI inject emits a dirty log");
    rc = run_cli("quality " + (dir / "dirty.csv").string() + " --out " +
                     (dir / "q2.json").string(),
                 (dir / "q2.txt").string());
    c.expect(rc == 0, "CLI quality consumes the dirty log");

    c.finish(600.0);
}

} // namespace

int main(int argc, char** argv) {
    // optional arguments select individual criteria, e.g. `acceptance 4 9`
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    auto wanted = [&](int n) {
        return selected.empty() ||
               std::find(selected.begin(), selected.end(), n) != selected.end();
    };
    std::cout << "=== acceptance suite ===\n";
    if (wanted(1)) criterion_1_queueing_oracle();
    if (wanted(2)) criterion_2_scheduler_optimality();
    if (wanted(3)) criterion_3_scheduler_improvement();
    if (wanted(4)) criterion_4_gradient_fidelity();
    if (wanted(5)) criterion_5_detector_quality();
    if (wanted(6)) criterion_6_quality_exactness();
    if (wanted(7)) criterion_7_determinism();
    if (wanted(8)) criterion_8_bench_regression();
    if (wanted(9)) criterion_9_service_reliability();
    if (wanted(10)) criterion_10_format_closure();
    std::cout << "=== " << (g_failures == 0 ? "all criteria passed"
                                            : std::to_string(g_failures) + " criterion(s) failed")
              << " ===\n";
    return g_failures == 0 ? 0 : 1;
}
