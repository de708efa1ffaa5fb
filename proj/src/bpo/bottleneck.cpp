#include "bpo/bottleneck.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace bpo::opt {

using nlohmann::json;
using nlohmann::ordered_json;

BottleneckReport find_bottlenecks(const sim::EventLog& log, const model::ProcessDefinition& def,
                                  double horizon) {
    if (log.events.empty()) fail(ErrorCode::Validation, "EmptyLog: no events to analyse");
    const auto kpis = sim::compute_kpis(log, def, horizon);

    BottleneckReport report;
    report.role_utilization = kpis.utilization;

    double total_wait = 0.0;
    std::map<std::string, std::pair<double, std::int64_t>> totals; // activity → (Σ wait, count)
    for (const auto& e : log.events) {
        const int ni = def.node_index(e.activity);
        if (ni < 0 || def.node(ni).kind != model::NodeKind::Task) continue;
        auto& t = totals[e.activity];
        t.first += e.start_time - e.enqueue_time;
        t.second += 1;
        total_wait += e.start_time - e.enqueue_time;
    }

    for (const auto& [activity, t] : totals) {
        ActivityWait w;
        w.activity = activity;
        w.mean_wait = t.second > 0 ? t.first / static_cast<double>(t.second) : 0.0;
        w.share = total_wait > 0.0 ? t.first / total_wait : 0.0;
        report.ranking.push_back(std::move(w));
    }
    std::sort(report.ranking.begin(), report.ranking.end(),
              [](const ActivityWait& a, const ActivityWait& b) {
                  if (a.mean_wait != b.mean_wait) return a.mean_wait > b.mean_wait;
                  return a.activity < b.activity;
              });
    return report;
}

std::string BottleneckReport::to_json() const {
    ordered_json j;
    ordered_json rank = ordered_json::array();
    for (const auto& w : ranking) {
        ordered_json e;
        e["activity"] = w.activity;
        e["mean_wait"] = w.mean_wait;
        e["share"] = w.share;
        rank.push_back(std::move(e));
    }
    j["ranking"] = std::move(rank);
    j["role_utilization"] = role_utilization;
    return j.dump(2) + "\n";
}

std::string Recommendation::label() const {
    if (kind == Kind::AddUnit) return "AddUnit(" + role + ")";
    return "MoveUnit(" + from_role + " -> " + role + ")";
}

namespace {

double mean_cycle_over_seeds(const model::ProcessDefinition& def,
                             const sim::ScenarioConfig& scenario,
                             std::span<const std::uint64_t> seeds, double* utilization,
                             double* cost) {
    double cycle = 0.0, util = 0.0, total_cost = 0.0;
    for (const auto seed : seeds) {
        sim::ScenarioConfig sc = scenario;
        sc.seed = seed;
        const auto res = sim::run_simulation(def, sc);
        cycle += res.kpis.mean_cycle_time;
        util += res.kpis.overall_utilization;
        total_cost += res.kpis.total_cost;
    }
    const double n = static_cast<double>(seeds.size());
    if (utilization) *utilization = util / n;
    if (cost) *cost = total_cost / n;
    return cycle / n;
}

sim::KpiReport summary_report(double cycle, double util, double cost) {
    sim::KpiReport r;
    r.mean_cycle_time = cycle;
    r.overall_utilization = util;
    r.total_cost = cost;
    return r;
}

} // namespace

std::vector<Recommendation> recommend(const model::ProcessDefinition& def,
                                      const sim::ScenarioConfig& scenario,
                                      const BottleneckReport& report, int budget,
                                      std::span<const std::uint64_t> seeds) {
    if (budget < 0) fail(ErrorCode::Config, "ConfigError: budget must be >= 0");
    std::vector<std::uint64_t> default_seeds{scenario.seed};
    if (seeds.empty()) seeds = default_seeds;

    // Top-3 bottleneck roles by ranking order, deduplicated.
    std::vector<std::string> top_roles;
    for (const auto& w : report.ranking) {
        if (top_roles.size() >= 3) break;
        const int ni = def.node_index(w.activity);
        if (ni < 0) continue;
        const std::string& role = def.node(ni).role;
        if (std::find(top_roles.begin(), top_roles.end(), role) == top_roles.end())
            top_roles.push_back(role);
    }

    // Lowest-utilization role is the donor for MoveUnit.
    std::string donor;
    double donor_util = std::numeric_limits<double>::infinity();
    for (const auto& [role, util] : report.role_utilization) {
        if (util < donor_util) {
            donor_util = util;
            donor = role;
        }
    }

    double base_util = 0.0, base_cost = 0.0;
    const double base_cycle = mean_cycle_over_seeds(def, scenario, seeds, &base_util, &base_cost);
    const auto baseline = summary_report(base_cycle, base_util, base_cost);

    struct Candidate {
        Recommendation rec;
        model::ProcessDefinition def;
    };
    std::vector<Candidate> candidates;

    for (const auto& role : top_roles) {
        if (budget >= 1) {
            Candidate c;
            c.rec.kind = Recommendation::Kind::AddUnit;
            c.rec.role = role;
            c.def = def;
            c.def.pools[static_cast<std::size_t>(c.def.pool_index(role))].capacity += 1;
            c.rec.cost_delta = def.pools[static_cast<std::size_t>(def.pool_index(role))].cost_rate;
            candidates.push_back(std::move(c));
        }
        if (!donor.empty() && donor != role) {
            const int donor_idx = def.pool_index(donor);
            if (donor_idx >= 0 && def.pools[static_cast<std::size_t>(donor_idx)].capacity >= 2) {
                Candidate c;
                c.rec.kind = Recommendation::Kind::MoveUnit;
                c.rec.role = role;
                c.rec.from_role = donor;
                c.def = def;
                c.def.pools[static_cast<std::size_t>(c.def.pool_index(role))].capacity += 1;
                c.def.pools[static_cast<std::size_t>(c.def.pool_index(donor))].capacity -= 1;
                c.rec.cost_delta =
                    def.pools[static_cast<std::size_t>(def.pool_index(role))].cost_rate -
                    def.pools[static_cast<std::size_t>(donor_idx)].cost_rate;
                candidates.push_back(std::move(c));
            }
        }
    }

    std::vector<Recommendation> out;
    for (auto& c : candidates) {
        double util = 0.0, cost = 0.0;
        const double cycle = mean_cycle_over_seeds(c.def, scenario, seeds, &util, &cost);
        c.rec.predicted = sim::compare_runs(baseline, summary_report(cycle, util, cost));
        if (c.rec.predicted.cycle_time_pct && *c.rec.predicted.cycle_time_pct > 0.0)
            out.push_back(std::move(c.rec));
    }
    std::sort(out.begin(), out.end(), [](const Recommendation& a, const Recommendation& b) {
        const double ia = a.predicted.cycle_time_pct.value_or(0.0);
        const double ib = b.predicted.cycle_time_pct.value_or(0.0);
        if (ia != ib) return ia > ib;
        return a.label() < b.label();
    });
    return out;
}

std::string recommendations_to_json(const BottleneckReport& report,
                                    std::span<const Recommendation> recs) {
    ordered_json j;
    j["bottlenecks"] = json::parse(report.to_json());
    ordered_json arr = ordered_json::array();
    for (const auto& r : recs) {
        ordered_json e;
        e["kind"] = r.kind == Recommendation::Kind::AddUnit ? "AddUnit" : "MoveUnit";
        e["role"] = r.role;
        if (r.kind == Recommendation::Kind::MoveUnit) e["from_role"] = r.from_role;
        e["predicted"] = json::parse(r.predicted.to_json());
        e["cost_delta"] = r.cost_delta;
        arr.push_back(std::move(e));
    }
    j["recommendations"] = std::move(arr);
    return j.dump(2) + "\n";
}

RegressionResult regress_improvement(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2)
        fail(ErrorCode::Validation, "regress_improvement needs at least two points");

    RegressionResult r;
    r.n = static_cast<std::int64_t>(points.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& [x, y] : points) {
        mean_x += x;
        mean_y += y;
    }
    mean_x /= static_cast<double>(points.size());
    mean_y /= static_cast<double>(points.size());

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if (sxx == 0.0) fail(ErrorCode::Validation, "DegenerateX: all scales are equal");

    r.slope = sxy / sxx;
    r.intercept = mean_y - r.slope * mean_x;
    if (syy == 0.0) {
        r.r_squared = 1.0; // constant y is fit exactly by the horizontal line
    } else {
        double ss_res = 0.0;
        for (const auto& [x, y] : points) {
            const double resid = y - (r.intercept + r.slope * x);
            ss_res += resid * resid;
        }
        r.r_squared = 1.0 - ss_res / syy;
    }
    return r;
}

std::string RegressionResult::to_json() const {
    ordered_json j;
    j["slope"] = slope;
    j["intercept"] = intercept;
    j["r_squared"] = r_squared;
    j["n"] = n;
    return j.dump(2) + "\n";
}

} // namespace bpo::opt
