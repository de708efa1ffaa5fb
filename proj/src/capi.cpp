#include "bpo.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "bpo/anomaly.hpp"
#include "bpo/bench.hpp"
#include "bpo/bottleneck.hpp"
#include "bpo/data_quality.hpp"
#include "bpo/dqn.hpp"
#include "bpo/event_log.hpp"
#include "bpo/load_test.hpp"
#include "bpo/process_model.hpp"
#include "bpo/service.hpp"
#include "bpo/sim_engine.hpp"

using nlohmann::json;
using nlohmann::ordered_json;

struct bpo_process {
    bpo::model::ProcessDefinition def;
};
struct bpo_detector {
    bpo::anomaly::DetectorModel model;
};
struct bpo_policy {
    bpo::dqn::SchedulerPolicy policy;
};
struct bpo_server {
    bpo::svc::Server server;
    explicit bpo_server(bpo::svc::ServerConfig cfg) : server(std::move(cfg)) {}
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

bpo_status status_of(const bpo::Error& e) {
    switch (e.code()) {
        case bpo::ErrorCode::Syntax: return BPO_E_SYNTAX;
        case bpo::ErrorCode::Validation: return BPO_E_VALIDATION;
        case bpo::ErrorCode::Config: return BPO_E_CONFIG;
        case bpo::ErrorCode::Io: return BPO_E_IO;
        case bpo::ErrorCode::Runtime: return BPO_E_RUNTIME;
    }
    return BPO_E_RUNTIME;
}

template <typename Fn>
bpo_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return BPO_OK;
    } catch (const bpo::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return BPO_E_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return BPO_E_RUNTIME;
    }
}

bpo_status null_arg(const char* what) {
    g_last_error = std::string("null argument: ") + what;
    return BPO_E_NULL;
}

std::vector<std::uint64_t> parse_seeds(const char* seeds_json) {
    if (!seeds_json) return {};
    json j = json::parse(seeds_json, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        bpo::fail(bpo::ErrorCode::Config, "ConfigError: seeds must be a JSON array");
    return j.get<std::vector<std::uint64_t>>();
}

} // namespace

extern "C" {

const char* bpo_version(void) { return "1.0.0"; }

const char* bpo_last_error(void) { return g_last_error.c_str(); }

void bpo_string_free(char* s) { std::free(s); }

/* ---- process model ----------------------------------------------------- */

bpo_status bpo_process_parse(const char* text, bpo_process** out) {
    if (!text || !out) return null_arg("bpo_process_parse");
    return guarded([&] { *out = new bpo_process{bpo::model::parse_process(text)}; });
}

bpo_status bpo_process_decode(const char* text, bpo_process** out) {
    if (!text || !out) return null_arg("bpo_process_decode");
    return guarded([&] {
        *out = new bpo_process{bpo::model::looks_like_xml(text)
                                   ? bpo::model::import_bpmn_xml(text)
                                   : bpo::model::parse_document(text)};
    });
}

bpo_status bpo_process_serialize(const bpo_process* process, char** json_out) {
    if (!process || !json_out) return null_arg("bpo_process_serialize");
    return guarded([&] { *json_out = dup_string(bpo::model::serialize_process(process->def)); });
}

bpo_status bpo_process_validate(const bpo_process* process, char** violations_json_out) {
    if (!process || !violations_json_out) return null_arg("bpo_process_validate");
    return guarded([&] {
        ordered_json arr = ordered_json::array();
        for (const auto& v : bpo::model::validate(process->def)) {
            ordered_json e;
            e["code"] = v.code;
            e["element"] = v.element;
            e["detail"] = v.detail;
            arr.push_back(std::move(e));
        }
        *violations_json_out = dup_string(arr.dump(2) + "\n");
    });
}

void bpo_process_free(bpo_process* process) { delete process; }

/* ---- simulation ---------------------------------------------------------- */

bpo_status bpo_simulate(const bpo_process* process, const char* scenario_json,
                        const bpo_policy* learned, char** log_csv_out, char** kpis_json_out) {
    if (!process || !scenario_json) return null_arg("bpo_simulate");
    return guarded([&] {
        const auto scenario = bpo::sim::ScenarioConfig::from_json(scenario_json);
        std::unique_ptr<bpo::dqn::LearnedPolicy> wrapper;
        bpo::sim::SchedulingPolicy* external = nullptr;
        if (scenario.policy == bpo::sim::PolicyKind::Learned) {
            if (!learned)
                bpo::fail(bpo::ErrorCode::Config,
                          "ConfigError: scenario policy is 'learned' but no policy handle given");
            wrapper = std::make_unique<bpo::dqn::LearnedPolicy>(learned->policy);
            external = wrapper.get();
        }
        const auto result = bpo::sim::run_simulation(process->def, scenario, external);
        if (log_csv_out) *log_csv_out = dup_string(result.log.to_csv());
        if (kpis_json_out) *kpis_json_out = dup_string(result.kpis.to_json());
    });
}

bpo_status bpo_kpis_from_log(const bpo_process* process, const char* log_csv, double horizon,
                             char** kpis_json_out) {
    if (!process || !log_csv || !kpis_json_out) return null_arg("bpo_kpis_from_log");
    return guarded([&] {
        const auto log = bpo::sim::EventLog::from_csv(log_csv);
        *kpis_json_out = dup_string(bpo::sim::compute_kpis(log, process->def, horizon).to_json());
    });
}

bpo_status bpo_compare_kpis(const char* baseline_kpis_json, const char* optimized_kpis_json,
                            char** improvement_json_out) {
    if (!baseline_kpis_json || !optimized_kpis_json || !improvement_json_out)
        return null_arg("bpo_compare_kpis");
    return guarded([&] {
        const auto base = bpo::sim::KpiReport::from_json(baseline_kpis_json);
        const auto opt = bpo::sim::KpiReport::from_json(optimized_kpis_json);
        *improvement_json_out = dup_string(bpo::sim::compare_runs(base, opt).to_json());
    });
}

/* ---- data quality -------------------------------------------------------- */

bpo_status bpo_quality_assess(const char* log_csv, const char* rules_json,
                              const char* targets_json, char** report_json_out) {
    if (!log_csv || !report_json_out) return null_arg("bpo_quality_assess");
    return guarded([&] {
        const auto table = bpo::quality::LogTable::from_csv(log_csv);
        const auto rules = rules_json ? bpo::quality::FieldRules::from_json(rules_json)
                                      : bpo::quality::FieldRules::defaults();
        const auto targets = targets_json ? bpo::quality::QualityTargets::from_json(targets_json)
                                          : bpo::quality::QualityTargets{};
        *report_json_out =
            dup_string(bpo::quality::assess_quality(table, rules, targets).to_json());
    });
}

bpo_status bpo_quality_inject(const char* log_csv, double missing_rate, double anomaly_rate,
                              double latency_shift, uint64_t seed, const char* rules_json,
                              char** dirty_csv_out) {
    if (!log_csv || !dirty_csv_out) return null_arg("bpo_quality_inject");
    return guarded([&] {
        const auto table = bpo::quality::LogTable::from_csv(log_csv);
        const auto rules = rules_json ? bpo::quality::FieldRules::from_json(rules_json)
                                      : bpo::quality::FieldRules::defaults();
        *dirty_csv_out = dup_string(
            bpo::quality::inject_defects(table, missing_rate, anomaly_rate, latency_shift, seed,
                                         rules)
                .to_csv());
    });
}

/* ---- anomaly detector ---------------------------------------------------- */

bpo_status bpo_detector_train(const char* const* logs_csv, int n_logs, const char* config_json,
                              bpo_detector** out, char** curve_json_out) {
    if (!logs_csv || n_logs < 1 || !out) return null_arg("bpo_detector_train");
    return guarded([&] {
        std::vector<bpo::sim::EventLog> logs;
        for (int i = 0; i < n_logs; ++i) {
            if (!logs_csv[i]) bpo::fail(bpo::ErrorCode::Config, "ConfigError: null log CSV");
            logs.push_back(bpo::sim::EventLog::from_csv(logs_csv[i]));
        }
        const auto config = config_json ? bpo::anomaly::DetectorConfig::from_json(config_json)
                                        : bpo::anomaly::DetectorConfig{};
        auto result = bpo::anomaly::train_detector(logs, config);
        if (curve_json_out) {
            ordered_json curve = result.epoch_loss;
            *curve_json_out = dup_string(curve.dump() + "\n");
        }
        *out = new bpo_detector{std::move(result.model)};
    });
}

bpo_status bpo_detector_save(const bpo_detector* detector, char** checkpoint_json_out) {
    if (!detector || !checkpoint_json_out) return null_arg("bpo_detector_save");
    return guarded(
        [&] { *checkpoint_json_out = dup_string(detector->model.to_checkpoint_json()); });
}

bpo_status bpo_detector_load(const char* checkpoint_json, bpo_detector** out) {
    if (!checkpoint_json || !out) return null_arg("bpo_detector_load");
    return guarded([&] {
        *out = new bpo_detector{bpo::anomaly::DetectorModel::from_checkpoint_json(checkpoint_json)};
    });
}

bpo_status bpo_detector_calibrate(bpo_detector* detector, const char* log_csv, double target_fpr,
                                  double* threshold_out) {
    if (!detector || !log_csv) return null_arg("bpo_detector_calibrate");
    return guarded([&] {
        const auto log = bpo::sim::EventLog::from_csv(log_csv);
        std::vector<bpo::anomaly::Trace> traces;
        for (auto& [case_id, trace] : bpo::anomaly::traces_from_log(log))
            traces.push_back(trace);
        const auto result =
            bpo::anomaly::calibrate_threshold(detector->model, traces, target_fpr);
        if (threshold_out) *threshold_out = result.threshold;
    });
}

bpo_status bpo_detector_score_log(const bpo_detector* detector, const char* log_csv,
                                  char** results_json_out) {
    if (!detector || !log_csv || !results_json_out) return null_arg("bpo_detector_score_log");
    return guarded([&] {
        const auto log = bpo::sim::EventLog::from_csv(log_csv);
        ordered_json arr = ordered_json::array();
        for (const auto& [case_id, trace] : bpo::anomaly::traces_from_log(log)) {
            const auto r = bpo::anomaly::score_trace(detector->model, trace, case_id);
            ordered_json e;
            e["case_id"] = r.case_id;
            e["score"] = r.score;
            e["flagged"] = r.flagged;
            arr.push_back(std::move(e));
        }
        ordered_json j;
        j["threshold"] = std::isfinite(detector->model.threshold)
                             ? ordered_json(detector->model.threshold)
                             : ordered_json(nullptr);
        j["results"] = std::move(arr);
        *results_json_out = dup_string(j.dump(2) + "\n");
    });
}

bpo_status bpo_detector_score_trace(const bpo_detector* detector, const char* const* activities,
                                    int n_activities, double* score_out, int* flagged_out) {
    if (!detector || (!activities && n_activities > 0) || !score_out)
        return null_arg("bpo_detector_score_trace");
    return guarded([&] {
        bpo::anomaly::Trace trace;
        for (int i = 0; i < n_activities; ++i) trace.push_back(activities[i]);
        const auto r = bpo::anomaly::score_trace(detector->model, trace);
        *score_out = r.score;
        if (flagged_out) *flagged_out = r.flagged ? 1 : 0;
    });
}

void bpo_detector_free(bpo_detector* detector) { delete detector; }

/* ---- DQN scheduler ------------------------------------------------------- */

bpo_status bpo_scheduler_train(const bpo_process* process, const char* scenario_json,
                               const char* train_json, bpo_policy** out,
                               char** train_log_csv_out) {
    if (!process || !scenario_json || !out) return null_arg("bpo_scheduler_train");
    return guarded([&] {
        const auto scenario = bpo::sim::ScenarioConfig::from_json(scenario_json);
        const auto config = train_json ? bpo::dqn::TrainConfig::from_json(train_json)
                                       : bpo::dqn::TrainConfig{};
        auto result = bpo::dqn::train_scheduler(process->def, scenario, config);
        if (train_log_csv_out) *train_log_csv_out = dup_string(result.train_log_csv());
        *out = new bpo_policy{std::move(result.policy)};
    });
}

bpo_status bpo_policy_save(const bpo_policy* policy, char** checkpoint_json_out) {
    if (!policy || !checkpoint_json_out) return null_arg("bpo_policy_save");
    return guarded(
        [&] { *checkpoint_json_out = dup_string(policy->policy.to_checkpoint_json()); });
}

bpo_status bpo_policy_load(const char* checkpoint_json, bpo_policy** out) {
    if (!checkpoint_json || !out) return null_arg("bpo_policy_load");
    return guarded([&] {
        *out = new bpo_policy{bpo::dqn::SchedulerPolicy::from_checkpoint_json(checkpoint_json)};
    });
}

void bpo_policy_free(bpo_policy* policy) { delete policy; }

bpo_status bpo_evaluate_policies(const bpo_process* process, const char* scenario_json,
                                 const char* policies_csv, const bpo_policy* learned,
                                 const char* seeds_json, char** report_json_out) {
    if (!process || !scenario_json || !policies_csv || !report_json_out)
        return null_arg("bpo_evaluate_policies");
    return guarded([&] {
        const auto scenario = bpo::sim::ScenarioConfig::from_json(scenario_json);
        std::vector<bpo::sim::PolicyKind> kinds;
        std::string cur;
        const std::string src = std::string(policies_csv) + ",";
        for (char c : src) {
            if (c != ',') {
                cur.push_back(c);
                continue;
            }
            if (cur.empty()) continue;
            const auto kind = bpo::sim::policy_kind_from_string(cur);
            if (!kind)
                bpo::fail(bpo::ErrorCode::Config, "ConfigError: unknown policy '" + cur + "'");
            kinds.push_back(*kind);
            cur.clear();
        }
        if (kinds.empty()) bpo::fail(bpo::ErrorCode::Config, "ConfigError: no policies given");
        auto seeds = parse_seeds(seeds_json);
        if (seeds.empty()) seeds.push_back(scenario.seed);
        const auto report = bpo::dqn::evaluate_policy(
            process->def, scenario, kinds, learned ? &learned->policy : nullptr, seeds);
        *report_json_out = dup_string(report.to_json());
    });
}

/* ---- bottleneck optimizer ------------------------------------------------ */

bpo_status bpo_find_bottlenecks(const bpo_process* process, const char* log_csv, double horizon,
                                char** report_json_out) {
    if (!process || !log_csv || !report_json_out) return null_arg("bpo_find_bottlenecks");
    return guarded([&] {
        const auto log = bpo::sim::EventLog::from_csv(log_csv);
        *report_json_out =
            dup_string(bpo::opt::find_bottlenecks(log, process->def, horizon).to_json());
    });
}

bpo_status bpo_recommend(const bpo_process* process, const char* scenario_json, int budget,
                         const char* seeds_json, char** recommendations_json_out) {
    if (!process || !scenario_json || !recommendations_json_out) return null_arg("bpo_recommend");
    return guarded([&] {
        const auto scenario = bpo::sim::ScenarioConfig::from_json(scenario_json);
        auto seeds = parse_seeds(seeds_json);
        if (seeds.empty()) seeds.push_back(scenario.seed);
        const auto result = bpo::sim::run_simulation(process->def, scenario);
        const auto report =
            bpo::opt::find_bottlenecks(result.log, process->def, scenario.horizon);
        const auto recs = bpo::opt::recommend(process->def, scenario, report, budget, seeds);
        *recommendations_json_out = dup_string(bpo::opt::recommendations_to_json(report, recs));
    });
}

bpo_status bpo_regress(const char* points_json, char** result_json_out) {
    if (!points_json || !result_json_out) return null_arg("bpo_regress");
    return guarded([&] {
        json j = json::parse(points_json, nullptr, false);
        if (j.is_discarded() || !j.is_array())
            bpo::fail(bpo::ErrorCode::Syntax, "SyntaxError: points must be a JSON array");
        std::vector<std::pair<double, double>> points;
        for (const auto& p : j) {
            if (!p.is_array() || p.size() != 2)
                bpo::fail(bpo::ErrorCode::Syntax, "SyntaxError: each point must be [x, y]");
            points.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        *result_json_out = dup_string(bpo::opt::regress_improvement(points).to_json());
    });
}

/* ---- bench ---------------------------------------------------------------- */

bpo_status bpo_run_bench(const char* matrix_json, const char* base_dir, const char* out_dir,
                         char** report_json_out) {
    if (!matrix_json) return null_arg("bpo_run_bench");
    return guarded([&] {
        const auto matrix =
            bpo::bench::BenchMatrix::from_json(matrix_json, base_dir ? base_dir : "");
        const auto report = out_dir ? bpo::bench::run_bench_to_dir(matrix, out_dir)
                                    : bpo::bench::run_bench(matrix);
        if (report_json_out) *report_json_out = dup_string(report.to_json());
    });
}

/* ---- HTTP service ---------------------------------------------------------- */

bpo_status bpo_server_start(const char* config_json, bpo_server** out) {
    if (!out) return null_arg("bpo_server_start");
    return guarded([&] {
        const auto config = config_json ? bpo::svc::ServerConfig::from_json(config_json)
                                        : bpo::svc::ServerConfig{};
        auto server = std::make_unique<bpo_server>(config);
        server->server.start();
        *out = server.release();
    });
}

bpo_status bpo_server_port(const bpo_server* server, int* port_out) {
    if (!server || !port_out) return null_arg("bpo_server_port");
    *port_out = server->server.port();
    return BPO_OK;
}

bpo_status bpo_server_stop(bpo_server* server) {
    if (!server) return null_arg("bpo_server_stop");
    return guarded([&] { server->server.stop(); });
}

void bpo_server_free(bpo_server* server) { delete server; }

bpo_status bpo_load_test(const char* config_json, char** report_json_out) {
    if (!config_json || !report_json_out) return null_arg("bpo_load_test");
    return guarded([&] {
        const auto config = bpo::svc::LoadTestConfig::from_json(config_json);
        *report_json_out = dup_string(bpo::svc::load_test(config).to_json());
    });
}

} // extern "C"
