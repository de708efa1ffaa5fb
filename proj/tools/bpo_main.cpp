// bpo — command-line front end over the libbpo C API.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bpo.h"

using nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

[[noreturn]] void die(bpo_status status) {
    std::cerr << "error: " << bpo_last_error() << "\n";
    std::exit(status == BPO_E_SYNTAX || status == BPO_E_VALIDATION ? kExitValidation
                                                                   : kExitRuntime);
}

void check(bpo_status status) {
    if (status != BPO_OK) die(status);
}

std::string take(char* s) {
    std::string out = s ? s : "";
    bpo_string_free(s);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open '" << path << "'\n";
        std::exit(kExitRuntime);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write '" << path << "'\n";
        std::exit(kExitRuntime);
    }
    out << content;
}

struct ScenarioFlags {
    double rate = 0.0;
    std::string arrivals;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    int max_in_flight = 500;
    std::string policy = "fifo";
    std::string scenario_file;

    void add_to(CLI::App* cmd, bool with_policy = true) {
        cmd->add_option("--rate", rate, "Poisson arrival rate (cases per time unit)");
        cmd->add_option("--arrivals", arrivals, "explicit arrival times, comma separated");
        cmd->add_option("--horizon", horizon, "simulation horizon in time units");
        cmd->add_option("--seed", seed, "random seed");
        cmd->add_option("--max-in-flight", max_in_flight, "concurrent case cap (default 500)");
        if (with_policy)
            cmd->add_option("--policy", policy, "fifo|random|spt|learned (default fifo)");
        cmd->add_option("--scenario", scenario_file, "scenario JSON file (overrides flags)");
    }

    std::string to_json() const {
        if (!scenario_file.empty()) return read_file(scenario_file);
        ordered_json j;
        if (!arrivals.empty()) {
            std::vector<double> ts;
            std::stringstream ss(arrivals);
            std::string item;
            while (std::getline(ss, item, ',')) ts.push_back(std::stod(item));
            j["arrivals"] = ts;
        } else {
            j["arrival_rate"] = rate;
        }
        j["horizon"] = horizon;
        j["seed"] = seed;
        j["max_in_flight"] = max_in_flight;
        j["policy"] = policy;
        return j.dump();
    }
};

bpo_process* load_process(const std::string& path) {
    bpo_process* process = nullptr;
    check(bpo_process_parse(read_file(path).c_str(), &process));
    return process;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
    return seeds;
}

std::string seeds_json(const std::vector<std::uint64_t>& seeds) {
    ordered_json j = seeds;
    return j.dump();
}

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bpo — process simulation, mining and scheduling engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bpo_version()));

    // validate -------------------------------------------------------------
    std::string validate_model;
    auto* cmd_validate = app.add_subcommand("validate", "check a process definition");
    cmd_validate->add_option("model", validate_model, "process document (JSON or BPMN-XML)")
        ->required();

    // simulate ---------------------------------------------------------------
    std::string sim_model, sim_log_out, sim_kpis_out, sim_policy_file;
    ScenarioFlags sim_flags;
    auto* cmd_simulate = app.add_subcommand("simulate", "run the discrete-event simulation");
    cmd_simulate->add_option("model", sim_model)->required();
    sim_flags.add_to(cmd_simulate);
    cmd_simulate->add_option("--policy-file", sim_policy_file, "policy checkpoint for --policy learned");
    cmd_simulate->add_option("--log", sim_log_out, "event-log CSV output path (default stdout)");
    cmd_simulate->add_option("--kpis", sim_kpis_out, "KPI JSON output path");

    // kpis -------------------------------------------------------------------
    std::string kpis_model, kpis_log, kpis_out;
    double kpis_horizon = 0.0;
    auto* cmd_kpis = app.add_subcommand("kpis", "compute KPIs from an event log");
    cmd_kpis->add_option("model", kpis_model)->required();
    cmd_kpis->add_option("log", kpis_log)->required();
    cmd_kpis->add_option("--horizon", kpis_horizon)->required();
    cmd_kpis->add_option("--out", kpis_out);

    // quality ------------------------------------------------------------------
    std::string q_log, q_rules, q_targets, q_out;
    auto* cmd_quality = app.add_subcommand("quality", "assess event-log quality");
    cmd_quality->add_option("log", q_log)->required();
    cmd_quality->add_option("--rules", q_rules, "field rules JSON file");
    cmd_quality->add_option("--targets", q_targets, "quality targets JSON file");
    cmd_quality->add_option("--out", q_out);

    // inject --------------------------------------------------------------------
    std::string inj_log, inj_rules, inj_out;
    double inj_missing = 0.0, inj_anomaly = 0.0, inj_latency = 0.0;
    std::uint64_t inj_seed = 0;
    auto* cmd_inject = app.add_subcommand("inject", "inject defects into an event log");
    cmd_inject->add_option("log", inj_log)->required();
    cmd_inject->add_option("--missing", inj_missing, "missing-slot rate in [0,1)");
    cmd_inject->add_option("--anomaly", inj_anomaly, "out-of-range rate in [0,1)");
    cmd_inject->add_option("--latency", inj_latency, "ingest-clock shift in time units");
    cmd_inject->add_option("--seed", inj_seed);
    cmd_inject->add_option("--rules", inj_rules, "field rules JSON file");
    cmd_inject->add_option("--out", inj_out, "dirty CSV output (default stdout)");

    // train-detector ---------------------------------------------------------
    std::vector<std::string> det_logs;
    std::string det_out, det_curve, det_calibrate;
    int det_epochs = 30, det_hidden = 32, det_layers = 2;
    double det_lr = 0.001, det_target_fpr = 0.005;
    std::uint64_t det_seed = 0;
    auto* cmd_train_det = app.add_subcommand("train-detector", "train the anomaly detector");
    cmd_train_det->add_option("logs", det_logs, "training event-log CSVs")->required();
    cmd_train_det->add_option("--epochs", det_epochs);
    cmd_train_det->add_option("--hidden", det_hidden);
    cmd_train_det->add_option("--layers", det_layers);
    cmd_train_det->add_option("--lr", det_lr);
    cmd_train_det->add_option("--seed", det_seed);
    cmd_train_det->add_option("--calibrate", det_calibrate, "validation log for threshold calibration");
    cmd_train_det->add_option("--target-fpr", det_target_fpr, "calibration target FPR (default 0.005)");
    cmd_train_det->add_option("--out", det_out, "checkpoint output path")->required();
    cmd_train_det->add_option("--curve", det_curve, "training-curve JSON output");

    // detect -------------------------------------------------------------------
    std::string detect_model, detect_log, detect_out;
    auto* cmd_detect = app.add_subcommand("detect", "score traces against a detector");
    cmd_detect->add_option("model", detect_model, "detector checkpoint")->required();
    cmd_detect->add_option("log", detect_log)->required();
    cmd_detect->add_option("--out", detect_out);

    // train-scheduler ------------------------------------------------------------
    std::string ts_model, ts_train_file, ts_out, ts_log_out;
    ScenarioFlags ts_flags;
    int ts_iterations = -1, ts_batch = -1, ts_sync = -1, ts_buffer = -1, ts_slots = -1;
    double ts_gamma = -1.0, ts_lr = -1.0, ts_episode_horizon = -1.0;
    std::uint64_t ts_seed = 0;
    bool ts_seed_set = false;
    auto* cmd_train_sched = app.add_subcommand("train-scheduler", "train the DQN scheduling policy");
    cmd_train_sched->add_option("model", ts_model)->required();
    ts_flags.add_to(cmd_train_sched, /*with_policy=*/false);
    cmd_train_sched->add_option("--train", ts_train_file, "train config JSON file");
    cmd_train_sched->add_option("--iterations", ts_iterations, "environment steps");
    cmd_train_sched->add_option("--gamma", ts_gamma);
    cmd_train_sched->add_option("--batch", ts_batch);
    cmd_train_sched->add_option("--target-sync", ts_sync);
    cmd_train_sched->add_option("--buffer", ts_buffer);
    cmd_train_sched->add_option("--lr", ts_lr);
    cmd_train_sched->add_option("--slots", ts_slots);
    cmd_train_sched->add_option("--episode-horizon", ts_episode_horizon);
    cmd_train_sched->add_option("--train-seed", ts_seed)->each([&](const std::string&) {
        ts_seed_set = true;
    });
    cmd_train_sched->add_option("--out", ts_out, "policy checkpoint output")->required();
    cmd_train_sched->add_option("--train-log", ts_log_out, "training log CSV output");

    // evaluate ---------------------------------------------------------------
    std::string ev_model, ev_policies = "fifo,spt", ev_policy_file, ev_seeds = "", ev_out;
    ScenarioFlags ev_flags;
    auto* cmd_evaluate = app.add_subcommand("evaluate", "compare scheduling policies on paired seeds");
    cmd_evaluate->add_option("model", ev_model)->required();
    ev_flags.add_to(cmd_evaluate, /*with_policy=*/false);
    cmd_evaluate->add_option("--policies", ev_policies, "comma-separated policy list");
    cmd_evaluate->add_option("--policy-file", ev_policy_file, "learned policy checkpoint");
    cmd_evaluate->add_option("--seeds", ev_seeds, "comma-separated seed list");
    cmd_evaluate->add_option("--out", ev_out);

    // optimize ------------------------------------------------------------------
    std::string opt_model, opt_seeds, opt_out;
    ScenarioFlags opt_flags;
    int opt_budget = 1;
    auto* cmd_optimize = app.add_subcommand("optimize", "find bottlenecks and recommend pool edits");
    cmd_optimize->add_option("model", opt_model)->required();
    opt_flags.add_to(cmd_optimize, /*with_policy=*/false);
    cmd_optimize->add_option("--budget", opt_budget, "max extra units (default 1)");
    cmd_optimize->add_option("--seeds", opt_seeds, "comma-separated what-if seeds");
    cmd_optimize->add_option("--out", opt_out);

    // bench ---------------------------------------------------------------------
    std::string bench_matrix, bench_out_dir = ".";
    auto* cmd_bench = app.add_subcommand("bench", "run a scenario matrix with regression");
    cmd_bench->add_option("matrix", bench_matrix, "bench matrix JSON file")->required();
    cmd_bench->add_option("--out-dir", bench_out_dir, "artifact directory (default .)");

    // serve ----------------------------------------------------------------------
    std::string srv_host = "127.0.0.1", srv_data = "bpo-data";
    int srv_port = 8080, srv_threads = 128, srv_workers = 2;
    auto* cmd_serve = app.add_subcommand("serve", "run the JSON-over-HTTP service");
    cmd_serve->add_option("--host", srv_host);
    cmd_serve->add_option("--port", srv_port, "0 picks a free port");
    cmd_serve->add_option("--data-dir", srv_data);
    cmd_serve->add_option("--threads", srv_threads, "HTTP worker threads");
    cmd_serve->add_option("--workers", srv_workers, "background job workers");

    // load-test ---------------------------------------------------------------
    std::string lt_url = "http://127.0.0.1:8080", lt_out;
    std::vector<std::string> lt_paths;
    int lt_concurrency = 10;
    double lt_duration = 10.0;
    std::uint64_t lt_seed = 0;
    auto* cmd_load = app.add_subcommand("load-test", "measure reliability of a running service");
    cmd_load->add_option("--url", lt_url);
    cmd_load->add_option("--concurrency", lt_concurrency);
    cmd_load->add_option("--duration", lt_duration, "seconds");
    cmd_load->add_option("--seed", lt_seed);
    cmd_load->add_option("--path", lt_paths, "GET endpoint (repeatable, default /health)");
    cmd_load->add_option("--out", lt_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        std::cout << bpo_version() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kExitRuntime;
    }

    if (cmd_validate->parsed()) {
        bpo_process* process = nullptr;
        const auto status = bpo_process_decode(read_file(validate_model).c_str(), &process);
        if (status != BPO_OK) die(status);
        char* violations = nullptr;
        check(bpo_process_validate(process, &violations));
        const std::string text = take(violations);
        bpo_process_free(process);
        const auto parsed = ordered_json::parse(text);
        if (!parsed.empty()) {
            for (const auto& v : parsed)
                std::cerr << v["code"].get<std::string>() << "(" << v["element"].get<std::string>()
                          << ")" << (v["detail"].get<std::string>().empty() ? "" : ": ")
                          << v["detail"].get<std::string>() << "\n";
            return kExitValidation;
        }
        return 0;
    }

    if (cmd_simulate->parsed()) {
        bpo_process* process = load_process(sim_model);
        bpo_policy* policy = nullptr;
        if (!sim_policy_file.empty())
            check(bpo_policy_load(read_file(sim_policy_file).c_str(), &policy));
        char* log_csv = nullptr;
        char* kpis = nullptr;
        check(bpo_simulate(process, sim_flags.to_json().c_str(), policy, &log_csv, &kpis));
        write_output(sim_log_out, take(log_csv));
        const std::string kpis_text = take(kpis);
        if (!sim_kpis_out.empty()) write_output(sim_kpis_out, kpis_text);
        bpo_policy_free(policy);
        bpo_process_free(process);
        return 0;
    }

    if (cmd_kpis->parsed()) {
        bpo_process* process = load_process(kpis_model);
        char* kpis = nullptr;
        check(bpo_kpis_from_log(process, read_file(kpis_log).c_str(), kpis_horizon, &kpis));
        write_output(kpis_out, take(kpis));
        bpo_process_free(process);
        return 0;
    }

    if (cmd_quality->parsed()) {
        char* report = nullptr;
        const std::string rules = q_rules.empty() ? "" : read_file(q_rules);
        const std::string targets = q_targets.empty() ? "" : read_file(q_targets);
        check(bpo_quality_assess(read_file(q_log).c_str(), rules.empty() ? nullptr : rules.c_str(),
                                 targets.empty() ? nullptr : targets.c_str(), &report));
        write_output(q_out, take(report));
        return 0;
    }

    if (cmd_inject->parsed()) {
        char* dirty = nullptr;
        const std::string rules = inj_rules.empty() ? "" : read_file(inj_rules);
        check(bpo_quality_inject(read_file(inj_log).c_str(), inj_missing, inj_anomaly, inj_latency,
                                 inj_seed, rules.empty() ? nullptr : rules.c_str(), &dirty));
        write_output(inj_out, take(dirty));
        return 0;
    }

    if (cmd_train_det->parsed()) {
        std::vector<std::string> contents;
        std::vector<const char*> pointers;
        for (const auto& path : det_logs) contents.push_back(read_file(path));
        for (const auto& c : contents) pointers.push_back(c.c_str());
        ordered_json config;
        config["epochs"] = det_epochs;
        config["hidden"] = det_hidden;
        config["layers"] = det_layers;
        config["lr"] = det_lr;
        config["seed"] = det_seed;
        bpo_detector* detector = nullptr;
        char* curve = nullptr;
        check(bpo_detector_train(pointers.data(), static_cast<int>(pointers.size()),
                                 config.dump().c_str(), &detector,
                                 det_curve.empty() ? nullptr : &curve));
        if (!det_curve.empty()) write_output(det_curve, take(curve));
        if (!det_calibrate.empty()) {
            double threshold = 0.0;
            check(bpo_detector_calibrate(detector, read_file(det_calibrate).c_str(),
                                         det_target_fpr, &threshold));
            std::cerr << "calibrated threshold: " << threshold << "\n";
        }
        char* checkpoint = nullptr;
        check(bpo_detector_save(detector, &checkpoint));
        write_output(det_out, take(checkpoint));
        bpo_detector_free(detector);
        return 0;
    }

    if (cmd_detect->parsed()) {
        bpo_detector* detector = nullptr;
        check(bpo_detector_load(read_file(detect_model).c_str(), &detector));
        char* results = nullptr;
        check(bpo_detector_score_log(detector, read_file(detect_log).c_str(), &results));
        write_output(detect_out, take(results));
        bpo_detector_free(detector);
        return 0;
    }

    if (cmd_train_sched->parsed()) {
        bpo_process* process = load_process(ts_model);
        std::string train_json;
        if (!ts_train_file.empty()) {
            train_json = read_file(ts_train_file);
        } else {
            ordered_json j;
            if (ts_iterations >= 0) j["iterations"] = ts_iterations;
            if (ts_gamma >= 0.0) j["gamma"] = ts_gamma;
            if (ts_batch > 0) j["batch_size"] = ts_batch;
            if (ts_sync > 0) j["target_sync"] = ts_sync;
            if (ts_buffer > 0) j["buffer_capacity"] = ts_buffer;
            if (ts_lr > 0.0) j["lr"] = ts_lr;
            if (ts_slots > 0) j["slots"] = ts_slots;
            if (ts_episode_horizon > 0.0) j["episode_horizon"] = ts_episode_horizon;
            if (ts_seed_set) j["seed"] = ts_seed;
            train_json = j.dump();
        }
        bpo_policy* policy = nullptr;
        char* train_log = nullptr;
        check(bpo_scheduler_train(process, ts_flags.to_json().c_str(), train_json.c_str(), &policy,
                                  &train_log));
        const std::string log_text = take(train_log);
        if (!ts_log_out.empty()) write_output(ts_log_out, log_text);
        char* checkpoint = nullptr;
        check(bpo_policy_save(policy, &checkpoint));
        write_output(ts_out, take(checkpoint));
        bpo_policy_free(policy);
        bpo_process_free(process);
        return 0;
    }

    if (cmd_evaluate->parsed()) {
        bpo_process* process = load_process(ev_model);
        bpo_policy* policy = nullptr;
        if (!ev_policy_file.empty())
            check(bpo_policy_load(read_file(ev_policy_file).c_str(), &policy));
        char* report = nullptr;
        const std::string seeds =
            ev_seeds.empty() ? "" : seeds_json(parse_seed_list(ev_seeds));
        check(bpo_evaluate_policies(process, ev_flags.to_json().c_str(), ev_policies.c_str(),
                                    policy, seeds.empty() ? nullptr : seeds.c_str(), &report));
        write_output(ev_out, take(report));
        bpo_policy_free(policy);
        bpo_process_free(process);
        return 0;
    }

    if (cmd_optimize->parsed()) {
        bpo_process* process = load_process(opt_model);
        char* recs = nullptr;
        const std::string seeds =
            opt_seeds.empty() ? "" : seeds_json(parse_seed_list(opt_seeds));
        check(bpo_recommend(process, opt_flags.to_json().c_str(), opt_budget,
                            seeds.empty() ? nullptr : seeds.c_str(), &recs));
        write_output(opt_out, take(recs));
        bpo_process_free(process);
        return 0;
    }

    if (cmd_bench->parsed()) {
        const std::string base_dir = std::filesystem::path(bench_matrix).parent_path().string();
        char* report = nullptr;
        check(bpo_run_bench(read_file(bench_matrix).c_str(), base_dir.c_str(),
                            bench_out_dir.c_str(), &report));
        take(report);
        std::cout << read_file((std::filesystem::path(bench_out_dir) / "summary.txt").string());
        return 0;
    }

    if (cmd_serve->parsed()) {
        ordered_json config;
        config["host"] = srv_host;
        config["port"] = srv_port;
        config["data_dir"] = srv_data;
        config["http_threads"] = srv_threads;
        config["job_workers"] = srv_workers;
        bpo_server* server = nullptr;
        check(bpo_server_start(config.dump().c_str(), &server));
        int port = 0;
        bpo_server_port(server, &port);
        std::cerr << "listening on http://" << srv_host << ":" << port << " (data dir: "
                  << srv_data << ")\n";
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        check(bpo_server_stop(server));
        bpo_server_free(server);
        return 0;
    }

    if (cmd_load->parsed()) {
        ordered_json config;
        config["base_url"] = lt_url;
        config["concurrency"] = lt_concurrency;
        config["duration_seconds"] = lt_duration;
        config["seed"] = lt_seed;
        if (lt_paths.empty()) lt_paths.push_back("/health");
        ordered_json eps = ordered_json::array();
        for (const auto& p : lt_paths) eps.push_back({{"path", p}, {"weight", 1.0}});
        config["endpoints"] = std::move(eps);
        char* report = nullptr;
        check(bpo_load_test(config.dump().c_str(), &report));
        write_output(lt_out, take(report));
        return 0;
    }

    return kExitRuntime;
}
