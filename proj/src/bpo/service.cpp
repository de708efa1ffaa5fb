#include "bpo/service.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bpo/anomaly.hpp"
#include "bpo/data_quality.hpp"
#include "bpo/dqn.hpp"
#include "bpo/process_model.hpp"
#include "bpo/sim_engine.hpp"

namespace bpo::svc {

using nlohmann::json;
using nlohmann::ordered_json;

std::string ServerConfig::to_json() const {
    ordered_json j;
    j["host"] = host;
    j["port"] = port;
    j["data_dir"] = data_dir;
    j["http_threads"] = http_threads;
    j["job_workers"] = job_workers;
    return j.dump();
}

ServerConfig ServerConfig::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Config, "ConfigError: server config must be a JSON object");
    ServerConfig c;
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.data_dir = j.value("data_dir", c.data_dir);
    c.http_threads = j.value("http_threads", c.http_threads);
    c.job_workers = j.value("job_workers", c.job_workers);
    if (c.port < 0 || c.http_threads < 1 || c.job_workers < 1)
        fail(ErrorCode::Config, "ConfigError: server config out of range");
    return c;
}

namespace {

double unix_seconds() {
    return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
    out << content;
}

struct JobRecord {
    std::string id;
    std::string kind;   // Simulate | TrainScheduler
    std::string status = "Queued";
    std::string result_ref;
    std::string error;
    double submitted_at = 0.0;
    double finished_at = 0.0;

    ordered_json to_json() const {
        ordered_json j;
        j["job_id"] = id;
        j["kind"] = kind;
        j["status"] = status;
        j["result_ref"] = result_ref;
        if (!error.empty()) j["error"] = error;
        j["submitted_at"] = submitted_at;
        if (finished_at > 0.0) j["finished_at"] = finished_at;
        return j;
    }
};

void reply_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    ordered_json j;
    j["error"] = message;
    reply_json(res, status, j);
}

int status_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::Syntax:
        case ErrorCode::Validation:
        case ErrorCode::Config: return 422;
        case ErrorCode::Io: return 500;
        case ErrorCode::Runtime: return 500;
    }
    return 500;
}

} // namespace

struct Server::Impl {
    ServerConfig cfg;
    httplib::Server http;
    std::thread listen_thread;
    int bound_port = 0;
    std::atomic<bool> running{false};

    // Job registry: single-writer via mutex; artifacts are written once by the
    // owning job and read-only afterwards.
    std::mutex jobs_mutex;
    std::map<std::string, JobRecord> jobs;
    std::uint64_t next_job = 0;

    std::mutex queue_mutex;
    std::condition_variable queue_cv;
    std::deque<std::function<void()>> queue;
    std::vector<std::thread> workers;
    bool shutting_down = false;

    std::mutex processes_mutex;
    std::map<std::string, model::ProcessDefinition> processes;

    explicit Impl(ServerConfig config) : cfg(std::move(config)) {}

    std::filesystem::path data_dir() const { return cfg.data_dir; }

    void load_persisted_processes() {
        const auto dir = data_dir() / "processes";
        if (!std::filesystem::is_directory(dir)) return;
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.path().extension() != ".json") continue;
            try {
                auto def = model::parse_process(read_file(entry.path()));
                std::lock_guard lock(processes_mutex);
                processes[def.id] = std::move(def);
            } catch (const std::exception&) {
                // skip unreadable artifacts
            }
        }
    }

    std::string submit_job(const std::string& kind, const std::string& prefix,
                           std::function<void(const std::string& id,
                                              const std::filesystem::path& dir)> work) {
        std::string id;
        std::filesystem::path dir;
        {
            std::lock_guard lock(jobs_mutex);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%s-%06llu", prefix.c_str(),
                          static_cast<unsigned long long>(++next_job));
            id = buf;
            dir = data_dir() / "jobs" / id;
            JobRecord rec;
            rec.id = id;
            rec.kind = kind;
            rec.result_ref = dir.string();
            rec.submitted_at = unix_seconds();
            jobs[id] = rec;
        }
        std::filesystem::create_directories(dir);
        {
            std::lock_guard lock(queue_mutex);
            queue.push_back([this, id, dir, work = std::move(work)]() {
                set_status(id, "Running", "");
                try {
                    work(id, dir);
                    set_status(id, "Done", "");
                } catch (const std::exception& e) {
                    set_status(id, "Failed", e.what());
                }
            });
        }
        queue_cv.notify_one();
        return id;
    }

    void set_status(const std::string& id, const std::string& status, const std::string& error) {
        std::lock_guard lock(jobs_mutex);
        auto it = jobs.find(id);
        if (it == jobs.end()) return;
        it->second.status = status;
        it->second.error = error;
        if (status == "Done" || status == "Failed") it->second.finished_at = unix_seconds();
    }

    std::optional<JobRecord> job(const std::string& id) {
        std::lock_guard lock(jobs_mutex);
        auto it = jobs.find(id);
        if (it == jobs.end()) return std::nullopt;
        return it->second;
    }

    void worker_loop() {
        for (;;) {
            std::function<void()> work;
            {
                std::unique_lock lock(queue_mutex);
                queue_cv.wait(lock, [&] { return shutting_down || !queue.empty(); });
                if (queue.empty()) {
                    if (shutting_down) return;
                    continue;
                }
                work = std::move(queue.front());
                queue.pop_front();
            }
            work();
        }
    }

    model::ProcessDefinition find_process(const std::string& id) {
        std::lock_guard lock(processes_mutex);
        auto it = processes.find(id);
        if (it == processes.end()) fail(ErrorCode::Io, "unknown process '" + id + "'");
        return it->second;
    }

    void install_routes();
};

void Server::Impl::install_routes() {
    http.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"status\":\"ok\"}\n", "application/json");
    });

    http.Post("/processes", [this](const httplib::Request& req, httplib::Response& res) {
        model::ProcessDefinition def;
        try {
            def = model::looks_like_xml(req.body) ? model::import_bpmn_xml(req.body)
                                                  : model::parse_document(req.body);
        } catch (const Error& e) {
            return reply_error(res, 422, e.what());
        }
        const auto violations = model::validate(def);
        if (!violations.empty()) {
            ordered_json j;
            j["error"] = "validation failed";
            ordered_json arr = ordered_json::array();
            for (const auto& v : violations) {
                ordered_json e;
                e["code"] = v.code;
                e["element"] = v.element;
                e["detail"] = v.detail;
                arr.push_back(std::move(e));
            }
            j["violations"] = std::move(arr);
            return reply_json(res, 422, j);
        }
        const auto dir = data_dir() / "processes";
        std::filesystem::create_directories(dir);
        write_file(dir / (def.id + ".json"), model::serialize_process(def));
        {
            std::lock_guard lock(processes_mutex);
            processes[def.id] = def;
        }
        ordered_json j;
        j["id"] = def.id;
        reply_json(res, 201, j);
    });

    http.Get(R"(/processes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        std::lock_guard lock(processes_mutex);
        auto it = processes.find(id);
        if (it == processes.end()) return reply_error(res, 404, "unknown process '" + id + "'");
        res.set_content(model::serialize_process(it->second), "application/json");
    });

    http.Post("/simulations", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("process_id") ||
            !body.contains("scenario"))
            return reply_error(res, 422, "body must carry process_id and scenario");
        model::ProcessDefinition def;
        sim::ScenarioConfig scenario;
        try {
            def = find_process(body["process_id"].get<std::string>());
            scenario = sim::ScenarioConfig::from_json(body["scenario"].dump());
            if (scenario.policy == sim::PolicyKind::Learned)
                fail(ErrorCode::Config,
                     "ConfigError: learned policy simulations need /scheduler/evaluate");
        } catch (const Error& e) {
            return reply_error(res, e.code() == ErrorCode::Io ? 404 : 422, e.what());
        }
        const std::string id = submit_job(
            "Simulate", "sim",
            [def = std::move(def), scenario](const std::string&, const std::filesystem::path& dir) {
                const auto result = sim::run_simulation(def, scenario);
                write_file(dir / "log.csv", result.log.to_csv());
                write_file(dir / "kpis.json", result.kpis.to_json());
            });
        ordered_json j;
        j["job_id"] = id;
        j["id"] = id;
        reply_json(res, 202, j);
    });

    http.Get(R"(/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto rec = job(req.matches[1]);
        if (!rec) return reply_error(res, 404, "unknown job");
        reply_json(res, 200, rec->to_json());
    });

    auto serve_artifact = [this](const std::string& id, const std::string& file,
                                 const std::string& kind, const char* content_type,
                                 httplib::Response& res) {
        const auto rec = job(id);
        if (!rec || rec->kind != kind) return reply_error(res, 404, "unknown " + kind + " job");
        if (rec->status == "Failed") return reply_error(res, 500, rec->error);
        if (rec->status != "Done") return reply_error(res, 409, "job not finished");
        const auto path = std::filesystem::path(rec->result_ref) / file;
        if (!std::filesystem::exists(path)) return reply_error(res, 404, "artifact missing");
        res.set_content(read_file(path), content_type);
    };

    http.Get(R"(/simulations/([^/]+)/kpis)",
             [serve_artifact](const httplib::Request& req, httplib::Response& res) {
                 serve_artifact(req.matches[1], "kpis.json", "Simulate", "application/json", res);
             });

    http.Get(R"(/simulations/([^/]+)/log)",
             [serve_artifact](const httplib::Request& req, httplib::Response& res) {
                 serve_artifact(req.matches[1], "log.csv", "Simulate", "text/csv", res);
             });

    http.Post("/quality/assess", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object())
            return reply_error(res, 422, "body must be a JSON object");
        try {
            std::string csv;
            if (body.contains("log_csv")) csv = body["log_csv"].get<std::string>();
            else if (body.contains("log_path"))
                csv = read_file(body["log_path"].get<std::string>());
            else
                return reply_error(res, 422, "body needs log_csv or log_path");
            const auto table = quality::LogTable::from_csv(csv);
            const auto rules = body.contains("rules")
                                   ? quality::FieldRules::from_json(body["rules"].dump())
                                   : quality::FieldRules::defaults();
            const auto targets = body.contains("targets")
                                     ? quality::QualityTargets::from_json(body["targets"].dump())
                                     : quality::QualityTargets{};
            const auto report = quality::assess_quality(table, rules, targets);
            res.set_content(report.to_json(), "application/json");
        } catch (const Error& e) {
            reply_error(res, status_for(e), e.what());
        }
    });

    http.Post("/anomaly/score", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("trace"))
            return reply_error(res, 422, "body must carry a trace");
        try {
            std::string checkpoint;
            if (body.contains("model_id")) {
                const auto path = data_dir() / "models" /
                                  (body["model_id"].get<std::string>() + ".json");
                if (!std::filesystem::exists(path))
                    return reply_error(res, 404, "unknown model '" +
                                                     body["model_id"].get<std::string>() + "'");
                checkpoint = read_file(path);
            } else if (body.contains("model_path")) {
                checkpoint = read_file(body["model_path"].get<std::string>());
            } else {
                return reply_error(res, 422, "body needs model_id or model_path");
            }
            const auto model = anomaly::DetectorModel::from_checkpoint_json(checkpoint);
            const auto trace = body["trace"].get<std::vector<std::string>>();
            const auto result = anomaly::score_trace(model, trace);
            ordered_json j;
            j["score"] = result.score;
            j["flagged"] = result.flagged;
            j["threshold"] = std::isfinite(model.threshold) ? ordered_json(model.threshold)
                                                            : ordered_json(nullptr);
            reply_json(res, 200, j);
        } catch (const Error& e) {
            reply_error(res, status_for(e), e.what());
        }
    });

    http.Post("/scheduler/train", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("process_id") ||
            !body.contains("scenario"))
            return reply_error(res, 422, "body must carry process_id and scenario");
        model::ProcessDefinition def;
        sim::ScenarioConfig scenario;
        dqn::TrainConfig train;
        try {
            def = find_process(body["process_id"].get<std::string>());
            scenario = sim::ScenarioConfig::from_json(body["scenario"].dump());
            if (body.contains("train")) train = dqn::TrainConfig::from_json(body["train"].dump());
        } catch (const Error& e) {
            return reply_error(res, e.code() == ErrorCode::Io ? 404 : 422, e.what());
        }
        const std::string id =
            submit_job("TrainScheduler", "train",
                       [def = std::move(def), scenario, train](const std::string&,
                                                               const std::filesystem::path& dir) {
                           const auto result = dqn::train_scheduler(def, scenario, train);
                           write_file(dir / "policy.json", result.policy.to_checkpoint_json());
                           write_file(dir / "train_log.csv", result.train_log_csv());
                       });
        ordered_json j;
        j["job_id"] = id;
        reply_json(res, 202, j);
    });

    http.Post("/scheduler/evaluate", [this](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("process_id") ||
            !body.contains("scenario"))
            return reply_error(res, 422, "body must carry process_id and scenario");
        try {
            const auto def = find_process(body["process_id"].get<std::string>());
            const auto scenario = sim::ScenarioConfig::from_json(body["scenario"].dump());
            std::vector<sim::PolicyKind> kinds;
            if (body.contains("policies")) {
                for (const auto& p : body["policies"]) {
                    const auto kind = sim::policy_kind_from_string(p.get<std::string>());
                    if (!kind) fail(ErrorCode::Config, "ConfigError: unknown policy");
                    kinds.push_back(*kind);
                }
            } else {
                kinds = {sim::PolicyKind::Fifo, sim::PolicyKind::Spt};
            }
            std::vector<std::uint64_t> seeds =
                body.contains("seeds") ? body["seeds"].get<std::vector<std::uint64_t>>()
                                       : std::vector<std::uint64_t>{scenario.seed};
            std::optional<dqn::SchedulerPolicy> learned;
            if (body.contains("policy_path"))
                learned = dqn::SchedulerPolicy::from_checkpoint_json(
                    read_file(body["policy_path"].get<std::string>()));
            else if (body.contains("policy_job")) {
                const auto rec = job(body["policy_job"].get<std::string>());
                if (!rec) return reply_error(res, 404, "unknown job");
                if (rec->status != "Done") return reply_error(res, 409, "job not finished");
                learned = dqn::SchedulerPolicy::from_checkpoint_json(
                    read_file(std::filesystem::path(rec->result_ref) / "policy.json"));
            }
            const auto report = dqn::evaluate_policy(def, scenario, kinds,
                                                     learned ? &*learned : nullptr, seeds);
            res.set_content(report.to_json(), "application/json");
        } catch (const Error& e) {
            reply_error(res, e.code() == ErrorCode::Io ? 404 : status_for(e), e.what());
        }
    });
}

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() {
    try {
        stop();
    } catch (...) {
    }
}

void Server::start() {
    auto& impl = *impl_;
    if (impl.running.load()) return;
    std::filesystem::create_directories(impl.data_dir());
    std::filesystem::create_directories(impl.data_dir() / "jobs");
    impl.load_persisted_processes();
    impl.install_routes();

    const int threads = impl.cfg.http_threads;
    impl.http.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    impl.http.set_keep_alive_max_count(100000); // long-lived load-test connections
    impl.http.set_keep_alive_timeout(30);

    if (impl.cfg.port == 0) {
        impl.bound_port = impl.http.bind_to_any_port(impl.cfg.host);
        if (impl.bound_port <= 0) fail(ErrorCode::Io, "BindError: cannot bind to any port");
    } else {
        if (!impl.http.bind_to_port(impl.cfg.host, impl.cfg.port))
            fail(ErrorCode::Io,
                 "BindError: cannot bind to port " + std::to_string(impl.cfg.port));
        impl.bound_port = impl.cfg.port;
    }

    impl.shutting_down = false;
    for (int i = 0; i < impl.cfg.job_workers; ++i)
        impl.workers.emplace_back([&impl] { impl.worker_loop(); });

    impl.listen_thread = std::thread([&impl] { impl.http.listen_after_bind(); });
    impl.http.wait_until_ready();
    impl.running.store(true);
}

void Server::stop() {
    auto& impl = *impl_;
    if (!impl.running.exchange(false)) return;
    impl.http.stop();
    if (impl.listen_thread.joinable()) impl.listen_thread.join();
    {
        std::lock_guard lock(impl.queue_mutex);
        impl.shutting_down = true;
    }
    impl.queue_cv.notify_all();
    for (auto& w : impl.workers)
        if (w.joinable()) w.join();
    impl.workers.clear();
}

int Server::port() const { return impl_->bound_port; }

const ServerConfig& Server::config() const { return impl_->cfg; }

} // namespace bpo::svc
