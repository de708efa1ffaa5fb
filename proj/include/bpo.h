/* bpo — business-process optimization engine.
 *
 * C API over the engine core. All structured data crosses this boundary as
 * JSON or CSV strings in the formats the CLI reads and writes; handles are
 * opaque. Strings returned through `char **` are heap-allocated and must be
 * released with bpo_string_free(). Functions return BPO_OK on success; on any
 * other status, bpo_last_error() carries a message for the calling thread.
 */

#ifndef BPO_H
#define BPO_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bpo_status {
    BPO_OK = 0,
    BPO_E_SYNTAX = 1,     /* malformed document, CSV or checkpoint */
    BPO_E_VALIDATION = 2, /* semantically invalid model or inconsistent data */
    BPO_E_CONFIG = 3,     /* bad scenario / training / harness configuration */
    BPO_E_IO = 4,         /* file or network failure */
    BPO_E_RUNTIME = 5,    /* internal failure */
    BPO_E_NULL = 6        /* required argument was NULL */
} bpo_status;

typedef struct bpo_process bpo_process;   /* validated process definition */
typedef struct bpo_detector bpo_detector; /* trace anomaly detector */
typedef struct bpo_policy bpo_policy;     /* frozen scheduling policy */
typedef struct bpo_server bpo_server;     /* running HTTP service */

const char* bpo_version(void);
const char* bpo_last_error(void);
void bpo_string_free(char* s);

/* ---- process model ----------------------------------------------------- */

/* Native JSON or BPMN-XML (autodetected). Fails on syntax errors and on
 * validation violations; bpo_last_error() lists them. */
bpo_status bpo_process_parse(const char* text, bpo_process** out);
/* Structural decode only; pair with bpo_process_validate. */
bpo_status bpo_process_decode(const char* text, bpo_process** out);
bpo_status bpo_process_serialize(const bpo_process* process, char** json_out);
/* Violations as a JSON array; empty array means the definition is valid. */
bpo_status bpo_process_validate(const bpo_process* process, char** violations_json_out);
void bpo_process_free(bpo_process* process);

/* ---- simulation ---------------------------------------------------------- */

/* scenario_json: {"arrival_rate"|"arrivals", "horizon", "seed",
 * "max_in_flight", "policy"}. `learned` is required when policy is
 * "learned", ignored otherwise. Outputs may be NULL when not wanted. */
bpo_status bpo_simulate(const bpo_process* process, const char* scenario_json,
                        const bpo_policy* learned, char** log_csv_out, char** kpis_json_out);
bpo_status bpo_kpis_from_log(const bpo_process* process, const char* log_csv, double horizon,
                             char** kpis_json_out);
bpo_status bpo_compare_kpis(const char* baseline_kpis_json, const char* optimized_kpis_json,
                            char** improvement_json_out);

/* ---- data quality -------------------------------------------------------- */

bpo_status bpo_quality_assess(const char* log_csv, const char* rules_json,
                              const char* targets_json, char** report_json_out);
bpo_status bpo_quality_inject(const char* log_csv, double missing_rate, double anomaly_rate,
                              double latency_shift, uint64_t seed, const char* rules_json,
                              char** dirty_csv_out);

/* ---- anomaly detector ---------------------------------------------------- */

/* config_json keys: epochs, hidden, layers, lr, seed (all optional).
 * curve_json_out (optional) receives the per-epoch training loss. */
bpo_status bpo_detector_train(const char* const* logs_csv, int n_logs, const char* config_json,
                              bpo_detector** out, char** curve_json_out);
bpo_status bpo_detector_save(const bpo_detector* detector, char** checkpoint_json_out);
bpo_status bpo_detector_load(const char* checkpoint_json, bpo_detector** out);
/* Calibrates on the task-level traces of a validation log and stores the
 * threshold on the detector. */
bpo_status bpo_detector_calibrate(bpo_detector* detector, const char* log_csv, double target_fpr,
                                  double* threshold_out);
bpo_status bpo_detector_score_log(const bpo_detector* detector, const char* log_csv,
                                  char** results_json_out);
bpo_status bpo_detector_score_trace(const bpo_detector* detector, const char* const* activities,
                                    int n_activities, double* score_out, int* flagged_out);
void bpo_detector_free(bpo_detector* detector);

/* ---- DQN scheduler ------------------------------------------------------- */

/* train_json keys: gamma, epsilon_*, target_sync, batch_size, iterations,
 * buffer_capacity, lr, hidden, slots, episode_horizon, seed (all optional). */
bpo_status bpo_scheduler_train(const bpo_process* process, const char* scenario_json,
                               const char* train_json, bpo_policy** out,
                               char** train_log_csv_out);
bpo_status bpo_policy_save(const bpo_policy* policy, char** checkpoint_json_out);
bpo_status bpo_policy_load(const char* checkpoint_json, bpo_policy** out);
void bpo_policy_free(bpo_policy* policy);
/* policies_csv: comma-separated subset of fifo,random,spt,learned.
 * seeds_json: JSON array of integers. */
bpo_status bpo_evaluate_policies(const bpo_process* process, const char* scenario_json,
                                 const char* policies_csv, const bpo_policy* learned,
                                 const char* seeds_json, char** report_json_out);

/* ---- bottleneck optimizer ------------------------------------------------ */

bpo_status bpo_find_bottlenecks(const bpo_process* process, const char* log_csv, double horizon,
                                char** report_json_out);
/* Re-simulates candidate pool edits on the given seeds (defaults to the
 * scenario seed) and returns improving recommendations. */
bpo_status bpo_recommend(const bpo_process* process, const char* scenario_json, int budget,
                         const char* seeds_json, char** recommendations_json_out);
/* points_json: [[scale, improvement_pct], ...] */
bpo_status bpo_regress(const char* points_json, char** result_json_out);

/* ---- bench ---------------------------------------------------------------- */

/* Runs the scenario matrix and, when out_dir is non-NULL, writes
 * bench_report.json, improvements.csv, regression.json and summary.txt. */
bpo_status bpo_run_bench(const char* matrix_json, const char* base_dir, const char* out_dir,
                         char** report_json_out);

/* ---- HTTP service ---------------------------------------------------------- */

/* config_json keys: host, port (0 picks a free port), data_dir, http_threads,
 * job_workers. The server runs until bpo_server_stop(). */
bpo_status bpo_server_start(const char* config_json, bpo_server** out);
bpo_status bpo_server_port(const bpo_server* server, int* port_out);
bpo_status bpo_server_stop(bpo_server* server);
void bpo_server_free(bpo_server* server);

/* config_json keys: base_url, concurrency, duration_seconds, seed,
 * endpoints: [{path, weight}]. */
bpo_status bpo_load_test(const char* config_json, char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif /* BPO_H */
