#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpo/event_log.hpp"
#include "bpo/neural.hpp"

namespace bpo::anomaly {

using Trace = std::vector<std::string>; // activity sequence, BOS/EOS implicit

struct TraceEncoding {
    std::vector<std::string> symbols; // activities (sorted) then BOS, EOS, UNK
    int bos = 0, eos = 0, unk = 0;

    static TraceEncoding build(const std::vector<Trace>& traces);
    int size() const { return static_cast<int>(symbols.size()); }
    int index_of(const std::string& activity) const; // unk when out of vocabulary
};

struct DetectorConfig {
    int epochs = 30;
    int hidden = 32;
    int layers = 2;
    double lr = 0.001;
    std::uint64_t seed = 0;

    std::string to_json() const;
    static DetectorConfig from_json(const std::string& text);
};

struct DetectorModel {
    TraceEncoding encoding;
    nn::LstmStack stack;
    nn::Attention attention;
    nn::Dense head; // hidden → vocabulary
    double threshold = std::numeric_limits<double>::infinity(); // until calibrated

    // Mean negative log-likelihood per transition (BOS→…→EOS), in nats.
    double score(const Trace& trace) const;

    std::string to_checkpoint_json() const;
    static DetectorModel from_checkpoint_json(const std::string& text);
};

struct DetectionResult {
    std::int64_t case_id = -1;
    double score = 0.0;
    bool flagged = false;
};

struct TrainResult {
    DetectorModel model;
    std::vector<double> epoch_loss; // training curve, mean nats/transition
};

// Task-level traces per case, in canonical log order (task events are the
// ones carrying a resource).
std::vector<std::pair<std::int64_t, Trace>> traces_from_log(const sim::EventLog& log);

TrainResult train_detector(const std::vector<sim::EventLog>& normal_logs,
                           const DetectorConfig& config);
TrainResult train_detector_on_traces(const std::vector<Trace>& traces,
                                     const DetectorConfig& config);

DetectionResult score_trace(const DetectorModel& model, const Trace& trace,
                            std::int64_t case_id = -1);

struct CalibrationResult {
    double threshold = 0.0;
    std::optional<std::string> warning; // set when the validation set is small
};

// Empirical (1 − target_fpr) quantile of validation scores, nearest-rank
// rounding up. Also stores the threshold on the model.
CalibrationResult calibrate_threshold(DetectorModel& model, const std::vector<Trace>& validation,
                                      double target_fpr = 0.005);

struct DetectorMetrics {
    double accuracy = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
    std::optional<double> auc; // absent when only one class is present
    std::string to_json() const;
};

DetectorMetrics evaluate_detector(const DetectorModel& model,
                                  const std::vector<std::pair<Trace, bool>>& labeled);

} // namespace bpo::anomaly
