#include "bpo/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace bpo::anomaly {

using nlohmann::json;
using nlohmann::ordered_json;
using nn::Vec;

TraceEncoding TraceEncoding::build(const std::vector<Trace>& traces) {
    std::set<std::string> activities;
    for (const auto& t : traces)
        for (const auto& a : t) activities.insert(a);
    TraceEncoding enc;
    enc.symbols.assign(activities.begin(), activities.end());
    enc.bos = static_cast<int>(enc.symbols.size());
    enc.symbols.push_back("<BOS>");
    enc.eos = static_cast<int>(enc.symbols.size());
    enc.symbols.push_back("<EOS>");
    enc.unk = static_cast<int>(enc.symbols.size());
    enc.symbols.push_back("<UNK>");
    return enc;
}

int TraceEncoding::index_of(const std::string& activity) const {
    for (std::size_t i = 0; i < symbols.size(); ++i)
        if (symbols[i] == activity) return static_cast<int>(i);
    return unk;
}

std::string DetectorConfig::to_json() const {
    ordered_json j;
    j["epochs"] = epochs;
    j["hidden"] = hidden;
    j["layers"] = layers;
    j["lr"] = lr;
    j["seed"] = seed;
    return j.dump();
}

DetectorConfig DetectorConfig::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Config, "ConfigError: detector config must be a JSON object");
    DetectorConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "epochs") c.epochs = it.value().get<int>();
        else if (k == "hidden") c.hidden = it.value().get<int>();
        else if (k == "layers") c.layers = it.value().get<int>();
        else if (k == "lr") c.lr = it.value().get<double>();
        else if (k == "seed") c.seed = it.value().get<std::uint64_t>();
        else fail(ErrorCode::Config, "ConfigError: unknown detector config key '" + k + "'");
    }
    if (c.epochs < 0 || c.hidden < 1 || c.layers < 1 || !(c.lr > 0.0))
        fail(ErrorCode::Config, "ConfigError: detector config out of range");
    return c;
}

namespace {

Vec one_hot(int index, int size) {
    Vec x(static_cast<std::size_t>(size), 0.0);
    x[static_cast<std::size_t>(index)] = 1.0;
    return x;
}

std::vector<int> encode_symbols(const TraceEncoding& enc, const Trace& trace) {
    std::vector<int> ids;
    ids.reserve(trace.size() + 2);
    ids.push_back(enc.bos);
    for (const auto& a : trace) ids.push_back(enc.index_of(a));
    ids.push_back(enc.eos);
    return ids;
}

struct SequenceGrads {
    nn::LstmStack stack;
    nn::Attention attention;
    nn::Dense head;
};

void zero_like(const DetectorModel& model, SequenceGrads& g) {
    g.stack.layers.clear();
    for (const auto& p : model.stack.layers) {
        nn::LstmLayerParams z;
        z.input_size = p.input_size;
        z.hidden_size = p.hidden_size;
        z.Wi = nn::Matrix(p.hidden_size, p.input_size);
        z.Wf = nn::Matrix(p.hidden_size, p.input_size);
        z.Wo = nn::Matrix(p.hidden_size, p.input_size);
        z.Wg = nn::Matrix(p.hidden_size, p.input_size);
        z.Ui = nn::Matrix(p.hidden_size, p.hidden_size);
        z.Uf = nn::Matrix(p.hidden_size, p.hidden_size);
        z.Uo = nn::Matrix(p.hidden_size, p.hidden_size);
        z.Ug = nn::Matrix(p.hidden_size, p.hidden_size);
        z.bi.assign(static_cast<std::size_t>(p.hidden_size), 0.0);
        z.bf.assign(static_cast<std::size_t>(p.hidden_size), 0.0);
        z.bo.assign(static_cast<std::size_t>(p.hidden_size), 0.0);
        z.bg.assign(static_cast<std::size_t>(p.hidden_size), 0.0);
        g.stack.layers.push_back(std::move(z));
    }
    g.attention.W = nn::Matrix(model.attention.W.rows, model.attention.W.cols);
    g.attention.v.assign(model.attention.v.size(), 0.0);
    g.head.W = nn::Matrix(model.head.W.rows, model.head.W.cols);
    g.head.b.assign(model.head.b.size(), 0.0);
}

// Forward + loss over one trace; fills grads when requested. Returns mean
// cross-entropy per transition.
double sequence_loss(const DetectorModel& model, const std::vector<int>& ids,
                     SequenceGrads* grads) {
    const int vocab = model.encoding.size();
    const std::size_t T = ids.size() - 1; // transitions

    std::vector<Vec> inputs;
    inputs.reserve(T);
    for (std::size_t t = 0; t < T; ++t) inputs.push_back(one_hot(ids[t], vocab));

    nn::LstmCache cache;
    const auto fwd = nn::lstm_forward(model.stack, inputs, grads ? &cache : nullptr);

    std::vector<Vec> dtop(T);
    std::vector<nn::AttnCache> attn_caches(T);
    double total = 0.0;
    const double scale = 1.0 / static_cast<double>(T);

    for (std::size_t t = 0; t < T; ++t) {
        std::span<const Vec> prefix(fwd.top_hidden.data(), t + 1);
        nn::AttnCache* ac = grads ? &attn_caches[t] : nullptr;
        const auto att = nn::attention_forward(model.attention, prefix, ac);
        Vec logits = nn::matvec(model.head.W, att.context);
        nn::add_scaled(logits, model.head.b);
        Vec dlogits;
        total += nn::cross_entropy_from_logits(logits, ids[t + 1], grads ? &dlogits : nullptr);
        if (grads) {
            for (auto& v : dlogits) v *= scale;
            nn::add_outer(grads->head.W, dlogits, att.context);
            nn::add_scaled(grads->head.b, dlogits);
            const Vec dcontext = nn::matvec_transposed(model.head.W, dlogits);
            nn::attention_backward(model.attention, attn_caches[t], prefix, dcontext,
                                   grads->attention, dtop);
        }
    }

    if (grads) {
        for (auto& d : dtop)
            if (d.empty())
                d.assign(static_cast<std::size_t>(model.stack.layers.back().hidden_size), 0.0);
        const auto lg = nn::lstm_backward(model.stack, cache, dtop);
        for (std::size_t l = 0; l < lg.params.layers.size(); ++l) {
            const auto& src = lg.params.layers[l];
            auto& dst = grads->stack.layers[l];
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
    }

    return total * scale;
}

void register_params(DetectorModel& model, nn::ParamRegistry& reg) {
    reg.add_stack("lstm", model.stack);
    reg.add("attention.W", model.attention.W);
    reg.add("attention.v", model.attention.v);
    reg.add("head.W", model.head.W);
    reg.add("head.b", model.head.b);
}

void register_grads(SequenceGrads& g, nn::ParamRegistry& reg) {
    reg.add_stack("lstm", g.stack);
    reg.add("attention.W", g.attention.W);
    reg.add("attention.v", g.attention.v);
    reg.add("head.W", g.head.W);
    reg.add("head.b", g.head.b);
}

void zero_grads(nn::ParamRegistry& reg) {
    for (auto& e : reg.entries) std::fill(e.data, e.data + e.size, 0.0);
}

} // namespace

double DetectorModel::score(const Trace& trace) const {
    const auto ids = encode_symbols(encoding, trace);
    return sequence_loss(*this, ids, nullptr);
}

std::vector<std::pair<std::int64_t, Trace>> traces_from_log(const sim::EventLog& log) {
    std::map<std::int64_t, Trace> by_case;
    for (const auto& e : log.events) {
        auto it = by_case.find(e.case_id);
        if (it == by_case.end()) it = by_case.emplace(e.case_id, Trace{}).first;
        if (!e.resource.empty()) it->second.push_back(e.activity);
    }
    std::vector<std::pair<std::int64_t, Trace>> out;
    out.reserve(by_case.size());
    for (auto& [case_id, trace] : by_case) out.emplace_back(case_id, std::move(trace));
    return out;
}

TrainResult train_detector(const std::vector<sim::EventLog>& normal_logs,
                           const DetectorConfig& config) {
    std::vector<Trace> traces;
    for (const auto& log : normal_logs)
        for (auto& [case_id, trace] : traces_from_log(log)) traces.push_back(trace);
    return train_detector_on_traces(traces, config);
}

TrainResult train_detector_on_traces(const std::vector<Trace>& traces,
                                     const DetectorConfig& config) {
    if (traces.empty()) fail(ErrorCode::Validation, "EmptyTraining: no traces to train on");

    TrainResult result;
    DetectorModel& model = result.model;
    model.encoding = TraceEncoding::build(traces);
    const int vocab = model.encoding.size();

    Rng rng(Rng::mix(config.seed, 0x1577));
    model.stack = nn::make_lstm_stack(vocab, config.hidden, config.layers, rng);
    model.attention = nn::make_attention(config.hidden, rng);
    model.head = nn::make_dense(config.hidden, vocab, rng);

    nn::ParamRegistry params;
    register_params(model, params);
    SequenceGrads grads;
    zero_like(model, grads);
    nn::ParamRegistry grad_reg;
    register_grads(grads, grad_reg);
    nn::AdamState adam = nn::make_adam(params.total(), config.lr);

    std::vector<std::vector<int>> encoded;
    encoded.reserve(traces.size());
    for (const auto& t : traces) encoded.push_back(encode_symbols(model.encoding, t));

    std::vector<std::size_t> order(encoded.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    Vec flat_params, flat_grads;
    Rng shuffle_rng(Rng::mix(config.seed, 0x5801));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(i))]);
        double epoch_total = 0.0;
        for (std::size_t i : order) {
            zero_grads(grad_reg);
            epoch_total += sequence_loss(model, encoded[i], &grads);
            params.gather(flat_params);
            grad_reg.gather(flat_grads);
            nn::adam_step(flat_params, flat_grads, adam);
            params.scatter(flat_params);
        }
        result.epoch_loss.push_back(epoch_total / static_cast<double>(encoded.size()));
    }

    return result;
}

DetectionResult score_trace(const DetectorModel& model, const Trace& trace,
                            std::int64_t case_id) {
    DetectionResult r;
    r.case_id = case_id;
    r.score = model.score(trace);
    r.flagged = r.score > model.threshold;
    return r;
}

CalibrationResult calibrate_threshold(DetectorModel& model, const std::vector<Trace>& validation,
                                      double target_fpr) {
    if (validation.empty())
        fail(ErrorCode::Validation, "EmptyValidation: calibration needs at least one trace");
    if (!(target_fpr > 0.0 && target_fpr <= 1.0))
        fail(ErrorCode::Config, "ConfigError: target_fpr must lie in (0,1]");

    CalibrationResult res;
    if (static_cast<double>(validation.size()) < 1.0 / target_fpr)
        res.warning = "validation set smaller than 1/target_fpr; the quantile is coarse";

    std::vector<double> scores;
    scores.reserve(validation.size());
    for (const auto& t : validation) scores.push_back(model.score(t));
    std::sort(scores.begin(), scores.end());

    const std::size_t n = scores.size();
    std::size_t rank =
        static_cast<std::size_t>(std::ceil((1.0 - target_fpr) * static_cast<double>(n)));
    if (rank < 1) rank = 1;
    if (rank > n) rank = n;
    res.threshold = scores[rank - 1];
    model.threshold = res.threshold;
    return res;
}

DetectorMetrics evaluate_detector(const DetectorModel& model,
                                  const std::vector<std::pair<Trace, bool>>& labeled) {
    if (labeled.empty()) fail(ErrorCode::Validation, "EmptyValidation: no labeled traces");

    struct Row {
        double score;
        bool anomalous;
    };
    std::vector<Row> rows;
    rows.reserve(labeled.size());
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& [trace, anomalous] : labeled) {
        const double s = model.score(trace);
        rows.push_back({s, anomalous});
        const bool flagged = s > model.threshold;
        if (anomalous && flagged) ++tp;
        else if (anomalous) ++fn;
        else if (flagged) ++fp;
        else ++tn;
    }

    DetectorMetrics m;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(labeled.size());
    m.fpr = (fp + tn) > 0 ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0;
    m.tpr = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;

    const std::int64_t positives = tp + fn;
    const std::int64_t negatives = fp + tn;
    if (positives > 0 && negatives > 0) {
        // Rank statistic with midranks for ties.
        std::sort(rows.begin(), rows.end(),
                  [](const Row& a, const Row& b) { return a.score < b.score; });
        double rank_sum_pos = 0.0;
        std::size_t i = 0;
        while (i < rows.size()) {
            std::size_t j = i;
            while (j < rows.size() && rows[j].score == rows[i].score) ++j;
            const double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
            for (std::size_t k = i; k < j; ++k)
                if (rows[k].anomalous) rank_sum_pos += midrank;
            i = j;
        }
        const double p = static_cast<double>(positives);
        m.auc = (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
    }
    return m;
}

std::string DetectorMetrics::to_json() const {
    ordered_json j;
    j["accuracy"] = accuracy;
    j["fpr"] = fpr;
    j["tpr"] = tpr;
    j["auc"] = auc ? ordered_json(*auc) : ordered_json(nullptr);
    return j.dump(2) + "\n";
}

std::string DetectorModel::to_checkpoint_json() const {
    ordered_json j;
    j["format_version"] = 1;
    j["kind"] = "detector";
    ordered_json arch;
    arch["vocab"] = encoding.size();
    arch["hidden"] = stack.layers.empty() ? 0 : stack.layers[0].hidden_size;
    arch["layers"] = static_cast<int>(stack.layers.size());
    j["arch"] = std::move(arch);
    j["vocabulary"] = encoding.symbols;
    j["bos"] = encoding.bos;
    j["eos"] = encoding.eos;
    j["unk"] = encoding.unk;
    j["threshold"] = std::isfinite(threshold) ? ordered_json(threshold) : ordered_json(nullptr);
    nn::ParamRegistry reg;
    register_params(const_cast<DetectorModel&>(*this), reg);
    j["params"] = reg.to_json();
    return j.dump() + "\n";
}

DetectorModel DetectorModel::from_checkpoint_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Syntax, "SyntaxError: checkpoint must be a JSON object");
    if (j.value("format_version", 0) != 1)
        fail(ErrorCode::Syntax, "SyntaxError: unsupported checkpoint format_version");
    if (j.value("kind", "") != "detector")
        fail(ErrorCode::Syntax, "SyntaxError: checkpoint kind is not 'detector'");

    DetectorModel m;
    try {
        m.encoding.symbols = j.at("vocabulary").get<std::vector<std::string>>();
        m.encoding.bos = j.at("bos").get<int>();
        m.encoding.eos = j.at("eos").get<int>();
        m.encoding.unk = j.at("unk").get<int>();
        const int vocab = j.at("arch").at("vocab").get<int>();
        const int hidden = j.at("arch").at("hidden").get<int>();
        const int layers = j.at("arch").at("layers").get<int>();
        if (vocab != m.encoding.size())
            fail(ErrorCode::Syntax, "SyntaxError: vocabulary size mismatch in checkpoint");
        Rng rng(0);
        m.stack = nn::make_lstm_stack(vocab, hidden, layers, rng);
        m.attention = nn::make_attention(hidden, rng);
        m.head = nn::make_dense(hidden, vocab, rng);
        if (!j.at("threshold").is_null()) m.threshold = j.at("threshold").get<double>();
        nn::ParamRegistry reg;
        register_params(m, reg);
        reg.from_json(j.at("params"));
    } catch (const json::exception& e) {
        fail(ErrorCode::Syntax, std::string("SyntaxError: detector checkpoint: ") + e.what());
    }
    return m;
}

} // namespace bpo::anomaly
