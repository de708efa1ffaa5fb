#include "bpo/data_quality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "bpo/event_log.hpp"
#include "bpo/rng.hpp"

namespace bpo::quality {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

} // namespace

LogTable LogTable::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::Syntax, "SyntaxError: empty CSV");
    auto split = [](const std::string& l) {
        std::vector<std::string> fields;
        std::string cur;
        for (char c : l) {
            if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        return fields;
    };
    LogTable t;
    t.columns = split(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto f = split(line);
        if (f.size() != t.columns.size())
            fail(ErrorCode::Syntax,
                 "SyntaxError: wrong field count on line " + std::to_string(line_no));
        t.rows.push_back(std::move(f));
    }
    return t;
}

std::string LogTable::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += columns[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

int LogTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

bool RangeRule::violated_by(const std::string& value) const {
    if (value.empty()) return false; // blanks are a completeness problem, not an anomaly
    if (is_enum) return allowed.find(value) == allowed.end();
    const auto v = parse_number(value);
    if (!v) return true; // unparsable numeric field
    return *v < lo || *v > hi;
}

FieldRules FieldRules::defaults() {
    // `resource` is legitimately blank on gateway/start/end rows, so it is
    // not a required field by default.
    FieldRules r;
    r.required_fields = {"case_id", "activity", "enqueue_time", "start_time", "complete_time"};
    RangeRule nonneg;
    nonneg.lo = 0.0;
    nonneg.hi = 1e12;
    r.range_rules["case_id"] = nonneg;
    r.range_rules["enqueue_time"] = nonneg;
    r.range_rules["start_time"] = nonneg;
    r.range_rules["complete_time"] = nonneg;
    return r;
}

std::string FieldRules::to_json() const {
    ordered_json j;
    j["required_fields"] = required_fields;
    ordered_json rules = ordered_json::object();
    for (const auto& [field, rule] : range_rules) {
        ordered_json r;
        if (rule.is_enum) {
            r["allowed"] = rule.allowed;
        } else {
            r["lo"] = rule.lo;
            r["hi"] = rule.hi;
        }
        rules[field] = std::move(r);
    }
    j["range_rules"] = std::move(rules);
    return j.dump(2) + "\n";
}

FieldRules FieldRules::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Syntax, "SyntaxError: field rules must be a JSON object");
    FieldRules r;
    try {
        r.required_fields = j.at("required_fields").get<std::vector<std::string>>();
        if (j.contains("range_rules")) {
            for (auto it = j["range_rules"].begin(); it != j["range_rules"].end(); ++it) {
                RangeRule rule;
                if (it.value().contains("allowed")) {
                    rule.is_enum = true;
                    for (const auto& v : it.value()["allowed"])
                        rule.allowed.insert(v.get<std::string>());
                } else {
                    rule.lo = it.value().at("lo").get<double>();
                    rule.hi = it.value().at("hi").get<double>();
                }
                r.range_rules[it.key()] = std::move(rule);
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::Syntax, std::string("SyntaxError: field rules: ") + e.what());
    }
    if (r.required_fields.empty())
        fail(ErrorCode::Validation, "field rules require at least one required field");
    return r;
}

std::string QualityTargets::to_json() const {
    ordered_json j;
    j["max_missing_rate"] = max_missing_rate;
    j["max_anomaly_rate"] = max_anomaly_rate;
    j["max_latency"] = max_latency;
    return j.dump(2) + "\n";
}

QualityTargets QualityTargets::from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorCode::Syntax, "SyntaxError: quality targets must be a JSON object");
    QualityTargets t;
    t.max_missing_rate = j.value("max_missing_rate", t.max_missing_rate);
    t.max_anomaly_rate = j.value("max_anomaly_rate", t.max_anomaly_rate);
    t.max_latency = j.value("max_latency", t.max_latency);
    if (!(t.max_missing_rate > 0.0 && t.max_missing_rate < 1.0) ||
        !(t.max_anomaly_rate > 0.0 && t.max_anomaly_rate < 1.0) || !(t.max_latency > 0.0))
        fail(ErrorCode::Config, "ConfigError: quality targets out of range");
    return t;
}

std::string QualityReport::to_json() const {
    ordered_json j;
    j["missing_rate"] = missing_rate;
    j["anomaly_rate"] = anomaly_rate;
    j["mean_latency"] = mean_latency;
    j["max_latency"] = max_latency;
    j["pass_missing"] = pass_missing;
    j["pass_anomaly"] = pass_anomaly;
    j["pass_latency"] = pass_latency;
    j["pass"] = pass_all();
    return j.dump(2) + "\n";
}

QualityReport assess_quality(const LogTable& log, const FieldRules& rules,
                             const QualityTargets& targets) {
    if (log.rows.empty())
        fail(ErrorCode::Validation, "EmptyLog: quality indicators are undefined on an empty log");
    if (rules.required_fields.empty())
        fail(ErrorCode::Validation, "field rules require at least one required field");

    const std::size_t n = log.rows.size();

    std::size_t missing = 0;
    for (const auto& field : rules.required_fields) {
        const int col = log.column_index(field);
        if (col < 0) {
            missing += n; // absent column counts as all-missing
            continue;
        }
        for (const auto& row : log.rows)
            if (row[static_cast<std::size_t>(col)].empty()) ++missing;
    }
    const double slot_count = static_cast<double>(n * rules.required_fields.size());

    std::size_t violations = 0;
    std::size_t ruled_fields = 0;
    for (const auto& [field, rule] : rules.range_rules) {
        const int col = log.column_index(field);
        if (col < 0) continue;
        ++ruled_fields;
        for (const auto& row : log.rows)
            if (rule.violated_by(row[static_cast<std::size_t>(col)])) ++violations;
    }

    QualityReport r;
    r.missing_rate = static_cast<double>(missing) / slot_count;
    r.anomaly_rate = ruled_fields == 0
                         ? 0.0
                         : static_cast<double>(violations) / (static_cast<double>(n * ruled_fields));

    const int ingest_col = log.column_index("ingest_time");
    const int complete_col = log.column_index("complete_time");
    if (ingest_col >= 0 && complete_col >= 0) {
        double sum = 0.0, worst = 0.0;
        std::size_t counted = 0;
        for (const auto& row : log.rows) {
            const auto ingest = parse_number(row[static_cast<std::size_t>(ingest_col)]);
            const auto complete = parse_number(row[static_cast<std::size_t>(complete_col)]);
            if (!ingest || !complete) continue;
            const double lat = *ingest - *complete;
            sum += lat;
            worst = std::max(worst, lat);
            ++counted;
        }
        if (counted > 0) {
            r.mean_latency = sum / static_cast<double>(counted);
            r.max_latency = worst;
        }
    }

    r.pass_missing = r.missing_rate < targets.max_missing_rate;
    r.pass_anomaly = r.anomaly_rate < targets.max_anomaly_rate;
    r.pass_latency = r.max_latency < targets.max_latency;
    return r;
}

LogTable inject_defects(const LogTable& log, double missing_rate, double anomaly_rate,
                        double latency_shift, std::uint64_t seed, const FieldRules& rules) {
    if (missing_rate < 0.0 || missing_rate >= 1.0 || anomaly_rate < 0.0 || anomaly_rate >= 1.0)
        fail(ErrorCode::Config, "ConfigError: injection rates must lie in [0,1)");

    LogTable out = log;
    const std::size_t n = out.rows.size();
    Rng rng(Rng::mix(seed, 0x9A71));

    // Ingest clock first so that later corruptions do not feed into it.
    if (latency_shift != 0.0 || out.column_index("ingest_time") >= 0) {
        int ingest_col = out.column_index("ingest_time");
        const int complete_col = out.column_index("complete_time");
        if (ingest_col < 0) {
            out.columns.push_back("ingest_time");
            for (auto& row : out.rows)
                row.push_back(complete_col >= 0 ? row[static_cast<std::size_t>(complete_col)] : "0");
            ingest_col = static_cast<int>(out.columns.size()) - 1;
        }
        for (auto& row : out.rows) {
            auto& cell = row[static_cast<std::size_t>(ingest_col)];
            try {
                cell = sim::format_time(std::stod(cell) + latency_shift);
            } catch (...) {
                // leave unparsable cells alone
            }
        }
    }

    auto sample_without_replacement = [&](std::vector<std::pair<std::size_t, std::size_t>>& slots,
                                          std::size_t k) {
        // Partial Fisher-Yates; the first k entries are the sample.
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(slots.size() - i));
            std::swap(slots[i], slots[j]);
        }
    };

    // Blank floor(rate * slots) required slots.
    std::vector<std::pair<std::size_t, std::size_t>> required_slots;
    for (const auto& field : rules.required_fields) {
        const int col = out.column_index(field);
        if (col < 0) continue;
        for (std::size_t row = 0; row < n; ++row)
            required_slots.push_back({row, static_cast<std::size_t>(col)});
    }
    const std::size_t blank_count = static_cast<std::size_t>(
        std::floor(missing_rate * static_cast<double>(n * rules.required_fields.size())));
    if (blank_count > required_slots.size())
        fail(ErrorCode::Config, "ConfigError: missing_rate too high for the available slots");
    sample_without_replacement(required_slots, blank_count);
    std::set<std::pair<std::size_t, std::size_t>> blanked(required_slots.begin(),
                                                          required_slots.begin() +
                                                              static_cast<std::ptrdiff_t>(blank_count));
    for (const auto& [row, col] : blanked) out.rows[row][col].clear();

    // Out-of-range values into ruled slots that were not blanked.
    std::vector<std::pair<std::size_t, std::size_t>> ruled_slots;
    std::size_t ruled_fields = 0;
    for (const auto& [field, rule] : rules.range_rules) {
        const int col = out.column_index(field);
        if (col < 0) continue;
        ++ruled_fields;
        for (std::size_t row = 0; row < n; ++row)
            if (!blanked.count({row, static_cast<std::size_t>(col)}))
                ruled_slots.push_back({row, static_cast<std::size_t>(col)});
    }
    const std::size_t anomaly_count = static_cast<std::size_t>(
        std::floor(anomaly_rate * static_cast<double>(n * ruled_fields)));
    if (anomaly_count > ruled_slots.size())
        fail(ErrorCode::Config, "ConfigError: anomaly_rate too high for the available slots");
    sample_without_replacement(ruled_slots, anomaly_count);
    for (std::size_t i = 0; i < anomaly_count; ++i) {
        const auto [row, col] = ruled_slots[i];
        const auto& rule = rules.range_rules.at(out.columns[col]);
        out.rows[row][col] =
            rule.is_enum ? "__invalid__" : sim::format_time(rule.hi + 1.0 + (rule.hi - rule.lo));
    }

    return out;
}

} // namespace bpo::quality
