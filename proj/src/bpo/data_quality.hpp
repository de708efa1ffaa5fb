#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bpo/common.hpp"

namespace bpo::quality {

// Raw tabular view of an event log. Quality assessment deliberately works on
// the CSV surface so that dirty logs (blank slots, out-of-range values) are
// representable; the typed EventLog cannot hold them.
struct LogTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    static LogTable from_csv(const std::string& text);
    std::string to_csv() const;
    int column_index(const std::string& name) const; // -1 when absent
};

struct RangeRule {
    bool is_enum = false;
    double lo = 0.0;
    double hi = 0.0;
    std::set<std::string> allowed;

    bool violated_by(const std::string& value) const; // blank never violates
};

struct FieldRules {
    std::vector<std::string> required_fields;
    std::map<std::string, RangeRule> range_rules;

    static FieldRules defaults(); // the six log columns, times/case_id >= 0
    std::string to_json() const;
    static FieldRules from_json(const std::string& text);
};

struct QualityTargets {
    double max_missing_rate = 0.001; // < 0.1 %
    double max_anomaly_rate = 0.005; // < 0.5 %
    double max_latency = 60.0;       // < 1 minute, in time units

    std::string to_json() const;
    static QualityTargets from_json(const std::string& text);
};

struct QualityReport {
    double missing_rate = 0.0;  // empty required slots / (rows × required fields)
    double anomaly_rate = 0.0;  // violating values / (rows × ruled fields)
    double mean_latency = 0.0;  // ingest − complete, zero without an ingest column
    double max_latency = 0.0;
    bool pass_missing = false; // measured strictly below target
    bool pass_anomaly = false;
    bool pass_latency = false;

    bool pass_all() const { return pass_missing && pass_anomaly && pass_latency; }
    std::string to_json() const;
};

QualityReport assess_quality(const LogTable& log, const FieldRules& rules,
                             const QualityTargets& targets);

// Seeded defect injection with exact counts: floor(rate·slots) required slots
// blanked, floor(rate·slots) ruled slots (disjoint from the blanked ones)
// overwritten with out-of-range values, and the ingest clock shifted by
// latency_shift. assess_quality recovers the injected rates exactly.
LogTable inject_defects(const LogTable& log, double missing_rate, double anomaly_rate,
                        double latency_shift, std::uint64_t seed, const FieldRules& rules);

} // namespace bpo::quality
