#include <doctest.h>

#include "bpo/data_quality.hpp"

using namespace bpo;
using namespace bpo::quality;

namespace {

// n rows of a well-formed log table using the default column set.
LogTable clean_table(std::size_t n) {
    LogTable t;
    t.columns = {"case_id", "activity", "resource", "enqueue_time", "start_time", "complete_time"};
    for (std::size_t i = 0; i < n; ++i) {
        const double base = static_cast<double>(i);
        t.rows.push_back({std::to_string(i + 1), "work", "clerk#0", std::to_string(base),
                          std::to_string(base + 0.5), std::to_string(base + 1.5)});
    }
    return t;
}

std::size_t count_blanks(const LogTable& t) {
    std::size_t n = 0;
    for (const auto& row : t.rows)
        for (const auto& cell : row)
            if (cell.empty()) ++n;
    return n;
}

} // namespace

TEST_CASE("clean log: zero rates, zero latency, all indicators pass") {
    const auto table = clean_table(100);
    const auto report = assess_quality(table, FieldRules::defaults(), QualityTargets{});
    CHECK(report.missing_rate == 0.0);
    CHECK(report.anomaly_rate == 0.0);
    CHECK(report.mean_latency == 0.0);
    CHECK(report.max_latency == 0.0);
    CHECK(report.pass_all());
}

TEST_CASE("2 empty slots out of 1000 fail the 0.1% target") {
    // 200 rows × 5 required fields = 1000 slots.
    auto table = clean_table(200);
    table.rows[10][0].clear();
    table.rows[50][3].clear();
    const auto report = assess_quality(table, FieldRules::defaults(), QualityTargets{});
    CHECK(report.missing_rate == doctest::Approx(0.002));
    CHECK_FALSE(report.pass_missing);
    CHECK(report.pass_anomaly);
}

TEST_CASE("closed loop: injected rates are recovered exactly") {
    const auto table = clean_table(10000);
    const auto rules = FieldRules::defaults();
    for (const double rate : {0.001, 0.01, 0.05}) {
        const auto dirty = inject_defects(table, rate, rate, 0.0, 77, rules);
        const auto report = assess_quality(dirty, rules, QualityTargets{});
        // 10000 rows × 5 required and × 4 ruled fields: rate·slots is integral.
        CHECK(report.missing_rate == doctest::Approx(rate).epsilon(1e-12));
        CHECK(report.anomaly_rate == doctest::Approx(rate).epsilon(1e-12));
    }
}

TEST_CASE("injection counts are exact floors and deterministic per seed") {
    const auto table = clean_table(1000);
    const auto rules = FieldRules::defaults();
    const auto dirty = inject_defects(table, 0.01, 0.0, 0.0, 5, rules);
    CHECK(count_blanks(dirty) == 50); // floor(0.01 × 1000 × 5)
    const auto dirty2 = inject_defects(table, 0.01, 0.0, 0.0, 5, rules);
    CHECK(dirty.to_csv() == dirty2.to_csv());
    const auto dirty3 = inject_defects(table, 0.01, 0.0, 0.0, 6, rules);
    CHECK(dirty.to_csv() != dirty3.to_csv());
}

TEST_CASE("zero rates leave the log unchanged") {
    const auto table = clean_table(50);
    const auto out = inject_defects(table, 0.0, 0.0, 0.0, 1, FieldRules::defaults());
    CHECK(out.to_csv() == table.to_csv());
}

TEST_CASE("monotonicity: one more defect never lowers the measured rate") {
    auto table = clean_table(100);
    const auto rules = FieldRules::defaults();
    auto before = assess_quality(table, rules, QualityTargets{});
    table.rows[3][0].clear();
    auto after = assess_quality(table, rules, QualityTargets{});
    CHECK(after.missing_rate > before.missing_rate);
    table.rows[4][5] = "-12.0"; // below the lo bound of complete_time
    auto after2 = assess_quality(table, rules, QualityTargets{});
    CHECK(after2.anomaly_rate > after.anomaly_rate);
    CHECK(after2.missing_rate == after.missing_rate);
}

TEST_CASE("latency shift is measured against the ingest clock") {
    const auto table = clean_table(100);
    SUBCASE("30 time units stays below the 60-unit target") {
        const auto dirty = inject_defects(table, 0.0, 0.0, 30.0, 1, FieldRules::defaults());
        const auto report = assess_quality(dirty, FieldRules::defaults(), QualityTargets{});
        CHECK(report.mean_latency == doctest::Approx(30.0));
        CHECK(report.max_latency == doctest::Approx(30.0));
        CHECK(report.pass_latency);
    }
    SUBCASE("90 time units fails it") {
        const auto dirty = inject_defects(table, 0.0, 0.0, 90.0, 1, FieldRules::defaults());
        const auto report = assess_quality(dirty, FieldRules::defaults(), QualityTargets{});
        CHECK(report.max_latency == doctest::Approx(90.0));
        CHECK_FALSE(report.pass_latency);
    }
}

TEST_CASE("empty log is an error, not a defaulted report") {
    LogTable t;
    t.columns = {"case_id", "activity", "resource", "enqueue_time", "start_time", "complete_time"};
    CHECK_THROWS_AS(assess_quality(t, FieldRules::defaults(), QualityTargets{}), Error);
}

TEST_CASE("pass flags are strict comparisons against the targets") {
    auto table = clean_table(1000);
    // exactly 0.1% missing: 5 blanks of 5000 slots — not strictly below the target
    for (int i = 0; i < 5; ++i) table.rows[static_cast<std::size_t>(i)][0].clear();
    QualityTargets targets;
    const auto report = assess_quality(table, FieldRules::defaults(), targets);
    CHECK(report.missing_rate == doctest::Approx(targets.max_missing_rate));
    CHECK_FALSE(report.pass_missing);
}

TEST_CASE("enum range rules flag values outside the allowed set") {
    auto table = clean_table(10);
    FieldRules rules = FieldRules::defaults();
    RangeRule enum_rule;
    enum_rule.is_enum = true;
    enum_rule.allowed = {"work"};
    rules.range_rules["activity"] = enum_rule;
    table.rows[2][1] = "mystery";
    const auto report = assess_quality(table, rules, QualityTargets{});
    CHECK(report.anomaly_rate == doctest::Approx(1.0 / (10.0 * 5.0)));
}

TEST_CASE("rules JSON round trip") {
    const auto rules = FieldRules::defaults();
    const auto again = FieldRules::from_json(rules.to_json());
    CHECK(again.required_fields == rules.required_fields);
    CHECK(again.range_rules.size() == rules.range_rules.size());
    CHECK_THROWS_AS(FieldRules::from_json("{\"required_fields\": []}"), Error);
}
