#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bpo/common.hpp"

namespace bpo::sim {

struct Event {
    std::int64_t case_id = 0;
    std::string activity;
    std::string resource; // "role#unit" for tasks, empty otherwise
    double enqueue_time = 0.0;
    double start_time = 0.0;
    double complete_time = 0.0;
    std::optional<double> ingest_time; // optional sidecar column for quality checks
};

struct LogMeta {
    std::uint64_t seed = 0;
    std::int64_t arrivals = 0;
    std::int64_t completed = 0;
    std::int64_t rejected = 0;
    std::int64_t in_flight = 0;
    std::string scenario_echo; // scenario JSON the log was produced from
};

struct EventLog {
    std::vector<Event> events; // ordered by (complete_time, case_id, activity)
    LogMeta meta;

    // Exact header `case_id,activity,resource,enqueue_time,start_time,complete_time`
    // plus `,ingest_time` when any event carries one; times with 6 fractional digits.
    std::string to_csv() const;
    static EventLog from_csv(const std::string& text);

    void sort_canonical();
};

std::string format_time(double t);

} // namespace bpo::sim
