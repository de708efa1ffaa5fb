#include "bpo/event_log.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace bpo::sim {

std::string format_time(double t) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", t);
    return buf;
}

void EventLog::sort_canonical() {
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.complete_time != b.complete_time) return a.complete_time < b.complete_time;
        if (a.case_id != b.case_id) return a.case_id < b.case_id;
        return a.activity < b.activity;
    });
}

std::string EventLog::to_csv() const {
    bool with_ingest = false;
    for (const auto& e : events)
        if (e.ingest_time) { with_ingest = true; break; }

    std::string out = "case_id,activity,resource,enqueue_time,start_time,complete_time";
    if (with_ingest) out += ",ingest_time";
    out += "\n";
    for (const auto& e : events) {
        out += std::to_string(e.case_id);
        out += ',';
        out += e.activity;
        out += ',';
        out += e.resource;
        out += ',';
        out += format_time(e.enqueue_time);
        out += ',';
        out += format_time(e.start_time);
        out += ',';
        out += format_time(e.complete_time);
        if (with_ingest) {
            out += ',';
            out += format_time(e.ingest_time.value_or(e.complete_time));
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_time(const std::string& s, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (...) {
        fail(ErrorCode::Syntax, "SyntaxError: bad time value '" + s + "' on log line " +
                                    std::to_string(line_no));
    }
}

} // namespace

EventLog EventLog::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorCode::Syntax, "SyntaxError: empty event-log CSV");

    const auto header = split_line(line);
    const std::vector<std::string> base = {"case_id",      "activity",   "resource",
                                           "enqueue_time", "start_time", "complete_time"};
    bool with_ingest = false;
    if (header.size() == 7 && header[6] == "ingest_time") with_ingest = true;
    else if (header.size() != 6)
        fail(ErrorCode::Syntax, "SyntaxError: unexpected event-log header");
    for (std::size_t i = 0; i < 6; ++i)
        if (header[i] != base[i])
            fail(ErrorCode::Syntax, "SyntaxError: unexpected event-log header column '" + header[i] + "'");

    EventLog log;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_line(line);
        if (f.size() != (with_ingest ? 7u : 6u))
            fail(ErrorCode::Syntax,
                 "SyntaxError: wrong field count on log line " + std::to_string(line_no));
        Event e;
        try {
            e.case_id = std::stoll(f[0]);
        } catch (...) {
            fail(ErrorCode::Syntax,
                 "SyntaxError: bad case_id '" + f[0] + "' on log line " + std::to_string(line_no));
        }
        e.activity = f[1];
        e.resource = f[2];
        e.enqueue_time = parse_time(f[3], line_no);
        e.start_time = parse_time(f[4], line_no);
        e.complete_time = parse_time(f[5], line_no);
        if (with_ingest) e.ingest_time = parse_time(f[6], line_no);
        log.events.push_back(std::move(e));
    }
    return log;
}

} // namespace bpo::sim
