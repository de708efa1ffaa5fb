#include "bpo/process_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bpo::model {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::StartEvent: return "StartEvent";
        case NodeKind::EndEvent: return "EndEvent";
        case NodeKind::Task: return "Task";
        case NodeKind::XorGateway: return "XorGateway";
        case NodeKind::AndGatewaySplit: return "AndGatewaySplit";
        case NodeKind::AndGatewayJoin: return "AndGatewayJoin";
    }
    return "?";
}

std::optional<NodeKind> node_kind_from_string(const std::string& s) {
    if (s == "StartEvent") return NodeKind::StartEvent;
    if (s == "EndEvent") return NodeKind::EndEvent;
    if (s == "Task") return NodeKind::Task;
    if (s == "XorGateway") return NodeKind::XorGateway;
    if (s == "AndGatewaySplit") return NodeKind::AndGatewaySplit;
    if (s == "AndGatewayJoin") return NodeKind::AndGatewayJoin;
    return std::nullopt;
}

double DurationDistribution::sample(Rng& rng) const {
    switch (kind) {
        case DistKind::Deterministic:
            return value;
        case DistKind::Exponential:
            return rng.exponential(rate);
        case DistKind::Uniform:
            return rng.uniform(low, high);
        case DistKind::TruncatedNormal: {
            for (;;) {
                const double d = rng.normal(mean, stddev);
                if (d > 0.0) return d;
            }
        }
    }
    return value;
}

double DurationDistribution::mean_value() const {
    switch (kind) {
        case DistKind::Deterministic: return value;
        case DistKind::Exponential: return 1.0 / rate;
        case DistKind::Uniform: return 0.5 * (low + high);
        case DistKind::TruncatedNormal: return mean; // ignores the small truncation shift
    }
    return value;
}

std::string Violation::to_text() const {
    std::string s = code;
    if (!element.empty()) s += "(" + element + ")";
    if (!detail.empty()) s += ": " + detail;
    return s;
}

int ProcessDefinition::node_index(const std::string& node_id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == node_id) return static_cast<int>(i);
    return -1;
}

int ProcessDefinition::pool_index(const std::string& role) const {
    for (std::size_t i = 0; i < pools.size(); ++i)
        if (pools[i].role == role) return static_cast<int>(i);
    return -1;
}

std::vector<std::vector<int>> ProcessDefinition::outgoing() const {
    std::vector<std::vector<int>> out(nodes.size());
    for (std::size_t f = 0; f < flows.size(); ++f) {
        int src = node_index(flows[f].source);
        if (src >= 0) out[static_cast<std::size_t>(src)].push_back(static_cast<int>(f));
    }
    return out;
}

std::vector<std::vector<int>> ProcessDefinition::incoming() const {
    std::vector<std::vector<int>> in(nodes.size());
    for (std::size_t f = 0; f < flows.size(); ++f) {
        int dst = node_index(flows[f].target);
        if (dst >= 0) in[static_cast<std::size_t>(dst)].push_back(static_cast<int>(f));
    }
    return in;
}

std::vector<int> ProcessDefinition::task_node_indexes() const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].kind == NodeKind::Task) idx.push_back(static_cast<int>(i));
    return idx;
}

namespace {

[[noreturn]] void syntax_error(const std::string& what) {
    fail(ErrorCode::Syntax, "SyntaxError: " + what);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known) syntax_error("unknown key '" + it.key() + "' in " + where);
    }
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) syntax_error("missing '" + std::string(key) + "' in " + where);
    if (!obj[key].is_string()) syntax_error("'" + std::string(key) + "' must be a string in " + where);
    return obj[key].get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) syntax_error("missing '" + std::string(key) + "' in " + where);
    if (!obj[key].is_number()) syntax_error("'" + std::string(key) + "' must be a number in " + where);
    return obj[key].get<double>();
}

DurationDistribution parse_duration(const json& obj, const std::string& where) {
    if (!obj.is_object()) syntax_error("'duration' must be an object in " + where);
    DurationDistribution d;
    const std::string kind = require_string(obj, "kind", where + ".duration");
    if (kind == "Deterministic") {
        reject_unknown_keys(obj, {"kind", "value"}, where + ".duration");
        d.kind = DistKind::Deterministic;
        d.value = require_number(obj, "value", where + ".duration");
    } else if (kind == "Exponential") {
        reject_unknown_keys(obj, {"kind", "rate"}, where + ".duration");
        d.kind = DistKind::Exponential;
        d.rate = require_number(obj, "rate", where + ".duration");
    } else if (kind == "Uniform") {
        reject_unknown_keys(obj, {"kind", "low", "high"}, where + ".duration");
        d.kind = DistKind::Uniform;
        d.low = require_number(obj, "low", where + ".duration");
        d.high = require_number(obj, "high", where + ".duration");
    } else if (kind == "TruncatedNormal") {
        reject_unknown_keys(obj, {"kind", "mean", "stddev"}, where + ".duration");
        d.kind = DistKind::TruncatedNormal;
        d.mean = require_number(obj, "mean", where + ".duration");
        d.stddev = require_number(obj, "stddev", where + ".duration");
    } else {
        syntax_error("unknown duration kind '" + kind + "' in " + where);
    }
    return d;
}

ordered_json duration_to_json(const DurationDistribution& d) {
    ordered_json j;
    switch (d.kind) {
        case DistKind::Deterministic:
            j["kind"] = "Deterministic";
            j["value"] = d.value;
            break;
        case DistKind::Exponential:
            j["kind"] = "Exponential";
            j["rate"] = d.rate;
            break;
        case DistKind::Uniform:
            j["kind"] = "Uniform";
            j["low"] = d.low;
            j["high"] = d.high;
            break;
        case DistKind::TruncatedNormal:
            j["kind"] = "TruncatedNormal";
            j["mean"] = d.mean;
            j["stddev"] = d.stddev;
            break;
    }
    return j;
}

} // namespace

ProcessDefinition parse_document(const std::string& json_text) {
    json doc = json::parse(json_text, nullptr, false);
    if (doc.is_discarded()) syntax_error("document is not well-formed JSON");
    if (!doc.is_object()) syntax_error("top level must be an object");
    reject_unknown_keys(doc, {"id", "name", "nodes", "flows", "pools"}, "document");

    ProcessDefinition def;
    def.id = require_string(doc, "id", "document");
    if (!doc.contains("name")) syntax_error("missing 'name' in document");
    if (!doc["name"].is_string()) syntax_error("'name' must be a string");
    def.name = doc["name"].get<std::string>();

    for (const char* key : {"nodes", "flows", "pools"}) {
        if (!doc.contains(key)) syntax_error("missing '" + std::string(key) + "' in document");
        if (!doc[key].is_array()) syntax_error("'" + std::string(key) + "' must be an array");
    }

    for (const auto& jn : doc["nodes"]) {
        if (!jn.is_object()) syntax_error("node entries must be objects");
        reject_unknown_keys(jn, {"id", "kind", "duration", "role", "cost_rate"}, "node");
        Node n;
        n.id = require_string(jn, "id", "node");
        const std::string kind = require_string(jn, "kind", "node '" + n.id + "'");
        auto k = node_kind_from_string(kind);
        if (!k) syntax_error("unknown node kind '" + kind + "' on node '" + n.id + "'");
        n.kind = *k;
        if (n.kind == NodeKind::Task) {
            if (!jn.contains("duration")) syntax_error("task '" + n.id + "' missing 'duration'");
            n.duration = parse_duration(jn["duration"], "node '" + n.id + "'");
            n.role = require_string(jn, "role", "node '" + n.id + "'");
            n.cost_rate = jn.contains("cost_rate")
                              ? require_number(jn, "cost_rate", "node '" + n.id + "'")
                              : 0.0;
        } else {
            for (const char* taskKey : {"duration", "role", "cost_rate"})
                if (jn.contains(taskKey))
                    syntax_error("'" + std::string(taskKey) + "' only allowed on Task nodes (node '" +
                                 n.id + "')");
        }
        def.nodes.push_back(std::move(n));
    }

    for (const auto& jf : doc["flows"]) {
        if (!jf.is_object()) syntax_error("flow entries must be objects");
        reject_unknown_keys(jf, {"id", "source", "target", "probability"}, "flow");
        SequenceFlow f;
        f.id = require_string(jf, "id", "flow");
        f.source = require_string(jf, "source", "flow '" + f.id + "'");
        f.target = require_string(jf, "target", "flow '" + f.id + "'");
        if (jf.contains("probability")) {
            if (!jf["probability"].is_number())
                syntax_error("'probability' must be a number in flow '" + f.id + "'");
            f.probability = jf["probability"].get<double>();
        }
        def.flows.push_back(std::move(f));
    }

    for (const auto& jp : doc["pools"]) {
        if (!jp.is_object()) syntax_error("pool entries must be objects");
        reject_unknown_keys(jp, {"role", "capacity", "cost_rate"}, "pool");
        ResourcePool p;
        p.role = require_string(jp, "role", "pool");
        const double cap = require_number(jp, "capacity", "pool '" + p.role + "'");
        if (cap != std::floor(cap)) syntax_error("pool capacity must be an integer ('" + p.role + "')");
        p.capacity = static_cast<int>(cap);
        p.cost_rate = jp.contains("cost_rate")
                          ? require_number(jp, "cost_rate", "pool '" + p.role + "'")
                          : 0.0;
        def.pools.push_back(std::move(p));
    }

    return def;
}

std::string serialize_process(const ProcessDefinition& def) {
    ordered_json doc;
    doc["id"] = def.id;
    doc["name"] = def.name;
    doc["nodes"] = ordered_json::array();
    for (const auto& n : def.nodes) {
        ordered_json jn;
        jn["id"] = n.id;
        jn["kind"] = to_string(n.kind);
        if (n.kind == NodeKind::Task) {
            jn["duration"] = duration_to_json(*n.duration);
            jn["role"] = n.role;
            jn["cost_rate"] = n.cost_rate;
        }
        doc["nodes"].push_back(std::move(jn));
    }
    doc["flows"] = ordered_json::array();
    for (const auto& f : def.flows) {
        ordered_json jf;
        jf["id"] = f.id;
        jf["source"] = f.source;
        jf["target"] = f.target;
        if (f.probability) jf["probability"] = *f.probability;
        doc["flows"].push_back(std::move(jf));
    }
    doc["pools"] = ordered_json::array();
    for (const auto& p : def.pools) {
        ordered_json jp;
        jp["role"] = p.role;
        jp["capacity"] = p.capacity;
        jp["cost_rate"] = p.cost_rate;
        doc["pools"].push_back(std::move(jp));
    }
    return doc.dump(2) + "\n";
}

std::vector<Violation> validate(const ProcessDefinition& def) {
    std::vector<Violation> out;
    auto add = [&](std::string code, std::string element, std::string detail = "") {
        out.push_back({std::move(code), std::move(element), std::move(detail)});
    };

    // Unique ids.
    {
        std::set<std::string> seen;
        for (const auto& n : def.nodes)
            if (!seen.insert(n.id).second) add("DuplicateNodeId", n.id);
        seen.clear();
        for (const auto& f : def.flows)
            if (!seen.insert(f.id).second) add("DuplicateFlowId", f.id);
        seen.clear();
        for (const auto& p : def.pools)
            if (!seen.insert(p.role).second) add("DuplicatePool", p.role);
    }

    // Start/end cardinality.
    int starts = 0, ends = 0;
    for (const auto& n : def.nodes) {
        if (n.kind == NodeKind::StartEvent) ++starts;
        if (n.kind == NodeKind::EndEvent) ++ends;
    }
    if (starts == 0) add("MissingStart", def.id);
    if (starts > 1) add("MultipleStart", def.id);
    if (ends == 0) add("MissingEnd", def.id);

    // Flow endpoints.
    for (const auto& f : def.flows) {
        if (def.node_index(f.source) < 0) add("DanglingFlow", f.id, "unknown source '" + f.source + "'");
        if (def.node_index(f.target) < 0) add("DanglingFlow", f.id, "unknown target '" + f.target + "'");
    }

    const auto out_flows = def.outgoing();

    // Degree rules.
    for (std::size_t i = 0; i < def.nodes.size(); ++i) {
        const auto& n = def.nodes[i];
        const std::size_t deg = out_flows[i].size();
        if (n.kind == NodeKind::EndEvent) {
            if (deg != 0) add("EndWithOutgoing", n.id);
        } else if (deg == 0) {
            add("NoOutgoing", n.id);
        }
    }

    // Probability placement and XOR sums.
    for (std::size_t i = 0; i < def.nodes.size(); ++i) {
        const auto& n = def.nodes[i];
        if (n.kind == NodeKind::XorGateway) {
            double sum = 0.0;
            bool complete = true;
            for (int fi : out_flows[i]) {
                const auto& f = def.flows[static_cast<std::size_t>(fi)];
                if (!f.probability) {
                    add("ProbabilityMissing", f.id, "XOR outgoing flow requires probability");
                    complete = false;
                } else if (*f.probability < 0.0 || *f.probability > 1.0) {
                    add("ProbabilityRange", f.id);
                    complete = false;
                } else {
                    sum += *f.probability;
                }
            }
            if (complete && !out_flows[i].empty() && std::fabs(sum - 1.0) > 1e-9)
                add("ProbabilitySum", n.id, "outgoing probabilities sum to " + std::to_string(sum));
        } else {
            for (int fi : out_flows[i]) {
                const auto& f = def.flows[static_cast<std::size_t>(fi)];
                if (f.probability)
                    add("ProbabilityPlacement", f.id, "probability only allowed on XOR outgoing flows");
            }
        }
    }

    // Task fields and roles.
    for (const auto& n : def.nodes) {
        if (n.kind == NodeKind::Task) {
            if (!n.duration || n.role.empty()) {
                add("TaskFields", n.id, "task requires duration and role");
                continue;
            }
            if (def.pool_index(n.role) < 0) add("UnknownRole", n.role, "referenced by task '" + n.id + "'");
            if (n.cost_rate < 0.0) add("NegativeCost", n.id);
            const auto& d = *n.duration;
            switch (d.kind) {
                case DistKind::Deterministic:
                    if (!(d.value > 0.0)) add("BadDistribution", n.id, "value must be > 0");
                    break;
                case DistKind::Exponential:
                    if (!(d.rate > 0.0)) add("BadDistribution", n.id, "rate must be > 0");
                    break;
                case DistKind::Uniform:
                    if (!(d.low > 0.0 && d.low < d.high))
                        add("BadDistribution", n.id, "requires 0 < low < high");
                    break;
                case DistKind::TruncatedNormal:
                    if (!(d.mean > 0.0 && d.stddev > 0.0))
                        add("BadDistribution", n.id, "requires mean > 0 and stddev > 0");
                    break;
            }
        } else if (!n.role.empty() || n.duration || n.cost_rate != 0.0) {
            add("TaskFields", n.id, "task fields on non-task node");
        }
    }

    for (const auto& p : def.pools) {
        if (p.capacity < 1) add("BadCapacity", p.role);
        if (p.cost_rate < 0.0) add("NegativeCost", p.role);
    }

    // Reachability from the start event (only meaningful with exactly one start
    // and no dangling flows).
    if (starts == 1) {
        std::vector<bool> reach(def.nodes.size(), false);
        std::deque<int> work;
        for (std::size_t i = 0; i < def.nodes.size(); ++i)
            if (def.nodes[i].kind == NodeKind::StartEvent) {
                reach[i] = true;
                work.push_back(static_cast<int>(i));
            }
        while (!work.empty()) {
            int cur = work.front();
            work.pop_front();
            for (int fi : out_flows[static_cast<std::size_t>(cur)]) {
                int dst = def.node_index(def.flows[static_cast<std::size_t>(fi)].target);
                if (dst >= 0 && !reach[static_cast<std::size_t>(dst)]) {
                    reach[static_cast<std::size_t>(dst)] = true;
                    work.push_back(dst);
                }
            }
        }
        for (std::size_t i = 0; i < def.nodes.size(); ++i)
            if (!reach[i]) add("Unreachable", def.nodes[i].id);
    }

    return out;
}

ProcessDefinition parse_process(const std::string& text) {
    ProcessDefinition def =
        looks_like_xml(text) ? import_bpmn_xml(text) : parse_document(text);
    const auto violations = validate(def);
    if (!violations.empty()) {
        std::ostringstream msg;
        msg << violations.front().code << ":";
        for (const auto& v : violations) msg << " " << v.to_text() << ";";
        fail(ErrorCode::Validation, msg.str());
    }
    return def;
}

bool looks_like_xml(const std::string& text) {
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
        return c == '<';
    }
    return false;
}

} // namespace bpo::model
