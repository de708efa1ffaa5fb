#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bpo/common.hpp"
#include "bpo/rng.hpp"

namespace bpo::model {

enum class NodeKind {
    StartEvent,
    EndEvent,
    Task,
    XorGateway,
    AndGatewaySplit,
    AndGatewayJoin,
};

const char* to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(const std::string& s);

enum class DistKind { Deterministic, Exponential, Uniform, TruncatedNormal };

struct DurationDistribution {
    DistKind kind = DistKind::Deterministic;
    double value = 0.0;   // Deterministic
    double rate = 0.0;    // Exponential
    double low = 0.0;     // Uniform
    double high = 0.0;
    double mean = 0.0;    // TruncatedNormal
    double stddev = 0.0;

    // Always > 0 for parameter sets accepted by validate().
    double sample(Rng& rng) const;
    // Analytic mean, used by the SPT dispatch rule.
    double mean_value() const;
};

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Task;
    // Task-only fields.
    std::optional<DurationDistribution> duration;
    std::string role;
    double cost_rate = 0.0;
};

struct SequenceFlow {
    std::string id;
    std::string source;
    std::string target;
    std::optional<double> probability; // XOR outgoing flows only
};

struct ResourcePool {
    std::string role;
    int capacity = 1;
    double cost_rate = 0.0;
};

struct Violation {
    std::string code;    // MissingStart, DanglingFlow, ProbabilitySum, ...
    std::string element; // offending node/flow/pool id
    std::string detail;

    std::string to_text() const;
};

struct ProcessDefinition {
    std::string id;
    std::string name;
    std::vector<Node> nodes;
    std::vector<SequenceFlow> flows;
    std::vector<ResourcePool> pools;

    int node_index(const std::string& node_id) const; // -1 when absent
    int pool_index(const std::string& role) const;
    const Node& node(int idx) const { return nodes[static_cast<std::size_t>(idx)]; }

    // Outgoing/incoming flow indexes per node, in definition order.
    std::vector<std::vector<int>> outgoing() const;
    std::vector<std::vector<int>> incoming() const;
    std::vector<int> task_node_indexes() const;
};

// Structural decode of the native JSON document. Enforces the schema (exact
// field names, unknown keys rejected, kind-specific duration params) but not
// graph-level invariants; run validate() for those.
ProcessDefinition parse_document(const std::string& json_text);

std::vector<Violation> validate(const ProcessDefinition& def);

// parse_document + validate; throws Error{Validation} listing all violations.
ProcessDefinition parse_process(const std::string& text);

std::string serialize_process(const ProcessDefinition& def);

// BPMN-XML subset importer (startEvent/endEvent/task/exclusiveGateway/
// parallelGateway/sequenceFlow with bpo:* extension attributes).
ProcessDefinition import_bpmn_xml(const std::string& xml_text);

// True when the text looks like a BPMN-XML document rather than native JSON.
bool looks_like_xml(const std::string& text);

} // namespace bpo::model
