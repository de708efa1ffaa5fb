#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "bpo/process_model.hpp"

// Importer for a small BPMN-XML subset. Only the element kinds the engine
// executes are mapped; durations, roles, costs and branch probabilities are
// carried in bpo:* extension attributes, resource pools in a
// bpo:resourcePool extension element.

namespace bpo::model {

namespace {

struct XmlElement {
    std::string name; // namespace prefix stripped
    std::map<std::string, std::string> attrs;
};

[[noreturn]] void xml_error(const std::string& what) {
    fail(ErrorCode::Syntax, "SyntaxError: BPMN-XML: " + what);
}

std::string strip_prefix(const std::string& name) {
    auto pos = name.rfind(':');
    return pos == std::string::npos ? name : name.substr(pos + 1);
}

std::string decode_entities(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out.push_back(s[i]);
            continue;
        }
        auto end = s.find(';', i);
        if (end == std::string::npos) xml_error("unterminated entity");
        const std::string ent = s.substr(i + 1, end - i - 1);
        if (ent == "amp") out.push_back('&');
        else if (ent == "lt") out.push_back('<');
        else if (ent == "gt") out.push_back('>');
        else if (ent == "quot") out.push_back('"');
        else if (ent == "apos") out.push_back('\'');
        else xml_error("unsupported entity '&" + ent + ";'");
        i = end;
    }
    return out;
}

// Start tags (self-closing or not) in document order; end tags and text are
// skipped since the subset carries everything in attributes.
std::vector<XmlElement> scan_elements(const std::string& xml) {
    std::vector<XmlElement> elements;
    std::size_t i = 0;
    const std::size_t n = xml.size();
    while (i < n) {
        if (xml[i] != '<') { ++i; continue; }
        if (xml.compare(i, 4, "<!--") == 0) {
            auto end = xml.find("-->", i);
            if (end == std::string::npos) xml_error("unterminated comment");
            i = end + 3;
            continue;
        }
        if (xml.compare(i, 2, "<?") == 0) {
            auto end = xml.find("?>", i);
            if (end == std::string::npos) xml_error("unterminated processing instruction");
            i = end + 2;
            continue;
        }
        if (xml.compare(i, 2, "</") == 0) {
            auto end = xml.find('>', i);
            if (end == std::string::npos) xml_error("unterminated end tag");
            i = end + 1;
            continue;
        }
        ++i; // past '<'
        XmlElement el;
        while (i < n && (std::isalnum(static_cast<unsigned char>(xml[i])) || xml[i] == ':' ||
                         xml[i] == '_' || xml[i] == '-' || xml[i] == '.'))
            el.name.push_back(xml[i++]);
        if (el.name.empty()) xml_error("malformed tag");
        el.name = strip_prefix(el.name);
        for (;;) {
            while (i < n && std::isspace(static_cast<unsigned char>(xml[i]))) ++i;
            if (i >= n) xml_error("unterminated tag '" + el.name + "'");
            if (xml[i] == '>') { ++i; break; }
            if (xml[i] == '/') {
                if (i + 1 >= n || xml[i + 1] != '>') xml_error("malformed tag end");
                i += 2;
                break;
            }
            std::string attr;
            while (i < n && xml[i] != '=' && !std::isspace(static_cast<unsigned char>(xml[i])))
                attr.push_back(xml[i++]);
            while (i < n && std::isspace(static_cast<unsigned char>(xml[i]))) ++i;
            if (i >= n || xml[i] != '=') xml_error("attribute '" + attr + "' missing value");
            ++i;
            while (i < n && std::isspace(static_cast<unsigned char>(xml[i]))) ++i;
            if (i >= n || (xml[i] != '"' && xml[i] != '\'')) xml_error("attribute value must be quoted");
            const char quote = xml[i++];
            std::string value;
            while (i < n && xml[i] != quote) value.push_back(xml[i++]);
            if (i >= n) xml_error("unterminated attribute value");
            ++i;
            el.attrs[strip_prefix(attr)] = decode_entities(value);
        }
        elements.push_back(std::move(el));
    }
    return elements;
}

std::string attr_or(const XmlElement& el, const std::string& key, const std::string& fallback) {
    auto it = el.attrs.find(key);
    return it == el.attrs.end() ? fallback : it->second;
}

std::string require_attr(const XmlElement& el, const std::string& key) {
    auto it = el.attrs.find(key);
    if (it == el.attrs.end())
        xml_error("<" + el.name + "> missing attribute '" + key + "'");
    return it->second;
}

double to_number(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) xml_error("bad number '" + s + "' in " + where);
        return v;
    } catch (const Error&) {
        throw;
    } catch (...) {
        xml_error("bad number '" + s + "' in " + where);
    }
}

DurationDistribution duration_from_attrs(const XmlElement& el) {
    DurationDistribution d;
    const std::string dist = attr_or(el, "dist", "Deterministic");
    if (dist == "Deterministic") {
        d.kind = DistKind::Deterministic;
        d.value = to_number(require_attr(el, "value"), el.name);
    } else if (dist == "Exponential") {
        d.kind = DistKind::Exponential;
        d.rate = to_number(require_attr(el, "rate"), el.name);
    } else if (dist == "Uniform") {
        d.kind = DistKind::Uniform;
        d.low = to_number(require_attr(el, "low"), el.name);
        d.high = to_number(require_attr(el, "high"), el.name);
    } else if (dist == "TruncatedNormal") {
        d.kind = DistKind::TruncatedNormal;
        d.mean = to_number(require_attr(el, "mean"), el.name);
        d.stddev = to_number(require_attr(el, "stddev"), el.name);
    } else {
        xml_error("unknown dist '" + dist + "'");
    }
    return d;
}

} // namespace

ProcessDefinition import_bpmn_xml(const std::string& xml_text) {
    ProcessDefinition def;
    bool saw_process = false;

    for (const auto& el : scan_elements(xml_text)) {
        if (el.name == "process") {
            if (saw_process) xml_error("multiple <process> elements");
            saw_process = true;
            def.id = attr_or(el, "id", "process");
            def.name = attr_or(el, "name", "");
        } else if (el.name == "startEvent" || el.name == "endEvent" ||
                   el.name == "exclusiveGateway" || el.name == "parallelGateway") {
            Node n;
            n.id = require_attr(el, "id");
            if (el.name == "startEvent") n.kind = NodeKind::StartEvent;
            else if (el.name == "endEvent") n.kind = NodeKind::EndEvent;
            else if (el.name == "exclusiveGateway") n.kind = NodeKind::XorGateway;
            else {
                const std::string dir = attr_or(el, "gatewayDirection", "Diverging");
                if (dir == "Diverging") n.kind = NodeKind::AndGatewaySplit;
                else if (dir == "Converging") n.kind = NodeKind::AndGatewayJoin;
                else xml_error("parallelGateway '" + n.id + "' has unknown gatewayDirection '" + dir + "'");
            }
            def.nodes.push_back(std::move(n));
        } else if (el.name == "task") {
            Node n;
            n.id = require_attr(el, "id");
            n.kind = NodeKind::Task;
            n.role = require_attr(el, "role");
            n.duration = duration_from_attrs(el);
            n.cost_rate = to_number(attr_or(el, "costRate", "0"), "task '" + n.id + "'");
            def.nodes.push_back(std::move(n));
        } else if (el.name == "sequenceFlow") {
            SequenceFlow f;
            f.id = require_attr(el, "id");
            f.source = require_attr(el, "sourceRef");
            f.target = require_attr(el, "targetRef");
            if (el.attrs.count("probability"))
                f.probability = to_number(el.attrs.at("probability"), "flow '" + f.id + "'");
            def.flows.push_back(std::move(f));
        } else if (el.name == "resourcePool") {
            ResourcePool p;
            p.role = require_attr(el, "role");
            p.capacity = static_cast<int>(to_number(require_attr(el, "capacity"), "resourcePool"));
            p.cost_rate = to_number(attr_or(el, "costRate", "0"), "resourcePool '" + p.role + "'");
            def.pools.push_back(std::move(p));
        }
        // definitions, extensionElements wrappers etc. are ignored
    }

    if (!saw_process) xml_error("no <process> element found");
    return def;
}

} // namespace bpo::model
