#include "rcause/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rcause/errors.hpp"

namespace rcause {

namespace {

const Json& require(const Json& doc, const char* key, const std::string& origin) {
    auto it = doc.find(key);
    if (it == doc.end()) {
        throw parse_error(origin + ": missing key '" + key + "'");
    }
    return *it;
}

std::string require_string(const Json& doc, const char* key, const std::string& origin) {
    const Json& value = require(doc, key, origin);
    if (!value.is_string()) {
        throw parse_error(origin + ": '" + key + "' must be a string");
    }
    return value.get<std::string>();
}

std::vector<std::string> string_array(const Json& value, const std::string& origin) {
    if (!value.is_array()) {
        throw parse_error(origin + ": expected an array of strings");
    }
    std::vector<std::string> out;
    for (const Json& item : value) {
        if (!item.is_string()) {
            throw parse_error(origin + ": expected an array of strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

std::vector<StateIndex> index_array(const Json& value, const std::string& origin) {
    if (!value.is_array()) {
        throw parse_error(origin + ": expected an array of state indices");
    }
    std::vector<StateIndex> out;
    for (const Json& item : value) {
        if (!item.is_number_unsigned() && !item.is_number_integer()) {
            throw parse_error(origin + ": expected an array of state indices");
        }
        const std::int64_t raw = item.get<std::int64_t>();
        if (raw < 0) {
            throw parse_error(origin + ": state indices must be non-negative");
        }
        out.push_back(static_cast<StateIndex>(raw));
    }
    return out;
}

AttrValue json_to_attr(const Json& value, const std::string& origin) {
    if (value.is_boolean()) return value.get<bool>();
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_number_float()) return value.get<double>();
    if (value.is_string()) return value.get<std::string>();
    throw parse_error(origin + ": attrs values must be bool, number, or string");
}

Json attr_to_json(const AttrValue& value) {
    return std::visit([](const auto& v) { return Json(v); }, value);
}

AttrRecord parse_attrs(const Json& doc, const std::string& origin) {
    AttrRecord attrs;
    auto it = doc.find("attrs");
    if (it == doc.end()) return attrs;
    if (!it->is_object()) {
        throw parse_error(origin + ": 'attrs' must be an object");
    }
    for (const auto& [key, value] : it->items()) {
        attrs[key] = json_to_attr(value, origin + " attrs." + key);
    }
    return attrs;
}

Json attrs_to_json(const AttrRecord& attrs) {
    Json out = Json::object();
    for (const auto& [key, value] : attrs) out[key] = attr_to_json(value);
    return out;
}

std::size_t resolve_node(const Sheaf& sheaf, const std::string& id, const std::string& origin) {
    const std::size_t v = sheaf.graph.node_index(id);
    if (v == kNoIndex) {
        throw validation_error("UNKNOWN_NODE", origin + ": unknown node '" + id + "'");
    }
    return v;
}

// A state given either as an index or as a stalk label.
StateIndex resolve_state(const Json& value, const StateSpace& stalk, const std::string& origin) {
    if (value.is_string()) {
        auto index = stalk.index_of(value.get<std::string>());
        if (!index) {
            throw validation_error("UNKNOWN_LABEL", origin + ": unknown state label '" +
                                                        value.get<std::string>() + "'");
        }
        return *index;
    }
    if (value.is_number_integer() || value.is_number_unsigned()) {
        const std::int64_t raw = value.get<std::int64_t>();
        if (raw < 0 || static_cast<std::size_t>(raw) >= stalk.cardinality()) {
            throw validation_error("UNKNOWN_LABEL",
                                   origin + ": state index " + std::to_string(raw) +
                                       " out of range");
        }
        return static_cast<StateIndex>(raw);
    }
    throw parse_error(origin + ": state must be an index or a label");
}

UpdateRule parse_rule(const Json& doc, const Sheaf& sheaf) {
    if (!doc.is_array()) {
        throw parse_error("rule: expected an array of node kernels");
    }
    UpdateRule rule;
    rule.kernels.resize(sheaf.graph.node_count());
    for (const Json& entry : doc) {
        const std::string id = require_string(entry, "node", "rule");
        const std::size_t v = resolve_node(sheaf, id, "rule");
        const std::string origin = "rule for '" + id + "'";
        const std::size_t card = sheaf.node_stalks[v].cardinality();
        const auto& in_edges = sheaf.graph.incoming(v);

        const Json& rows = require(entry, "rows", origin);
        if (!rows.is_array()) {
            throw parse_error(origin + ": 'rows' must be an array");
        }
        for (const Json& row : rows) {
            KernelKey key = index_array(require(row, "key", origin), origin);
            if (key.size() != 1 + in_edges.size()) {
                throw validation_error("INVALID_KERNEL",
                                       origin + ": key length " + std::to_string(key.size()) +
                                           " does not match 1 own + " +
                                           std::to_string(in_edges.size()) + " inputs");
            }
            if (key[0] >= card) {
                throw validation_error("INVALID_KERNEL", origin + ": own state out of range");
            }
            for (std::size_t i = 0; i < in_edges.size(); ++i) {
                if (key[1 + i] >= sheaf.edge_stalks[in_edges[i]].cardinality()) {
                    throw validation_error("INVALID_KERNEL",
                                           origin + ": input state out of range");
                }
            }
            if (row.contains("next")) {
                const StateIndex next = resolve_state(row["next"], sheaf.node_stalks[v], origin);
                rule.kernels[v].set_deterministic(std::move(key), next, card);
            } else if (row.contains("p")) {
                const Json& p = row["p"];
                if (!p.is_array() || p.size() != card) {
                    throw validation_error("INVALID_KERNEL",
                                           origin + ": 'p' must list one probability per state");
                }
                std::vector<double> probs;
                for (const Json& item : p) {
                    if (!item.is_number()) {
                        throw parse_error(origin + ": probabilities must be numbers");
                    }
                    probs.push_back(item.get<double>());
                }
                rule.kernels[v].set_row(std::move(key), std::move(probs));
            } else {
                throw parse_error(origin + ": row needs 'next' or 'p'");
            }
        }
    }
    return rule;
}

Json rule_to_json(const Sheaf& sheaf, const UpdateRule& rule) {
    Json out = Json::array();
    for (std::size_t v = 0; v < rule.kernels.size(); ++v) {
        if (rule.kernels[v].row_count() == 0) continue;
        Json entry;
        entry["node"] = sheaf.graph.node(v);
        Json rows = Json::array();
        for (const auto& [key, row] : rule.kernels[v].rows()) {
            Json item;
            item["key"] = key;
            if (row.fixed >= 0) {
                item["next"] = row.fixed;
            } else {
                Json p = Json::array();
                for (double prob : row.probs) p.push_back(round12(prob));
                item["p"] = std::move(p);
            }
            rows.push_back(std::move(item));
        }
        entry["rows"] = std::move(rows);
        out.push_back(std::move(entry));
    }
    return out;
}

Section parse_initial(const Json& doc, const Sheaf& sheaf) {
    Section section;
    const Json& nodes = require(doc, "node_states", "initial");
    if (!nodes.is_array() || nodes.size() != sheaf.graph.node_count()) {
        throw validation_error("SHAPE_MISMATCH",
                               "initial: node_states must list one state per node");
    }
    for (std::size_t v = 0; v < sheaf.graph.node_count(); ++v) {
        section.node_states.push_back(resolve_state(
            nodes[v], sheaf.node_stalks[v], "initial node '" + sheaf.graph.node(v) + "'"));
    }
    auto edges = doc.find("edge_states");
    if (edges != doc.end()) {
        if (!edges->is_array() || edges->size() != sheaf.graph.edge_count()) {
            throw validation_error("SHAPE_MISMATCH",
                                   "initial: edge_states must list one state per edge");
        }
        for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
            section.edge_states.push_back(
                resolve_state((*edges)[e], sheaf.edge_stalks[e],
                              "initial edge '" + sheaf.graph.edge(e).id + "'"));
        }
    } else {
        // Derive edges from tails.
        section.edge_states.resize(sheaf.graph.edge_count());
        for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
            section.edge_states[e] =
                sheaf.tail_maps[e](section.node_states[sheaf.graph.source_index(e)]);
        }
    }
    return section;
}

}  // namespace

ParsedModel parse_model(const Json& doc) {
    if (!doc.is_object()) {
        throw parse_error("model: expected a JSON object");
    }
    SheafBuilder builder;
    const Json& nodes = require(doc, "nodes", "model");
    if (!nodes.is_array()) {
        throw parse_error("model: 'nodes' must be an array");
    }
    for (const Json& node : nodes) {
        const std::string id = require_string(node, "id", "model node");
        builder.add_node(id, string_array(require(node, "stalk", "node '" + id + "'"),
                                          "node '" + id + "' stalk"),
                         parse_attrs(node, "node '" + id + "'"));
    }
    const Json& edges = require(doc, "edges", "model");
    if (!edges.is_array()) {
        throw parse_error("model: 'edges' must be an array");
    }
    for (const Json& edge : edges) {
        const std::string id = require_string(edge, "id", "model edge");
        const std::string origin = "edge '" + id + "'";
        builder.add_edge(id, require_string(edge, "source", origin),
                         require_string(edge, "target", origin),
                         string_array(require(edge, "stalk", origin), origin + " stalk"),
                         index_array(require(edge, "tail_map", origin), origin + " tail_map"),
                         index_array(require(edge, "head_map", origin), origin + " head_map"),
                         parse_attrs(edge, origin));
    }

    ParsedModel model;
    model.sheaf = builder.build();
    if (doc.contains("rule")) model.rule = parse_rule(doc["rule"], model.sheaf);
    if (doc.contains("initial")) model.initial = parse_initial(doc["initial"], model.sheaf);
    if (doc.contains("scenario")) model.scenario = parse_scenario(doc["scenario"], model.sheaf);
    return model;
}

ParsedModel load_model(const std::string& path) {
    return parse_model(parse_json_text(read_file(path), path));
}

ScenarioConfig parse_scenario(const Json& doc, const Sheaf& sheaf) {
    const Json& body = doc.contains("scenario") ? doc["scenario"] : doc;
    if (!body.is_object()) {
        throw parse_error("scenario: expected a JSON object");
    }
    ScenarioConfig config;
    config.horizon = require(body, "horizon", "scenario").get<std::uint64_t>();
    if (body.contains("seed")) config.seed = body["seed"].get<std::uint64_t>();
    if (body.contains("stabilize_max_iters")) {
        config.stabilize_max_iters = body["stabilize_max_iters"].get<std::uint32_t>();
    }
    auto failures = body.find("failures");
    if (failures == body.end()) return config;
    if (!failures->is_array()) {
        throw parse_error("scenario: 'failures' must be an array");
    }
    for (const Json& entry : *failures) {
        FailureEvent event;
        event.target = require_string(entry, "target", "failure");
        const std::string origin = "failure on '" + event.target + "'";

        const StateSpace* stalk = nullptr;
        std::size_t v = sheaf.graph.node_index(event.target);
        if (v != kNoIndex) {
            stalk = &sheaf.node_stalks[v];
        } else {
            std::size_t e = sheaf.graph.edge_index(event.target);
            if (e == kNoIndex) {
                throw validation_error("INVALID_EVENT",
                                       origin + ": unknown failure target");
            }
            stalk = &sheaf.edge_stalks[e];
        }
        event.failed_state = resolve_state(require(entry, "failed_state", origin), *stalk, origin);
        if (entry.contains("at_step")) event.at_step = entry["at_step"].get<std::uint64_t>();
        if (entry.contains("sticky")) event.sticky = entry["sticky"].get<bool>();
        config.failures.push_back(std::move(event));
    }
    return config;
}

ScenarioConfig load_scenario(const std::string& path, const Sheaf& sheaf) {
    return parse_scenario(parse_json_text(read_file(path), path), sheaf);
}

InterventionSpec parse_intervention_spec(const Json& doc, const Sheaf& sheaf) {
    if (!doc.is_object()) {
        throw parse_error("intervention spec: expected a JSON object");
    }
    // targets and effect_vars are optional: pairwise sweeps supply their own.
    InterventionSpec spec;
    if (doc.contains("targets")) {
        for (const std::string& id : string_array(doc["targets"], "targets")) {
            spec.targets.push_back(resolve_node(sheaf, id, "targets"));
        }
    }
    if (doc.contains("effect_vars")) {
        for (const std::string& id : string_array(doc["effect_vars"], "effect_vars")) {
            spec.effect_vars.push_back(resolve_node(sheaf, id, "effect_vars"));
        }
    }
    if (doc.contains("horizon")) spec.horizon = doc["horizon"].get<std::uint64_t>();
    if (doc.contains("mode")) {
        const std::string mode = doc["mode"].get<std::string>();
        if (mode == "exact") {
            spec.mode = EIMode::Exact;
        } else if (mode == "sampled") {
            spec.mode = EIMode::Sampled;
        } else {
            throw parse_error("intervention spec: mode must be 'exact' or 'sampled'");
        }
    }
    if (doc.contains("samples")) spec.samples = doc["samples"].get<std::uint64_t>();
    if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("sticky")) spec.sticky = doc["sticky"].get<bool>();
    if (doc.contains("read")) {
        const std::string read = doc["read"].get<std::string>();
        if (read == "horizon") {
            spec.read = EffectRead::AtHorizon;
        } else if (read == "until_stabilized") {
            spec.read = EffectRead::UntilStabilized;
        } else {
            throw parse_error("intervention spec: read must be 'horizon' or 'until_stabilized'");
        }
    }
    if (doc.contains("stabilize_max_iters")) {
        spec.stabilize_max_iters = doc["stabilize_max_iters"].get<std::uint32_t>();
    }
    if (doc.contains("distribution")) {
        const Json& dist = doc["distribution"];
        if (dist.is_string()) {
            if (dist.get<std::string>() != "uniform") {
                throw parse_error(
                    "intervention spec: distribution must be 'uniform' or a weight array");
            }
        } else if (dist.is_array()) {
            for (const Json& w : dist) {
                if (!w.is_number()) {
                    throw parse_error("intervention spec: weights must be numbers");
                }
                spec.weights.push_back(w.get<double>());
            }
        } else {
            throw parse_error(
                "intervention spec: distribution must be 'uniform' or a weight array");
        }
    }
    return spec;
}

InterventionSpec load_intervention_spec(const std::string& path, const Sheaf& sheaf) {
    return parse_intervention_spec(parse_json_text(read_file(path), path), sheaf);
}

MacroGrouping parse_grouping(const Json& doc, const Sheaf& sheaf) {
    if (!doc.is_object()) {
        throw parse_error("grouping: expected a JSON object");
    }
    const Json& blocks = require(doc, "blocks", "grouping");
    if (!blocks.is_array()) {
        throw parse_error("grouping: 'blocks' must be an array of node id arrays");
    }
    MacroGrouping grouping;
    for (const Json& block : blocks) {
        std::vector<std::size_t> members;
        for (const std::string& id : string_array(block, "grouping block")) {
            members.push_back(resolve_node(sheaf, id, "grouping"));
        }
        grouping.blocks.push_back(std::move(members));
    }
    return grouping;
}

MacroGrouping load_grouping(const std::string& path, const Sheaf& sheaf) {
    return parse_grouping(parse_json_text(read_file(path), path), sheaf);
}

Json model_to_json(const Sheaf& sheaf, const UpdateRule* rule, const Section* initial,
                   const ScenarioConfig* scenario) {
    Json doc;
    Json nodes = Json::array();
    for (std::size_t v = 0; v < sheaf.graph.node_count(); ++v) {
        Json node;
        node["id"] = sheaf.graph.node(v);
        node["stalk"] = sheaf.node_stalks[v].labels;
        if (!sheaf.graph.node_attrs(v).empty()) {
            node["attrs"] = attrs_to_json(sheaf.graph.node_attrs(v));
        }
        nodes.push_back(std::move(node));
    }
    doc["nodes"] = std::move(nodes);

    Json edges = Json::array();
    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        Json edge;
        edge["id"] = sheaf.graph.edge(e).id;
        edge["source"] = sheaf.graph.edge(e).source;
        edge["target"] = sheaf.graph.edge(e).target;
        edge["stalk"] = sheaf.edge_stalks[e].labels;
        edge["tail_map"] = sheaf.tail_maps[e].table;
        edge["head_map"] = sheaf.head_maps[e].table;
        if (!sheaf.graph.edge_attrs(e).empty()) {
            edge["attrs"] = attrs_to_json(sheaf.graph.edge_attrs(e));
        }
        edges.push_back(std::move(edge));
    }
    doc["edges"] = std::move(edges);

    if (rule != nullptr) doc["rule"] = rule_to_json(sheaf, *rule);
    if (initial != nullptr) {
        Json init;
        Json node_states = Json::array();
        for (std::size_t v = 0; v < sheaf.graph.node_count(); ++v) {
            node_states.push_back(sheaf.node_stalks[v].labels[initial->node_states[v]]);
        }
        init["node_states"] = std::move(node_states);
        Json edge_states = Json::array();
        for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
            edge_states.push_back(sheaf.edge_stalks[e].labels[initial->edge_states[e]]);
        }
        init["edge_states"] = std::move(edge_states);
        doc["initial"] = std::move(init);
    }
    if (scenario != nullptr) {
        Json sc;
        sc["horizon"] = scenario->horizon;
        sc["seed"] = scenario->seed;
        sc["stabilize_max_iters"] = scenario->stabilize_max_iters;
        Json failures = Json::array();
        for (const FailureEvent& event : scenario->failures) {
            Json entry;
            entry["target"] = event.target;
            entry["failed_state"] = event.failed_state;
            entry["at_step"] = event.at_step;
            entry["sticky"] = event.sticky;
            failures.push_back(std::move(entry));
        }
        sc["failures"] = std::move(failures);
        doc["scenario"] = std::move(sc);
    }
    return doc;
}

Json section_to_json(const Sheaf& sheaf, const Section& section) {
    Json out;
    Json nodes = Json::array();
    for (std::size_t v = 0; v < sheaf.graph.node_count(); ++v) {
        nodes.push_back(sheaf.node_stalks[v].labels[section.node_states[v]]);
    }
    out["nodes"] = std::move(nodes);
    Json edges = Json::array();
    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        edges.push_back(sheaf.edge_stalks[e].labels[section.edge_states[e]]);
    }
    out["edges"] = std::move(edges);
    return out;
}

Json validation_to_json(const Sheaf& sheaf, const ValidationReport& report) {
    Json out;
    out["ok"] = report.ok();
    out["counts"] = {{"nodes", sheaf.graph.node_count()}, {"edges", sheaf.graph.edge_count()}};
    Json violations = Json::array();
    for (const Violation& violation : report.violations) {
        Json entry;
        entry["code"] = violation.code;
        entry["cell"] = violation.cell;
        entry["message"] = violation.message;
        violations.push_back(std::move(entry));
    }
    out["violations"] = std::move(violations);
    return out;
}

Json sections_to_json(const Sheaf& sheaf, const SectionEnumeration& enumeration) {
    Json out;
    out["count"] = enumeration.sections.size();
    out["truncated"] = enumeration.truncated;
    Json sections = Json::array();
    for (const Section& section : enumeration.sections) {
        sections.push_back(section_to_json(sheaf, section));
    }
    out["sections"] = std::move(sections);
    return out;
}

Json trajectory_to_json(const Sheaf& sheaf, const Trajectory& trajectory) {
    Json out;
    out["horizon"] = trajectory.sections.size() - 1;
    Json steps = Json::array();
    for (std::size_t t = 0; t < trajectory.sections.size(); ++t) {
        Json step = section_to_json(sheaf, trajectory.sections[t]);
        Json entry;
        entry["t"] = t;
        entry["nodes"] = std::move(step["nodes"]);
        entry["edges"] = std::move(step["edges"]);
        entry["residual"] = trajectory.residuals[t];
        steps.push_back(std::move(entry));
    }
    out["steps"] = std::move(steps);
    Json events = Json::array();
    for (const auto& applied : trajectory.events_applied) {
        Json entry;
        entry["target"] = applied.event.target;
        entry["failed_state"] = applied.event.failed_state;
        entry["at_step"] = applied.event.at_step;
        entry["sticky"] = applied.event.sticky;
        entry["first_applied_at"] = applied.step;
        events.push_back(std::move(entry));
    }
    out["events_applied"] = std::move(events);
    out["warnings"] = trajectory.warnings;
    return out;
}

Json ei_to_json(const Sheaf& sheaf, const InterventionSpec& spec, const EIResult& result) {
    Json out;
    Json targets = Json::array();
    for (std::size_t v : spec.targets) targets.push_back(sheaf.graph.node(v));
    out["targets"] = std::move(targets);
    Json effects = Json::array();
    for (std::size_t v : spec.effect_vars) effects.push_back(sheaf.graph.node(v));
    out["effect_vars"] = std::move(effects);
    out["horizon"] = spec.horizon;
    out["mode"] = spec.mode == EIMode::Exact ? "exact" : "sampled";
    out["ei_bits"] = round12(result.ei_bits);
    out["determinism_bits"] = round12(result.determinism_bits);
    out["degeneracy_bits"] = round12(result.degeneracy_bits);
    out["effect_entropy_bits"] = round12(result.effect_entropy_bits);
    out["intervention_count"] = result.intervention_count;
    out["effect_count"] = result.effect_count;
    out["exact"] = result.exact;
    out["samples"] = result.samples_used;
    return out;
}

Json pairwise_to_json(const Sheaf& sheaf, const PairwiseResult& result) {
    Json out;
    out["nodes"] = sheaf.graph.nodes();
    out["exact"] = result.exact;
    Json matrix = Json::array();
    for (const auto& row : result.ei_bits) {
        Json cells = Json::array();
        for (double value : row) cells.push_back(round12(value));
        matrix.push_back(std::move(cells));
    }
    out["ei_bits"] = std::move(matrix);
    return out;
}

std::string pairwise_to_csv(const Sheaf& sheaf, const PairwiseResult& result) {
    std::ostringstream out;
    out << "do\\effect";
    for (const NodeId& id : sheaf.graph.nodes()) out << "," << id;
    out << "\n";
    for (std::size_t i = 0; i < result.ei_bits.size(); ++i) {
        out << sheaf.graph.node(i);
        for (double value : result.ei_bits[i]) {
            char buffer[32];
            std::snprintf(buffer, sizeof(buffer), "%.12f", value);
            out << "," << buffer;
        }
        out << "\n";
    }
    return out.str();
}

Json emergence_to_json(const Sheaf& sheaf, const MacroGrouping& grouping,
                       const EmergenceResult& result, double score, const std::string& variant,
                       const std::vector<CandidateBlock>& candidates) {
    Json out;
    Json blocks = Json::array();
    for (const auto& block : grouping.blocks) {
        Json members = Json::array();
        for (std::size_t v : block) members.push_back(sheaf.graph.node(v));
        blocks.push_back(std::move(members));
    }
    out["grouping"] = std::move(blocks);
    out["ei_micro_bits"] = round12(result.micro.ei_bits);
    out["ei_macro_bits"] = round12(result.macro.ei_bits);
    out["r_cause_bits"] = round12(result.r_cause_bits);
    out["score"] = round12(score);
    out["variant"] = variant;
    Json ranked = Json::array();
    for (const CandidateBlock& candidate : candidates) {
        Json entry;
        Json members = Json::array();
        for (std::size_t v : candidate.members) members.push_back(sheaf.graph.node(v));
        entry["members"] = std::move(members);
        entry["score_normalized"] = round12(candidate.score_normalized);
        entry["score_raw"] = round12(candidate.score_raw);
        ranked.push_back(std::move(entry));
    }
    out["candidates"] = std::move(ranked);
    out["micro"] = {{"ei_bits", round12(result.micro.ei_bits)},
                    {"determinism_bits", round12(result.micro.determinism_bits)},
                    {"degeneracy_bits", round12(result.micro.degeneracy_bits)},
                    {"intervention_count", result.micro.intervention_count},
                    {"exact", result.micro.exact}};
    out["macro"] = {{"ei_bits", round12(result.macro.ei_bits)},
                    {"determinism_bits", round12(result.macro.determinism_bits)},
                    {"degeneracy_bits", round12(result.macro.degeneracy_bits)},
                    {"intervention_count", result.macro.intervention_count},
                    {"exact", result.macro.exact}};
    return out;
}

Json make_envelope(const std::string& command, std::uint64_t seed,
                   const std::vector<InputDigest>& inputs, Json report) {
    Json out;
    out["tool"] = kToolName;
    out["version"] = kToolVersion;
    out["command"] = command;
    out["seed"] = seed;
    Json digests = Json::array();
    for (const InputDigest& input : inputs) {
        digests.push_back({{"path", input.path}, {"digest", input.digest}});
    }
    out["inputs"] = std::move(digests);
    out["report"] = std::move(report);
    return out;
}

double round12(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12f", value);
    return std::strtod(buffer, nullptr);
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "fnv1a64:%016" PRIx64, hash);
    return buffer;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw parse_error("cannot read file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

InputDigest digest_file(const std::string& path) {
    return {path, fnv1a64_hex(read_file(path))};
}

Json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(origin + ": " + e.what());
    }
}

Section default_initial(const Sheaf& sheaf) {
    Section section;
    section.node_states.assign(sheaf.graph.node_count(), 0);
    section.edge_states.resize(sheaf.graph.edge_count());
    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        section.edge_states[e] = sheaf.tail_maps[e](0);
    }
    return section;
}

}  // namespace rcause
