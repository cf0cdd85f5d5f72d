#include "rcause/model.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace rcause {

// --- AttributedGraph --------------------------------------------------------

std::size_t AttributedGraph::add_node(NodeId id, AttrRecord attrs) {
    if (node_index_.count(id)) {
        throw validation_error("DUPLICATE_ID", "duplicate node id '" + id + "'");
    }
    const std::size_t idx = nodes_.size();
    node_index_.emplace(id, idx);
    nodes_.push_back(std::move(id));
    node_attrs_.push_back(std::move(attrs));
    incoming_.emplace_back();
    outgoing_.emplace_back();
    return idx;
}

std::size_t AttributedGraph::add_edge(EdgeId id, NodeId source, NodeId target,
                                      AttrRecord attrs) {
    if (edge_index_.count(id)) {
        throw validation_error("DUPLICATE_ID", "duplicate edge id '" + id + "'");
    }
    const std::size_t idx = edges_.size();
    edge_index_.emplace(id, idx);
    const std::size_t s = node_index(source);
    const std::size_t t = node_index(target);
    edge_sources_.push_back(s);
    edge_targets_.push_back(t);
    if (s != kNoIndex) outgoing_[s].push_back(idx);
    if (t != kNoIndex) incoming_[t].push_back(idx);
    edges_.push_back(Edge{std::move(id), std::move(source), std::move(target)});
    edge_attrs_.push_back(std::move(attrs));
    return idx;
}

std::size_t AttributedGraph::node_index(const NodeId& id) const {
    auto it = node_index_.find(id);
    return it == node_index_.end() ? kNoIndex : it->second;
}

std::size_t AttributedGraph::edge_index(const EdgeId& id) const {
    auto it = edge_index_.find(id);
    return it == edge_index_.end() ? kNoIndex : it->second;
}

// --- StateSpace -------------------------------------------------------------

std::optional<StateIndex> StateSpace::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return static_cast<StateIndex>(i);
    }
    return std::nullopt;
}

std::size_t section_hash(const Section& s) {
    std::size_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](StateIndex v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    for (StateIndex v : s.node_states) mix(v);
    mix(0xffffffffu);
    for (StateIndex v : s.edge_states) mix(v);
    return h;
}

// --- SheafBuilder -----------------------------------------------------------

SheafBuilder& SheafBuilder::add_node(NodeId id, std::vector<std::string> stalk_labels,
                                     AttrRecord attrs) {
    sheaf_.graph.add_node(std::move(id), std::move(attrs));
    sheaf_.node_stalks.push_back(StateSpace{std::move(stalk_labels)});
    return *this;
}

SheafBuilder& SheafBuilder::add_edge(EdgeId id, NodeId source, NodeId target,
                                     std::vector<std::string> stalk_labels,
                                     std::vector<StateIndex> tail_table,
                                     std::vector<StateIndex> head_table,
                                     AttrRecord attrs) {
    sheaf_.graph.add_edge(std::move(id), std::move(source), std::move(target),
                          std::move(attrs));
    sheaf_.edge_stalks.push_back(StateSpace{std::move(stalk_labels)});
    sheaf_.tail_maps.push_back(RestrictionMap{std::move(tail_table)});
    sheaf_.head_maps.push_back(RestrictionMap{std::move(head_table)});
    return *this;
}

Sheaf SheafBuilder::build() { return std::move(sheaf_); }

// --- validate_sheaf ---------------------------------------------------------

namespace {

void check_map(const Sheaf& sheaf, std::size_t e, const RestrictionMap& map,
               std::size_t endpoint, const char* side, ValidationReport& report) {
    const EdgeId& id = sheaf.graph.edge(e).id;
    if (endpoint == kNoIndex) return;  // reported as DANGLING_ENDPOINT already
    const std::size_t domain = sheaf.node_stalks[endpoint].cardinality();
    const std::size_t codomain = sheaf.edge_stalks[e].cardinality();
    if (map.table.size() != domain) {
        std::ostringstream msg;
        msg << side << " map of edge '" << id << "' has " << map.table.size()
            << " entries for a " << domain << "-state node stalk";
        report.violations.push_back({"NON_TOTAL_MAP", id, msg.str()});
        return;
    }
    for (std::size_t s = 0; s < map.table.size(); ++s) {
        if (map.table[s] >= codomain) {
            std::ostringstream msg;
            msg << side << " map of edge '" << id << "' sends state " << s << " to "
                << map.table[s] << ", outside the " << codomain << "-state edge stalk";
            report.violations.push_back({"MAP_RANGE", id, msg.str()});
        }
    }
}

}  // namespace

ValidationReport validate_sheaf(const Sheaf& sheaf) {
    ValidationReport report;
    const auto& g = sheaf.graph;

    if (sheaf.node_stalks.size() != g.node_count() ||
        sheaf.edge_stalks.size() != g.edge_count() ||
        sheaf.tail_maps.size() != g.edge_count() ||
        sheaf.head_maps.size() != g.edge_count()) {
        report.violations.push_back(
            {"MISSING_STALK", "",
             "stalk/map vectors are not aligned with the graph's cells"});
        return report;  // misaligned vectors make per-cell checks unsafe
    }

    for (std::size_t v = 0; v < g.node_count(); ++v) {
        const auto& stalk = sheaf.node_stalks[v];
        if (stalk.cardinality() == 0) {
            report.violations.push_back(
                {"EMPTY_STALK", g.node(v), "node '" + g.node(v) + "' has an empty stalk"});
        }
        std::set<std::string> seen(stalk.labels.begin(), stalk.labels.end());
        if (seen.size() != stalk.labels.size()) {
            report.violations.push_back({"DUPLICATE_LABEL", g.node(v),
                                         "node '" + g.node(v) + "' has repeated stalk labels"});
        }
    }

    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const Edge& edge = g.edge(e);
        if (g.source_index(e) == kNoIndex) {
            report.violations.push_back(
                {"DANGLING_ENDPOINT", edge.id,
                 "edge '" + edge.id + "' references missing source node '" + edge.source + "'"});
        }
        if (g.target_index(e) == kNoIndex) {
            report.violations.push_back(
                {"DANGLING_ENDPOINT", edge.id,
                 "edge '" + edge.id + "' references missing target node '" + edge.target + "'"});
        }
        const auto& stalk = sheaf.edge_stalks[e];
        if (stalk.cardinality() == 0) {
            report.violations.push_back(
                {"EMPTY_STALK", edge.id, "edge '" + edge.id + "' has an empty stalk"});
        }
        std::set<std::string> seen(stalk.labels.begin(), stalk.labels.end());
        if (seen.size() != stalk.labels.size()) {
            report.violations.push_back({"DUPLICATE_LABEL", edge.id,
                                         "edge '" + edge.id + "' has repeated stalk labels"});
        }
        check_map(sheaf, e, sheaf.tail_maps[e], g.source_index(e), "tail", report);
        check_map(sheaf, e, sheaf.head_maps[e], g.target_index(e), "head", report);
    }
    return report;
}

// --- section operations -----------------------------------------------------

namespace {

// Cheap structural guard for operations whose precondition is a valid sheaf;
// keeps a missed validate call from turning into out-of-bounds indexing.
void require_closed_structure(const Sheaf& sheaf) {
    if (sheaf.node_stalks.size() != sheaf.node_count() ||
        sheaf.edge_stalks.size() != sheaf.edge_count() ||
        sheaf.tail_maps.size() != sheaf.edge_count() ||
        sheaf.head_maps.size() != sheaf.edge_count()) {
        throw validation_error("MISSING_STALK", "sheaf stalks are not aligned with its graph");
    }
    for (std::size_t e = 0; e < sheaf.edge_count(); ++e) {
        if (sheaf.graph.source_index(e) == kNoIndex ||
            sheaf.graph.target_index(e) == kNoIndex) {
            throw validation_error("DANGLING_ENDPOINT",
                                   "edge '" + sheaf.graph.edge(e).id +
                                       "' references a missing endpoint");
        }
        const std::size_t u = sheaf.graph.source_index(e);
        const std::size_t v = sheaf.graph.target_index(e);
        if (sheaf.tail_maps[e].table.size() != sheaf.node_stalks[u].cardinality() ||
            sheaf.head_maps[e].table.size() != sheaf.node_stalks[v].cardinality()) {
            throw validation_error("NON_TOTAL_MAP",
                                   "restriction maps of edge '" + sheaf.graph.edge(e).id +
                                       "' do not cover their node stalk");
        }
    }
}

}  // namespace

void check_shape(const Sheaf& sheaf, const Section& section) {
    if (section.node_states.size() != sheaf.node_count() ||
        section.edge_states.size() != sheaf.edge_count()) {
        throw validation_error("SHAPE_MISMATCH",
                               "section does not cover exactly the graph's cells");
    }
    for (std::size_t v = 0; v < sheaf.node_count(); ++v) {
        if (section.node_states[v] >= sheaf.node_stalks[v].cardinality()) {
            throw validation_error("SHAPE_MISMATCH",
                                   "state of node '" + sheaf.graph.node(v) +
                                       "' is outside its stalk");
        }
    }
    for (std::size_t e = 0; e < sheaf.edge_count(); ++e) {
        if (section.edge_states[e] >= sheaf.edge_stalks[e].cardinality()) {
            throw validation_error("SHAPE_MISMATCH",
                                   "state of edge '" + sheaf.graph.edge(e).id +
                                       "' is outside its stalk");
        }
    }
}

bool is_global_section(const Sheaf& sheaf, const Section& section) {
    check_shape(sheaf, section);
    return consistency_residual(sheaf, section) == 0;
}

std::uint32_t consistency_residual(const Sheaf& sheaf, const Section& section) {
    require_closed_structure(sheaf);
    check_shape(sheaf, section);
    std::uint32_t violated = 0;
    for (std::size_t e = 0; e < sheaf.edge_count(); ++e) {
        const std::size_t u = sheaf.graph.source_index(e);
        const std::size_t v = sheaf.graph.target_index(e);
        const StateIndex edge_state = section.edge_states[e];
        if (sheaf.tail_maps[e](section.node_states[u]) != edge_state) ++violated;
        if (sheaf.head_maps[e](section.node_states[v]) != edge_state) ++violated;
    }
    return violated;
}

// --- enumeration ------------------------------------------------------------

SectionEnumeration enumerate_global_sections(const Sheaf& sheaf, std::size_t limit) {
    if (limit == 0) {
        throw validation_error("INVALID_LIMIT", "enumeration limit must be positive");
    }
    require_closed_structure(sheaf);
    const std::size_t n = sheaf.node_count();
    const std::size_t m = sheaf.edge_count();

    // Edges become checkable once both endpoints are assigned.
    std::vector<std::vector<std::size_t>> ready_at(n);
    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t u = sheaf.graph.source_index(e);
        const std::size_t v = sheaf.graph.target_index(e);
        ready_at[std::max(u, v)].push_back(e);
    }

    SectionEnumeration out;
    Section scratch;
    scratch.node_states.assign(n, 0);
    scratch.edge_states.assign(m, 0);

    if (n == 0) {
        out.sections.push_back(scratch);
        return out;
    }

    // Iterative backtracking in lexicographic order of node states.
    std::vector<StateIndex> state(n, 0);
    std::size_t depth = 0;
    bool descend = true;  // true: try current state at depth; false: advance it

    auto consistent_at = [&](std::size_t k) {
        for (std::size_t e : ready_at[k]) {
            const std::size_t u = sheaf.graph.source_index(e);
            const std::size_t v = sheaf.graph.target_index(e);
            const StateIndex forced = sheaf.tail_maps[e](state[u]);
            if (sheaf.head_maps[e](state[v]) != forced) return false;
            scratch.edge_states[e] = forced;
        }
        return true;
    };

    while (true) {
        if (descend) {
            if (state[depth] < sheaf.node_stalks[depth].cardinality() &&
                consistent_at(depth)) {
                if (depth + 1 == n) {
                    if (out.sections.size() == limit) {
                        out.truncated = true;  // at least one section was cut off
                        return out;
                    }
                    scratch.node_states = state;
                    out.sections.push_back(scratch);
                    descend = false;  // advance at the deepest level
                } else {
                    ++depth;
                    state[depth] = 0;
                }
            } else {
                descend = false;
            }
        } else {
            ++state[depth];
            if (state[depth] < sheaf.node_stalks[depth].cardinality()) {
                descend = true;
            } else if (depth == 0) {
                return out;
            } else {
                --depth;
            }
        }
    }
}

std::string describe(const Sheaf& sheaf, const Section& section) {
    std::ostringstream oss;
    for (std::size_t v = 0; v < sheaf.node_count(); ++v) {
        if (v) oss << " ";
        oss << sheaf.graph.node(v) << "="
            << sheaf.node_stalks[v].labels[section.node_states[v]];
    }
    for (std::size_t e = 0; e < sheaf.edge_count(); ++e) {
        oss << " " << sheaf.graph.edge(e).id << "="
            << sheaf.edge_stalks[e].labels[section.edge_states[e]];
    }
    return oss.str();
}

}  // namespace rcause
