#pragma once
// Attributed directed graph, cellular sheaf, sections, and global-section
// enumeration. A sheaf assigns a finite discrete state space (stalk) to every
// node and edge, plus one restriction map per edge endpoint; a section is
// globally consistent when both restrictions agree with the edge state on
// every edge. All values here are immutable once built and safe to share
// between workers; the operations are pure.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rcause/errors.hpp"

namespace rcause {

using NodeId = std::string;
using EdgeId = std::string;
using StateIndex = std::uint32_t;

constexpr std::size_t kNoIndex = static_cast<std::size_t>(-1);

// Typed attribute records; metadata for domain builders and reporting. The
// sheaf-level semantics live entirely in stalks and maps.
using AttrValue = std::variant<bool, std::int64_t, double, std::string>;
using AttrRecord = std::map<std::string, AttrValue>;

struct Edge {
    EdgeId id;
    NodeId source;
    NodeId target;
};

// Directed multigraph with deterministic (insertion-order) iteration.
// Self-loops, parallel edges, and cycles are allowed; endpoints may dangle
// until validation, so structurally broken inputs can still be reported on.
class AttributedGraph {
public:
    std::size_t add_node(NodeId id, AttrRecord attrs = {});
    std::size_t add_edge(EdgeId id, NodeId source, NodeId target, AttrRecord attrs = {});

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    const std::vector<NodeId>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(std::size_t e) const { return edges_[e]; }
    const NodeId& node(std::size_t v) const { return nodes_[v]; }

    // kNoIndex when the id is unknown (e.g. a dangling endpoint).
    std::size_t node_index(const NodeId& id) const;
    std::size_t edge_index(const EdgeId& id) const;

    // Endpoint indices of edge e; kNoIndex for dangling references.
    std::size_t source_index(std::size_t e) const { return edge_sources_[e]; }
    std::size_t target_index(std::size_t e) const { return edge_targets_[e]; }

    // Incoming/outgoing edge indices per node, ascending (= edge order).
    const std::vector<std::size_t>& incoming(std::size_t v) const { return incoming_[v]; }
    const std::vector<std::size_t>& outgoing(std::size_t v) const { return outgoing_[v]; }

    const AttrRecord& node_attrs(std::size_t v) const { return node_attrs_[v]; }
    const AttrRecord& edge_attrs(std::size_t e) const { return edge_attrs_[e]; }

private:
    std::vector<NodeId> nodes_;
    std::vector<Edge> edges_;
    std::vector<AttrRecord> node_attrs_;
    std::vector<AttrRecord> edge_attrs_;
    std::vector<std::size_t> edge_sources_;
    std::vector<std::size_t> edge_targets_;
    std::vector<std::vector<std::size_t>> incoming_;
    std::vector<std::vector<std::size_t>> outgoing_;
    std::map<NodeId, std::size_t> node_index_;
    std::map<EdgeId, std::size_t> edge_index_;
};

// Finite discrete stalk: an ordered list of distinct state labels.
struct StateSpace {
    std::vector<std::string> labels;

    std::size_t cardinality() const { return labels.size(); }
    std::optional<StateIndex> index_of(const std::string& label) const;
};

// Total function from a node stalk into an edge stalk, as a lookup table.
// table[s] is the edge state the node state s restricts to.
struct RestrictionMap {
    std::vector<StateIndex> table;

    StateIndex operator()(StateIndex s) const { return table[s]; }
    bool operator==(const RestrictionMap&) const = default;
};

// Cellular sheaf over an attributed graph. Stalk and map vectors are aligned
// with the graph's node/edge iteration order.
struct Sheaf {
    AttributedGraph graph;
    std::vector<StateSpace> node_stalks;
    std::vector<StateSpace> edge_stalks;
    std::vector<RestrictionMap> tail_maps;  // from source stalk into edge stalk
    std::vector<RestrictionMap> head_maps;  // from target stalk into edge stalk

    std::size_t node_count() const { return graph.node_count(); }
    std::size_t edge_count() const { return graph.edge_count(); }
};

// Assignment of a state to every node and edge, aligned with the sheaf's
// iteration order.
struct Section {
    std::vector<StateIndex> node_states;
    std::vector<StateIndex> edge_states;

    bool operator==(const Section&) const = default;
};

std::size_t section_hash(const Section& s);

struct Violation {
    std::string code;     // machine-readable, e.g. NON_TOTAL_MAP
    std::string cell;     // node or edge id the violation is anchored to
    std::string message;  // human-readable description
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

struct SectionEnumeration {
    std::vector<Section> sections;
    bool truncated = false;
};

// Incremental sheaf assembly; enforces unique ids and aligned stalks/maps but
// intentionally permits inconsistent structure so validate_sheaf has
// something to report.
class SheafBuilder {
public:
    SheafBuilder& add_node(NodeId id, std::vector<std::string> stalk_labels,
                           AttrRecord attrs = {});
    SheafBuilder& add_edge(EdgeId id, NodeId source, NodeId target,
                           std::vector<std::string> stalk_labels,
                           std::vector<StateIndex> tail_table,
                           std::vector<StateIndex> head_table, AttrRecord attrs = {});
    Sheaf build();

private:
    Sheaf sheaf_;
};

// Returns every structural violation; an empty report means all sheaf
// invariants hold. Violations are data, not errors.
ValidationReport validate_sheaf(const Sheaf& sheaf);

// Throws a SHAPE_MISMATCH validation error unless the section covers exactly
// the sheaf's cells with in-range state indices.
void check_shape(const Sheaf& sheaf, const Section& section);

// True iff both restriction maps agree with the edge state on every edge.
bool is_global_section(const Sheaf& sheaf, const Section& section);

// Number of violated edge-side constraints (0..2|E|); 0 iff global.
std::uint32_t consistency_residual(const Sheaf& sheaf, const Section& section);

// All global sections in lexicographic order of node states, truncated at
// limit. Backtracks over node states with edge states forced by tail maps and
// checked against head maps; never materializes the product space.
SectionEnumeration enumerate_global_sections(const Sheaf& sheaf, std::size_t limit);

std::string describe(const Sheaf& sheaf, const Section& section);

}  // namespace rcause
