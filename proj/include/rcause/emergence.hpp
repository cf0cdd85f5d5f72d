#pragma once
// Macro-scale construction and scoring. A grouping partitions the nodes into
// blocks; each multi-node block collapses into one macro node whose stalk is
// the block's locally consistent sections, with boundary restriction maps and
// the update kernel transported along the collapse. The resilience index is
// the macro-scale effective information minus the micro-scale value.

#include <cstdint>
#include <vector>

#include "rcause/causal.hpp"
#include "rcause/dynamics.hpp"
#include "rcause/model.hpp"

namespace rcause {

// Partition of the node set. Blocks keep their given order; nodes not listed
// in any block are appended as singleton blocks in ascending index order.
struct MacroGrouping {
    std::vector<std::vector<std::size_t>> blocks;
};

// One collapsed block: the induced sub-sheaf restricted to the block's nodes
// and internal edges, and its locally consistent sections (the macro stalk).
// Local sections index nodes by position in `members` and edges by position
// in `internal_edges`.
struct BlockCollapse {
    std::vector<std::size_t> members;
    std::vector<std::size_t> internal_edges;
    std::vector<Section> local_sections;
};

struct QuotientModel {
    Sheaf sheaf;
    UpdateRule rule;
    Section baseline;
    MacroGrouping grouping;                  // canonicalized (full partition)
    std::vector<BlockCollapse> blocks;       // aligned with grouping.blocks
    std::vector<std::size_t> macro_of_node;  // micro node -> macro node index
    std::vector<std::size_t> macro_edges;    // macro edge -> micro edge index
};

struct EmergenceResult {
    EIResult micro;
    EIResult macro;
    double r_cause_bits = 0.0;
    std::vector<std::size_t> micro_targets;  // node indices used on the micro side
    std::vector<std::size_t> macro_targets;  // macro node indices used on the macro side
};

enum class SearchStrategy { Exhaustive, Greedy };
enum class ScoreVariant { Normalized, Raw };

struct SearchOptions {
    SearchStrategy strategy = SearchStrategy::Exhaustive;
    // Selection score: mean pairwise EI over ordered pairs (normalized) or
    // the plain sum (raw). Both values are reported either way.
    ScoreVariant variant = ScoreVariant::Normalized;
    std::size_t max_block_size = 6;
    std::size_t limit = 10;  // candidates kept in the result
    std::size_t candidate_cap = std::size_t{1} << 20;
    unsigned jobs = 1;
};

struct CandidateBlock {
    std::vector<std::size_t> members;  // ascending node indices
    double score_normalized = 0.0;
    double score_raw = 0.0;
};

struct SearchResult {
    std::vector<CandidateBlock> candidates;  // ranked best-first
    PairwiseResult pairwise;
    MacroGrouping best;  // top block plus singletons; all singletons if none scored
};

// Validates block contents (in-range, no node in two blocks) and returns the
// full partition with implicit singletons appended. INVALID_GROUPING on any
// violation.
MacroGrouping canonicalize_grouping(const Sheaf& sheaf, const MacroGrouping& grouping);

// Enumerates the locally consistent sections of one block over its induced
// sub-sheaf. EMPTY_LOCAL_SECTIONS when the block admits none, CAP_EXCEEDED
// past `cap`.
BlockCollapse collapse_block(const Sheaf& sheaf, const std::vector<std::size_t>& members,
                             std::size_t cap);

// Builds the quotient sheaf, rule, and baseline for a grouping. Multi-node
// blocks become macro nodes named "(" + member ids joined by "+" + ")" whose
// stalk labels join the member state labels with "|"; singleton blocks carry
// their node over unchanged. Boundary edges survive with composed restriction
// maps; internal edges are absorbed. The macro kernel lifts a macro state to
// its member states, steps the members with boundary inputs taken from the
// kernel input tuple, re-derives internal edges from tails, and projects onto
// the nearest local section (fewest differing cells, ties to the lowest
// section index).
QuotientModel build_quotient(const Sheaf& sheaf, const UpdateRule& rule, const Section& baseline,
                             const MacroGrouping& grouping);

// EI at both scales under matched intervention sets: micro targets/effects
// are the union of multi-block members, macro targets/effects the collapsed
// macro nodes (both fall back to every node when the grouping is all
// singletons, making the two scales isomorphic). `spec` supplies horizon,
// mode, samples, seed, and read settings; targets, effects, and weights are
// overridden.
EmergenceResult causal_resilience_index(const Sheaf& sheaf, const UpdateRule& rule,
                                        const Section& baseline, const MacroGrouping& grouping,
                                        const InterventionSpec& spec);

// Scores connected candidate blocks by pairwise EI and ranks them. The
// exhaustive strategy enumerates every connected subset of size 2 to
// max_block_size; the greedy strategy grows from the best symmetric pair
// while the selection score strictly improves, reporting each accepted
// stage. Candidates scoring at most 1e-12 are dropped.
SearchResult search_macro_nodes(const Sheaf& sheaf, const UpdateRule& rule,
                                const Section& baseline, const InterventionSpec& spec,
                                const SearchOptions& options);

// Mean selection score of the grouping's multi-node blocks under an already
// computed pairwise matrix; 0 when every block is a singleton.
double grouping_score(const PairwiseResult& pairwise, const MacroGrouping& grouping,
                      ScoreVariant variant);

}  // namespace rcause
