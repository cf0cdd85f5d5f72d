#include "rcause/emergence.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>

#include "rcause/errors.hpp"

namespace rcause {

namespace {

constexpr double kScoreFloor = 1e-12;
constexpr std::size_t kLocalSectionCap = std::size_t{1} << 16;
constexpr std::size_t kMacroKernelRowCap = std::size_t{1} << 20;

std::string block_name(const Sheaf& sheaf, const std::vector<std::size_t>& members) {
    std::ostringstream out;
    out << "(";
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) out << "+";
        out << sheaf.graph.node(members[i]);
    }
    out << ")";
    return out.str();
}

std::string local_section_label(const Sheaf& sheaf, const std::vector<std::size_t>& members,
                                const Section& local) {
    std::ostringstream out;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) out << "|";
        out << sheaf.node_stalks[members[i]].labels[local.node_states[i]];
    }
    return out.str();
}

// Nearest local section to a candidate assignment over (member states,
// internal edge states): fewest differing cells, ties to the lowest index.
std::size_t project_to_local_section(const BlockCollapse& block, const Section& candidate) {
    std::size_t best = 0;
    std::size_t best_distance = kNoIndex;
    for (std::size_t m = 0; m < block.local_sections.size(); ++m) {
        const Section& section = block.local_sections[m];
        std::size_t distance = 0;
        for (std::size_t i = 0; i < candidate.node_states.size(); ++i) {
            if (section.node_states[i] != candidate.node_states[i]) ++distance;
        }
        for (std::size_t i = 0; i < candidate.edge_states.size(); ++i) {
            if (section.edge_states[i] != candidate.edge_states[i]) ++distance;
        }
        if (distance < best_distance) {
            best_distance = distance;
            best = m;
        }
    }
    return best;
}

// Input wiring for one member node inside a collapsed block: where each of
// its micro incoming edges reads its state from during a macro kernel step.
struct MemberInput {
    bool internal = false;
    std::size_t pos = 0;  // internal edge position, or macro kernel input slot
};

struct MemberWiring {
    std::size_t node = 0;  // micro node index
    std::vector<MemberInput> inputs;
};

}  // namespace

MacroGrouping canonicalize_grouping(const Sheaf& sheaf, const MacroGrouping& grouping) {
    const std::size_t n = sheaf.graph.node_count();
    std::vector<char> covered(n, 0);
    MacroGrouping canonical;
    for (const auto& block : grouping.blocks) {
        if (block.empty()) {
            throw validation_error("INVALID_GROUPING", "empty block");
        }
        for (std::size_t v : block) {
            if (v >= n) {
                throw validation_error("INVALID_GROUPING",
                                       "node index " + std::to_string(v) + " out of range");
            }
            if (covered[v]) {
                throw validation_error("INVALID_GROUPING", "node '" + sheaf.graph.node(v) +
                                                               "' appears in two blocks");
            }
            covered[v] = 1;
        }
        canonical.blocks.push_back(block);
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (!covered[v]) canonical.blocks.push_back({v});
    }
    return canonical;
}

BlockCollapse collapse_block(const Sheaf& sheaf, const std::vector<std::size_t>& members,
                             std::size_t cap) {
    BlockCollapse block;
    block.members = members;

    std::map<std::size_t, std::size_t> member_pos;
    for (std::size_t i = 0; i < members.size(); ++i) member_pos[members[i]] = i;

    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        if (member_pos.count(sheaf.graph.source_index(e)) &&
            member_pos.count(sheaf.graph.target_index(e))) {
            block.internal_edges.push_back(e);
        }
    }

    // Induced sub-sheaf; local consistency is exactly global consistency on
    // the block with boundary edges removed.
    SheafBuilder builder;
    for (std::size_t v : members) {
        builder.add_node(sheaf.graph.node(v), sheaf.node_stalks[v].labels);
    }
    for (std::size_t e : block.internal_edges) {
        const Edge& edge = sheaf.graph.edge(e);
        builder.add_edge(edge.id, edge.source, edge.target, sheaf.edge_stalks[e].labels,
                         sheaf.tail_maps[e].table, sheaf.head_maps[e].table);
    }
    Sheaf induced = builder.build();

    SectionEnumeration enumeration = enumerate_global_sections(induced, cap);
    if (enumeration.truncated) {
        throw cap_exceeded("block " + block_name(sheaf, members) + " has over " +
                           std::to_string(cap) + " locally consistent sections");
    }
    if (enumeration.sections.empty()) {
        throw validation_error("EMPTY_LOCAL_SECTIONS",
                               "block " + block_name(sheaf, members) +
                                   " admits no locally consistent section");
    }
    block.local_sections = std::move(enumeration.sections);
    return block;
}

QuotientModel build_quotient(const Sheaf& sheaf, const UpdateRule& rule, const Section& baseline,
                             const MacroGrouping& grouping) {
    check_shape(sheaf, baseline);
    if (rule.kernels.size() != sheaf.graph.node_count()) {
        throw validation_error("SHAPE_MISMATCH", "rule kernel count does not match node count");
    }

    QuotientModel quotient;
    quotient.grouping = canonicalize_grouping(sheaf, grouping);
    const auto& blocks = quotient.grouping.blocks;

    quotient.macro_of_node.assign(sheaf.graph.node_count(), kNoIndex);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t v : blocks[b]) quotient.macro_of_node[v] = b;
    }

    quotient.blocks.reserve(blocks.size());
    for (const auto& block : blocks) {
        if (block.size() >= 2) {
            quotient.blocks.push_back(collapse_block(sheaf, block, kLocalSectionCap));
        } else {
            BlockCollapse singleton;
            singleton.members = block;
            quotient.blocks.push_back(std::move(singleton));
        }
    }

    // Macro nodes. Multi-node blocks collapse; singletons carry over.
    SheafBuilder builder;
    std::vector<std::string> macro_ids(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].size() == 1) {
            const std::size_t v = blocks[b][0];
            macro_ids[b] = sheaf.graph.node(v);
            builder.add_node(macro_ids[b], sheaf.node_stalks[v].labels,
                             sheaf.graph.node_attrs(v));
        } else {
            macro_ids[b] = block_name(sheaf, blocks[b]);
            std::vector<std::string> labels;
            labels.reserve(quotient.blocks[b].local_sections.size());
            for (const Section& local : quotient.blocks[b].local_sections) {
                labels.push_back(local_section_label(sheaf, blocks[b], local));
            }
            std::ostringstream members;
            for (std::size_t i = 0; i < blocks[b].size(); ++i) {
                if (i) members << ",";
                members << sheaf.graph.node(blocks[b][i]);
            }
            builder.add_node(macro_ids[b], std::move(labels),
                             {{"members", members.str()}});
        }
    }

    // Surviving edges, in micro edge order. An edge is absorbed only when
    // both endpoints sit in the same multi-node block.
    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        const std::size_t src_block = quotient.macro_of_node[sheaf.graph.source_index(e)];
        const std::size_t dst_block = quotient.macro_of_node[sheaf.graph.target_index(e)];
        if (src_block == dst_block && blocks[src_block].size() >= 2) continue;

        // Composed restriction: macro state -> member micro state -> edge state.
        auto lift_table = [&](const RestrictionMap& map, std::size_t block_index,
                              std::size_t endpoint) {
            if (blocks[block_index].size() == 1) return map.table;
            const BlockCollapse& collapse = quotient.blocks[block_index];
            std::size_t pos = 0;
            while (collapse.members[pos] != endpoint) ++pos;
            std::vector<StateIndex> table(collapse.local_sections.size());
            for (std::size_t m = 0; m < collapse.local_sections.size(); ++m) {
                table[m] = map(collapse.local_sections[m].node_states[pos]);
            }
            return table;
        };

        const Edge& edge = sheaf.graph.edge(e);
        builder.add_edge(edge.id, macro_ids[src_block], macro_ids[dst_block],
                         sheaf.edge_stalks[e].labels,
                         lift_table(sheaf.tail_maps[e], src_block, sheaf.graph.source_index(e)),
                         lift_table(sheaf.head_maps[e], dst_block, sheaf.graph.target_index(e)),
                         sheaf.graph.edge_attrs(e));
        quotient.macro_edges.push_back(e);
    }
    quotient.sheaf = builder.build();

    // Kernels. Singleton nodes keep their micro kernel verbatim: all their
    // incoming edges survive in the same relative order, so the key layout
    // is unchanged.
    quotient.rule.kernels.resize(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].size() == 1) {
            quotient.rule.kernels[b] = rule.kernels[blocks[b][0]];
            continue;
        }

        const BlockCollapse& collapse = quotient.blocks[b];
        const std::vector<std::size_t>& macro_in = quotient.sheaf.graph.incoming(b);

        std::map<std::size_t, std::size_t> slot_of_micro_edge;  // micro edge -> key slot
        for (std::size_t i = 0; i < macro_in.size(); ++i) {
            slot_of_micro_edge[quotient.macro_edges[macro_in[i]]] = i;
        }
        std::map<std::size_t, std::size_t> internal_pos;
        for (std::size_t i = 0; i < collapse.internal_edges.size(); ++i) {
            internal_pos[collapse.internal_edges[i]] = i;
        }
        std::map<std::size_t, std::size_t> member_pos;
        for (std::size_t i = 0; i < collapse.members.size(); ++i) {
            member_pos[collapse.members[i]] = i;
        }

        std::vector<MemberWiring> wiring;
        wiring.reserve(collapse.members.size());
        for (std::size_t v : collapse.members) {
            MemberWiring w;
            w.node = v;
            for (std::size_t e : sheaf.graph.incoming(v)) {
                auto internal = internal_pos.find(e);
                if (internal != internal_pos.end()) {
                    w.inputs.push_back({true, internal->second});
                } else {
                    w.inputs.push_back({false, slot_of_micro_edge.at(e)});
                }
            }
            wiring.push_back(std::move(w));
        }

        std::size_t rows = collapse.local_sections.size();
        for (std::size_t me : macro_in) {
            const std::size_t card = quotient.sheaf.edge_stalks[me].cardinality();
            if (rows > kMacroKernelRowCap / std::max<std::size_t>(card, 1)) {
                throw cap_exceeded("macro kernel for " + macro_ids[b] + " exceeds " +
                                   std::to_string(kMacroKernelRowCap) + " rows");
            }
            rows *= card;
        }

        const std::size_t macro_card = collapse.local_sections.size();
        quotient.rule.kernels[b] = make_stochastic_kernel(
            quotient.sheaf, b,
            [&](StateIndex own, const std::vector<StateIndex>& inputs) {
                const Section& lifted = collapse.local_sections[own];

                // Per-member next-state options under the micro kernels.
                std::vector<std::vector<std::pair<StateIndex, double>>> options;
                options.reserve(wiring.size());
                for (std::size_t i = 0; i < wiring.size(); ++i) {
                    const MemberWiring& w = wiring[i];
                    KernelKey key(1 + w.inputs.size());
                    key[0] = lifted.node_states[i];
                    for (std::size_t j = 0; j < w.inputs.size(); ++j) {
                        key[1 + j] = w.inputs[j].internal
                                         ? lifted.edge_states[w.inputs[j].pos]
                                         : inputs[w.inputs[j].pos];
                    }
                    const KernelRow* row = rule.kernels[w.node].find(key);
                    if (row == nullptr) {
                        throw totality_error("no kernel row for node '" +
                                             sheaf.graph.node(w.node) +
                                             "' while lifting block " + macro_ids[b]);
                    }
                    std::vector<std::pair<StateIndex, double>> opts;
                    if (row->fixed >= 0) {
                        opts.emplace_back(static_cast<StateIndex>(row->fixed), 1.0);
                    } else {
                        for (std::size_t s = 0; s < row->probs.size(); ++s) {
                            if (row->probs[s] > 0.0) {
                                opts.emplace_back(static_cast<StateIndex>(s), row->probs[s]);
                            }
                        }
                    }
                    options.push_back(std::move(opts));
                }

                // Product over member outcomes, each projected back onto the
                // macro stalk.
                std::vector<double> macro_row(macro_card, 0.0);
                std::vector<std::size_t> pick(options.size(), 0);
                Section candidate;
                candidate.node_states.resize(collapse.members.size());
                candidate.edge_states.resize(collapse.internal_edges.size());
                while (true) {
                    double p = 1.0;
                    for (std::size_t i = 0; i < options.size(); ++i) {
                        candidate.node_states[i] = options[i][pick[i]].first;
                        p *= options[i][pick[i]].second;
                    }
                    for (std::size_t i = 0; i < collapse.internal_edges.size(); ++i) {
                        const std::size_t e = collapse.internal_edges[i];
                        const std::size_t tail_pos =
                            member_pos.at(sheaf.graph.source_index(e));
                        candidate.edge_states[i] =
                            sheaf.tail_maps[e](candidate.node_states[tail_pos]);
                    }
                    macro_row[project_to_local_section(collapse, candidate)] += p;

                    std::size_t i = 0;
                    while (i < options.size() && ++pick[i] == options[i].size()) {
                        pick[i] = 0;
                        ++i;
                    }
                    if (i == options.size()) break;
                }
                return macro_row;
            });
    }

    // Baseline: singleton states copy over; a multi-node block takes the
    // local section matching the baseline restriction, projected if the
    // baseline was not locally consistent there.
    quotient.baseline.node_states.resize(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (blocks[b].size() == 1) {
            quotient.baseline.node_states[b] = baseline.node_states[blocks[b][0]];
            continue;
        }
        const BlockCollapse& collapse = quotient.blocks[b];
        Section restricted;
        restricted.node_states.reserve(collapse.members.size());
        for (std::size_t v : collapse.members) {
            restricted.node_states.push_back(baseline.node_states[v]);
        }
        restricted.edge_states.reserve(collapse.internal_edges.size());
        for (std::size_t e : collapse.internal_edges) {
            restricted.edge_states.push_back(baseline.edge_states[e]);
        }
        quotient.baseline.node_states[b] =
            static_cast<StateIndex>(project_to_local_section(collapse, restricted));
    }
    quotient.baseline.edge_states.reserve(quotient.macro_edges.size());
    for (std::size_t e : quotient.macro_edges) {
        quotient.baseline.edge_states.push_back(baseline.edge_states[e]);
    }
    return quotient;
}

EmergenceResult causal_resilience_index(const Sheaf& sheaf, const UpdateRule& rule,
                                        const Section& baseline, const MacroGrouping& grouping,
                                        const InterventionSpec& spec) {
    QuotientModel quotient = build_quotient(sheaf, rule, baseline, grouping);

    EmergenceResult result;
    for (const auto& block : quotient.grouping.blocks) {
        if (block.size() >= 2) {
            result.micro_targets.insert(result.micro_targets.end(), block.begin(), block.end());
        }
    }
    std::sort(result.micro_targets.begin(), result.micro_targets.end());
    for (std::size_t b = 0; b < quotient.grouping.blocks.size(); ++b) {
        if (quotient.grouping.blocks[b].size() >= 2) result.macro_targets.push_back(b);
    }
    // All-singleton grouping: compare the system with itself at both scales.
    if (result.micro_targets.empty()) {
        for (std::size_t v = 0; v < sheaf.graph.node_count(); ++v) {
            result.micro_targets.push_back(v);
        }
        for (std::size_t b = 0; b < quotient.grouping.blocks.size(); ++b) {
            result.macro_targets.push_back(b);
        }
    }

    InterventionSpec micro_spec = spec;
    micro_spec.targets = result.micro_targets;
    micro_spec.effect_vars = result.micro_targets;
    micro_spec.weights.clear();
    micro_spec.seed = derive_seed(spec.seed, 0x6d6963ULL);
    result.micro = effective_information(sheaf, rule, baseline, micro_spec);

    InterventionSpec macro_spec = spec;
    macro_spec.targets = result.macro_targets;
    macro_spec.effect_vars = result.macro_targets;
    macro_spec.weights.clear();
    macro_spec.seed = derive_seed(spec.seed, 0x6d6163ULL);
    result.macro =
        effective_information(quotient.sheaf, quotient.rule, quotient.baseline, macro_spec);

    result.r_cause_bits = result.macro.ei_bits - result.micro.ei_bits;
    return result;
}

namespace {

std::vector<std::set<std::size_t>> undirected_adjacency(const Sheaf& sheaf) {
    std::vector<std::set<std::size_t>> adjacency(sheaf.graph.node_count());
    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        const std::size_t u = sheaf.graph.source_index(e);
        const std::size_t v = sheaf.graph.target_index(e);
        if (u == v) continue;
        adjacency[u].insert(v);
        adjacency[v].insert(u);
    }
    return adjacency;
}

bool is_connected(const std::vector<std::size_t>& members,
                  const std::vector<std::set<std::size_t>>& adjacency) {
    if (members.empty()) return false;
    std::set<std::size_t> inside(members.begin(), members.end());
    std::vector<std::size_t> stack{members[0]};
    std::set<std::size_t> seen{members[0]};
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t u : adjacency[v]) {
            if (inside.count(u) && seen.insert(u).second) stack.push_back(u);
        }
    }
    return seen.size() == members.size();
}

CandidateBlock score_block(const std::vector<std::size_t>& members,
                           const PairwiseResult& pairwise) {
    CandidateBlock candidate;
    candidate.members = members;
    std::sort(candidate.members.begin(), candidate.members.end());
    double raw = 0.0;
    for (std::size_t i : candidate.members) {
        for (std::size_t j : candidate.members) {
            if (i != j) raw += pairwise.ei_bits[i][j];
        }
    }
    const double pairs =
        static_cast<double>(candidate.members.size() * (candidate.members.size() - 1));
    candidate.score_raw = raw;
    candidate.score_normalized = raw / pairs;
    return candidate;
}

double selection_score(const CandidateBlock& candidate, ScoreVariant variant) {
    return variant == ScoreVariant::Normalized ? candidate.score_normalized
                                               : candidate.score_raw;
}

void rank_candidates(std::vector<CandidateBlock>& candidates, ScoreVariant variant) {
    std::sort(candidates.begin(), candidates.end(),
              [&](const CandidateBlock& a, const CandidateBlock& b) {
                  const double sa = selection_score(a, variant);
                  const double sb = selection_score(b, variant);
                  if (sa != sb) return sa > sb;
                  if (a.members.size() != b.members.size()) {
                      return a.members.size() < b.members.size();
                  }
                  return a.members < b.members;
              });
}

}  // namespace

SearchResult search_macro_nodes(const Sheaf& sheaf, const UpdateRule& rule,
                                const Section& baseline, const InterventionSpec& spec,
                                const SearchOptions& options) {
    const std::size_t n = sheaf.graph.node_count();
    SearchResult result;
    result.pairwise = pairwise_ei_matrix(sheaf, rule, baseline, spec, options.jobs);

    const auto adjacency = undirected_adjacency(sheaf);
    const std::size_t max_size = std::min(options.max_block_size, n);

    std::vector<CandidateBlock> candidates;
    if (options.strategy == SearchStrategy::Exhaustive) {
        // Subset count guard before enumerating combinations.
        std::size_t total = 0;
        for (std::size_t k = 2; k <= max_size; ++k) {
            std::size_t combos = 1;
            for (std::size_t i = 0; i < k; ++i) {
                combos = combos * (n - i) / (i + 1);
                if (combos > options.candidate_cap) break;
            }
            total += combos;
            if (total > options.candidate_cap) {
                throw cap_exceeded("exhaustive search over " + std::to_string(n) +
                                   " nodes exceeds the candidate cap; use the greedy strategy");
            }
        }

        for (std::size_t k = 2; k <= max_size; ++k) {
            std::vector<std::size_t> members(k);
            for (std::size_t i = 0; i < k; ++i) members[i] = i;
            while (true) {
                if (is_connected(members, adjacency)) {
                    candidates.push_back(score_block(members, result.pairwise));
                }
                std::size_t i = k;
                while (i-- > 0) {
                    if (members[i] != i + n - k) break;
                    if (i == 0) {
                        i = kNoIndex;
                        break;
                    }
                }
                if (i == kNoIndex) break;
                ++members[i];
                for (std::size_t j = i + 1; j < k; ++j) members[j] = members[j - 1] + 1;
            }
        }
    } else {
        // Greedy: best symmetric adjacent pair, then grow while the selection
        // score strictly improves. Every stage is a connected subset of size
        // at most max_block_size, so the exhaustive strategy always scores at
        // least as well.
        std::size_t best_i = kNoIndex;
        std::size_t best_j = kNoIndex;
        double best_sym = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j : adjacency[i]) {
                if (j <= i) continue;
                const double sym =
                    (result.pairwise.ei_bits[i][j] + result.pairwise.ei_bits[j][i]) / 2.0;
                if (sym > best_sym) {
                    best_sym = sym;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_i != kNoIndex && max_size >= 2) {
            CandidateBlock current = score_block({best_i, best_j}, result.pairwise);
            candidates.push_back(current);
            while (current.members.size() < max_size) {
                std::set<std::size_t> frontier;
                for (std::size_t v : current.members) {
                    for (std::size_t u : adjacency[v]) frontier.insert(u);
                }
                for (std::size_t v : current.members) frontier.erase(v);

                bool grew = false;
                CandidateBlock best_next;
                for (std::size_t u : frontier) {
                    std::vector<std::size_t> extended = current.members;
                    extended.push_back(u);
                    CandidateBlock next = score_block(extended, result.pairwise);
                    if (!grew || selection_score(next, options.variant) >
                                     selection_score(best_next, options.variant)) {
                        best_next = next;
                        grew = true;
                    }
                }
                if (!grew || selection_score(best_next, options.variant) <=
                                 selection_score(current, options.variant)) {
                    break;
                }
                current = best_next;
                candidates.push_back(current);
            }
        }
    }

    std::erase_if(candidates, [&](const CandidateBlock& candidate) {
        return selection_score(candidate, options.variant) <= kScoreFloor;
    });
    rank_candidates(candidates, options.variant);

    MacroGrouping chosen;
    if (!candidates.empty()) chosen.blocks.push_back(candidates[0].members);
    result.best = canonicalize_grouping(sheaf, chosen);

    if (candidates.size() > options.limit) candidates.resize(options.limit);
    result.candidates = std::move(candidates);
    return result;
}

double grouping_score(const PairwiseResult& pairwise, const MacroGrouping& grouping,
                      ScoreVariant variant) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const std::vector<std::size_t>& block : grouping.blocks) {
        if (block.size() < 2) continue;
        total += selection_score(score_block(block, pairwise), variant);
        ++counted;
    }
    return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

}  // namespace rcause
