#include "rcause/causal.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rcause/errors.hpp"
#include "rcause/parallel.hpp"

namespace rcause {

namespace {

constexpr double kWeightTolerance = 1e-9;

struct SectionHash {
    std::size_t operator()(const Section& s) const { return section_hash(s); }
};

using SectionDist = std::unordered_map<Section, double, SectionHash>;

void validate_vars(const Sheaf& sheaf, const std::vector<std::size_t>& vars,
                   const char* what) {
    if (vars.empty()) {
        throw validation_error("INVALID_TARGETS", std::string(what) + " list is empty");
    }
    std::vector<std::size_t> sorted = vars;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw validation_error("INVALID_TARGETS", std::string(what) + " list has duplicates");
    }
    for (std::size_t v : vars) {
        if (v >= sheaf.graph.node_count()) {
            throw validation_error("INVALID_TARGETS",
                                   std::string(what) + " index out of range");
        }
    }
}

std::vector<double> intervention_weights(const InterventionSpec& spec, std::size_t count) {
    if (spec.weights.empty()) {
        return std::vector<double>(count, 1.0 / static_cast<double>(count));
    }
    if (spec.weights.size() != count) {
        throw validation_error("INVALID_DISTRIBUTION",
                               "intervention weights length " +
                                   std::to_string(spec.weights.size()) + " does not match " +
                                   std::to_string(count) + " interventions");
    }
    double sum = 0.0;
    for (double w : spec.weights) {
        if (w < 0.0) {
            throw validation_error("INVALID_DISTRIBUTION", "negative intervention weight");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightTolerance) {
        throw validation_error("INVALID_DISTRIBUTION", "intervention weights do not sum to 1");
    }
    std::vector<double> weights = spec.weights;
    for (double& w : weights) w /= sum;
    return weights;
}

Clamps sticky_clamps(const InterventionSpec& spec, const std::vector<StateIndex>& assignment) {
    Clamps clamps;
    if (spec.sticky) {
        for (std::size_t i = 0; i < spec.targets.size(); ++i) {
            clamps.nodes[spec.targets[i]] = assignment[i];
        }
    }
    return clamps;
}

std::vector<std::pair<std::size_t, StateIndex>> assignment_pairs(
    const InterventionSpec& spec, const std::vector<StateIndex>& assignment) {
    std::vector<std::pair<std::size_t, StateIndex>> pairs;
    pairs.reserve(spec.targets.size());
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        pairs.emplace_back(spec.targets[i], assignment[i]);
    }
    return pairs;
}

// One synchronous step applied to a whole section distribution. Each node's
// kernel row fans the support out; edge states are re-derived from tails.
// Returns false when the support would exceed `cap`.
bool expand_step(const Sheaf& sheaf, const UpdateRule& rule, const Clamps& clamps,
                 const SectionDist& current, SectionDist& next, std::size_t cap) {
    next.clear();
    const std::size_t n = sheaf.graph.node_count();
    for (const auto& [section, mass] : current) {
        // Per-node candidate (state, prob) lists for this source section.
        std::vector<std::vector<std::pair<StateIndex, double>>> options(n);
        for (std::size_t v = 0; v < n; ++v) {
            auto clamp = clamps.nodes.find(v);
            if (clamp != clamps.nodes.end()) {
                options[v].emplace_back(clamp->second, 1.0);
                continue;
            }
            const auto& in_edges = sheaf.graph.incoming(v);
            KernelKey key(1 + in_edges.size());
            key[0] = section.node_states[v];
            for (std::size_t i = 0; i < in_edges.size(); ++i) {
                key[1 + i] = section.edge_states[in_edges[i]];
            }
            const KernelRow* row = rule.kernels[v].find(key);
            if (row == nullptr) {
                throw totality_error("no kernel row for node '" + sheaf.graph.node(v) +
                                     "' during expansion");
            }
            if (row->fixed >= 0) {
                options[v].emplace_back(static_cast<StateIndex>(row->fixed), 1.0);
            } else {
                for (std::size_t s = 0; s < row->probs.size(); ++s) {
                    if (row->probs[s] > 0.0) {
                        options[v].emplace_back(static_cast<StateIndex>(s), row->probs[s]);
                    }
                }
            }
        }

        // Odometer over the per-node options.
        std::vector<std::size_t> pick(n, 0);
        Section child;
        child.node_states.resize(n);
        child.edge_states.resize(sheaf.graph.edge_count());
        while (true) {
            double p = mass;
            for (std::size_t v = 0; v < n; ++v) {
                child.node_states[v] = options[v][pick[v]].first;
                p *= options[v][pick[v]].second;
            }
            for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
                const std::size_t tail = sheaf.graph.source_index(e);
                child.edge_states[e] = sheaf.tail_maps[e](child.node_states[tail]);
            }
            next[child] += p;
            if (next.size() > cap) return false;

            std::size_t v = 0;
            while (v < n && ++pick[v] == options[v].size()) {
                pick[v] = 0;
                ++v;
            }
            if (v == n) break;
        }
    }
    return true;
}

// Exact effect distribution for one intervention, or nullopt-style failure
// (empty vector) when the expansion outgrew the cap.
bool exact_effect_distribution(const Sheaf& sheaf, const UpdateRule& rule,
                               const Section& baseline, const InterventionSpec& spec,
                               const std::vector<StateIndex>& assignment,
                               std::size_t effect_count, std::vector<double>& out) {
    if (spec.read == EffectRead::UntilStabilized && !rule.deterministic()) return false;

    Section start = with_node_states(sheaf, baseline, assignment_pairs(spec, assignment));
    const Clamps clamps = sticky_clamps(spec, assignment);

    if (spec.read == EffectRead::UntilStabilized) {
        RngStream unused(0);
        StabilizeResult settled =
            stabilize(sheaf, rule, start, clamps, spec.stabilize_max_iters, unused);
        out.assign(effect_count, 0.0);
        out[encode_effect(sheaf, spec.effect_vars, settled.section)] = 1.0;
        return true;
    }

    SectionDist current;
    current[start] = 1.0;
    SectionDist scratch;
    for (std::uint64_t t = 0; t < spec.horizon; ++t) {
        if (!expand_step(sheaf, rule, clamps, current, scratch, spec.expansion_cap)) {
            return false;
        }
        current.swap(scratch);
    }

    out.assign(effect_count, 0.0);
    for (const auto& [section, mass] : current) {
        out[encode_effect(sheaf, spec.effect_vars, section)] += mass;
    }
    return true;
}

std::vector<double> sampled_effect_distribution(const Sheaf& sheaf, const UpdateRule& rule,
                                                const Section& baseline,
                                                const InterventionSpec& spec,
                                                const std::vector<StateIndex>& assignment,
                                                std::size_t effect_count,
                                                std::size_t intervention_index) {
    if (spec.samples == 0) {
        throw validation_error("INVALID_DISTRIBUTION", "sampled mode needs samples > 0");
    }
    RngStream rng(derive_seed(spec.seed, 0x6569ULL, intervention_index));
    std::vector<std::uint64_t> counts(effect_count, 0);
    for (std::uint64_t s = 0; s < spec.samples; ++s) {
        Section final = intervene_and_evolve(sheaf, rule, baseline, spec, assignment, rng);
        ++counts[encode_effect(sheaf, spec.effect_vars, final)];
    }
    std::vector<double> dist(effect_count, 0.0);
    for (std::size_t e = 0; e < effect_count; ++e) {
        dist[e] = static_cast<double>(counts[e]) / static_cast<double>(spec.samples);
    }
    return dist;
}

double entropy_bits(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

}  // namespace

std::size_t count_interventions(const Sheaf& sheaf, const std::vector<std::size_t>& targets,
                                std::size_t cap) {
    std::size_t count = 1;
    for (std::size_t v : targets) {
        const std::size_t card = sheaf.node_stalks[v].cardinality();
        if (cap != 0 && count > cap / std::max<std::size_t>(card, 1)) {
            throw cap_exceeded("intervention space over " + std::to_string(targets.size()) +
                               " targets exceeds cap " + std::to_string(cap));
        }
        count *= card;
    }
    if (cap != 0 && count > cap) {
        throw cap_exceeded("intervention space exceeds cap " + std::to_string(cap));
    }
    return count;
}

std::vector<StateIndex> decode_intervention(const Sheaf& sheaf,
                                            const std::vector<std::size_t>& targets,
                                            std::size_t index) {
    std::vector<StateIndex> assignment(targets.size(), 0);
    for (std::size_t i = targets.size(); i-- > 0;) {
        const std::size_t card = sheaf.node_stalks[targets[i]].cardinality();
        assignment[i] = static_cast<StateIndex>(index % card);
        index /= card;
    }
    return assignment;
}

std::size_t encode_effect(const Sheaf& sheaf, const std::vector<std::size_t>& effect_vars,
                          const Section& section) {
    std::size_t index = 0;
    for (std::size_t v : effect_vars) {
        index = index * sheaf.node_stalks[v].cardinality() + section.node_states[v];
    }
    return index;
}

Section intervene_and_evolve(const Sheaf& sheaf, const UpdateRule& rule, const Section& baseline,
                             const InterventionSpec& spec,
                             const std::vector<StateIndex>& assignment, RngStream& rng) {
    Section section = with_node_states(sheaf, baseline, assignment_pairs(spec, assignment));
    const Clamps clamps = sticky_clamps(spec, assignment);
    if (spec.read == EffectRead::UntilStabilized) {
        return stabilize(sheaf, rule, section, clamps, spec.stabilize_max_iters, rng).section;
    }
    for (std::uint64_t t = 0; t < spec.horizon; ++t) {
        section = step(sheaf, rule, section, clamps, rng);
    }
    return section;
}

JointDistribution build_joint_distribution(const Sheaf& sheaf, const UpdateRule& rule,
                                           const Section& baseline, const InterventionSpec& spec) {
    check_shape(sheaf, baseline);
    if (rule.kernels.size() != sheaf.graph.node_count()) {
        throw validation_error("SHAPE_MISMATCH", "rule kernel count does not match node count");
    }
    validate_vars(sheaf, spec.targets, "targets");
    validate_vars(sheaf, spec.effect_vars, "effect_vars");

    const std::size_t k = count_interventions(sheaf, spec.targets, spec.intervention_cap);
    std::size_t effect_count = 1;
    for (std::size_t v : spec.effect_vars) {
        if (effect_count > spec.intervention_cap / sheaf.node_stalks[v].cardinality()) {
            throw cap_exceeded("effect space exceeds cap " +
                               std::to_string(spec.intervention_cap));
        }
        effect_count *= sheaf.node_stalks[v].cardinality();
    }
    const std::vector<double> weights = intervention_weights(spec, k);

    JointDistribution joint;
    joint.intervention_count = k;
    joint.effect_count = effect_count;
    joint.probs.assign(k * effect_count, 0.0);

    for (std::size_t d = 0; d < k; ++d) {
        const std::vector<StateIndex> assignment = decode_intervention(sheaf, spec.targets, d);
        std::vector<double> row;
        bool exact = spec.mode == EIMode::Exact &&
                     exact_effect_distribution(sheaf, rule, baseline, spec, assignment,
                                               effect_count, row);
        if (!exact) {
            row = sampled_effect_distribution(sheaf, rule, baseline, spec, assignment,
                                              effect_count, d);
            joint.exact = false;
        }
        for (std::size_t e = 0; e < effect_count; ++e) {
            joint.probs[d * effect_count + e] = weights[d] * row[e];
        }
    }
    return joint;
}

double mutual_information_bits(const JointDistribution& joint) {
    const std::size_t k = joint.intervention_count;
    const std::size_t m = joint.effect_count;
    if (joint.probs.size() != k * m) {
        throw validation_error("INVALID_DISTRIBUTION", "joint size does not match shape");
    }
    double sum = 0.0;
    for (double p : joint.probs) {
        if (p < 0.0) {
            throw validation_error("INVALID_DISTRIBUTION", "negative joint probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw validation_error("INVALID_DISTRIBUTION", "joint does not sum to 1");
    }

    std::vector<double> do_marg(k, 0.0);
    std::vector<double> eff_marg(m, 0.0);
    for (std::size_t d = 0; d < k; ++d) {
        for (std::size_t e = 0; e < m; ++e) {
            do_marg[d] += joint.probs[d * m + e];
            eff_marg[e] += joint.probs[d * m + e];
        }
    }
    double mi = 0.0;
    for (std::size_t d = 0; d < k; ++d) {
        for (std::size_t e = 0; e < m; ++e) {
            const double p = joint.probs[d * m + e];
            if (p > 0.0) mi += p * std::log2(p / (do_marg[d] * eff_marg[e]));
        }
    }
    return mi;
}

EIResult effective_information(const JointDistribution& joint) {
    const std::size_t k = joint.intervention_count;
    const std::size_t m = joint.effect_count;

    std::vector<double> do_marg(k, 0.0);
    std::vector<double> eff_marg(m, 0.0);
    for (std::size_t d = 0; d < k; ++d) {
        for (std::size_t e = 0; e < m; ++e) {
            do_marg[d] += joint.probs[d * m + e];
            eff_marg[e] += joint.probs[d * m + e];
        }
    }

    // H(effect | do) under the joint.
    double h_cond = 0.0;
    for (std::size_t d = 0; d < k; ++d) {
        if (do_marg[d] <= 0.0) continue;
        for (std::size_t e = 0; e < m; ++e) {
            const double p = joint.probs[d * m + e];
            if (p > 0.0) h_cond -= p * std::log2(p / do_marg[d]);
        }
    }
    const double h_eff = entropy_bits(eff_marg);
    const double log_k = std::log2(static_cast<double>(k));

    EIResult result;
    result.ei_bits = mutual_information_bits(joint);
    result.determinism_bits = log_k - h_cond;
    result.degeneracy_bits = log_k - h_eff;
    result.effect_entropy_bits = h_eff;
    result.intervention_count = k;
    result.effect_count = m;
    result.exact = joint.exact;
    return result;
}

EIResult effective_information(const Sheaf& sheaf, const UpdateRule& rule, const Section& baseline,
                               const InterventionSpec& spec) {
    JointDistribution joint = build_joint_distribution(sheaf, rule, baseline, spec);
    EIResult result = effective_information(joint);
    if (!joint.exact) result.samples_used = spec.samples;
    return result;
}

PairwiseResult pairwise_ei_matrix(const Sheaf& sheaf, const UpdateRule& rule,
                                  const Section& baseline, const InterventionSpec& spec,
                                  unsigned jobs) {
    const std::size_t n = sheaf.graph.node_count();
    PairwiseResult result;
    result.ei_bits.assign(n, std::vector<double>(n, 0.0));

    std::vector<char> exact_cells(n * n, 1);
    parallel_for(n * n, jobs, [&](std::size_t cell) {
        const std::size_t i = cell / n;
        const std::size_t j = cell % n;
        InterventionSpec local = spec;
        local.targets = {i};
        local.effect_vars = {j};
        local.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(cell));
        EIResult ei = effective_information(sheaf, rule, baseline, local);
        result.ei_bits[i][j] = ei.ei_bits;
        exact_cells[cell] = ei.exact ? 1 : 0;
    });
    for (char c : exact_cells) {
        if (!c) result.exact = false;
    }
    return result;
}

}  // namespace rcause
