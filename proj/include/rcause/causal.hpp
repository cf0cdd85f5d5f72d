#pragma once
// Effective information over do-interventions. An intervention forces an
// assignment on a set of target nodes at time zero (edges re-derived from
// tails), the dynamics then run for a horizon, and the joint distribution
// between the forced assignment and the resulting effect-variable tuple is
// scored by mutual information in bits.

#include <cstdint>
#include <vector>

#include "rcause/dynamics.hpp"
#include "rcause/model.hpp"

namespace rcause {

enum class EIMode { Exact, Sampled };

// When to read the effect tuple: after exactly `horizon` steps, or at the
// section stabilization settles on.
enum class EffectRead { AtHorizon, UntilStabilized };

struct InterventionSpec {
    std::vector<std::size_t> targets;      // node indices receiving the do
    std::vector<std::size_t> effect_vars;  // node indices read as the effect
    std::uint64_t horizon = 1;
    EIMode mode = EIMode::Exact;
    std::uint64_t samples = 10000;  // per intervention, sampled mode
    std::uint64_t seed = 0;
    // Probability of each intervention, lexicographic order; empty = uniform.
    std::vector<double> weights;
    // Re-clamp targets on every step instead of only forcing time zero.
    bool sticky = false;
    EffectRead read = EffectRead::AtHorizon;
    std::uint32_t stabilize_max_iters = 100;
    std::size_t intervention_cap = std::size_t{1} << 20;
    // Support cap for the exact distribution expansion of stochastic rules;
    // past it the computation falls back to sampling (result.exact = false).
    std::size_t expansion_cap = std::size_t{1} << 16;
};

// Joint P(do, effect), row-major over (intervention index, effect index).
// Intervention index i decodes lexicographically over the target stalks
// (first target most significant); effect index likewise over effect_vars.
struct JointDistribution {
    std::size_t intervention_count = 0;
    std::size_t effect_count = 0;
    std::vector<double> probs;
    bool exact = true;
};

struct EIResult {
    double ei_bits = 0.0;
    double determinism_bits = 0.0;
    double degeneracy_bits = 0.0;
    double effect_entropy_bits = 0.0;
    std::size_t intervention_count = 0;
    std::size_t effect_count = 0;
    bool exact = true;
    std::uint64_t samples_used = 0;  // 0 when exact
};

struct PairwiseResult {
    std::vector<std::vector<double>> ei_bits;  // [do node][effect node]
    bool exact = true;
};

// Number of distinct do-assignments over `targets`; throws CAP_EXCEEDED past
// `cap` (0 = unlimited).
std::size_t count_interventions(const Sheaf& sheaf, const std::vector<std::size_t>& targets,
                                std::size_t cap);

// Decodes intervention index -> per-target states, lexicographic order.
std::vector<StateIndex> decode_intervention(const Sheaf& sheaf,
                                            const std::vector<std::size_t>& targets,
                                            std::size_t index);

// Flattens the effect tuple of `section` into an effect index.
std::size_t encode_effect(const Sheaf& sheaf, const std::vector<std::size_t>& effect_vars,
                          const Section& section);

// Applies one intervention to `baseline` and advances the dynamics per the
// spec's horizon/read/sticky settings, consuming randomness from `rng` for
// stochastic rows.
Section intervene_and_evolve(const Sheaf& sheaf, const UpdateRule& rule, const Section& baseline,
                             const InterventionSpec& spec,
                             const std::vector<StateIndex>& assignment, RngStream& rng);

// Builds the joint over (do, effect). Exact mode expands the section
// distribution analytically and falls back to sampling only when the support
// outgrows spec.expansion_cap.
JointDistribution build_joint_distribution(const Sheaf& sheaf, const UpdateRule& rule,
                                           const Section& baseline, const InterventionSpec& spec);

// Mutual information of a validated joint, in bits.
double mutual_information_bits(const JointDistribution& joint);

// EI plus its determinism/degeneracy decomposition. With K interventions,
// determinism = log2 K - H(effect | do) and degeneracy = log2 K - H(effect);
// ei = determinism - degeneracy for any intervention distribution.
EIResult effective_information(const Sheaf& sheaf, const UpdateRule& rule, const Section& baseline,
                               const InterventionSpec& spec);

EIResult effective_information(const JointDistribution& joint);

// EI for every ordered node pair (single-node do, single-node effect).
// Cell (i, j) uses seed derive_seed(spec.seed, i * n + j), so results are
// byte-identical for any worker count.
PairwiseResult pairwise_ei_matrix(const Sheaf& sheaf, const UpdateRule& rule,
                                  const Section& baseline, const InterventionSpec& spec,
                                  unsigned jobs);

}  // namespace rcause
