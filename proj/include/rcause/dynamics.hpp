#pragma once
// Flow-on-graph simulation: local update kernels, synchronous stepping,
// failure injection via clamps, and re-stabilization to a new consistent
// configuration. Updates are synchronous: every node samples its next state
// from its kernel given (own state, incoming edge states), then every edge
// state is recomputed from its tail (tail-forcing). Head-side disagreement is
// the inconsistency signal stabilization drives to zero.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rcause/model.hpp"
#include "rcause/rng.hpp"

namespace rcause {

// Kernel lookup key: own state followed by the states of the node's incoming
// edges in deterministic (edge iteration) order.
using KernelKey = std::vector<StateIndex>;

struct KernelRow {
    std::vector<double> probs;  // distribution over the node's stalk
    std::int32_t fixed = -1;    // state index when the row is deterministic
};

// Local transition kernel for one node. Rows are validated on insertion;
// missing rows surface as TOTALITY_ERROR when first encountered.
class NodeKernel {
public:
    // All mass on `next`.
    void set_deterministic(KernelKey key, StateIndex next, std::size_t cardinality);
    // Arbitrary distribution; must sum to 1 within 1e-12.
    void set_row(KernelKey key, std::vector<double> probs);

    const KernelRow* find(const KernelKey& key) const;
    bool deterministic() const { return deterministic_; }
    std::size_t row_count() const { return rows_.size(); }
    const std::map<KernelKey, KernelRow>& rows() const { return rows_; }

private:
    std::map<KernelKey, KernelRow> rows_;
    bool deterministic_ = true;
};

struct UpdateRule {
    std::vector<NodeKernel> kernels;  // aligned with sheaf node order

    bool deterministic() const;
};

// Forced states applied during a step; node clamps replace kernel sampling,
// edge clamps override tail-forcing.
struct Clamps {
    std::map<std::size_t, StateIndex> nodes;
    std::map<std::size_t, StateIndex> edges;

    bool empty() const { return nodes.empty() && edges.empty(); }
};

// Failure = forcing a designated stalk state on a cell from a given step on.
struct FailureEvent {
    std::string target;  // node or edge id
    StateIndex failed_state = 0;
    std::uint64_t at_step = 0;
    bool sticky = true;  // clamp for the remainder of the run
};

struct ScenarioConfig {
    std::uint64_t horizon = 0;
    std::uint64_t seed = 0;
    std::vector<FailureEvent> failures;
    std::uint32_t stabilize_max_iters = 100;
};

struct Trajectory {
    std::vector<Section> sections;        // sigma_0 .. sigma_T
    std::vector<std::uint32_t> residuals;  // one per section

    struct AppliedEvent {
        FailureEvent event;
        std::uint64_t step;  // transition index the clamp first applied to
    };
    std::vector<AppliedEvent> events_applied;
    std::vector<std::string> warnings;
};

struct StabilizeResult {
    Section section;
    std::uint32_t residual = 0;
    std::uint64_t iterations = 0;
    bool converged = false;
    bool cycle_detected = false;
};

// Rule builders -------------------------------------------------------------

// next = current for every node, regardless of inputs.
UpdateRule make_identity_rule(const Sheaf& sheaf);

// Fills node `v`'s kernel over its full input product using a callback
// (own state, incoming edge states) -> next state.
template <typename Fn>
NodeKernel make_deterministic_kernel(const Sheaf& sheaf, std::size_t v, Fn&& next_state);

// Same, with (own, inputs) -> distribution over the node's stalk.
template <typename Fn>
NodeKernel make_stochastic_kernel(const Sheaf& sheaf, std::size_t v, Fn&& row);

// Operations ----------------------------------------------------------------

// One synchronous update. Deterministic given (inputs, rng state); rows with
// all mass on one state consume no randomness.
Section step(const Sheaf& sheaf, const UpdateRule& rule, const Section& section,
             const Clamps& clamps, RngStream& rng);

// Iterates step until a fixed point, a detected cycle (deterministic rules),
// or max_iters. Converged means a residual-0 consistent configuration was
// reached; iterations counts the steps needed to reach the final section.
StabilizeResult stabilize(const Sheaf& sheaf, const UpdateRule& rule, const Section& section,
                          const Clamps& clamps, std::uint32_t max_iters, RngStream& rng);

// Applies scheduled failures as clamps while advancing the dynamics for
// config.horizon steps, recording every section and residual. A failure with
// at_step = s first affects the transition sigma_s -> sigma_{s+1}.
Trajectory run_scenario(const Sheaf& sheaf, const UpdateRule& rule, const Section& initial,
                        const ScenarioConfig& config);

// Returns a copy of `section` with the given node states forced and every
// edge state recomputed from its tail map (the seeding used by interventions
// and failure fixtures).
Section with_node_states(const Sheaf& sheaf, Section section,
                         const std::vector<std::pair<std::size_t, StateIndex>>& assignments);

// Resolves failure targets against the sheaf, throwing INVALID_EVENT for
// unknown cells or out-of-range failed states.
Clamps clamps_for_events(const Sheaf& sheaf, const std::vector<FailureEvent>& events);

// Template definitions -------------------------------------------------------

namespace detail {

// Iterates (own state, incoming edge state tuple) over the full product for
// node v, invoking fn(key) for each.
template <typename Fn>
void for_each_kernel_key(const Sheaf& sheaf, std::size_t v, Fn&& fn) {
    const auto& in_edges = sheaf.graph.incoming(v);
    KernelKey key(1 + in_edges.size(), 0);
    const std::size_t own_card = sheaf.node_stalks[v].cardinality();
    for (StateIndex own = 0; own < own_card; ++own) {
        key[0] = own;
        std::size_t pos = 1;
        std::fill(key.begin() + 1, key.end(), 0);
        while (true) {
            fn(key);
            // Odometer over incoming edge states.
            pos = 1;
            while (pos <= in_edges.size()) {
                const std::size_t card = sheaf.edge_stalks[in_edges[pos - 1]].cardinality();
                if (++key[pos] < card) break;
                key[pos] = 0;
                ++pos;
            }
            if (pos > in_edges.size()) break;
        }
    }
}

}  // namespace detail

template <typename Fn>
NodeKernel make_deterministic_kernel(const Sheaf& sheaf, std::size_t v, Fn&& next_state) {
    NodeKernel kernel;
    const std::size_t card = sheaf.node_stalks[v].cardinality();
    detail::for_each_kernel_key(sheaf, v, [&](const KernelKey& key) {
        const StateIndex own = key[0];
        const std::vector<StateIndex> inputs(key.begin() + 1, key.end());
        kernel.set_deterministic(key, next_state(own, inputs), card);
    });
    return kernel;
}

template <typename Fn>
NodeKernel make_stochastic_kernel(const Sheaf& sheaf, std::size_t v, Fn&& row) {
    NodeKernel kernel;
    detail::for_each_kernel_key(sheaf, v, [&](const KernelKey& key) {
        const StateIndex own = key[0];
        const std::vector<StateIndex> inputs(key.begin() + 1, key.end());
        kernel.set_row(key, row(own, inputs));
    });
    return kernel;
}

}  // namespace rcause
