#include "rcause/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "rcause/errors.hpp"

namespace rcause {

namespace {

constexpr double kRowTolerance = 1e-12;

std::string key_to_string(const KernelKey& key) {
    std::ostringstream out;
    out << "(";
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (i) out << ",";
        out << key[i];
    }
    out << ")";
    return out.str();
}

}  // namespace

void NodeKernel::set_deterministic(KernelKey key, StateIndex next, std::size_t cardinality) {
    KernelRow row;
    row.probs.assign(cardinality, 0.0);
    if (next >= cardinality) {
        throw validation_error("KERNEL_RANGE", "kernel target state " + std::to_string(next) +
                                                   " out of range for row " + key_to_string(key));
    }
    row.probs[next] = 1.0;
    row.fixed = static_cast<std::int32_t>(next);
    rows_[std::move(key)] = std::move(row);
}

void NodeKernel::set_row(KernelKey key, std::vector<double> probs) {
    double sum = 0.0;
    std::int32_t fixed = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] < 0.0) {
            throw validation_error("INVALID_DISTRIBUTION",
                                   "negative probability in kernel row " + key_to_string(key));
        }
        sum += probs[i];
        if (probs[i] > 1.0 - kRowTolerance) fixed = static_cast<std::int32_t>(i);
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
        std::ostringstream msg;
        msg << "kernel row " << key_to_string(key) << " sums to " << sum;
        throw validation_error("INVALID_DISTRIBUTION", msg.str());
    }
    KernelRow row;
    row.probs = std::move(probs);
    row.fixed = fixed;
    if (fixed < 0) deterministic_ = false;
    rows_[std::move(key)] = std::move(row);
}

const KernelRow* NodeKernel::find(const KernelKey& key) const {
    auto it = rows_.find(key);
    return it == rows_.end() ? nullptr : &it->second;
}

bool UpdateRule::deterministic() const {
    for (const auto& kernel : kernels) {
        if (!kernel.deterministic()) return false;
    }
    return true;
}

UpdateRule make_identity_rule(const Sheaf& sheaf) {
    UpdateRule rule;
    rule.kernels.reserve(sheaf.graph.node_count());
    for (std::size_t v = 0; v < sheaf.graph.node_count(); ++v) {
        rule.kernels.push_back(make_deterministic_kernel(
            sheaf, v, [](StateIndex own, const std::vector<StateIndex>&) { return own; }));
    }
    return rule;
}

Section step(const Sheaf& sheaf, const UpdateRule& rule, const Section& section,
             const Clamps& clamps, RngStream& rng) {
    check_shape(sheaf, section);
    if (rule.kernels.size() != sheaf.graph.node_count()) {
        throw validation_error("SHAPE_MISMATCH", "rule kernel count does not match node count");
    }

    const std::size_t n = sheaf.graph.node_count();
    Section next;
    next.node_states.resize(n);
    next.edge_states.resize(sheaf.graph.edge_count());

    for (std::size_t v = 0; v < n; ++v) {
        auto clamp = clamps.nodes.find(v);
        if (clamp != clamps.nodes.end()) {
            next.node_states[v] = clamp->second;
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
                                 "' at input " + key_to_string(key));
        }
        if (row->fixed >= 0) {
            next.node_states[v] = static_cast<StateIndex>(row->fixed);
        } else {
            next.node_states[v] = static_cast<StateIndex>(rng.categorical(row->probs));
        }
    }

    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        auto clamp = clamps.edges.find(e);
        if (clamp != clamps.edges.end()) {
            next.edge_states[e] = clamp->second;
            continue;
        }
        const std::size_t tail = sheaf.graph.source_index(e);
        next.edge_states[e] = sheaf.tail_maps[e](next.node_states[tail]);
    }
    return next;
}

StabilizeResult stabilize(const Sheaf& sheaf, const UpdateRule& rule, const Section& section,
                          const Clamps& clamps, std::uint32_t max_iters, RngStream& rng) {
    StabilizeResult result;
    result.section = section;
    result.residual = consistency_residual(sheaf, section);

    const bool deterministic = rule.deterministic();
    std::unordered_set<std::size_t> seen;
    if (deterministic) seen.insert(section_hash(result.section));

    for (std::uint32_t iter = 0; iter < max_iters; ++iter) {
        Section next = step(sheaf, rule, result.section, clamps, rng);
        if (next == result.section) {
            result.converged = result.residual == 0;
            return result;
        }
        result.section = std::move(next);
        result.residual = consistency_residual(sheaf, result.section);
        result.iterations = iter + 1;
        if (deterministic && !seen.insert(section_hash(result.section)).second) {
            result.cycle_detected = true;
            return result;
        }
    }
    // Out of budget. A stochastic run still counts as converged when it is
    // sitting on a consistent configuration at the cutoff.
    if (!deterministic) result.converged = result.residual == 0;
    return result;
}

Clamps clamps_for_events(const Sheaf& sheaf, const std::vector<FailureEvent>& events) {
    Clamps clamps;
    for (const auto& event : events) {
        const std::size_t v = sheaf.graph.node_index(event.target);
        if (v != kNoIndex) {
            if (event.failed_state >= sheaf.node_stalks[v].cardinality()) {
                throw validation_error("INVALID_EVENT", "failed_state out of range for node '" +
                                                            event.target + "'");
            }
            clamps.nodes[v] = event.failed_state;
            continue;
        }
        const std::size_t e = sheaf.graph.edge_index(event.target);
        if (e != kNoIndex) {
            if (event.failed_state >= sheaf.edge_stalks[e].cardinality()) {
                throw validation_error("INVALID_EVENT", "failed_state out of range for edge '" +
                                                            event.target + "'");
            }
            clamps.edges[e] = event.failed_state;
            continue;
        }
        throw validation_error("INVALID_EVENT", "unknown failure target '" + event.target + "'");
    }
    return clamps;
}

Trajectory run_scenario(const Sheaf& sheaf, const UpdateRule& rule, const Section& initial,
                        const ScenarioConfig& config) {
    check_shape(sheaf, initial);
    // Validate every event up front so a bad schedule fails before any work.
    clamps_for_events(sheaf, config.failures);

    Trajectory trajectory;
    trajectory.sections.push_back(initial);
    trajectory.residuals.push_back(consistency_residual(sheaf, initial));
    if (trajectory.residuals.back() != 0) {
        trajectory.warnings.push_back("initial section is not a global section (residual " +
                                      std::to_string(trajectory.residuals.back()) + ")");
    }

    RngStream rng(derive_seed(config.seed, 0x7261ULL));
    std::unordered_set<const FailureEvent*> logged;
    for (std::uint64_t t = 0; t < config.horizon; ++t) {
        std::vector<FailureEvent> active;
        for (const auto& event : config.failures) {
            const bool applies = event.sticky ? t >= event.at_step : t == event.at_step;
            if (!applies) continue;
            active.push_back(event);
            if (logged.insert(&event).second) {
                trajectory.events_applied.push_back({event, t});
            }
        }
        Clamps clamps = clamps_for_events(sheaf, active);
        trajectory.sections.push_back(step(sheaf, rule, trajectory.sections.back(), clamps, rng));
        trajectory.residuals.push_back(consistency_residual(sheaf, trajectory.sections.back()));
    }
    return trajectory;
}

Section with_node_states(const Sheaf& sheaf, Section section,
                         const std::vector<std::pair<std::size_t, StateIndex>>& assignments) {
    check_shape(sheaf, section);
    for (const auto& [v, state] : assignments) {
        if (v >= sheaf.graph.node_count() || state >= sheaf.node_stalks[v].cardinality()) {
            throw validation_error("SHAPE_MISMATCH", "node assignment out of range");
        }
        section.node_states[v] = state;
    }
    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        const std::size_t tail = sheaf.graph.source_index(e);
        section.edge_states[e] = sheaf.tail_maps[e](section.node_states[tail]);
    }
    return section;
}

}  // namespace rcause
