#include "rcause/domains.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include "rcause/errors.hpp"
#include "rcause/rng.hpp"

namespace rcause {

namespace {

Section consistent_initial(const Sheaf& sheaf,
                           const std::vector<std::pair<std::size_t, StateIndex>>& assignments) {
    Section zero;
    zero.node_states.assign(sheaf.graph.node_count(), 0);
    zero.edge_states.assign(sheaf.graph.edge_count(), 0);
    return with_node_states(sheaf, std::move(zero), assignments);
}

}  // namespace

DomainModel build_microservice(std::size_t services, std::size_t branching,
                               std::size_t load_levels) {
    if (services == 0 || branching == 0 || load_levels == 0) {
        throw validation_error("INVALID_ARGUMENT", "service tree needs positive sizes");
    }

    static const char* kHealth[] = {"healthy", "degraded", "down"};
    std::vector<std::string> node_labels;
    for (int h = 0; h < 3; ++h) {
        for (std::size_t l = 0; l < load_levels; ++l) {
            if (load_levels == 1) {
                node_labels.push_back(kHealth[h]);
            } else {
                node_labels.push_back(std::string(kHealth[h]) + "@l" + std::to_string(l));
            }
        }
    }
    // Offered service level tracks the provider's health band; consumers must
    // be in the matching band for the dependency to be consistent.
    std::vector<StateIndex> health_band(node_labels.size());
    for (std::size_t s = 0; s < node_labels.size(); ++s) {
        health_band[s] = static_cast<StateIndex>(s / load_levels);
    }

    SheafBuilder builder;
    for (std::size_t i = 0; i < services; ++i) {
        builder.add_node("s" + std::to_string(i), node_labels);
    }
    for (std::size_t i = 1; i < services; ++i) {
        const std::size_t parent = (i - 1) / branching;
        builder.add_edge("d" + std::to_string(parent) + "_" + std::to_string(i),
                         "s" + std::to_string(parent), "s" + std::to_string(i),
                         {"normal", "reduced", "none"}, health_band, health_band);
    }

    DomainModel domain;
    domain.sheaf = builder.build();

    const std::size_t L = load_levels;
    domain.rule.kernels.reserve(services);
    for (std::size_t v = 0; v < services; ++v) {
        domain.rule.kernels.push_back(make_deterministic_kernel(
            domain.sheaf, v, [&](StateIndex own, const std::vector<StateIndex>& inputs) {
                if (inputs.empty()) return own;  // roots hold their state
                std::size_t offline = 0;
                std::size_t impaired = 0;
                for (StateIndex level : inputs) {
                    if (level == 2) ++offline;
                    if (level != 0) ++impaired;
                }
                StateIndex health = 0;
                if (offline * 2 > inputs.size()) {
                    health = 2;
                } else if (impaired > 0) {
                    health = 1;
                }
                const StateIndex load = own % static_cast<StateIndex>(L);
                return static_cast<StateIndex>(health * L + load);
            }));
    }

    domain.initial = consistent_initial(domain.sheaf, {});
    domain.scripted.horizon = services;
    domain.scripted.failures.push_back(
        {"s0", static_cast<StateIndex>(2 * L), 0, true});
    return domain;
}

DomainModel build_neural(std::size_t neurons, double connect_prob, std::size_t threshold,
                         std::uint64_t seed) {
    if (neurons == 0 || threshold == 0) {
        throw validation_error("INVALID_ARGUMENT", "network needs positive sizes");
    }
    if (connect_prob < 0.0 || connect_prob > 1.0) {
        throw validation_error("INVALID_ARGUMENT", "connect_prob must be in [0, 1]");
    }

    SheafBuilder builder;
    for (std::size_t i = 0; i < neurons; ++i) {
        builder.add_node("n" + std::to_string(i), {"quiet", "firing"});
    }
    RngStream rng(derive_seed(seed, 0x6e657572ULL));
    for (std::size_t i = 0; i < neurons; ++i) {
        for (std::size_t j = 0; j < neurons; ++j) {
            if (i == j) continue;
            if (connect_prob < 1.0 && rng.uniform_double() >= connect_prob) continue;
            builder.add_edge("a" + std::to_string(i) + "_" + std::to_string(j),
                             "n" + std::to_string(i), "n" + std::to_string(j),
                             {"none", "signal"}, {0, 1}, {0, 1});
        }
    }

    DomainModel domain;
    domain.sheaf = builder.build();
    domain.rule.kernels.reserve(neurons);
    for (std::size_t v = 0; v < neurons; ++v) {
        domain.rule.kernels.push_back(make_deterministic_kernel(
            domain.sheaf, v, [threshold](StateIndex, const std::vector<StateIndex>& inputs) {
                std::size_t active = 0;
                for (StateIndex s : inputs) active += s;
                return static_cast<StateIndex>(active >= threshold ? 1 : 0);
            }));
    }

    std::vector<std::pair<std::size_t, StateIndex>> all_firing;
    for (std::size_t v = 0; v < neurons; ++v) all_firing.emplace_back(v, 1);
    domain.initial = consistent_initial(domain.sheaf, all_firing);
    domain.scripted.horizon = 3;
    domain.scripted.failures.push_back({"n0", 0, 0, true});
    return domain;
}

DomainModel build_powergrid(std::size_t stations, std::size_t levels, std::size_t cap) {
    if (stations == 0 || stations % 2 != 0) {
        throw validation_error("INVALID_ARGUMENT", "ring needs an even station count");
    }
    if (levels == 0 || cap == 0) {
        throw validation_error("INVALID_ARGUMENT", "ring needs positive levels and cap");
    }

    // Injection stalk -levels..+levels; index L + value.
    std::vector<std::string> injection;
    for (std::int64_t s = -static_cast<std::int64_t>(levels);
         s <= static_cast<std::int64_t>(levels); ++s) {
        std::ostringstream label;
        label << "inj" << (s > 0 ? "+" : "") << s;
        injection.push_back(label.str());
    }
    std::vector<std::string> flow;
    for (std::size_t f = 0; f <= cap; ++f) flow.push_back("flow" + std::to_string(f));

    auto clamp_flow = [&](std::int64_t value) {
        return static_cast<StateIndex>(
            std::clamp<std::int64_t>(value, 0, static_cast<std::int64_t>(cap)));
    };
    std::vector<StateIndex> tail_table;
    std::vector<StateIndex> head_table;
    for (std::int64_t s = -static_cast<std::int64_t>(levels);
         s <= static_cast<std::int64_t>(levels); ++s) {
        tail_table.push_back(clamp_flow(s));   // what the tail pushes
        head_table.push_back(clamp_flow(-s));  // what the head draws
    }

    auto station_id = [](std::size_t i) {
        return (i % 2 == 0 ? "g" : "l") + std::to_string(i);
    };

    SheafBuilder builder;
    for (std::size_t i = 0; i < stations; ++i) {
        builder.add_node(station_id(i), injection);
    }
    for (std::size_t i = 0; i < stations; ++i) {
        builder.add_edge("t" + std::to_string(i), station_id(i),
                         station_id((i + 1) % stations), flow, tail_table, head_table);
    }

    DomainModel domain;
    domain.sheaf = builder.build();

    const std::int64_t L = static_cast<std::int64_t>(levels);
    domain.rule.kernels.reserve(stations);
    for (std::size_t v = 0; v < stations; ++v) {
        domain.rule.kernels.push_back(make_deterministic_kernel(
            domain.sheaf, v, [L](StateIndex own, const std::vector<StateIndex>& inputs) {
                const std::int64_t value = static_cast<std::int64_t>(own) - L;
                if (value >= 0) return own;  // generators and neutral hold
                std::int64_t inflow = 0;
                for (StateIndex f : inputs) inflow += f;
                if (inflow < -value) return own + 1;  // shed one level toward 0
                return own;
            }));
    }

    // Generators inject +1, loads draw -1.
    std::vector<std::pair<std::size_t, StateIndex>> dispatch;
    for (std::size_t v = 0; v < stations; ++v) {
        dispatch.emplace_back(v, static_cast<StateIndex>(v % 2 == 0 ? L + 1 : L - 1));
    }
    domain.initial = consistent_initial(domain.sheaf, dispatch);
    domain.scripted.horizon = 3;
    domain.scripted.failures.push_back({"t0", 0, 0, true});
    return domain;
}

}  // namespace rcause
