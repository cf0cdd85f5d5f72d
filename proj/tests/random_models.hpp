#pragma once
// Seeded random fixtures shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "rcause/dynamics.hpp"
#include "rcause/model.hpp"
#include "rcause/rng.hpp"

namespace fixtures {

struct RandomSheafParams {
    std::size_t max_nodes = 4;
    std::size_t max_edges = 5;
    std::size_t max_card = 3;
};

inline rcause::Sheaf make_random_sheaf(rcause::RngStream& rng,
                                       const RandomSheafParams& params = {}) {
    const std::size_t n = 1 + rng.uniform_index(params.max_nodes);
    const std::size_t m = rng.uniform_index(params.max_edges + 1);

    rcause::SheafBuilder builder;
    std::vector<std::size_t> node_cards(n);
    for (std::size_t v = 0; v < n; ++v) {
        node_cards[v] = 1 + rng.uniform_index(params.max_card);
        std::vector<std::string> labels;
        for (std::size_t s = 0; s < node_cards[v]; ++s) {
            labels.push_back("q" + std::to_string(s));
        }
        builder.add_node("v" + std::to_string(v), std::move(labels));
    }
    for (std::size_t e = 0; e < m; ++e) {
        const std::size_t src = rng.uniform_index(n);
        const std::size_t dst = rng.uniform_index(n);
        const std::size_t card = 1 + rng.uniform_index(params.max_card);
        std::vector<std::string> labels;
        for (std::size_t s = 0; s < card; ++s) {
            labels.push_back("f" + std::to_string(s));
        }
        std::vector<rcause::StateIndex> tail(node_cards[src]);
        std::vector<rcause::StateIndex> head(node_cards[dst]);
        for (auto& t : tail) t = static_cast<rcause::StateIndex>(rng.uniform_index(card));
        for (auto& h : head) h = static_cast<rcause::StateIndex>(rng.uniform_index(card));
        builder.add_edge("e" + std::to_string(e), "v" + std::to_string(src),
                         "v" + std::to_string(dst), std::move(labels), std::move(tail),
                         std::move(head));
    }
    return builder.build();
}

inline rcause::Section make_random_section(rcause::RngStream& rng, const rcause::Sheaf& sheaf) {
    rcause::Section section;
    for (const auto& stalk : sheaf.node_stalks) {
        section.node_states.push_back(
            static_cast<rcause::StateIndex>(rng.uniform_index(stalk.cardinality())));
    }
    for (const auto& stalk : sheaf.edge_stalks) {
        section.edge_states.push_back(
            static_cast<rcause::StateIndex>(rng.uniform_index(stalk.cardinality())));
    }
    return section;
}

// Random total update rule; stochastic_share in [0, 1] controls how many
// rows carry a two-point distribution instead of a point mass.
inline rcause::UpdateRule make_random_rule(rcause::RngStream& rng, const rcause::Sheaf& sheaf,
                                           double stochastic_share = 0.0) {
    rcause::UpdateRule rule;
    for (std::size_t v = 0; v < sheaf.graph.node_count(); ++v) {
        const std::size_t card = sheaf.node_stalks[v].cardinality();
        rule.kernels.push_back(rcause::make_stochastic_kernel(
            sheaf, v,
            [&](rcause::StateIndex, const std::vector<rcause::StateIndex>&) {
                std::vector<double> row(card, 0.0);
                if (card > 1 && rng.uniform_double() < stochastic_share) {
                    const std::size_t a = rng.uniform_index(card);
                    std::size_t b = rng.uniform_index(card - 1);
                    if (b >= a) ++b;
                    const double w = 0.25 + 0.5 * rng.uniform_double();
                    row[a] = w;
                    row[b] = 1.0 - w;
                } else {
                    row[rng.uniform_index(card)] = 1.0;
                }
                return row;
            }));
    }
    return rule;
}

}  // namespace fixtures
