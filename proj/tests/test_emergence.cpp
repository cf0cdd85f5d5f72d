#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "random_models.hpp"
#include "rcause/emergence.hpp"

using namespace rcause;

namespace {

// Mutual-hold pair: a and b copy each other's AND. The one-step micro map
// sends {00, 01, 10} to 00 and 11 to 11, the canonical degenerate collapse.
struct AndPair {
    Sheaf sheaf;
    UpdateRule rule;
    Section baseline;
};

AndPair make_and_pair() {
    SheafBuilder builder;
    builder.add_node("a", {"0", "1"});
    builder.add_node("b", {"0", "1"});
    builder.add_edge("ab", "a", "b", {"0", "1"}, {0, 1}, {0, 1});
    builder.add_edge("ba", "b", "a", {"0", "1"}, {0, 1}, {0, 1});

    AndPair fixture;
    fixture.sheaf = builder.build();
    for (std::size_t v = 0; v < 2; ++v) {
        fixture.rule.kernels.push_back(make_deterministic_kernel(
            fixture.sheaf, v, [](StateIndex own, const std::vector<StateIndex>& in) {
                return static_cast<StateIndex>(own & in[0]);
            }));
    }
    fixture.baseline = Section{{0, 0}, {0, 0}};
    return fixture;
}

Section tail_forced_zero(const Sheaf& sheaf) {
    Section section;
    section.node_states.assign(sheaf.graph.node_count(), 0);
    section.edge_states.resize(sheaf.graph.edge_count());
    for (std::size_t e = 0; e < sheaf.graph.edge_count(); ++e) {
        section.edge_states[e] = sheaf.tail_maps[e](0);
    }
    return section;
}

}  // namespace

TEST_CASE("collapsing the identity pair yields a two-state macro node") {
    SheafBuilder builder;
    builder.add_node("a", {"off", "on"});
    builder.add_node("b", {"off", "on"});
    builder.add_edge("ab", "a", "b", {"lo", "hi"}, {0, 1}, {0, 1});
    const Sheaf sheaf = builder.build();

    const BlockCollapse block = collapse_block(sheaf, {0, 1}, 1000);
    REQUIRE(block.local_sections.size() == 2);
    CHECK(block.internal_edges == std::vector<std::size_t>{0});
    CHECK(block.local_sections[0] == Section{{0, 0}, {0}});
    CHECK(block.local_sections[1] == Section{{1, 1}, {1}});

    MacroGrouping grouping;
    grouping.blocks.push_back({0, 1});
    const QuotientModel quotient = build_quotient(sheaf, make_identity_rule(sheaf),
                                                  Section{{1, 1}, {1}}, grouping);
    CHECK(quotient.sheaf.graph.node_count() == 1);
    CHECK(quotient.sheaf.graph.edge_count() == 0);
    CHECK(quotient.sheaf.graph.node(0) == "(a+b)");
    CHECK(quotient.sheaf.node_stalks[0].labels ==
          std::vector<std::string>{"off|off", "on|on"});
    CHECK(quotient.baseline.node_states == std::vector<StateIndex>{1});
    CHECK(enumerate_global_sections(quotient.sheaf, 100).sections.size() == 2);
}

TEST_CASE("a block with no locally consistent section is rejected") {
    SheafBuilder builder;
    builder.add_node("a", {"0", "1"});
    builder.add_node("b", {"0", "1"});
    builder.add_edge("ab", "a", "b", {"0", "1"}, {0, 1}, {1, 0});  // parity clash
    builder.add_edge("ba", "b", "a", {"0", "1"}, {0, 1}, {0, 1});  // forces equality
    const Sheaf sheaf = builder.build();
    REQUIRE(enumerate_global_sections(sheaf, 10).sections.empty());

    CHECK_THROWS_WITH_AS(collapse_block(sheaf, {0, 1}, 1000),
                         doctest::Contains("EMPTY_LOCAL_SECTIONS"), Error);
}

TEST_CASE("grouping validation catches overlaps, bad indices, and name clashes") {
    const AndPair fixture = make_and_pair();

    MacroGrouping overlap;
    overlap.blocks = {{0, 1}, {1}};
    CHECK_THROWS_WITH_AS(canonicalize_grouping(fixture.sheaf, overlap),
                         doctest::Contains("INVALID_GROUPING"), Error);

    MacroGrouping out_of_range;
    out_of_range.blocks = {{7}};
    CHECK_THROWS_WITH_AS(canonicalize_grouping(fixture.sheaf, out_of_range),
                         doctest::Contains("INVALID_GROUPING"), Error);

    MacroGrouping empty_block;
    empty_block.blocks = {{}};
    CHECK_THROWS_WITH_AS(canonicalize_grouping(fixture.sheaf, empty_block),
                         doctest::Contains("INVALID_GROUPING"), Error);

    // A singleton filled in for an unlisted node.
    MacroGrouping partial;
    partial.blocks = {{1}};
    const MacroGrouping canonical = canonicalize_grouping(fixture.sheaf, partial);
    REQUIRE(canonical.blocks.size() == 2);
    CHECK(canonical.blocks[0] == std::vector<std::size_t>{1});
    CHECK(canonical.blocks[1] == std::vector<std::size_t>{0});

    // A micro node that already uses the macro naming scheme collides.
    SheafBuilder clash;
    clash.add_node("a", {"0"});
    clash.add_node("b", {"0"});
    clash.add_node("(a+b)", {"0"});
    const Sheaf clash_sheaf = clash.build();
    MacroGrouping grouping;
    grouping.blocks = {{0, 1}};
    CHECK_THROWS_WITH_AS(
        build_quotient(clash_sheaf, make_identity_rule(clash_sheaf),
                       Section{{0, 0, 0}, {}}, grouping),
        doctest::Contains("DUPLICATE_ID"), Error);
}

TEST_CASE("quotient preserves the number of global sections") {
    RngStream rng(246810);
    int preserved = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const Sheaf sheaf = fixtures::make_random_sheaf(rng, {5, 6, 3});
        const std::size_t n = sheaf.graph.node_count();
        if (n < 2) continue;
        const UpdateRule rule = fixtures::make_random_rule(rng, sheaf, 0.0);

        // Random block of 2..n nodes.
        const std::size_t size = 2 + rng.uniform_index(n - 1);
        std::vector<std::size_t> pool(n);
        for (std::size_t v = 0; v < n; ++v) pool[v] = v;
        for (std::size_t i = 0; i < size; ++i) {
            const std::size_t j = i + rng.uniform_index(n - i);
            std::swap(pool[i], pool[j]);
        }
        MacroGrouping grouping;
        grouping.blocks.push_back({pool.begin(), pool.begin() + size});

        const std::size_t micro_count =
            enumerate_global_sections(sheaf, 1 << 20).sections.size();
        CAPTURE(trial);
        try {
            const QuotientModel quotient =
                build_quotient(sheaf, rule, tail_forced_zero(sheaf), grouping);
            const std::size_t macro_count =
                enumerate_global_sections(quotient.sheaf, 1 << 20).sections.size();
            CHECK(micro_count == macro_count);
            ++preserved;
        } catch (const Error& e) {
            // A block without local sections can only happen when the micro
            // sheaf has no global sections either.
            REQUIRE(e.code() == "EMPTY_LOCAL_SECTIONS");
            CHECK(micro_count == 0);
        }
    }
    CHECK(preserved >= 20);  // the property must actually get exercised
}

TEST_CASE("boundary edges keep their constraints through composed maps") {
    // Parity path x - y - z collapsed on {x, y}: the surviving edge yz must
    // constrain z exactly as before.
    SheafBuilder builder;
    for (const char* id : {"x", "y", "z"}) {
        builder.add_node(id, {"s0", "s1", "s2", "s3"});
    }
    const std::vector<StateIndex> parity = {0, 1, 0, 1};
    builder.add_edge("xy", "x", "y", {"even", "odd"}, parity, parity);
    builder.add_edge("yz", "y", "z", {"even", "odd"}, parity, parity);
    const Sheaf sheaf = builder.build();

    MacroGrouping grouping;
    grouping.blocks = {{0, 1}};
    const QuotientModel quotient =
        build_quotient(sheaf, make_identity_rule(sheaf), tail_forced_zero(sheaf), grouping);

    REQUIRE(quotient.sheaf.graph.node_count() == 2);
    REQUIRE(quotient.sheaf.graph.edge_count() == 1);
    CHECK(quotient.sheaf.graph.edge(0).id == "yz");
    CHECK(quotient.sheaf.graph.edge(0).source == "(x+y)");

    // 8 locally consistent sections over {x, y}; the composed tail map sends
    // each to y's parity.
    const BlockCollapse& block = quotient.blocks[0];
    REQUIRE(block.local_sections.size() == 8);
    for (std::size_t m = 0; m < 8; ++m) {
        CHECK(quotient.sheaf.tail_maps[0].table[m] ==
              parity[block.local_sections[m].node_states[1]]);
    }

    CHECK(enumerate_global_sections(quotient.sheaf, 1000).sections.size() ==
          enumerate_global_sections(sheaf, 1000).sections.size());
}

TEST_CASE("degenerate pair gains resilience under the pair grouping") {
    const AndPair fixture = make_and_pair();

    MacroGrouping grouping;
    grouping.blocks = {{0, 1}};
    InterventionSpec spec;
    const EmergenceResult result =
        causal_resilience_index(fixture.sheaf, fixture.rule, fixture.baseline, grouping, spec);

    // Micro: uniform do over four states collapses {00,01,10} to 00, giving
    // H(3/4, 1/4) bits; macro: the two consistent joint states map by
    // identity, a clean bit. Both pinned against the entropy oracle.
    const double micro_expected = oracle::entropy_bits({0.75, 0.25});
    CHECK(result.micro.ei_bits == doctest::Approx(micro_expected).epsilon(1e-12));
    CHECK(result.micro.ei_bits == doctest::Approx(0.811278124459133).epsilon(1e-12));
    CHECK(result.macro.ei_bits == 1.0);
    CHECK(result.r_cause_bits ==
          doctest::Approx(0.188721875540867).epsilon(1e-9));
    CHECK(result.r_cause_bits > 0.0);
    CHECK(result.micro_targets == std::vector<std::size_t>{0, 1});
    CHECK(result.macro_targets == std::vector<std::size_t>{0});
}

TEST_CASE("all-singleton grouping scores exactly zero resilience") {
    const AndPair fixture = make_and_pair();
    const EmergenceResult result = causal_resilience_index(
        fixture.sheaf, fixture.rule, fixture.baseline, MacroGrouping{}, InterventionSpec{});
    CHECK(result.r_cause_bits == 0.0);
    CHECK(result.micro.ei_bits == result.macro.ei_bits);
}

TEST_CASE("bijective product dynamics never gain from coarsening") {
    // Per-node permutation kernels: the micro map is a bijection, so micro EI
    // is already maximal and no grouping can beat it.
    RngStream rng(1357911);
    for (int trial = 0; trial < 20; ++trial) {
        const Sheaf sheaf = fixtures::make_random_sheaf(rng, {4, 4, 3});
        const std::size_t n = sheaf.graph.node_count();
        if (n < 2) continue;

        UpdateRule rule;
        for (std::size_t v = 0; v < n; ++v) {
            const std::size_t card = sheaf.node_stalks[v].cardinality();
            const std::size_t shift = rng.uniform_index(card);
            rule.kernels.push_back(make_deterministic_kernel(
                sheaf, v, [card, shift](StateIndex own, const std::vector<StateIndex>&) {
                    return static_cast<StateIndex>((own + shift) % card);
                }));
        }

        const std::size_t size = 2 + rng.uniform_index(n - 1);
        std::vector<std::size_t> members;
        for (std::size_t v = 0; v < size; ++v) members.push_back(v);
        MacroGrouping grouping;
        grouping.blocks.push_back(members);

        CAPTURE(trial);
        try {
            const EmergenceResult result = causal_resilience_index(
                sheaf, rule, tail_forced_zero(sheaf), grouping, InterventionSpec{});
            CHECK(result.r_cause_bits <= 1e-9);
        } catch (const Error& e) {
            REQUIRE(e.code() == "EMPTY_LOCAL_SECTIONS");
        }
    }
}

TEST_CASE("search ranks the mutual copy pair first with a clean score") {
    // a and b overwrite each other; iso idles. The pair is the only
    // structure worth a macro node.
    SheafBuilder builder;
    builder.add_node("a", {"0", "1"});
    builder.add_node("b", {"0", "1"});
    builder.add_node("iso", {"0", "1"});
    builder.add_edge("ab", "a", "b", {"0", "1"}, {0, 1}, {0, 1});
    builder.add_edge("ba", "b", "a", {"0", "1"}, {0, 1}, {0, 1});
    const Sheaf sheaf = builder.build();

    UpdateRule rule;
    for (std::size_t v = 0; v < 3; ++v) {
        rule.kernels.push_back(make_deterministic_kernel(
            sheaf, v, [](StateIndex own, const std::vector<StateIndex>& in) {
                return in.empty() ? own : in[0];
            }));
    }

    InterventionSpec spec;
    SearchOptions options;
    const SearchResult result =
        search_macro_nodes(sheaf, rule, tail_forced_zero(sheaf), spec, options);

    CHECK(result.pairwise.ei_bits[0][1] == 1.0);
    CHECK(result.pairwise.ei_bits[1][0] == 1.0);

    REQUIRE_FALSE(result.candidates.empty());
    CHECK(result.candidates[0].members == std::vector<std::size_t>{0, 1});
    CHECK(result.candidates[0].score_normalized == 1.0);
    CHECK(result.candidates[0].score_raw == 2.0);
    REQUIRE(result.best.blocks.size() == 2);  // the pair plus the singleton
    CHECK(result.best.blocks[0] == std::vector<std::size_t>{0, 1});

    SearchOptions greedy = options;
    greedy.strategy = SearchStrategy::Greedy;
    const SearchResult greedy_result =
        search_macro_nodes(sheaf, rule, tail_forced_zero(sheaf), spec, greedy);
    REQUIRE_FALSE(greedy_result.candidates.empty());
    CHECK(greedy_result.candidates[0].members == std::vector<std::size_t>{0, 1});
    CHECK(greedy_result.candidates[0].score_normalized == 1.0);
}

TEST_CASE("search returns all singletons when nothing scores") {
    SheafBuilder builder;
    builder.add_node("a", {"0", "1"});
    builder.add_node("b", {"0", "1"});
    builder.add_edge("ab", "a", "b", {"0", "1"}, {0, 1}, {0, 1});
    const Sheaf sheaf = builder.build();

    // Constant dynamics: no intervention moves anything.
    UpdateRule rule;
    for (std::size_t v = 0; v < 2; ++v) {
        rule.kernels.push_back(make_deterministic_kernel(
            sheaf, v, [](StateIndex, const std::vector<StateIndex>&) {
                return StateIndex{0};
            }));
    }

    const SearchResult result = search_macro_nodes(sheaf, rule, tail_forced_zero(sheaf),
                                                   InterventionSpec{}, SearchOptions{});
    CHECK(result.candidates.empty());
    REQUIRE(result.best.blocks.size() == 2);
    CHECK(result.best.blocks[0] == std::vector<std::size_t>{0});
    CHECK(result.best.blocks[1] == std::vector<std::size_t>{1});
}

TEST_CASE("greedy never beats exhaustive on the same selection score") {
    RngStream rng(86420);
    for (int trial = 0; trial < 15; ++trial) {
        const Sheaf sheaf = fixtures::make_random_sheaf(rng, {6, 8, 2});
        if (sheaf.graph.node_count() < 2) continue;
        const UpdateRule rule = fixtures::make_random_rule(rng, sheaf, 0.0);

        InterventionSpec spec;
        SearchOptions exhaustive;
        exhaustive.max_block_size = 4;
        SearchOptions greedy = exhaustive;
        greedy.strategy = SearchStrategy::Greedy;

        const SearchResult full =
            search_macro_nodes(sheaf, rule, tail_forced_zero(sheaf), spec, exhaustive);
        const SearchResult grown =
            search_macro_nodes(sheaf, rule, tail_forced_zero(sheaf), spec, greedy);

        const double full_best =
            full.candidates.empty() ? 0.0 : full.candidates[0].score_normalized;
        const double grown_best =
            grown.candidates.empty() ? 0.0 : grown.candidates[0].score_normalized;
        CAPTURE(trial);
        CHECK(grown_best <= full_best + 1e-9);
    }
}

TEST_CASE("macro kernel projection keeps stochastic rows normalized") {
    const AndPair pair = make_and_pair();

    // Noisy variant: each node follows the AND with probability 0.9.
    UpdateRule noisy;
    for (std::size_t v = 0; v < 2; ++v) {
        noisy.kernels.push_back(make_stochastic_kernel(
            pair.sheaf, v, [](StateIndex own, const std::vector<StateIndex>& in) {
                const StateIndex next = own & in[0];
                std::vector<double> row(2, 0.1);
                row[next] = 0.9;
                return row;
            }));
    }

    MacroGrouping grouping;
    grouping.blocks = {{0, 1}};
    const QuotientModel quotient =
        build_quotient(pair.sheaf, noisy, pair.baseline, grouping);

    const NodeKernel& kernel = quotient.rule.kernels[0];
    REQUIRE(kernel.row_count() == 2);
    for (const auto& [key, row] : kernel.rows()) {
        double sum = 0.0;
        for (double p : row.probs) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}
