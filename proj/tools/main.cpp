#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcause/causal.hpp"
#include "rcause/domains.hpp"
#include "rcause/dynamics.hpp"
#include "rcause/emergence.hpp"
#include "rcause/errors.hpp"
#include "rcause/io.hpp"
#include "rcause/model.hpp"

namespace {

using rcause::Json;

struct CommonOptions {
    std::string model_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
};

struct LoadedModel {
    rcause::ParsedModel parsed;
    std::vector<rcause::InputDigest> inputs;
};

LoadedModel load(const CommonOptions& options) {
    LoadedModel loaded;
    loaded.parsed = rcause::load_model(options.model_path);
    loaded.inputs.push_back(rcause::digest_file(options.model_path));
    return loaded;
}

// Reports go wherever --out points; the human summary takes the other
// stream so machine output stays clean when it lands on stdout.
void write_output(const std::string& out_path, const std::string& text,
                  const std::string& summary) {
    if (out_path.empty()) {
        std::cout << text;
        std::cerr << summary << "\n";
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            throw rcause::parse_error("cannot write file '" + out_path + "'");
        }
        out << text;
        std::cout << summary << "\n";
    }
}

void emit(const std::string& out_path, const Json& envelope, const std::string& summary) {
    write_output(out_path, envelope.dump(2) + "\n", summary);
}

void require_valid(const rcause::Sheaf& sheaf) {
    const rcause::ValidationReport report = rcause::validate_sheaf(sheaf);
    if (!report.ok()) {
        throw rcause::validation_error(report.violations[0].code,
                                       report.violations[0].cell + ": " +
                                           report.violations[0].message);
    }
}

const rcause::UpdateRule& require_rule(const rcause::ParsedModel& model) {
    if (!model.rule.has_value()) {
        throw rcause::validation_error("MISSING_RULE",
                                       "this command needs a model with a 'rule' section");
    }
    return *model.rule;
}

rcause::Section baseline_of(const rcause::ParsedModel& model) {
    return model.initial.has_value() ? *model.initial
                                     : rcause::default_initial(model.sheaf);
}

std::string format_bits(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6f", value);
    return buffer;
}

int run_validate(const CommonOptions& options) {
    LoadedModel loaded = load(options);
    const rcause::ValidationReport report = rcause::validate_sheaf(loaded.parsed.sheaf);
    const Json envelope =
        rcause::make_envelope("validate", options.seed.value_or(0), loaded.inputs,
                              rcause::validation_to_json(loaded.parsed.sheaf, report));
    const std::string summary =
        report.ok() ? "model ok: " + std::to_string(loaded.parsed.sheaf.graph.node_count()) +
                          " nodes, " + std::to_string(loaded.parsed.sheaf.graph.edge_count()) +
                          " edges"
                    : "model invalid: " + std::to_string(report.violations.size()) +
                          " violation(s)";
    emit(options.out_path, envelope, summary);
    return report.ok() ? 0 : 2;
}

int run_sections(const CommonOptions& options, std::size_t limit) {
    LoadedModel loaded = load(options);
    require_valid(loaded.parsed.sheaf);
    const rcause::SectionEnumeration enumeration =
        rcause::enumerate_global_sections(loaded.parsed.sheaf, limit);
    const Json envelope =
        rcause::make_envelope("sections", options.seed.value_or(0), loaded.inputs,
                              rcause::sections_to_json(loaded.parsed.sheaf, enumeration));
    std::string summary = "found " + std::to_string(enumeration.sections.size()) +
                          " global section(s)";
    if (enumeration.truncated) summary += " (truncated at limit " + std::to_string(limit) + ")";
    emit(options.out_path, envelope, summary);
    return 0;
}

int run_simulate(const CommonOptions& options, const std::string& scenario_path) {
    LoadedModel loaded = load(options);
    require_valid(loaded.parsed.sheaf);
    const rcause::UpdateRule& rule = require_rule(loaded.parsed);

    rcause::ScenarioConfig scenario;
    if (!scenario_path.empty()) {
        scenario = rcause::load_scenario(scenario_path, loaded.parsed.sheaf);
        loaded.inputs.push_back(rcause::digest_file(scenario_path));
    } else if (loaded.parsed.scenario.has_value()) {
        scenario = *loaded.parsed.scenario;
    } else {
        throw rcause::validation_error(
            "MISSING_SCENARIO", "pass --scenario or embed a scenario in the model file");
    }
    if (options.seed.has_value()) scenario.seed = *options.seed;

    const rcause::Trajectory trajectory =
        rcause::run_scenario(loaded.parsed.sheaf, rule, baseline_of(loaded.parsed), scenario);
    const Json envelope =
        rcause::make_envelope("simulate", scenario.seed, loaded.inputs,
                              rcause::trajectory_to_json(loaded.parsed.sheaf, trajectory));
    const std::string summary =
        "simulated " + std::to_string(trajectory.sections.size() - 1) + " step(s), final residual " +
        std::to_string(trajectory.residuals.back()) + ", " +
        std::to_string(trajectory.events_applied.size()) + " event(s) applied";
    emit(options.out_path, envelope, summary);
    return 0;
}

rcause::InterventionSpec load_spec(const std::string& spec_path, const rcause::Sheaf& sheaf,
                                   std::vector<rcause::InputDigest>& inputs,
                                   const std::optional<std::uint64_t>& seed) {
    rcause::InterventionSpec spec;
    if (!spec_path.empty()) {
        spec = rcause::load_intervention_spec(spec_path, sheaf);
        inputs.push_back(rcause::digest_file(spec_path));
    }
    if (seed.has_value()) spec.seed = *seed;
    return spec;
}

int run_ei(const CommonOptions& options, const std::string& spec_path) {
    LoadedModel loaded = load(options);
    require_valid(loaded.parsed.sheaf);
    const rcause::UpdateRule& rule = require_rule(loaded.parsed);
    const rcause::InterventionSpec spec =
        load_spec(spec_path, loaded.parsed.sheaf, loaded.inputs, options.seed);

    const rcause::EIResult result =
        rcause::effective_information(loaded.parsed.sheaf, rule, baseline_of(loaded.parsed), spec);
    const Json envelope =
        rcause::make_envelope("ei", spec.seed, loaded.inputs,
                              rcause::ei_to_json(loaded.parsed.sheaf, spec, result));
    const std::string summary =
        "EI = " + format_bits(result.ei_bits) + " bits (determinism " +
        format_bits(result.determinism_bits) + ", degeneracy " +
        format_bits(result.degeneracy_bits) + ") over " +
        std::to_string(result.intervention_count) + " interventions" +
        (result.exact ? " [exact]" : " [sampled]");
    emit(options.out_path, envelope, summary);
    return 0;
}

int run_pairwise(const CommonOptions& options, const std::string& spec_path,
                 const std::string& format) {
    LoadedModel loaded = load(options);
    require_valid(loaded.parsed.sheaf);
    const rcause::UpdateRule& rule = require_rule(loaded.parsed);
    const rcause::InterventionSpec spec =
        load_spec(spec_path, loaded.parsed.sheaf, loaded.inputs, options.seed);

    const rcause::PairwiseResult result = rcause::pairwise_ei_matrix(
        loaded.parsed.sheaf, rule, baseline_of(loaded.parsed), spec, options.jobs);
    const std::string summary =
        "pairwise EI over " + std::to_string(loaded.parsed.sheaf.graph.node_count()) +
        " nodes" + (result.exact ? " [exact]" : " [sampled]");
    if (format == "csv") {
        write_output(options.out_path, rcause::pairwise_to_csv(loaded.parsed.sheaf, result),
                     summary);
    } else {
        emit(options.out_path,
             rcause::make_envelope("pairwise", spec.seed, loaded.inputs,
                                   rcause::pairwise_to_json(loaded.parsed.sheaf, result)),
             summary);
    }
    return 0;
}

int run_emerge(const CommonOptions& options, const std::string& spec_path,
               const std::string& grouping_path, const std::string& search,
               std::size_t limit, bool raw_score) {
    LoadedModel loaded = load(options);
    require_valid(loaded.parsed.sheaf);
    const rcause::UpdateRule& rule = require_rule(loaded.parsed);
    rcause::InterventionSpec spec =
        load_spec(spec_path, loaded.parsed.sheaf, loaded.inputs, options.seed);
    const rcause::Section baseline = baseline_of(loaded.parsed);
    const rcause::ScoreVariant variant =
        raw_score ? rcause::ScoreVariant::Raw : rcause::ScoreVariant::Normalized;
    const std::string variant_name = raw_score ? "raw" : "normalized";

    rcause::MacroGrouping grouping;
    double score = 0.0;
    std::vector<rcause::CandidateBlock> candidates;
    if (!grouping_path.empty()) {
        grouping = rcause::canonicalize_grouping(
            loaded.parsed.sheaf,
            rcause::load_grouping(grouping_path, loaded.parsed.sheaf));
        loaded.inputs.push_back(rcause::digest_file(grouping_path));
        const rcause::PairwiseResult pairwise = rcause::pairwise_ei_matrix(
            loaded.parsed.sheaf, rule, baseline, spec, options.jobs);
        score = rcause::grouping_score(pairwise, grouping, variant);
    } else {
        rcause::SearchOptions search_options;
        search_options.strategy = search == "greedy" ? rcause::SearchStrategy::Greedy
                                                     : rcause::SearchStrategy::Exhaustive;
        search_options.variant = variant;
        search_options.limit = limit;
        search_options.jobs = options.jobs;
        const rcause::SearchResult found = rcause::search_macro_nodes(
            loaded.parsed.sheaf, rule, baseline, spec, search_options);
        grouping = found.best;
        candidates = found.candidates;
        if (!candidates.empty()) {
            score = raw_score ? candidates[0].score_raw : candidates[0].score_normalized;
        }
    }

    const rcause::EmergenceResult result = rcause::causal_resilience_index(
        loaded.parsed.sheaf, rule, baseline, grouping, spec);
    const Json envelope = rcause::make_envelope(
        "emerge", spec.seed, loaded.inputs,
        rcause::emergence_to_json(loaded.parsed.sheaf, grouping, result, score, variant_name,
                                  candidates));
    const std::string summary =
        "r_cause = " + format_bits(result.r_cause_bits) + " bits (micro " +
        format_bits(result.micro.ei_bits) + ", macro " + format_bits(result.macro.ei_bits) + ")";
    emit(options.out_path, envelope, summary);
    return 0;
}

int run_generate(const std::string& out_path, const std::string& template_name,
                 std::uint64_t seed, std::size_t services, std::size_t branching,
                 std::size_t load_levels, std::size_t neurons, double connect_prob,
                 std::size_t threshold, std::size_t stations, std::size_t levels,
                 std::size_t cap) {
    rcause::DomainModel domain;
    if (template_name == "microservice") {
        domain = rcause::build_microservice(services, branching, load_levels);
    } else if (template_name == "neural") {
        domain = rcause::build_neural(neurons, connect_prob, threshold, seed);
    } else if (template_name == "powergrid") {
        domain = rcause::build_powergrid(stations, levels, cap);
    } else {
        throw rcause::parse_error("unknown template '" + template_name + "'");
    }

    // Generated files are model inputs, not reports, so instead of the
    // envelope they carry a meta block the model parser ignores.
    Json doc;
    doc["meta"] = {{"tool", rcause::kToolName},
                   {"version", rcause::kToolVersion},
                   {"template", template_name},
                   {"seed", seed}};
    const Json model = rcause::model_to_json(domain.sheaf, &domain.rule, &domain.initial,
                                             &domain.scripted);
    for (const auto& item : model.items()) doc[item.key()] = item.value();

    const std::string summary =
        "wrote " + template_name + " template: " +
        std::to_string(domain.sheaf.graph.node_count()) + " nodes, " +
        std::to_string(domain.sheaf.graph.edge_count()) + " edges";
    write_output(out_path, doc.dump(2) + "\n", summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sheaf-based failure modeling and causal emergence analysis"};
    app.require_subcommand(1);

    CommonOptions options;
    std::string scenario_path;
    std::string spec_path;
    std::string grouping_path;
    std::string search = "exhaustive";
    std::string format = "json";
    std::size_t section_limit = 4096;
    std::size_t candidate_limit = 10;
    bool raw_score = false;

    std::string template_name;
    std::size_t services = 3, branching = 1, load_levels = 1;
    std::size_t neurons = 4, threshold = 1;
    double connect_prob = 1.0;
    std::size_t stations = 4, levels = 1, cap = 1;

    auto add_common = [&](CLI::App* cmd, bool with_jobs) {
        cmd->add_option("--model", options.model_path, "model file")->required();
        cmd->add_option("--out", options.out_path, "write the report here instead of stdout");
        cmd->add_option("--seed", options.seed, "seed override");
        if (with_jobs) {
            cmd->add_option("--jobs", options.jobs, "worker threads")
                ->check(CLI::Range(1u, 256u));
        }
    };

    CLI::App* validate = app.add_subcommand("validate", "check a model file");
    add_common(validate, false);

    CLI::App* sections = app.add_subcommand("sections", "enumerate global sections");
    add_common(sections, false);
    sections->add_option("--limit", section_limit, "stop after this many sections");

    CLI::App* simulate = app.add_subcommand("simulate", "run a failure scenario");
    add_common(simulate, false);
    simulate->add_option("--scenario", scenario_path, "scenario file (defaults to the model's)");

    CLI::App* ei = app.add_subcommand("ei", "effective information of an intervention set");
    add_common(ei, true);
    ei->add_option("--spec", spec_path, "intervention spec file")->required();

    CLI::App* pairwise = app.add_subcommand("pairwise", "EI matrix over node pairs");
    add_common(pairwise, true);
    pairwise->add_option("--spec", spec_path, "intervention spec file");
    pairwise->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));

    CLI::App* emerge = app.add_subcommand("emerge", "macro grouping and causal resilience");
    add_common(emerge, true);
    emerge->add_option("--spec", spec_path, "intervention spec file");
    emerge->add_option("--grouping", grouping_path, "grouping file (skips the search)");
    emerge->add_option("--search", search, "exhaustive or greedy")
        ->check(CLI::IsMember({"exhaustive", "greedy"}));
    emerge->add_option("--limit", candidate_limit, "candidates to report");
    emerge->add_flag("--raw-score", raw_score, "rank by raw summed EI instead of per-pair mean");

    CLI::App* generate = app.add_subcommand("generate", "write a domain template model");
    generate->add_option("--template", template_name, "microservice, neural, or powergrid")
        ->required()
        ->check(CLI::IsMember({"microservice", "neural", "powergrid"}));
    generate->add_option("--out", options.out_path, "write the model here instead of stdout");
    generate->add_option("--seed", options.seed, "wiring seed (neural)");
    generate->add_option("--services", services, "microservice: node count");
    generate->add_option("--branching", branching, "microservice: children per service");
    generate->add_option("--load-levels", load_levels, "microservice: load levels per band");
    generate->add_option("--neurons", neurons, "neural: node count");
    generate->add_option("--connect-prob", connect_prob, "neural: wiring probability");
    generate->add_option("--threshold", threshold, "neural: inputs needed to fire");
    generate->add_option("--stations", stations, "powergrid: ring size (even)");
    generate->add_option("--levels", levels, "powergrid: injection range");
    generate->add_option("--cap", cap, "powergrid: line capacity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*validate) return run_validate(options);
        if (*sections) return run_sections(options, section_limit);
        if (*simulate) return run_simulate(options, scenario_path);
        if (*ei) return run_ei(options, spec_path);
        if (*pairwise) return run_pairwise(options, spec_path, format);
        if (*emerge) {
            return run_emerge(options, spec_path, grouping_path, search, candidate_limit,
                              raw_score);
        }
        if (*generate) {
            return run_generate(options.out_path, template_name, options.seed.value_or(0),
                                services, branching, load_levels, neurons, connect_prob,
                                threshold, stations, levels, cap);
        }
        return 5;
    } catch (const rcause::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rcause::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: INTERNAL_ERROR: " << e.what() << "\n";
        return 5;
    }
}
