// Python surface: every call takes and returns JSON text so the wrapper
// package can stay a thin json.loads shim over the same reports the CLI
// writes. Inline inputs are digested the same way files are.

#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rcause/causal.hpp"
#include "rcause/domains.hpp"
#include "rcause/dynamics.hpp"
#include "rcause/emergence.hpp"
#include "rcause/errors.hpp"
#include "rcause/io.hpp"

namespace py = pybind11;

namespace {

using rcause::Json;

rcause::InputDigest inline_digest(const std::string& name, const std::string& text) {
    return {"inline:" + name, rcause::fnv1a64_hex(text)};
}

rcause::ParsedModel parse_model_text(const std::string& text) {
    return rcause::parse_model(rcause::parse_json_text(text, "model"));
}

rcause::Section baseline_of(const rcause::ParsedModel& model) {
    return model.initial.has_value() ? *model.initial
                                     : rcause::default_initial(model.sheaf);
}

const rcause::UpdateRule& require_rule(const rcause::ParsedModel& model) {
    if (!model.rule.has_value()) {
        throw rcause::validation_error("MISSING_RULE", "model carries no 'rule' section");
    }
    return *model.rule;
}

rcause::InterventionSpec spec_of(const std::optional<std::string>& spec_text,
                                 const rcause::Sheaf& sheaf,
                                 std::vector<rcause::InputDigest>& inputs,
                                 const std::optional<std::uint64_t>& seed) {
    rcause::InterventionSpec spec;
    if (spec_text.has_value()) {
        spec = rcause::parse_intervention_spec(
            rcause::parse_json_text(*spec_text, "intervention spec"), sheaf);
        inputs.push_back(inline_digest("spec", *spec_text));
    }
    if (seed.has_value()) spec.seed = *seed;
    return spec;
}

std::string validate_text(const std::string& model_text) {
    const rcause::ParsedModel model = parse_model_text(model_text);
    const rcause::ValidationReport report = rcause::validate_sheaf(model.sheaf);
    return rcause::make_envelope("validate", 0, {inline_digest("model", model_text)},
                                 rcause::validation_to_json(model.sheaf, report))
        .dump(2);
}

std::string sections_text(const std::string& model_text, std::size_t limit) {
    const rcause::ParsedModel model = parse_model_text(model_text);
    return rcause::make_envelope(
               "sections", 0, {inline_digest("model", model_text)},
               rcause::sections_to_json(model.sheaf,
                                        rcause::enumerate_global_sections(model.sheaf, limit)))
        .dump(2);
}

std::string simulate_text(const std::string& model_text,
                          const std::optional<std::string>& scenario_text,
                          std::optional<std::uint64_t> seed) {
    const rcause::ParsedModel model = parse_model_text(model_text);
    std::vector<rcause::InputDigest> inputs = {inline_digest("model", model_text)};

    rcause::ScenarioConfig scenario;
    if (scenario_text.has_value()) {
        scenario = rcause::parse_scenario(rcause::parse_json_text(*scenario_text, "scenario"),
                                          model.sheaf);
        inputs.push_back(inline_digest("scenario", *scenario_text));
    } else if (model.scenario.has_value()) {
        scenario = *model.scenario;
    } else {
        throw rcause::validation_error("MISSING_SCENARIO",
                                       "pass a scenario or embed one in the model");
    }
    if (seed.has_value()) scenario.seed = *seed;

    const rcause::Trajectory trajectory =
        rcause::run_scenario(model.sheaf, require_rule(model), baseline_of(model), scenario);
    return rcause::make_envelope("simulate", scenario.seed, inputs,
                                 rcause::trajectory_to_json(model.sheaf, trajectory))
        .dump(2);
}

std::string ei_text(const std::string& model_text, const std::string& spec_text,
                    std::optional<std::uint64_t> seed) {
    const rcause::ParsedModel model = parse_model_text(model_text);
    std::vector<rcause::InputDigest> inputs = {inline_digest("model", model_text)};
    const rcause::InterventionSpec spec = spec_of(spec_text, model.sheaf, inputs, seed);
    const rcause::EIResult result = rcause::effective_information(
        model.sheaf, require_rule(model), baseline_of(model), spec);
    return rcause::make_envelope("ei", spec.seed, inputs,
                                 rcause::ei_to_json(model.sheaf, spec, result))
        .dump(2);
}

std::string pairwise_text(const std::string& model_text,
                          const std::optional<std::string>& spec_text,
                          std::optional<std::uint64_t> seed, unsigned jobs) {
    const rcause::ParsedModel model = parse_model_text(model_text);
    std::vector<rcause::InputDigest> inputs = {inline_digest("model", model_text)};
    const rcause::InterventionSpec spec = spec_of(spec_text, model.sheaf, inputs, seed);
    const rcause::PairwiseResult result = rcause::pairwise_ei_matrix(
        model.sheaf, require_rule(model), baseline_of(model), spec, jobs);
    return rcause::make_envelope("pairwise", spec.seed, inputs,
                                 rcause::pairwise_to_json(model.sheaf, result))
        .dump(2);
}

std::string emerge_text(const std::string& model_text,
                        const std::optional<std::string>& grouping_text,
                        const std::optional<std::string>& spec_text,
                        const std::string& search, std::optional<std::uint64_t> seed,
                        unsigned jobs) {
    const rcause::ParsedModel model = parse_model_text(model_text);
    std::vector<rcause::InputDigest> inputs = {inline_digest("model", model_text)};
    const rcause::InterventionSpec spec = spec_of(spec_text, model.sheaf, inputs, seed);
    const rcause::UpdateRule& rule = require_rule(model);
    const rcause::Section baseline = baseline_of(model);

    rcause::MacroGrouping grouping;
    double score = 0.0;
    std::vector<rcause::CandidateBlock> candidates;
    if (grouping_text.has_value()) {
        grouping = rcause::canonicalize_grouping(
            model.sheaf, rcause::parse_grouping(
                             rcause::parse_json_text(*grouping_text, "grouping"), model.sheaf));
        inputs.push_back(inline_digest("grouping", *grouping_text));
        score = rcause::grouping_score(
            rcause::pairwise_ei_matrix(model.sheaf, rule, baseline, spec, jobs), grouping,
            rcause::ScoreVariant::Normalized);
    } else {
        rcause::SearchOptions options;
        options.strategy = search == "greedy" ? rcause::SearchStrategy::Greedy
                                              : rcause::SearchStrategy::Exhaustive;
        options.jobs = jobs;
        const rcause::SearchResult found =
            rcause::search_macro_nodes(model.sheaf, rule, baseline, spec, options);
        grouping = found.best;
        candidates = found.candidates;
        if (!candidates.empty()) score = candidates[0].score_normalized;
    }

    const rcause::EmergenceResult result =
        rcause::causal_resilience_index(model.sheaf, rule, baseline, grouping, spec);
    return rcause::make_envelope(
               "emerge", spec.seed, inputs,
               rcause::emergence_to_json(model.sheaf, grouping, result, score, "normalized",
                                         candidates))
        .dump(2);
}

std::string generate_text(const std::string& template_name, std::size_t size,
                          std::uint64_t seed) {
    rcause::DomainModel domain;
    if (template_name == "microservice") {
        domain = rcause::build_microservice(size, 1, 1);
    } else if (template_name == "neural") {
        domain = rcause::build_neural(size, 1.0, 1, seed);
    } else if (template_name == "powergrid") {
        domain = rcause::build_powergrid(size, 1, 1);
    } else {
        throw rcause::parse_error("unknown template '" + template_name + "'");
    }
    return rcause::model_to_json(domain.sheaf, &domain.rule, &domain.initial, &domain.scripted)
        .dump(2);
}

}  // namespace

PYBIND11_MODULE(_rcause, m) {
    m.doc() = "sheaf-based failure modeling and causal emergence analysis";
    m.attr("__version__") = rcause::kToolVersion;

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const rcause::Error& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def("validate", &validate_text, py::arg("model"));
    m.def("sections", &sections_text, py::arg("model"), py::arg("limit") = 4096);
    m.def("simulate", &simulate_text, py::arg("model"), py::arg("scenario") = py::none(),
          py::arg("seed") = py::none());
    m.def("ei", &ei_text, py::arg("model"), py::arg("spec"), py::arg("seed") = py::none());
    m.def("pairwise", &pairwise_text, py::arg("model"), py::arg("spec") = py::none(),
          py::arg("seed") = py::none(), py::arg("jobs") = 1);
    m.def("emerge", &emerge_text, py::arg("model"), py::arg("grouping") = py::none(),
          py::arg("spec") = py::none(), py::arg("search") = "exhaustive",
          py::arg("seed") = py::none(), py::arg("jobs") = 1);
    m.def("generate", &generate_text, py::arg("template_name"), py::arg("size"),
          py::arg("seed") = 0);
}
