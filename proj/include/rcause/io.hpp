#pragma once
// File formats and report serialization. Models, scenarios, intervention
// requests, and groupings are JSON; reports go out in a fixed envelope with
// input digests and all numbers rounded to 12 decimals so identical runs
// produce identical bytes.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcause/causal.hpp"
#include "rcause/domains.hpp"
#include "rcause/dynamics.hpp"
#include "rcause/emergence.hpp"
#include "rcause/model.hpp"

namespace rcause {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "rcause";
inline constexpr const char* kToolVersion = "0.1.0";

// A model file: sheaf plus optional update rule, initial section, and an
// embedded scenario (as written by the generate command).
struct ParsedModel {
    Sheaf sheaf;
    std::optional<UpdateRule> rule;
    std::optional<Section> initial;
    std::optional<ScenarioConfig> scenario;
};

// Parsing. All parsers throw PARSE_ERROR for malformed documents and
// validation errors for well-formed documents with bad contents.
ParsedModel parse_model(const Json& doc);
ParsedModel load_model(const std::string& path);

// Accepts either a bare scenario object or a document with a "scenario" key.
ScenarioConfig parse_scenario(const Json& doc, const Sheaf& sheaf);
ScenarioConfig load_scenario(const std::string& path, const Sheaf& sheaf);

InterventionSpec parse_intervention_spec(const Json& doc, const Sheaf& sheaf);
InterventionSpec load_intervention_spec(const std::string& path, const Sheaf& sheaf);

MacroGrouping parse_grouping(const Json& doc, const Sheaf& sheaf);
MacroGrouping load_grouping(const std::string& path, const Sheaf& sheaf);

// Serialization.
Json model_to_json(const Sheaf& sheaf, const UpdateRule* rule, const Section* initial,
                   const ScenarioConfig* scenario);
Json section_to_json(const Sheaf& sheaf, const Section& section);
Json validation_to_json(const Sheaf& sheaf, const ValidationReport& report);
Json sections_to_json(const Sheaf& sheaf, const SectionEnumeration& enumeration);
Json trajectory_to_json(const Sheaf& sheaf, const Trajectory& trajectory);
Json ei_to_json(const Sheaf& sheaf, const InterventionSpec& spec, const EIResult& result);
Json pairwise_to_json(const Sheaf& sheaf, const PairwiseResult& result);
std::string pairwise_to_csv(const Sheaf& sheaf, const PairwiseResult& result);
Json emergence_to_json(const Sheaf& sheaf, const MacroGrouping& grouping,
                       const EmergenceResult& result, double score, const std::string& variant,
                       const std::vector<CandidateBlock>& candidates);

// Report envelope: {tool, version, command, seed, inputs, report}.
struct InputDigest {
    std::string path;
    std::string digest;
};
Json make_envelope(const std::string& command, std::uint64_t seed,
                   const std::vector<InputDigest>& inputs, Json report);

// Utilities.
double round12(double value);
std::string fnv1a64_hex(const std::string& bytes);
std::string read_file(const std::string& path);  // PARSE_ERROR when unreadable
InputDigest digest_file(const std::string& path);
Json parse_json_text(const std::string& text, const std::string& origin);

// Default baseline when a model file carries no initial section: every node
// in state 0 with edges derived from tails.
Section default_initial(const Sheaf& sheaf);

}  // namespace rcause
