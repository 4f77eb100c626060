#pragma once

#include "rkbug/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

// Study configuration files are JSON documents:
//
//   {
//     "problem":  {"kind": "lyapunov", "n": 64, "theta": 1e-5, "t_final": 1.0},
//     "methods":  [{"stepper": "rk_bug", "tableau": "rk2m"}, ...],
//     "h_values": [0.001, 0.0005, ...],      strictly decreasing
//     "r_values": [5, 10],                   strictly increasing
//     "h_ref":    1e-5,                      optional, default min(h_values) / 10
//     "output":   "results",
//     "seed":     1,
//     "jobs":     1,
//     "record_runtime": true,
//     "tableaux": [{"name": "mine", "A": [[], [0.5]], "b": [0, 1], "c": [0, 0.5], "order": 2}]
//   }
//
// Missing keys take the defaults of default_study() for the given problem.
// Rows of "A" may list only their strictly lower entries.

namespace rkbug {

using Json = nlohmann::json;

/// Desk-scale defaults (or the full benchmark settings) for one problem.
StudyConfig default_study(ProblemKind kind, bool full = false);

/// Parses a configuration document; throws ConfigError on unknown keys or
/// mistyped values.
StudyConfig study_from_json(const Json& doc);

Json to_json(const StudyConfig& cfg);

Json tableau_to_json(const ButcherTableau& tab);
ButcherTableau tableau_from_json(const Json& doc);

StudyConfig load_study(const std::filesystem::path& path);

/// Writes through a temporary file and a rename so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Build version and platform description recorded in metadata sidecars.
Json build_metadata();

} // namespace rkbug
