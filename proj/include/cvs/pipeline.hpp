#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cvs/evaluator.hpp"
#include "cvs/scoring.hpp"
#include "cvs/selection.hpp"

namespace cvs {

/// Everything a subcommand needs, mirrored one-to-one from CLI flags.
struct RunConfig {
    std::filesystem::path manifest_path;
    std::filesystem::path cache_path;
    std::filesystem::path output_path;
    EvaluatorConfig evaluator;
    std::optional<std::filesystem::path> templates_path;
    ScoreVariant variant = ScoreVariant::Standard;
    SelectionConfig selection;
    int concurrency_cap = 4;
    FailurePolicy failure_policy = FailurePolicy::Skip;
    std::optional<std::filesystem::path> mock_table_path;
    std::optional<std::filesystem::path> benchmarks_path;
    bool check_images = false;
};

/// Scores every manifest record into the cache. Idempotent across reruns;
/// prints scored/cached/failed counts.
void cmd_score(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Filters, ranks, and writes the selected-subset manifest plus the
/// selection report sidecar (<output>.selection.json).
void cmd_select(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Writes the run summary and histogram files into the output directory and
/// prints the human-readable summary.
void cmd_stats(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Joins manifest records with their cached scores into one JSONL file.
void cmd_export(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Maps an in-flight exception to the process exit code contract:
/// 2 configuration, 3 data, 4 transport, 1 anything else.
int exit_code_for_current_exception();

/// Path of the selection report written next to an output manifest.
std::filesystem::path selection_report_path_for(const std::filesystem::path& output_manifest);

}  // namespace cvs
