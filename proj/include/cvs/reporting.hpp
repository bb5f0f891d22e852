#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvs/scoring.hpp"
#include "cvs/selection.hpp"

namespace cvs {

struct BenchmarkEntry {
    std::string benchmark;
    double subset_score = 0.0;
    double full_score = 0.0;
};

/// Unweighted mean over benchmarks of (subset_score / full_score) * 100.
/// Throws std::domain_error on empty input or non-positive full scores.
double compute_arp(std::span<const BenchmarkEntry> entries);

/// JSONL: {"benchmark","subset_score","full_score"} per line.
std::vector<BenchmarkEntry> load_benchmark_results(const std::filesystem::path& path);

enum class Metric { CvsYes, CvsNo };

std::string to_string(Metric metric);

struct ScoreHistogram {
    Metric metric = Metric::CvsYes;
    std::vector<double> bin_edges;      // strictly increasing, length >= 2
    std::vector<std::size_t> counts;    // one per half-open bin [e_i, e_i+1)
    std::size_t underflow = 0;
    std::size_t overflow = 0;

    /// Plot-ready two-column text: bin left edge and count per line.
    std::string to_text() const;
};

ScoreHistogram histogram(std::span<const CvsScore> scores, Metric metric,
                         std::span<const double> bin_edges);

struct Quantiles {
    double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};

/// Linear-interpolation quantiles over the sorted values.
Quantiles compute_quantiles(std::span<const double> values);

struct RunSummary {
    std::size_t pool_size = 0;
    std::size_t filtered_pool_size = 0;
    double retention = 0.0;
    Quantiles cvs_yes;
    Quantiles cvs_no;
    std::optional<SelectionResult> selection;
    std::optional<double> arp;
    std::size_t arp_benchmark_count = 0;

    std::string to_text() const;
    nlohmann::ordered_json to_json() const;
};

/// Aggregates score distribution and selection usage. All selected ids must
/// be present in the scored pool; mismatches throw DataError naming them.
RunSummary summarize_run(std::span<const CvsScore> scores,
                         const std::optional<SelectionResult>& selection,
                         double yes_threshold = 0.0, double no_threshold = 0.0);

}  // namespace cvs
