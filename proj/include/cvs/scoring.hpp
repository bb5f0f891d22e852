#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cvs/evaluator.hpp"
#include "cvs/manifest.hpp"
#include "cvs/prompting.hpp"

namespace cvs {

/// Which prior context the denominator uses: Standard keeps the image,
/// NoVisualAnchor drops it and judges the answer text alone.
enum class ScoreVariant { Standard, NoVisualAnchor };

std::string to_string(ScoreVariant variant);
ScoreVariant score_variant_from_string(const std::string& token);  // throws ConfigError

enum class FailurePolicy { Skip, Strict };

/// Per-sample verdict-shift scores together with the four probabilities they
/// were derived from, so they can be re-derived and re-filtered without
/// re-querying.
struct CvsScore {
    std::string sample_id;
    double p_yes_full = 0.0;
    double p_no_full = 0.0;
    double p_yes_prior = 0.0;
    double p_no_prior = 0.0;
    double cvs_yes = 0.0;
    double cvs_no = 0.0;
    ScoreVariant variant = ScoreVariant::Standard;
};

/// Natural log of p_full/p_prior. Positive means the question raised the
/// verdict probability. Throws std::domain_error on non-positive inputs;
/// the extraction floor makes that unreachable in the pipeline.
double cvs_shift(double p_full, double p_prior);

/// Queries the evaluator exactly twice (full context plus the variant's
/// prior) and assembles the score.
CvsScore score_sample(const SampleRecord& sample, Evaluator& evaluator,
                      const PromptTemplateSet& templates, ScoreVariant variant);

struct ScoreFailure {
    std::string sample_id;
    std::string message;
};

struct ScorePoolOptions {
    ScoreVariant variant = ScoreVariant::Standard;
    /// Append-only JSONL cache; empty disables caching.
    std::filesystem::path cache_path;
    FailurePolicy failure_policy = FailurePolicy::Skip;
    int concurrency = 1;
};

struct ScorePoolResult {
    /// Scores in input record order; samples that failed under the skip
    /// policy are absent.
    std::vector<CvsScore> scores;
    std::size_t newly_scored = 0;
    std::size_t cache_hits = 0;
    std::vector<ScoreFailure> failures;
    std::vector<std::string> warnings;
};

/// Scores a pool with caching and resume. Already-cached ids are not
/// re-queried; cache lines whose recomputed scores disagree with the stored
/// ones are treated as corrupt and re-scored. New scores are appended to the
/// cache in input order, so reruns produce byte-identical cache files.
/// Fan-out across `concurrency` workers never affects output order.
ScorePoolResult score_pool(std::span<const SampleRecord> records, Evaluator& evaluator,
                           const PromptTemplateSet& templates, const ScorePoolOptions& options);

/// One parsed line of the score cache.
std::string cache_line_for(const CvsScore& score);

struct CacheLoadResult {
    std::vector<CvsScore> scores;  // last valid entry per id, file order of first occurrence
    std::vector<std::string> warnings;
};

/// Loads cache entries matching `variant`. Lines that fail to parse or fail
/// the recomputation check are reported as warnings and dropped.
CacheLoadResult load_score_cache(const std::filesystem::path& path, ScoreVariant variant);

}  // namespace cvs
