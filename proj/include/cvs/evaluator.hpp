#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvs/manifest.hpp"
#include "cvs/prompting.hpp"

namespace cvs {

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
};

/// Raw evaluator verdict for one prompt context. p_yes and p_no come straight
/// from the first-token distribution; they may sum to less than 1 and are
/// never renormalized.
struct VerdictProbs {
    double p_yes = 0.0;
    double p_no = 0.0;
    ContextKind context_kind = ContextKind::Full;
    std::vector<TokenLogprob> raw_token_evidence;
};

struct EvaluatorConfig {
    std::string endpoint;
    std::string model_name;
    int top_logprobs_requested = 20;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 2;
    double probability_floor = 1e-10;

    void validate() const;  // throws ConfigError
};

/// Sums exp(logprob) over tokens whose trimmed, case-folded text equals
/// "yes" (respectively "no"). A label absent from the list gets `floor`;
/// results are clamped to [floor, 1] so downstream log ratios stay finite.
std::pair<double, double> extract_yes_no_probs(std::span<const TokenLogprob> top_tokens,
                                               double floor);

/// A frozen judge of answer validity. Implementations must be safe to call
/// from many worker threads at once.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual VerdictProbs judge(const SampleRecord& sample, const RenderedPrompt& prompt) = 0;
};

/// Deterministic in-process evaluator. Tabled (id, context) pairs return
/// their configured probabilities; everything else falls back to
/// pseudo-random probabilities derived from a seed-stable hash, so results
/// are identical across process restarts.
class MockEvaluator : public Evaluator {
public:
    static constexpr std::uint64_t kDefaultSeed = 0xc3d5a7e91b2f4d68ULL;

    explicit MockEvaluator(std::uint64_t seed = kDefaultSeed, double floor = 1e-10)
        : seed_(seed), floor_(floor) {}

    MockEvaluator(MockEvaluator&& other) noexcept
        : table_(std::move(other.table_)),
          seed_(other.seed_),
          floor_(other.floor_),
          calls_(other.calls_.load()) {}

    /// JSONL table: {"id","context","p_yes","p_no"} per line, context one of
    /// "full", "prior", "text_prior". Throws DataError naming the bad line.
    static MockEvaluator from_file(const std::filesystem::path& path,
                                   std::uint64_t seed = kDefaultSeed, double floor = 1e-10);

    void set_entry(const std::string& sample_id, ContextKind kind, double p_yes, double p_no);

    VerdictProbs judge(const SampleRecord& sample, const RenderedPrompt& prompt) override;

    /// Total judge() invocations, for call-count contracts in tests.
    std::uint64_t calls() const { return calls_.load(); }

private:
    std::map<std::pair<std::string, ContextKind>, std::pair<double, double>> table_;
    std::uint64_t seed_;
    double floor_;
    std::atomic<std::uint64_t> calls_{0};
};

}  // namespace cvs
