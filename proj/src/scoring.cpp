#include "cvs/scoring.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <variant>

#include <json.hpp>

#include "cvs/errors.hpp"
#include "cvs/numeric.hpp"
#include "jsonl.hpp"

namespace cvs {

namespace {

// Tolerance for the recomputation check on cache load. Stored probabilities
// round-trip exactly, so any real disagreement means the line was edited or
// written by a different formula.
constexpr double kRecomputeTolerance = 1e-9;

bool close_enough(double a, double b) {
    return std::abs(a - b) <= kRecomputeTolerance * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

std::string to_string(ScoreVariant variant) {
    return variant == ScoreVariant::Standard ? "standard" : "no-visual-anchor";
}

ScoreVariant score_variant_from_string(const std::string& token) {
    if (token == "standard") return ScoreVariant::Standard;
    if (token == "no-visual-anchor") return ScoreVariant::NoVisualAnchor;
    throw ConfigError("unknown variant \"" + token + "\" (expected standard or no-visual-anchor)");
}

double cvs_shift(double p_full, double p_prior) {
    if (p_full <= 0.0 || p_prior <= 0.0) {
        throw std::domain_error("cvs_shift requires probabilities in (0, 1]");
    }
    return std::log(p_full) - std::log(p_prior);
}

CvsScore score_sample(const SampleRecord& sample, Evaluator& evaluator,
                      const PromptTemplateSet& templates, ScoreVariant variant) {
    const RenderedPrompt full_prompt = render_full(sample, templates);
    const RenderedPrompt prior_prompt =
        render_prior(sample, templates,
                     variant == ScoreVariant::Standard ? PriorVariant::WithImage
                                                       : PriorVariant::TextOnly);

    const VerdictProbs full = evaluator.judge(sample, full_prompt);
    const VerdictProbs prior = evaluator.judge(sample, prior_prompt);

    CvsScore score;
    score.sample_id = sample.id;
    score.p_yes_full = full.p_yes;
    score.p_no_full = full.p_no;
    score.p_yes_prior = prior.p_yes;
    score.p_no_prior = prior.p_no;
    score.cvs_yes = cvs_shift(full.p_yes, prior.p_yes);
    score.cvs_no = cvs_shift(full.p_no, prior.p_no);
    score.variant = variant;
    return score;
}

std::string cache_line_for(const CvsScore& score) {
    std::string line = "{\"id\":";
    line += nlohmann::json(score.sample_id).dump();
    line += ",\"variant\":\"" + to_string(score.variant) + "\"";
    line += ",\"p_yes_full\":" + format_double(score.p_yes_full);
    line += ",\"p_no_full\":" + format_double(score.p_no_full);
    line += ",\"p_yes_prior\":" + format_double(score.p_yes_prior);
    line += ",\"p_no_prior\":" + format_double(score.p_no_prior);
    line += ",\"cvs_yes\":" + format_double(score.cvs_yes);
    line += ",\"cvs_no\":" + format_double(score.cvs_no);
    line += "}";
    return line;
}

CacheLoadResult load_score_cache(const std::filesystem::path& path, ScoreVariant variant) {
    CacheLoadResult result;
    if (path.empty() || !std::filesystem::exists(path)) {
        return result;
    }

    std::unordered_map<std::string, std::size_t> index_of_id;
    detail::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            // Torn tail lines from interrupted runs land here; the sample is
            // simply re-scored.
            result.warnings.push_back("cache line " + std::to_string(line_no) +
                                      ": unparseable, ignored");
            return;
        }
        const char* numeric_keys[] = {"p_yes_full", "p_no_full", "p_yes_prior",
                                      "p_no_prior", "cvs_yes",   "cvs_no"};
        if (!obj.contains("id") || !obj["id"].is_string() || !obj.contains("variant") ||
            !obj["variant"].is_string()) {
            result.warnings.push_back("cache line " + std::to_string(line_no) +
                                      ": missing id/variant, ignored");
            return;
        }
        for (const char* key : numeric_keys) {
            if (!obj.contains(key) || !obj[key].is_number()) {
                result.warnings.push_back("cache line " + std::to_string(line_no) +
                                          ": missing numeric field " + key + ", ignored");
                return;
            }
        }
        if (obj["variant"].get<std::string>() != to_string(variant)) {
            return;  // other variant's entries live in the same cache file
        }

        CvsScore score;
        score.sample_id = obj["id"].get<std::string>();
        score.p_yes_full = obj["p_yes_full"].get<double>();
        score.p_no_full = obj["p_no_full"].get<double>();
        score.p_yes_prior = obj["p_yes_prior"].get<double>();
        score.p_no_prior = obj["p_no_prior"].get<double>();
        score.cvs_yes = obj["cvs_yes"].get<double>();
        score.cvs_no = obj["cvs_no"].get<double>();
        score.variant = variant;

        if (score.p_yes_full <= 0.0 || score.p_yes_prior <= 0.0 || score.p_no_full <= 0.0 ||
            score.p_no_prior <= 0.0 ||
            !close_enough(score.cvs_yes, cvs_shift(score.p_yes_full, score.p_yes_prior)) ||
            !close_enough(score.cvs_no, cvs_shift(score.p_no_full, score.p_no_prior))) {
            result.warnings.push_back("cache line " + std::to_string(line_no) + ": stored scores for \"" +
                                      score.sample_id +
                                      "\" disagree with recomputation, treated as corrupt");
            return;
        }

        auto [it, inserted] = index_of_id.emplace(score.sample_id, result.scores.size());
        if (inserted) {
            result.scores.push_back(std::move(score));
        } else {
            result.scores[it->second] = std::move(score);  // last valid entry wins
        }
    });
    return result;
}

ScorePoolResult score_pool(std::span<const SampleRecord> records, Evaluator& evaluator,
                           const PromptTemplateSet& templates, const ScorePoolOptions& options) {
    if (options.concurrency < 1) {
        throw ConfigError("concurrency must be at least 1");
    }
    templates.validate();

    ScorePoolResult result;

    CacheLoadResult cache = load_score_cache(options.cache_path, options.variant);
    result.warnings = std::move(cache.warnings);
    std::unordered_map<std::string, const CvsScore*> cached;
    for (const auto& score : cache.scores) {
        cached[score.sample_id] = &score;
    }

    // Indices of records that still need the evaluator.
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!cached.contains(records[i].id)) {
            pending.push_back(i);
        }
    }

    std::ofstream cache_out;
    if (!options.cache_path.empty() && !pending.empty()) {
        cache_out.open(options.cache_path, std::ios::binary | std::ios::app);
        if (!cache_out) {
            throw DataError("cannot open score cache for append: " + options.cache_path.string());
        }
    }

    using Outcome = std::variant<CvsScore, ScoreFailure>;
    std::vector<std::optional<Outcome>> outcomes(pending.size());
    std::vector<std::exception_ptr> causes(pending.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex m;
    std::condition_variable cv;

    auto worker = [&] {
        while (!stop.load(std::memory_order_relaxed)) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= pending.size()) {
                break;
            }
            const SampleRecord& record = records[pending[slot]];
            Outcome outcome;
            try {
                outcome = score_sample(record, evaluator, templates, options.variant);
            } catch (const std::exception& e) {
                outcome = ScoreFailure{record.id, e.what()};
                causes[slot] = std::current_exception();
                if (options.failure_policy == FailurePolicy::Strict) {
                    stop.store(true, std::memory_order_relaxed);
                }
            }
            {
                std::lock_guard lock(m);
                outcomes[slot] = std::move(outcome);
            }
            cv.notify_one();
        }
    };

    const std::size_t worker_count =
        std::min<std::size_t>(static_cast<std::size_t>(options.concurrency), pending.size());
    std::vector<std::thread> workers;
    workers.reserve(worker_count);
    for (std::size_t i = 0; i < worker_count; ++i) {
        workers.emplace_back(worker);
    }

    // Completed slots are drained strictly in input order so the cache file
    // is byte-stable regardless of worker scheduling.
    std::unordered_map<std::string, CvsScore> fresh;
    std::exception_ptr strict_cause;
    for (std::size_t cursor = 0; cursor < pending.size(); ++cursor) {
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return outcomes[cursor].has_value(); });
        Outcome outcome = std::move(*outcomes[cursor]);
        lock.unlock();

        if (auto* score = std::get_if<CvsScore>(&outcome)) {
            if (cache_out.is_open()) {
                cache_out << cache_line_for(*score) << '\n';
                cache_out.flush();
            }
            fresh.emplace(score->sample_id, std::move(*score));
            ++result.newly_scored;
        } else {
            result.failures.push_back(std::get<ScoreFailure>(outcome));
            if (options.failure_policy == FailurePolicy::Strict) {
                strict_cause = causes[cursor];
                break;
            }
        }
    }

    stop.store(true, std::memory_order_relaxed);
    for (auto& t : workers) {
        t.join();
    }

    if (strict_cause) {
        std::rethrow_exception(strict_cause);
    }

    for (const auto& record : records) {
        if (auto it = cached.find(record.id); it != cached.end()) {
            result.scores.push_back(*it->second);
            ++result.cache_hits;
        } else if (auto fit = fresh.find(record.id); fit != fresh.end()) {
            result.scores.push_back(fit->second);
        }
    }
    return result;
}

}  // namespace cvs
