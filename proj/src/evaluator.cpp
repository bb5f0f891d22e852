#include "cvs/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "cvs/errors.hpp"
#include "cvs/numeric.hpp"
#include "jsonl.hpp"

namespace cvs {

namespace {

std::string trim_fold(const std::string& token) {
    std::string t = detail::trim_whitespace(token);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return t;
}

ContextKind context_from_string(const std::string& token, std::size_t line_no) {
    if (token == "full") return ContextKind::Full;
    if (token == "prior") return ContextKind::Prior;
    if (token == "text_prior") return ContextKind::TextPrior;
    throw DataError("mock table line " + std::to_string(line_no) + ": unknown context \"" + token +
                    "\" (expected full, prior, or text_prior)");
}

}  // namespace

void EvaluatorConfig::validate() const {
    if (probability_floor <= 0.0) {
        throw ConfigError("probability_floor must be positive");
    }
    if (top_logprobs_requested < 2) {
        throw ConfigError("top_logprobs_requested must be at least 2");
    }
    if (max_retries < 0) {
        throw ConfigError("max_retries must be non-negative");
    }
    if (request_timeout.count() <= 0) {
        throw ConfigError("request_timeout must be positive");
    }
    if (model_name.empty()) {
        throw ConfigError("model name must be set");
    }
}

std::pair<double, double> extract_yes_no_probs(std::span<const TokenLogprob> top_tokens,
                                               double floor) {
    double yes_sum = 0.0;
    double no_sum = 0.0;
    bool saw_yes = false;
    bool saw_no = false;
    for (const auto& entry : top_tokens) {
        const std::string folded = trim_fold(entry.token);
        if (folded == "yes") {
            yes_sum += std::exp(entry.logprob);
            saw_yes = true;
        } else if (folded == "no") {
            no_sum += std::exp(entry.logprob);
            saw_no = true;
        }
    }
    auto clamp01 = [floor](double p) { return std::min(1.0, std::max(floor, p)); };
    double p_yes = saw_yes ? clamp01(yes_sum) : floor;
    double p_no = saw_no ? clamp01(no_sum) : floor;
    return {p_yes, p_no};
}

MockEvaluator MockEvaluator::from_file(const std::filesystem::path& path, std::uint64_t seed,
                                       double floor) {
    MockEvaluator mock(seed, floor);
    detail::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            throw DataError("mock table line " + std::to_string(line_no) + ": not a JSON object");
        }
        if (!obj.contains("id") || !obj["id"].is_string() || !obj.contains("context") ||
            !obj["context"].is_string() || !obj.contains("p_yes") ||
            !obj["p_yes"].is_number() || !obj.contains("p_no") || !obj["p_no"].is_number()) {
            throw DataError("mock table line " + std::to_string(line_no) +
                            ": expected {\"id\",\"context\",\"p_yes\",\"p_no\"}");
        }
        double p_yes = obj["p_yes"].get<double>();
        double p_no = obj["p_no"].get<double>();
        if (p_yes < 0.0 || p_yes > 1.0 || p_no < 0.0 || p_no > 1.0) {
            throw DataError("mock table line " + std::to_string(line_no) +
                            ": probabilities must be in [0, 1]");
        }
        mock.set_entry(obj["id"].get<std::string>(),
                       context_from_string(obj["context"].get<std::string>(), line_no), p_yes,
                       p_no);
    });
    return mock;
}

void MockEvaluator::set_entry(const std::string& sample_id, ContextKind kind, double p_yes,
                              double p_no) {
    table_[{sample_id, kind}] = {p_yes, p_no};
}

VerdictProbs MockEvaluator::judge(const SampleRecord& sample, const RenderedPrompt& prompt) {
    calls_.fetch_add(1, std::memory_order_relaxed);

    double p_yes;
    double p_no;
    auto it = table_.find({sample.id, prompt.context_kind});
    if (it != table_.end()) {
        p_yes = it->second.first;
        p_no = it->second.second;
    } else {
        // Seed-stable fallback: a pure function of (id, context, seed).
        std::uint64_t h = fnv1a64(sample.id);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(to_string(prompt.context_kind), h);
        h ^= seed_;
        const double u1 = hash_to_unit(mix64(h));
        const double u2 = hash_to_unit(mix64(h + 1));
        p_yes = floor_ + u1 * (1.0 - floor_);
        p_no = floor_ + u2 * std::max(0.0, 1.0 - p_yes - floor_);
    }

    VerdictProbs verdict;
    verdict.p_yes = std::max(p_yes, floor_);
    verdict.p_no = std::max(p_no, floor_);
    verdict.context_kind = prompt.context_kind;
    verdict.raw_token_evidence = {{"Yes", std::log(verdict.p_yes)},
                                  {"No", std::log(verdict.p_no)}};
    return verdict;
}

}  // namespace cvs
