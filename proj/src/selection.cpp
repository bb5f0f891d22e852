#include "cvs/selection.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "cvs/errors.hpp"

namespace cvs {

namespace {

// Uniform draw in [0, n) with rejection sampling. mt19937_64 output is
// pinned by the standard, so permutations reproduce across platforms;
// std::uniform_int_distribution would not.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x < threshold);
    return x % n;
}

bool aligned(const CvsScore& score, double yes_threshold, double no_threshold) {
    return score.cvs_yes > yes_threshold && score.cvs_no < no_threshold;
}

}  // namespace

std::string to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Low: return "low";
        case Strategy::High: return "high";
        case Strategy::No: return "no";
        case Strategy::Random: return "random";
    }
    return "low";
}

Strategy strategy_from_string(const std::string& token) {
    if (token == "low") return Strategy::Low;
    if (token == "high") return Strategy::High;
    if (token == "no") return Strategy::No;
    if (token == "random") return Strategy::Random;
    throw ConfigError("unknown strategy \"" + token + "\" (expected low, high, no, or random)");
}

Budget Budget::from_count(std::int64_t k) {
    Budget b;
    b.kind = Kind::Count;
    b.count = k;
    return b;
}

Budget Budget::from_ratio(double r) {
    Budget b;
    b.kind = Kind::Ratio;
    b.ratio = r;
    return b;
}

void Budget::validate() const {
    if (kind == Kind::Count) {
        if (count <= 0) {
            throw ConfigError("budget count must be positive");
        }
    } else if (!(ratio > 0.0) || ratio > 1.0) {
        throw ConfigError("budget ratio must be in (0, 1]");
    }
}

std::size_t Budget::resolve(std::size_t pool_size) const {
    validate();
    if (kind == Kind::Count) {
        return static_cast<std::size_t>(count);
    }
    // floor of the exact product; the nudge absorbs the representation error
    // of decimal ratios so e.g. 0.15 of 186000 resolves to 27900, not 27899.
    const long double product = static_cast<long double>(ratio) * pool_size;
    const long double nudge = std::max<long double>(1e-9L, product * 1e-12L);
    auto k = static_cast<std::size_t>(std::floor(product + nudge));
    if (k == 0 && pool_size >= 1) {
        k = 1;
    }
    return k;
}

std::vector<CvsScore> filter_aligned(std::span<const CvsScore> scores, double yes_threshold,
                                     double no_threshold) {
    std::vector<CvsScore> kept;
    for (const auto& score : scores) {
        if (aligned(score, yes_threshold, no_threshold)) {
            kept.push_back(score);
        }
    }
    return kept;
}

double retention_fraction(std::span<const CvsScore> scores, double yes_threshold,
                          double no_threshold) {
    if (scores.empty()) {
        throw std::domain_error("retention_fraction of an empty pool");
    }
    std::size_t kept = 0;
    for (const auto& score : scores) {
        if (aligned(score, yes_threshold, no_threshold)) {
            ++kept;
        }
    }
    return static_cast<double>(kept) / static_cast<double>(scores.size());
}

SelectionResult select_subset(std::span<const CvsScore> scores, const SelectionConfig& config) {
    if (scores.empty()) {
        throw DataError("cannot select from an empty scored pool");
    }
    {
        std::unordered_set<std::string> seen;
        for (const auto& score : scores) {
            if (!std::isfinite(score.cvs_yes) || !std::isfinite(score.cvs_no)) {
                throw DataError("non-finite score for id \"" + score.sample_id + "\"");
            }
            if (!seen.insert(score.sample_id).second) {
                throw DataError("duplicate id \"" + score.sample_id + "\" in scored pool");
            }
        }
    }

    SelectionResult result;
    result.pool_size = scores.size();
    result.strategy_used = config.strategy;
    result.budget_requested = config.budget.resolve(scores.size());
    result.filtered_pool_size =
        filter_aligned(scores, config.yes_threshold, config.no_threshold).size();

    std::vector<std::string> order;
    switch (config.strategy) {
        case Strategy::Low:
        case Strategy::High: {
            std::vector<const CvsScore*> eligible;
            for (const auto& score : scores) {
                if (aligned(score, config.yes_threshold, config.no_threshold)) {
                    eligible.push_back(&score);
                }
            }
            if (eligible.empty()) {
                result.warnings.push_back(
                    "alignment filter removed every sample; selection is empty");
            }
            const bool ascending = config.strategy == Strategy::Low;
            std::sort(eligible.begin(), eligible.end(),
                      [ascending](const CvsScore* a, const CvsScore* b) {
                          if (a->cvs_yes != b->cvs_yes) {
                              return ascending ? a->cvs_yes < b->cvs_yes : a->cvs_yes > b->cvs_yes;
                          }
                          return a->sample_id < b->sample_id;
                      });
            for (const CvsScore* score : eligible) {
                order.push_back(score->sample_id);
            }
            break;
        }
        case Strategy::No: {
            std::vector<const CvsScore*> eligible;
            for (const auto& score : scores) {
                eligible.push_back(&score);
            }
            std::sort(eligible.begin(), eligible.end(), [](const CvsScore* a, const CvsScore* b) {
                if (a->cvs_no != b->cvs_no) {
                    return a->cvs_no > b->cvs_no;
                }
                return a->sample_id < b->sample_id;
            });
            for (const CvsScore* score : eligible) {
                order.push_back(score->sample_id);
            }
            break;
        }
        case Strategy::Random: {
            for (const auto& score : scores) {
                order.push_back(score.sample_id);
            }
            std::sort(order.begin(), order.end());
            std::mt19937_64 rng(config.rng_seed);
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                std::swap(order[i], order[bounded_draw(rng, i + 1)]);
            }
            break;
        }
    }

    const std::size_t take = std::min(result.budget_requested, order.size());
    if (take < result.budget_requested && !order.empty()) {
        result.warnings.push_back("budget " + std::to_string(result.budget_requested) +
                                  " exceeds eligible pool of " + std::to_string(order.size()) +
                                  "; selecting the whole eligible pool");
    }
    result.selected_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));

    for (const auto& score : scores) {
        result.mask[score.sample_id] = 0;
    }
    for (const auto& id : result.selected_ids) {
        result.mask[id] = 1;
    }
    return result;
}

}  // namespace cvs
