#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cvs/scoring.hpp"

namespace cvs {

/// Low: ascending cvs_yes over the aligned pool (hard positives first).
/// High: descending cvs_yes over the aligned pool.
/// No: descending cvs_no over the whole pool, alignment filter not applied.
/// Random: seeded uniform draw without replacement over the whole pool.
enum class Strategy { Low, High, No, Random };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& token);  // throws ConfigError

/// Either an absolute count or a ratio of the scored pool resolved as
/// floor(ratio * N), minimum 1 for a non-empty pool.
struct Budget {
    enum class Kind { Count, Ratio };
    Kind kind = Kind::Count;
    std::int64_t count = 0;
    double ratio = 0.0;

    static Budget from_count(std::int64_t k);
    static Budget from_ratio(double r);
    void validate() const;                             // throws ConfigError
    std::size_t resolve(std::size_t pool_size) const;  // throws ConfigError
};

struct SelectionConfig {
    Strategy strategy = Strategy::Low;
    Budget budget;
    double yes_threshold = 0.0;
    double no_threshold = 0.0;
    std::uint64_t rng_seed = 0;  // Random only
};

struct SelectionResult {
    std::vector<std::string> selected_ids;     // in selection order
    std::map<std::string, int> mask;           // id -> 0/1 over the scored pool
    std::size_t pool_size = 0;
    std::size_t filtered_pool_size = 0;
    std::size_t budget_requested = 0;
    Strategy strategy_used = Strategy::Low;
    std::string scores_snapshot_ref;
    std::vector<std::string> warnings;
};

/// Keeps exactly the scores with cvs_yes > yes_threshold and
/// cvs_no < no_threshold (both strict), preserving input order.
std::vector<CvsScore> filter_aligned(std::span<const CvsScore> scores, double yes_threshold,
                                     double no_threshold);

/// Applies the strategy over the (possibly filtered) pool and truncates to
/// the budget. Ties break by ascending sample id, so results are invariant
/// to input order and selections nest across budgets.
SelectionResult select_subset(std::span<const CvsScore> scores, const SelectionConfig& config);

/// Fraction of the pool passing the alignment filter. Throws
/// std::domain_error on an empty pool.
double retention_fraction(std::span<const CvsScore> scores, double yes_threshold,
                          double no_threshold);

}  // namespace cvs
