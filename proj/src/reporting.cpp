#include "cvs/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "cvs/errors.hpp"
#include "cvs/numeric.hpp"
#include "jsonl.hpp"

namespace cvs {

namespace {

using nlohmann::ordered_json;

double metric_value(const CvsScore& score, Metric metric) {
    return metric == Metric::CvsYes ? score.cvs_yes : score.cvs_no;
}

ordered_json quantiles_json(const Quantiles& q) {
    return ordered_json{{"min", q.min}, {"q25", q.q25}, {"median", q.median},
                        {"q75", q.q75}, {"max", q.max}};
}

}  // namespace

double compute_arp(std::span<const BenchmarkEntry> entries) {
    if (entries.empty()) {
        throw std::domain_error("ARP over zero benchmarks");
    }
    double sum = 0.0;
    for (const auto& entry : entries) {
        if (entry.full_score <= 0.0) {
            throw std::domain_error("benchmark \"" + entry.benchmark +
                                    "\" has non-positive full score");
        }
        if (entry.subset_score < 0.0) {
            throw std::domain_error("benchmark \"" + entry.benchmark +
                                    "\" has negative subset score");
        }
        sum += entry.subset_score / entry.full_score * 100.0;
    }
    return sum / static_cast<double>(entries.size());
}

std::vector<BenchmarkEntry> load_benchmark_results(const std::filesystem::path& path) {
    std::vector<BenchmarkEntry> entries;
    detail::for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("benchmark") ||
            !obj["benchmark"].is_string() || !obj.contains("subset_score") ||
            !obj["subset_score"].is_number() || !obj.contains("full_score") ||
            !obj["full_score"].is_number()) {
            throw DataError("benchmark results line " + std::to_string(line_no) +
                            ": expected {\"benchmark\",\"subset_score\",\"full_score\"}");
        }
        entries.push_back({obj["benchmark"].get<std::string>(),
                           obj["subset_score"].get<double>(), obj["full_score"].get<double>()});
    });
    return entries;
}

std::string to_string(Metric metric) {
    return metric == Metric::CvsYes ? "cvs_yes" : "cvs_no";
}

std::string ScoreHistogram::to_text() const {
    std::string out;
    out += "# metric: " + cvs::to_string(metric) + "\n";
    out += "# underflow: " + std::to_string(underflow) + "\n";
    out += "# overflow: " + std::to_string(overflow) + "\n";
    out += "# bin_left\tcount\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out += format_double(bin_edges[i]) + "\t" + std::to_string(counts[i]) + "\n";
    }
    return out;
}

ScoreHistogram histogram(std::span<const CvsScore> scores, Metric metric,
                         std::span<const double> bin_edges) {
    if (bin_edges.size() < 2) {
        throw ConfigError("histogram needs at least two bin edges");
    }
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
        if (!(bin_edges[i - 1] < bin_edges[i])) {
            throw ConfigError("histogram bin edges must be strictly increasing");
        }
    }

    ScoreHistogram hist;
    hist.metric = metric;
    hist.bin_edges.assign(bin_edges.begin(), bin_edges.end());
    hist.counts.assign(bin_edges.size() - 1, 0);
    for (const auto& score : scores) {
        const double value = metric_value(score, metric);
        if (!std::isfinite(value)) {
            continue;
        }
        if (value < hist.bin_edges.front()) {
            ++hist.underflow;
        } else if (value >= hist.bin_edges.back()) {
            ++hist.overflow;
        } else {
            // half-open bins [e_i, e_{i+1}): an edge value lands to its right
            auto it = std::upper_bound(hist.bin_edges.begin(), hist.bin_edges.end(), value);
            ++hist.counts[static_cast<std::size_t>(it - hist.bin_edges.begin()) - 1];
        }
    }
    return hist;
}

Quantiles compute_quantiles(std::span<const double> values) {
    if (values.empty()) {
        throw std::domain_error("quantiles of an empty set");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    auto at = [&](double p) {
        const double rank = p * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(rank));
        const auto hi = static_cast<std::size_t>(std::ceil(rank));
        const double frac = rank - static_cast<double>(lo);
        return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
    };

    Quantiles q;
    q.min = sorted.front();
    q.q25 = at(0.25);
    q.median = at(0.5);
    q.q75 = at(0.75);
    q.max = sorted.back();
    return q;
}

std::string RunSummary::to_text() const {
    std::ostringstream out;
    out << "pool size:            " << pool_size << "\n";
    out << "aligned (filtered):   " << filtered_pool_size << "\n";
    out << "retention fraction:   " << format_double(retention) << "\n";
    auto quantile_line = [&](const char* name, const Quantiles& q) {
        out << name << " quantiles: min=" << format_double(q.min) << " q25=" << format_double(q.q25)
            << " median=" << format_double(q.median) << " q75=" << format_double(q.q75)
            << " max=" << format_double(q.max) << "\n";
    };
    quantile_line("cvs_yes", cvs_yes);
    quantile_line("cvs_no ", cvs_no);
    if (selection) {
        out << "selection strategy:   " << cvs::to_string(selection->strategy_used) << "\n";
        out << "budget requested:     " << selection->budget_requested << "\n";
        out << "budget used:          " << selection->selected_ids.size() << "\n";
    } else {
        out << "selection:            (none)\n";
    }
    if (arp) {
        out << "ARP (unweighted, " << arp_benchmark_count << " benchmarks): " << format_double(*arp)
            << "\n";
    }
    return out.str();
}

ordered_json RunSummary::to_json() const {
    ordered_json doc;
    doc["pool_size"] = pool_size;
    doc["filtered_pool_size"] = filtered_pool_size;
    doc["retention_fraction"] = retention;
    doc["cvs_yes"] = quantiles_json(cvs_yes);
    doc["cvs_no"] = quantiles_json(cvs_no);
    if (selection) {
        doc["selection"] = ordered_json{{"strategy", cvs::to_string(selection->strategy_used)},
                                        {"budget_requested", selection->budget_requested},
                                        {"budget_effective", selection->selected_ids.size()}};
    } else {
        doc["selection"] = nullptr;
    }
    if (arp) {
        doc["arp"] = ordered_json{{"value", *arp},
                                  {"weighting", "unweighted"},
                                  {"benchmarks", arp_benchmark_count}};
    } else {
        doc["arp"] = nullptr;
    }
    return doc;
}

RunSummary summarize_run(std::span<const CvsScore> scores,
                         const std::optional<SelectionResult>& selection, double yes_threshold,
                         double no_threshold) {
    if (scores.empty()) {
        throw std::domain_error("cannot summarize an empty scored pool");
    }
    if (selection) {
        std::unordered_set<std::string> known;
        for (const auto& score : scores) {
            known.insert(score.sample_id);
        }
        std::string missing;
        for (const auto& id : selection->selected_ids) {
            if (!known.contains(id)) {
                missing += missing.empty() ? id : ", " + id;
            }
        }
        if (!missing.empty()) {
            throw DataError("selected ids missing from the scored pool: " + missing);
        }
    }

    RunSummary summary;
    summary.pool_size = scores.size();
    summary.filtered_pool_size = filter_aligned(scores, yes_threshold, no_threshold).size();
    summary.retention = retention_fraction(scores, yes_threshold, no_threshold);

    std::vector<double> yes_values;
    std::vector<double> no_values;
    yes_values.reserve(scores.size());
    no_values.reserve(scores.size());
    for (const auto& score : scores) {
        yes_values.push_back(score.cvs_yes);
        no_values.push_back(score.cvs_no);
    }
    summary.cvs_yes = compute_quantiles(yes_values);
    summary.cvs_no = compute_quantiles(no_values);
    summary.selection = selection;
    return summary;
}

}  // namespace cvs
