#include "cvs/pipeline.hpp"

#include <fstream>
#include <memory>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "cvs/errors.hpp"
#include "cvs/http_evaluator.hpp"
#include "cvs/manifest.hpp"
#include "cvs/reporting.hpp"

namespace cvs {

namespace {

using nlohmann::ordered_json;

void require_distinct_outputs(const RunConfig& config) {
    auto same = [](const std::filesystem::path& a, const std::filesystem::path& b) {
        return !a.empty() && !b.empty() && a.lexically_normal() == b.lexically_normal();
    };
    if (same(config.cache_path, config.manifest_path)) {
        throw ConfigError("cache path must differ from the manifest path");
    }
    if (same(config.output_path, config.manifest_path) ||
        same(config.output_path, config.cache_path)) {
        throw ConfigError("output path must differ from input paths");
    }
}

PromptTemplateSet resolve_templates(const RunConfig& config) {
    if (config.templates_path) {
        return PromptTemplateSet::load(*config.templates_path);
    }
    auto templates = PromptTemplateSet::defaults();
    templates.validate();
    return templates;
}

std::unique_ptr<Evaluator> build_evaluator(const RunConfig& config) {
    if (config.mock_table_path) {
        return std::make_unique<MockEvaluator>(MockEvaluator::from_file(
            *config.mock_table_path, MockEvaluator::kDefaultSeed,
            config.evaluator.probability_floor));
    }
    if (config.evaluator.endpoint.empty()) {
        throw ConfigError("either --endpoint or --mock-table is required for scoring");
    }
    parse_endpoint(config.evaluator.endpoint);
    config.evaluator.validate();
    return std::make_unique<HttpEvaluator>(config.evaluator, config.concurrency_cap);
}

struct CoverageResult {
    std::vector<CvsScore> scores;  // manifest order
    std::vector<std::string> missing_ids;
};

CoverageResult scores_for_manifest(const std::vector<SampleRecord>& records,
                                   const std::filesystem::path& cache_path, ScoreVariant variant,
                                   FailurePolicy policy) {
    CacheLoadResult cache = load_score_cache(cache_path, variant);
    std::unordered_map<std::string, const CvsScore*> by_id;
    for (const auto& score : cache.scores) {
        by_id[score.sample_id] = &score;
    }

    CoverageResult result;
    for (const auto& record : records) {
        if (auto it = by_id.find(record.id); it != by_id.end()) {
            result.scores.push_back(*it->second);
        } else {
            result.missing_ids.push_back(record.id);
        }
    }
    if (!result.missing_ids.empty() && policy == FailurePolicy::Strict) {
        std::string joined;
        for (const auto& id : result.missing_ids) {
            joined += joined.empty() ? id : ", " + id;
        }
        throw DataError("cache is missing scores for " +
                        std::to_string(result.missing_ids.size()) + " id(s): " + joined);
    }
    return result;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open for writing: " + path.string());
    }
    out << content;
    out.flush();
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

std::vector<double> default_histogram_edges() {
    // Unit-width bins spanning beyond the floored score range (about +/-23).
    std::vector<double> edges;
    for (int e = -24; e <= 24; ++e) {
        edges.push_back(static_cast<double>(e));
    }
    return edges;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
    for (const auto& warning : warnings) {
        err << "warning: " << warning << "\n";
    }
}

}  // namespace

std::filesystem::path selection_report_path_for(const std::filesystem::path& output_manifest) {
    std::filesystem::path report = output_manifest;
    report += ".selection.json";
    return report;
}

void cmd_score(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (config.manifest_path.empty()) throw ConfigError("--manifest is required");
    if (config.cache_path.empty()) throw ConfigError("--cache is required");
    if (config.concurrency_cap < 1) throw ConfigError("--concurrency must be at least 1");
    if (config.evaluator.probability_floor <= 0.0) {
        throw ConfigError("probability_floor must be positive");
    }
    require_distinct_outputs(config);
    const PromptTemplateSet templates = resolve_templates(config);
    auto evaluator = build_evaluator(config);

    ManifestData manifest = load_manifest(config.manifest_path, {config.check_images});
    print_warnings(manifest.warnings, err);

    ScorePoolOptions options;
    options.variant = config.variant;
    options.cache_path = config.cache_path;
    options.failure_policy = config.failure_policy;
    options.concurrency = config.concurrency_cap;

    ScorePoolResult result = score_pool(manifest.records, *evaluator, templates, options);
    print_warnings(result.warnings, err);
    for (const auto& failure : result.failures) {
        err << "failed: id=" << failure.sample_id << ": " << failure.message << "\n";
    }
    out << "scored=" << result.newly_scored << " cached=" << result.cache_hits
        << " failed=" << result.failures.size() << "\n";
}

void cmd_select(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (config.manifest_path.empty()) throw ConfigError("--manifest is required");
    if (config.cache_path.empty()) throw ConfigError("--cache is required");
    if (config.output_path.empty()) throw ConfigError("--out is required");
    config.selection.budget.validate();
    require_distinct_outputs(config);

    ManifestData manifest = load_manifest(config.manifest_path);
    print_warnings(manifest.warnings, err);

    CoverageResult coverage = scores_for_manifest(manifest.records, config.cache_path,
                                                  config.variant, config.failure_policy);
    if (!coverage.missing_ids.empty()) {
        err << "warning: " << coverage.missing_ids.size()
            << " manifest id(s) have no cached score and are skipped\n";
    }

    SelectionResult result = select_subset(coverage.scores, config.selection);
    result.scores_snapshot_ref = config.cache_path.string();
    print_warnings(result.warnings, err);

    std::unordered_map<std::string, const SampleRecord*> record_by_id;
    for (const auto& record : manifest.records) {
        record_by_id[record.id] = &record;
    }
    std::vector<SampleRecord> selected;
    selected.reserve(result.selected_ids.size());
    for (const auto& id : result.selected_ids) {
        selected.push_back(*record_by_id.at(id));
    }
    write_manifest(selected, config.output_path);

    const double retention = result.pool_size == 0
                                 ? 0.0
                                 : static_cast<double>(result.filtered_pool_size) /
                                       static_cast<double>(result.pool_size);
    ordered_json report;
    report["strategy"] = to_string(result.strategy_used);
    report["budget_requested"] = result.budget_requested;
    report["budget_effective"] = result.selected_ids.size();
    report["pool_size"] = result.pool_size;
    report["filtered_pool_size"] = result.filtered_pool_size;
    report["retention_fraction"] = retention;
    if (config.selection.strategy == Strategy::Random) {
        report["rng_seed"] = config.selection.rng_seed;
    } else {
        report["rng_seed"] = nullptr;
    }
    write_text_file(selection_report_path_for(config.output_path), report.dump(2) + "\n");

    out << "selected=" << result.selected_ids.size() << " pool=" << result.pool_size
        << " filtered=" << result.filtered_pool_size << " -> " << config.output_path.string()
        << "\n";
}

void cmd_stats(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (config.cache_path.empty()) throw ConfigError("--cache is required");
    if (config.output_path.empty()) throw ConfigError("--out is required");

    CacheLoadResult cache = load_score_cache(config.cache_path, config.variant);
    print_warnings(cache.warnings, err);
    if (cache.scores.empty()) {
        throw DataError("score cache is empty: " + config.cache_path.string());
    }

    RunSummary summary =
        summarize_run(cache.scores, std::nullopt, config.selection.yes_threshold,
                      config.selection.no_threshold);
    if (config.benchmarks_path) {
        auto entries = load_benchmark_results(*config.benchmarks_path);
        summary.arp = compute_arp(entries);
        summary.arp_benchmark_count = entries.size();
    }

    std::filesystem::create_directories(config.output_path);
    write_text_file(config.output_path / "summary.json", summary.to_json().dump(2) + "\n");
    const auto edges = default_histogram_edges();
    write_text_file(config.output_path / "histogram_cvs_yes.txt",
                    histogram(cache.scores, Metric::CvsYes, edges).to_text());
    write_text_file(config.output_path / "histogram_cvs_no.txt",
                    histogram(cache.scores, Metric::CvsNo, edges).to_text());

    out << summary.to_text();
}

void cmd_export(const RunConfig& config, std::ostream& out, std::ostream& err) {
    if (config.manifest_path.empty()) throw ConfigError("--manifest is required");
    if (config.cache_path.empty()) throw ConfigError("--cache is required");
    if (config.output_path.empty()) throw ConfigError("--out is required");
    require_distinct_outputs(config);

    ManifestData manifest = load_manifest(config.manifest_path);
    print_warnings(manifest.warnings, err);

    CoverageResult coverage = scores_for_manifest(manifest.records, config.cache_path,
                                                  config.variant, config.failure_policy);
    std::unordered_map<std::string, const CvsScore*> score_by_id;
    for (const auto& score : coverage.scores) {
        score_by_id[score.sample_id] = &score;
    }

    std::ofstream file(config.output_path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw DataError("cannot open for writing: " + config.output_path.string());
    }
    std::size_t exported = 0;
    for (const auto& record : manifest.records) {
        auto it = score_by_id.find(record.id);
        if (it == score_by_id.end()) {
            continue;
        }
        const CvsScore& score = *it->second;
        ordered_json obj;
        obj["id"] = record.id;
        obj["image"] = record.image_path;
        obj["question"] = record.question;
        obj["answer"] = record.answer;
        for (auto& [key, value] : record.extra.items()) {
            obj[key] = value;
        }
        obj["variant"] = to_string(score.variant);
        obj["p_yes_full"] = score.p_yes_full;
        obj["p_no_full"] = score.p_no_full;
        obj["p_yes_prior"] = score.p_yes_prior;
        obj["p_no_prior"] = score.p_no_prior;
        obj["cvs_yes"] = score.cvs_yes;
        obj["cvs_no"] = score.cvs_no;
        file << obj.dump() << '\n';
        ++exported;
    }
    file.flush();
    if (!file) {
        throw DataError("write failed: " + config.output_path.string());
    }
    out << "exported=" << exported << " of pool=" << manifest.records.size() << " -> "
        << config.output_path.string() << "\n";
}

int exit_code_for_current_exception() {
    try {
        throw;
    } catch (const ConfigError&) {
        return 2;
    } catch (const TransportError&) {
        return 4;
    } catch (const DataError&) {
        return 3;
    } catch (const std::domain_error&) {
        return 3;
    } catch (const std::exception&) {
        return 1;
    }
}

}  // namespace cvs
