#include <chrono>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cvs/errors.hpp"
#include "cvs/pipeline.hpp"

namespace {

struct CliOptions {
    cvs::RunConfig config;
    std::string variant = "standard";
    std::string strategy;
    std::string failure_policy = "skip";
    std::string templates_path;
    std::string mock_table_path;
    std::string benchmarks_path;
    std::int64_t budget_count = 0;
    double budget_ratio = 0.0;
    long timeout_ms = 30000;
};

void add_common_flags(CLI::App* cmd, CliOptions& opts) {
    cmd->add_option("--manifest", opts.config.manifest_path, "Input manifest (JSONL)");
    cmd->add_option("--cache", opts.config.cache_path, "Score cache (JSONL, append-only)");
    cmd->add_option("--variant", opts.variant, "Prior context variant")
        ->check(CLI::IsMember({"standard", "no-visual-anchor"}))
        ->capture_default_str();
    cmd->add_option("--failure-policy", opts.failure_policy, "Per-sample failure handling")
        ->check(CLI::IsMember({"skip", "strict"}))
        ->capture_default_str();
}

void finalize(CliOptions& opts) {
    opts.config.variant = cvs::score_variant_from_string(opts.variant);
    opts.config.failure_policy =
        opts.failure_policy == "strict" ? cvs::FailurePolicy::Strict : cvs::FailurePolicy::Skip;
    if (!opts.templates_path.empty()) {
        opts.config.templates_path = opts.templates_path;
    }
    if (!opts.mock_table_path.empty()) {
        opts.config.mock_table_path = opts.mock_table_path;
    }
    if (!opts.benchmarks_path.empty()) {
        opts.config.benchmarks_path = opts.benchmarks_path;
    }
    if (opts.budget_count > 0) {
        opts.config.selection.budget = cvs::Budget::from_count(opts.budget_count);
    } else if (opts.budget_ratio > 0.0) {
        opts.config.selection.budget = cvs::Budget::from_ratio(opts.budget_ratio);
    }
    opts.config.evaluator.request_timeout = std::chrono::milliseconds(opts.timeout_ms);
    if (!opts.strategy.empty()) {
        opts.config.selection.strategy = cvs::strategy_from_string(opts.strategy);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verdict-shift data selection for visual instruction tuning"};
    app.require_subcommand(1);

    CliOptions opts;

    CLI::App* score = app.add_subcommand("score", "Score every manifest sample into the cache");
    add_common_flags(score, opts);
    score->add_option("--endpoint", opts.config.evaluator.endpoint,
                      "Inference endpoint (http[s]://host[:port][/path])");
    score->add_option("--model", opts.config.evaluator.model_name, "Evaluator model name");
    score->add_option("--templates", opts.templates_path, "Prompt template overrides (JSON)");
    score->add_option("--mock-table", opts.mock_table_path,
                      "Mock verdict table (JSONL); activates the mock evaluator");
    score->add_option("--concurrency", opts.config.concurrency_cap,
                      "Max in-flight evaluator requests")
        ->capture_default_str();
    score->add_option("--timeout-ms", opts.timeout_ms, "Per-request timeout in milliseconds")
        ->capture_default_str();
    score->add_option("--max-retries", opts.config.evaluator.max_retries,
                      "Retries per transient failure")
        ->capture_default_str();
    score->add_option("--top-logprobs", opts.config.evaluator.top_logprobs_requested,
                      "Top-k logprobs requested per token")
        ->capture_default_str();
    score->add_option("--probability-floor", opts.config.evaluator.probability_floor,
                      "Floor for absent verdict labels")
        ->capture_default_str();
    score->add_flag("--check-images", opts.config.check_images,
                    "Require local image files to exist at load time");

    CLI::App* select = app.add_subcommand("select", "Select a budgeted subset from cached scores");
    add_common_flags(select, opts);
    select->add_option("--out", opts.config.output_path, "Output manifest for the subset");
    select->add_option("--strategy", opts.strategy, "Ranking strategy")
        ->check(CLI::IsMember({"low", "high", "no", "random"}));
    auto* budget_count =
        select->add_option("--budget-count", opts.budget_count, "Absolute budget K");
    auto* budget_ratio =
        select->add_option("--budget-ratio", opts.budget_ratio, "Budget as a ratio in (0,1]");
    budget_count->excludes(budget_ratio);
    budget_ratio->excludes(budget_count);
    select->add_option("--yes-threshold", opts.config.selection.yes_threshold,
                       "Alignment filter: cvs_yes must exceed this")
        ->capture_default_str();
    select->add_option("--no-threshold", opts.config.selection.no_threshold,
                       "Alignment filter: cvs_no must fall below this")
        ->capture_default_str();
    select->add_option("--seed", opts.config.selection.rng_seed, "Seed for the random strategy")
        ->capture_default_str();

    CLI::App* stats = app.add_subcommand("stats", "Summarize cached scores");
    add_common_flags(stats, opts);
    stats->add_option("--out", opts.config.output_path, "Output directory for summary files");
    stats->add_option("--yes-threshold", opts.config.selection.yes_threshold,
                      "Alignment filter: cvs_yes must exceed this")
        ->capture_default_str();
    stats->add_option("--no-threshold", opts.config.selection.no_threshold,
                      "Alignment filter: cvs_no must fall below this")
        ->capture_default_str();
    stats->add_option("--benchmarks", opts.benchmarks_path,
                      "Benchmark results (JSONL) for the relative-performance summary");

    CLI::App* exp = app.add_subcommand("export", "Join manifest records with cached scores");
    add_common_flags(exp, opts);
    exp->add_option("--out", opts.config.output_path, "Output JSONL of records with scores");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        finalize(opts);
        if (score->parsed()) {
            cvs::cmd_score(opts.config, std::cout, std::cerr);
        } else if (select->parsed()) {
            if (opts.budget_count <= 0 && opts.budget_ratio <= 0.0) {
                throw cvs::ConfigError("select requires --budget-count or --budget-ratio");
            }
            cvs::cmd_select(opts.config, std::cout, std::cerr);
        } else if (stats->parsed()) {
            cvs::cmd_stats(opts.config, std::cout, std::cerr);
        } else if (exp->parsed()) {
            cvs::cmd_export(opts.config, std::cout, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cvs::exit_code_for_current_exception();
    }
    return 0;
}
