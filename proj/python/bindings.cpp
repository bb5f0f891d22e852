#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cvs/errors.hpp"
#include "cvs/evaluator.hpp"
#include "cvs/manifest.hpp"
#include "cvs/prompting.hpp"
#include "cvs/reporting.hpp"
#include "cvs/scoring.hpp"
#include "cvs/selection.hpp"

namespace py = pybind11;

PYBIND11_MODULE(cvs_select, m) {
    m.doc() = "Verdict-shift scoring and budgeted subset selection for "
              "visual instruction tuning datasets";
    m.attr("__version__") = "0.1.0";

    py::register_exception<cvs::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<cvs::DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<cvs::TransportError>(m, "TransportError", PyExc_RuntimeError);

    py::enum_<cvs::ContextKind>(m, "ContextKind")
        .value("FULL", cvs::ContextKind::Full)
        .value("PRIOR", cvs::ContextKind::Prior)
        .value("TEXT_PRIOR", cvs::ContextKind::TextPrior);

    py::enum_<cvs::PriorVariant>(m, "PriorVariant")
        .value("WITH_IMAGE", cvs::PriorVariant::WithImage)
        .value("TEXT_ONLY", cvs::PriorVariant::TextOnly);

    py::enum_<cvs::ScoreVariant>(m, "ScoreVariant")
        .value("STANDARD", cvs::ScoreVariant::Standard)
        .value("NO_VISUAL_ANCHOR", cvs::ScoreVariant::NoVisualAnchor);

    py::enum_<cvs::Strategy>(m, "Strategy")
        .value("LOW", cvs::Strategy::Low)
        .value("HIGH", cvs::Strategy::High)
        .value("NO", cvs::Strategy::No)
        .value("RANDOM", cvs::Strategy::Random);

    py::enum_<cvs::FailurePolicy>(m, "FailurePolicy")
        .value("SKIP", cvs::FailurePolicy::Skip)
        .value("STRICT", cvs::FailurePolicy::Strict);

    py::enum_<cvs::Metric>(m, "Metric")
        .value("CVS_YES", cvs::Metric::CvsYes)
        .value("CVS_NO", cvs::Metric::CvsNo);

    py::class_<cvs::SampleRecord>(m, "SampleRecord")
        .def(py::init([](std::string id, std::string image, std::string question,
                         std::string answer) {
                 return cvs::SampleRecord{std::move(id), std::move(image), std::move(question),
                                          std::move(answer)};
             }),
             py::arg("id"), py::arg("image"), py::arg("question"), py::arg("answer"))
        .def_readwrite("id", &cvs::SampleRecord::id)
        .def_readwrite("image", &cvs::SampleRecord::image_path)
        .def_readwrite("question", &cvs::SampleRecord::question)
        .def_readwrite("answer", &cvs::SampleRecord::answer)
        .def("__repr__", [](const cvs::SampleRecord& r) {
            return "SampleRecord(id='" + r.id + "')";
        });

    py::class_<cvs::PoolStats>(m, "PoolStats")
        .def_readonly("total_count", &cvs::PoolStats::total_count)
        .def_readonly("distinct_image_count", &cvs::PoolStats::distinct_image_count)
        .def_readonly("empty_question_count", &cvs::PoolStats::empty_question_count);

    m.def(
        "load_manifest",
        [](const std::filesystem::path& path, bool check_images) {
            auto data = cvs::load_manifest(path, {check_images});
            return py::make_tuple(data.records, data.stats, data.warnings);
        },
        py::arg("path"), py::arg("check_images") = false,
        "Load a JSONL manifest; returns (records, stats, warnings).");
    m.def(
        "write_manifest",
        [](const std::vector<cvs::SampleRecord>& records, const std::filesystem::path& path) {
            cvs::write_manifest(records, path);
        },
        py::arg("records"), py::arg("path"));

    py::class_<cvs::PromptTemplateSet>(m, "PromptTemplateSet")
        .def(py::init(&cvs::PromptTemplateSet::defaults))
        .def_static("defaults", &cvs::PromptTemplateSet::defaults)
        .def_static("load", &cvs::PromptTemplateSet::load, py::arg("path"))
        .def_readwrite("full_template", &cvs::PromptTemplateSet::full_template)
        .def_readwrite("prior_template", &cvs::PromptTemplateSet::prior_template)
        .def_readwrite("text_prior_template", &cvs::PromptTemplateSet::text_prior_template)
        .def_readwrite("instruction_suffix", &cvs::PromptTemplateSet::instruction_suffix)
        .def("validate", &cvs::PromptTemplateSet::validate);

    py::class_<cvs::RenderedPrompt>(m, "RenderedPrompt")
        .def_readonly("text", &cvs::RenderedPrompt::text)
        .def_readonly("attach_image", &cvs::RenderedPrompt::attach_image)
        .def_readonly("context_kind", &cvs::RenderedPrompt::context_kind);

    m.def("render_full", &cvs::render_full, py::arg("sample"), py::arg("templates"));
    m.def("render_prior", &cvs::render_prior, py::arg("sample"), py::arg("templates"),
          py::arg("variant"));

    m.def(
        "extract_yes_no_probs",
        [](const std::vector<std::pair<std::string, double>>& top_tokens, double floor) {
            std::vector<cvs::TokenLogprob> tokens;
            tokens.reserve(top_tokens.size());
            for (const auto& [token, logprob] : top_tokens) {
                tokens.push_back({token, logprob});
            }
            return cvs::extract_yes_no_probs(tokens, floor);
        },
        py::arg("top_tokens"), py::arg("floor") = 1e-10,
        "Sum exp(logprob) over yes/no token variants; absent labels get the floor.");

    py::class_<cvs::Evaluator>(m, "Evaluator");

    py::class_<cvs::MockEvaluator, cvs::Evaluator>(m, "MockEvaluator")
        .def(py::init<std::uint64_t, double>(), py::arg("seed") = cvs::MockEvaluator::kDefaultSeed,
             py::arg("floor") = 1e-10)
        .def_static("from_file", &cvs::MockEvaluator::from_file, py::arg("path"),
                    py::arg("seed") = cvs::MockEvaluator::kDefaultSeed, py::arg("floor") = 1e-10)
        .def("set_entry", &cvs::MockEvaluator::set_entry, py::arg("sample_id"), py::arg("kind"),
             py::arg("p_yes"), py::arg("p_no"))
        .def("calls", &cvs::MockEvaluator::calls)
        .def(
            "judge",
            [](cvs::MockEvaluator& mock, const cvs::SampleRecord& sample,
               const cvs::RenderedPrompt& prompt) {
                auto verdict = mock.judge(sample, prompt);
                return py::make_tuple(verdict.p_yes, verdict.p_no);
            },
            py::arg("sample"), py::arg("prompt"));

    py::class_<cvs::CvsScore>(m, "CvsScore")
        .def(py::init<>())
        .def_readwrite("sample_id", &cvs::CvsScore::sample_id)
        .def_readwrite("p_yes_full", &cvs::CvsScore::p_yes_full)
        .def_readwrite("p_no_full", &cvs::CvsScore::p_no_full)
        .def_readwrite("p_yes_prior", &cvs::CvsScore::p_yes_prior)
        .def_readwrite("p_no_prior", &cvs::CvsScore::p_no_prior)
        .def_readwrite("cvs_yes", &cvs::CvsScore::cvs_yes)
        .def_readwrite("cvs_no", &cvs::CvsScore::cvs_no)
        .def_readwrite("variant", &cvs::CvsScore::variant)
        .def("__repr__", [](const cvs::CvsScore& s) {
            return "CvsScore(id='" + s.sample_id + "', cvs_yes=" + std::to_string(s.cvs_yes) +
                   ", cvs_no=" + std::to_string(s.cvs_no) + ")";
        });

    m.def("cvs_shift", &cvs::cvs_shift, py::arg("p_full"), py::arg("p_prior"),
          "Natural log of p_full / p_prior.");
    m.def("score_sample", &cvs::score_sample, py::arg("sample"), py::arg("evaluator"),
          py::arg("templates"), py::arg("variant") = cvs::ScoreVariant::Standard);
    m.def(
        "score_pool",
        [](const std::vector<cvs::SampleRecord>& records, cvs::MockEvaluator& evaluator,
           const cvs::PromptTemplateSet& templates, cvs::ScoreVariant variant,
           const std::filesystem::path& cache_path, cvs::FailurePolicy failure_policy,
           int concurrency) {
            cvs::ScorePoolOptions options{variant, cache_path, failure_policy, concurrency};
            cvs::ScorePoolResult result;
            {
                py::gil_scoped_release release;
                result = cvs::score_pool(records, evaluator, templates, options);
            }
            py::list failures;
            for (const auto& failure : result.failures) {
                failures.append(py::make_tuple(failure.sample_id, failure.message));
            }
            return py::make_tuple(result.scores, result.newly_scored, result.cache_hits, failures);
        },
        py::arg("records"), py::arg("evaluator"), py::arg("templates"),
        py::arg("variant") = cvs::ScoreVariant::Standard, py::arg("cache_path") = "",
        py::arg("failure_policy") = cvs::FailurePolicy::Skip, py::arg("concurrency") = 1,
        "Score records with caching; returns (scores, newly_scored, cache_hits, failures).");

    py::class_<cvs::Budget>(m, "Budget")
        .def_static("from_count", &cvs::Budget::from_count, py::arg("k"))
        .def_static("from_ratio", &cvs::Budget::from_ratio, py::arg("r"))
        .def("resolve", &cvs::Budget::resolve, py::arg("pool_size"));

    py::class_<cvs::SelectionConfig>(m, "SelectionConfig")
        .def(py::init([](cvs::Strategy strategy, cvs::Budget budget, double yes_threshold,
                         double no_threshold, std::uint64_t rng_seed) {
                 return cvs::SelectionConfig{strategy, budget, yes_threshold, no_threshold,
                                             rng_seed};
             }),
             py::arg("strategy"), py::arg("budget"), py::arg("yes_threshold") = 0.0,
             py::arg("no_threshold") = 0.0, py::arg("rng_seed") = 0);

    py::class_<cvs::SelectionResult>(m, "SelectionResult")
        .def_readonly("selected_ids", &cvs::SelectionResult::selected_ids)
        .def_readonly("mask", &cvs::SelectionResult::mask)
        .def_readonly("pool_size", &cvs::SelectionResult::pool_size)
        .def_readonly("filtered_pool_size", &cvs::SelectionResult::filtered_pool_size)
        .def_readonly("budget_requested", &cvs::SelectionResult::budget_requested)
        .def_readonly("strategy_used", &cvs::SelectionResult::strategy_used)
        .def_readonly("warnings", &cvs::SelectionResult::warnings);

    m.def(
        "filter_aligned",
        [](const std::vector<cvs::CvsScore>& scores, double yes_threshold, double no_threshold) {
            return cvs::filter_aligned(scores, yes_threshold, no_threshold);
        },
        py::arg("scores"), py::arg("yes_threshold") = 0.0, py::arg("no_threshold") = 0.0);
    m.def(
        "select",
        [](const std::vector<cvs::CvsScore>& scores, const cvs::SelectionConfig& config) {
            return cvs::select_subset(scores, config);
        },
        py::arg("scores"), py::arg("config"));
    m.def(
        "retention_fraction",
        [](const std::vector<cvs::CvsScore>& scores, double yes_threshold, double no_threshold) {
            return cvs::retention_fraction(scores, yes_threshold, no_threshold);
        },
        py::arg("scores"), py::arg("yes_threshold") = 0.0, py::arg("no_threshold") = 0.0);

    m.def(
        "compute_arp",
        [](const std::vector<std::tuple<std::string, double, double>>& entries) {
            std::vector<cvs::BenchmarkEntry> converted;
            converted.reserve(entries.size());
            for (const auto& [name, subset, full] : entries) {
                converted.push_back({name, subset, full});
            }
            return cvs::compute_arp(converted);
        },
        py::arg("entries"),
        "Unweighted mean of (subset_score / full_score) * 100 over (name, subset, full) tuples.");

    py::class_<cvs::ScoreHistogram>(m, "ScoreHistogram")
        .def_readonly("bin_edges", &cvs::ScoreHistogram::bin_edges)
        .def_readonly("counts", &cvs::ScoreHistogram::counts)
        .def_readonly("underflow", &cvs::ScoreHistogram::underflow)
        .def_readonly("overflow", &cvs::ScoreHistogram::overflow)
        .def("to_text", &cvs::ScoreHistogram::to_text);

    m.def(
        "histogram",
        [](const std::vector<cvs::CvsScore>& scores, cvs::Metric metric,
           const std::vector<double>& bin_edges) {
            return cvs::histogram(scores, metric, bin_edges);
        },
        py::arg("scores"), py::arg("metric"), py::arg("bin_edges"));
}
