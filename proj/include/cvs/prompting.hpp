#pragma once

#include <filesystem>
#include <string>

#include "cvs/manifest.hpp"

namespace cvs {

enum class ContextKind { Full, Prior, TextPrior };

enum class PriorVariant { WithImage, TextOnly };

std::string to_string(ContextKind kind);

/// The three evaluator prompt templates plus the mandatory one-word
/// Yes/No instruction appended to every rendered prompt.
///
/// Placeholders are `{question}` and `{answer}`, substituted in a single
/// pass with no escaping language: placeholder-like text inside sample
/// fields is never re-expanded.
struct PromptTemplateSet {
    std::string full_template;
    std::string prior_template;
    std::string text_prior_template;
    std::string instruction_suffix;

    /// Built-in templates. The wording asks whether the answer is a valid
    /// response given the image (and, for the full context, the question).
    static PromptTemplateSet defaults();

    /// Loads overrides from a JSON file with any subset of the keys
    /// full_template, prior_template, text_prior_template,
    /// instruction_suffix. Unknown keys and invariant violations throw
    /// ConfigError before any scoring starts.
    static PromptTemplateSet load(const std::filesystem::path& path);

    /// Enforces placeholder invariants: {question} and {answer} exactly once
    /// in full_template; {answer} exactly once and no {question} in the two
    /// prior templates; non-empty instruction_suffix.
    void validate() const;
};

struct RenderedPrompt {
    std::string text;
    bool attach_image = false;
    ContextKind context_kind = ContextKind::Full;
};

/// Renders the full (image, question, answer) context.
RenderedPrompt render_full(const SampleRecord& sample, const PromptTemplateSet& templates);

/// Renders the question-free prior context: WithImage keeps the image
/// attachment, TextOnly drops it and uses the text-only template.
RenderedPrompt render_prior(const SampleRecord& sample, const PromptTemplateSet& templates,
                            PriorVariant variant);

}  // namespace cvs
