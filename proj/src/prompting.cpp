#include "cvs/prompting.hpp"

#include <fstream>
#include <string_view>

#include <json.hpp>

#include "cvs/errors.hpp"

namespace cvs {

namespace {

constexpr std::string_view kQuestionSlot = "{question}";
constexpr std::string_view kAnswerSlot = "{answer}";

std::size_t count_occurrences(const std::string& haystack, std::string_view needle) {
    std::size_t count = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

// Left-to-right single pass: placeholder text arriving inside substituted
// values is copied through untouched.
std::string substitute(const std::string& tmpl, const std::string& question,
                       const std::string& answer) {
    std::string out;
    out.reserve(tmpl.size() + question.size() + answer.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        if (tmpl.compare(pos, kQuestionSlot.size(), kQuestionSlot) == 0) {
            out += question;
            pos += kQuestionSlot.size();
        } else if (tmpl.compare(pos, kAnswerSlot.size(), kAnswerSlot) == 0) {
            out += answer;
            pos += kAnswerSlot.size();
        } else {
            out += tmpl[pos];
            ++pos;
        }
    }
    return out;
}

void check_count(const char* name, std::size_t got, std::size_t want, const char* slot) {
    if (got != want) {
        throw ConfigError(std::string(name) + " must contain " + slot + " exactly " +
                          std::to_string(want) + " time(s), found " + std::to_string(got));
    }
}

}  // namespace

std::string to_string(ContextKind kind) {
    switch (kind) {
        case ContextKind::Full: return "full";
        case ContextKind::Prior: return "prior";
        case ContextKind::TextPrior: return "text_prior";
    }
    return "full";
}

PromptTemplateSet PromptTemplateSet::defaults() {
    PromptTemplateSet t;
    t.full_template =
        "Given the image, is the following answer a valid response to the question?\n"
        "Question: {question}\n"
        "Answer: {answer}\n";
    t.prior_template =
        "Given the image, is the following answer a valid response?\n"
        "Answer: {answer}\n";
    t.text_prior_template =
        "Is the following answer a valid response?\n"
        "Answer: {answer}\n";
    t.instruction_suffix = "Respond with exactly one word, \"Yes\" or \"No\".";
    return t;
}

PromptTemplateSet PromptTemplateSet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open template file: " + path.string());
    }
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("template file is not a JSON object: " + path.string());
    }

    PromptTemplateSet t = defaults();
    for (auto& [key, value] : doc.items()) {
        if (!value.is_string()) {
            throw ConfigError("template key \"" + key + "\" must be a string");
        }
        if (key == "full_template") {
            t.full_template = value.get<std::string>();
        } else if (key == "prior_template") {
            t.prior_template = value.get<std::string>();
        } else if (key == "text_prior_template") {
            t.text_prior_template = value.get<std::string>();
        } else if (key == "instruction_suffix") {
            t.instruction_suffix = value.get<std::string>();
        } else {
            throw ConfigError("unknown template key \"" + key + "\"");
        }
    }
    t.validate();
    return t;
}

void PromptTemplateSet::validate() const {
    check_count("full_template", count_occurrences(full_template, kQuestionSlot), 1, "{question}");
    check_count("full_template", count_occurrences(full_template, kAnswerSlot), 1, "{answer}");
    check_count("prior_template", count_occurrences(prior_template, kAnswerSlot), 1, "{answer}");
    check_count("prior_template", count_occurrences(prior_template, kQuestionSlot), 0, "{question}");
    check_count("text_prior_template", count_occurrences(text_prior_template, kAnswerSlot), 1,
                "{answer}");
    check_count("text_prior_template", count_occurrences(text_prior_template, kQuestionSlot), 0,
                "{question}");
    if (instruction_suffix.empty()) {
        throw ConfigError("instruction_suffix must be non-empty");
    }
}

RenderedPrompt render_full(const SampleRecord& sample, const PromptTemplateSet& templates) {
    RenderedPrompt prompt;
    prompt.text = substitute(templates.full_template, sample.question, sample.answer) +
                  templates.instruction_suffix;
    prompt.attach_image = true;
    prompt.context_kind = ContextKind::Full;
    return prompt;
}

RenderedPrompt render_prior(const SampleRecord& sample, const PromptTemplateSet& templates,
                            PriorVariant variant) {
    RenderedPrompt prompt;
    const auto& tmpl = variant == PriorVariant::WithImage ? templates.prior_template
                                                          : templates.text_prior_template;
    prompt.text = substitute(tmpl, /*question=*/"", sample.answer) + templates.instruction_suffix;
    prompt.attach_image = variant == PriorVariant::WithImage;
    prompt.context_kind =
        variant == PriorVariant::WithImage ? ContextKind::Prior : ContextKind::TextPrior;
    return prompt;
}

}  // namespace cvs
