#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcts/generator.hpp"
#include "rcts/knowledge_base.hpp"

namespace rcts {

/// The user question being answered.
struct Query {
    std::string id;
    std::string question;
    std::optional<std::string> image_ref;
    std::vector<std::string> options;

    static Query from_entry(const KbEntry& entry);
};

/// Question text followed by labeled options ("A. ...") when present.
std::string render_question(std::string_view question, const std::vector<std::string>& options);
std::string render_question(const KbEntry& entry);

/// Single-pass ${name} substitution; unknown names are left as written.
std::string substitute(std::string_view text, const std::map<std::string, std::string>& values);

/// Named section of a built-in template file (e.g. "scienceqa", "system").
/// Throws GenerationError for an unknown file or section.
const std::string& template_section(std::string_view file, std::string_view section);

/// K-shot prompt: system text, one user/assistant pair per example, then the query.
PromptBundle assemble_prompt(const Query& query, std::span<const KbEntry* const> examples,
                             TemplateId tmpl, bool with_reasoning);
PromptBundle assemble_prompt(const Query& query, const std::vector<KbEntry>& examples,
                             TemplateId tmpl, bool with_reasoning);

/// Prompt asking the generator for a step-by-step thought process leading
/// to the known answer of `entry`.
PromptBundle reasoning_generation_prompt(const KbEntry& entry);

/// Question plus a thought process; the generator re-derives the answer.
/// The template supplies the answer-format system text.
PromptBundle reasoning_answer_prompt(const Query& query, std::string_view reasoning,
                                     TemplateId tmpl);

/// [user query; branch response; reference question] for the mutual check.
PromptBundle mutual_prompt(const Query& query, const ParsedResponse& branch_response,
                           const KbEntry& sample, TemplateId tmpl);

}  // namespace rcts
