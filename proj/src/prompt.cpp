#include "rcts/prompt.hpp"

#include <sstream>

#include "rcts/error.hpp"
#include "templates_data.hpp"

namespace rcts {

namespace {

using SectionMap = std::map<std::string, std::string, std::less<>>;

SectionMap parse_sections(std::string_view content) {
    SectionMap out;
    std::string* current = nullptr;
    std::istringstream in{std::string(content)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("@@", 0) == 0) {
            current = &out[line.substr(2)];
        } else if (current) {
            *current += line;
            *current += '\n';
        }
    }
    for (auto& [name, text] : out) {
        if (!text.empty() && text.back() == '\n') text.pop_back();
    }
    return out;
}

const std::map<std::string, SectionMap, std::less<>>& all_templates() {
    static const auto templates = [] {
        std::map<std::string, SectionMap, std::less<>> m;
        for (const auto& t : detail::embedded_templates()) {
            m.emplace(std::string(t.name), parse_sections(t.content));
        }
        return m;
    }();
    return templates;
}

std::vector<std::string> images_of(const std::optional<std::string>& ref) {
    return ref ? std::vector<std::string>{*ref} : std::vector<std::string>{};
}

}  // namespace

Query Query::from_entry(const KbEntry& e) {
    return Query{e.id, e.question, e.image_ref, e.options.value_or(std::vector<std::string>{})};
}

std::string render_question(std::string_view question, const std::vector<std::string>& options) {
    std::string out(question);
    if (!options.empty()) {
        out += "\nOptions:";
        for (std::size_t i = 0; i < options.size(); ++i) {
            out += '\n';
            out += option_letter(i);
            out += ". ";
            out += options[i];
        }
    }
    return out;
}

std::string render_question(const KbEntry& e) {
    return render_question(e.question, e.options.value_or(std::vector<std::string>{}));
}

std::string substitute(std::string_view text, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
            auto close = text.find('}', i + 2);
            if (close != std::string_view::npos) {
                auto it = values.find(std::string(text.substr(i + 2, close - i - 2)));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += text[i++];
    }
    return out;
}

const std::string& template_section(std::string_view file, std::string_view section) {
    const auto& all = all_templates();
    auto f = all.find(file);
    if (f == all.end()) throw GenerationError("unknown template file '" + std::string(file) + "'");
    auto s = f->second.find(section);
    if (s == f->second.end()) {
        throw GenerationError("template '" + std::string(file) + "' has no section '" +
                              std::string(section) + "'");
    }
    return s->second;
}

PromptBundle assemble_prompt(const Query& query, std::span<const KbEntry* const> examples,
                             TemplateId tmpl, bool with_reasoning) {
    const std::string_view file = template_name(tmpl);
    const char* suffix = with_reasoning ? "_reasoning" : "";
    const auto& user_tmpl = template_section(file, std::string("user") + suffix);

    PromptBundle bundle;
    bundle.system = template_section(file, std::string("system") + suffix);
    for (const KbEntry* ex : examples) {
        bundle.turns.push_back(
            {Role::User, substitute(user_tmpl, {{"question", render_question(*ex)}}),
             images_of(ex->image_ref)});
        const bool show_reasoning = with_reasoning && ex->reasoning.has_value();
        const auto& answer_tmpl =
            template_section(file, show_reasoning ? "assistant_reasoning" : "assistant");
        bundle.turns.push_back(
            {Role::Assistant,
             substitute(answer_tmpl,
                        {{"answer", ex->answer}, {"reasoning", ex->reasoning.value_or("")}}),
             {}});
    }
    bundle.turns.push_back(
        {Role::User,
         substitute(user_tmpl, {{"question", render_question(query.question, query.options)}}),
         images_of(query.image_ref)});
    return bundle;
}

PromptBundle assemble_prompt(const Query& query, const std::vector<KbEntry>& examples,
                             TemplateId tmpl, bool with_reasoning) {
    std::vector<const KbEntry*> ptrs;
    ptrs.reserve(examples.size());
    for (const auto& e : examples) ptrs.push_back(&e);
    return assemble_prompt(query, std::span<const KbEntry* const>(ptrs), tmpl, with_reasoning);
}

PromptBundle reasoning_generation_prompt(const KbEntry& entry) {
    PromptBundle b;
    b.system = template_section("reasoning", "generate_system");
    b.turns.push_back({Role::User,
                       substitute(template_section("reasoning", "generate_user"),
                                  {{"question", render_question(entry)}, {"answer", entry.answer}}),
                       images_of(entry.image_ref)});
    return b;
}

PromptBundle reasoning_answer_prompt(const Query& query, std::string_view reasoning,
                                     TemplateId tmpl) {
    const std::string_view file = template_name(tmpl);
    const auto question = substitute(template_section(file, "user"),
                                     {{"question", render_question(query.question, query.options)}});
    PromptBundle b;
    b.system = template_section(file, "system");
    b.turns.push_back({Role::User,
                       substitute(template_section("reasoning", "predict_user"),
                                  {{"question", question}, {"reasoning", std::string(reasoning)}}),
                       images_of(query.image_ref)});
    return b;
}

PromptBundle mutual_prompt(const Query& query, const ParsedResponse& branch_response,
                           const KbEntry& sample, TemplateId tmpl) {
    const std::string_view file = template_name(tmpl);
    const auto& user_tmpl = template_section(file, "user");
    PromptBundle b;
    b.system = template_section(file, "system");
    b.turns.push_back(
        {Role::User,
         substitute(user_tmpl, {{"question", render_question(query.question, query.options)}}),
         images_of(query.image_ref)});
    b.turns.push_back({Role::Assistant, branch_response.raw, {}});
    b.turns.push_back({Role::User, substitute(user_tmpl, {{"question", render_question(sample)}}),
                       images_of(sample.image_ref)});
    return b;
}

}  // namespace rcts
