#include "rcts/generator.hpp"

#include <cctype>

#include "rcts/error.hpp"

namespace rcts {

TemplateId parse_template_id(std::string_view name) {
    if (name == "scienceqa") return TemplateId::ScienceQA;
    if (name == "mmmu") return TemplateId::MMMU;
    if (name == "mathv") return TemplateId::MathV;
    if (name == "short-answer") return TemplateId::ShortAnswer;
    throw GenerationError("unknown template '" + std::string(name) + "'");
}

std::string_view template_name(TemplateId id) {
    switch (id) {
        case TemplateId::ScienceQA: return "scienceqa";
        case TemplateId::MMMU: return "mmmu";
        case TemplateId::MathV: return "mathv";
        case TemplateId::ShortAnswer: return "short-answer";
    }
    return "?";
}

std::string_view role_name(Role r) { return r == Role::User ? "user" : "assistant"; }

std::string PromptBundle::flatten() const {
    std::string out = system;
    out += '\n';
    for (const auto& t : turns) {
        out += role_name(t.role);
        out += ": ";
        for (const auto& img : t.image_refs) {
            out += "<image:" + img + ">\n";
        }
        out += t.text;
        out += '\n';
    }
    return out;
}

std::string to_transcript(const PromptBundle& bundle) {
    std::string out = "=== system ===\n" + bundle.system + "\n";
    for (const auto& t : bundle.turns) {
        out += "=== ";
        out += role_name(t.role);
        out += " ===\n";
        for (const auto& img : t.image_refs) out += "[image] " + img + "\n";
        out += t.text + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Answer parsing

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// If `s` starts with a boxed literal, returns its brace-balanced content.
std::optional<std::string> boxed_at(std::string_view s) {
    std::size_t open = std::string_view::npos;
    for (std::string_view prefix : {"\\boxed{", "//boxed{"}) {
        if (s.substr(0, prefix.size()) == prefix) {
            open = prefix.size();
            break;
        }
    }
    if (open == std::string_view::npos) return std::nullopt;
    int depth = 1;
    for (std::size_t i = open; i < s.size(); ++i) {
        if (s[i] == '{') ++depth;
        if (s[i] == '}' && --depth == 0) return std::string(s.substr(open, i - open));
    }
    return std::nullopt;
}

std::optional<std::string> letter_at(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size() && (s[i] == '(' || s[i] == '*')) ++i;
    if (i >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i]))) return std::nullopt;
    const char c = s[i];
    const char next = i + 1 < s.size() ? s[i + 1] : '\0';
    if (std::isalnum(static_cast<unsigned char>(next))) return std::nullopt;
    // Lowercase letters are accepted only when clearly standalone, so that
    // "The answer is a cat" is not read as option A.
    if (std::islower(static_cast<unsigned char>(c)) && next != '\0' && next != '.' && next != ')') {
        return std::nullopt;
    }
    return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
}

std::vector<std::size_t> phrase_positions(std::string_view raw) {
    static constexpr std::string_view kPhrase = "the answer is";
    const std::string low = lower(raw);
    std::vector<std::size_t> out;
    for (auto pos = low.find(kPhrase); pos != std::string::npos; pos = low.find(kPhrase, pos + 1)) {
        std::size_t after = pos + kPhrase.size();
        while (after < raw.size() && (is_space(raw[after]) || raw[after] == ':')) ++after;
        out.push_back(after);
    }
    return out;
}

std::optional<std::string> extract_reasoning(std::string_view raw) {
    if (auto pos = raw.find("BECAUSE:"); pos != std::string_view::npos) {
        auto rest = trim(raw.substr(pos + 8));
        if (!rest.empty()) return std::string(rest);
    }
    if (auto pos = raw.find("THOUGHT PROCESS:"); pos != std::string_view::npos) {
        auto rest = raw.substr(pos + 16);
        if (auto end = rest.find("FINAL ANSWER"); end != std::string_view::npos) {
            rest = rest.substr(0, end);
        }
        while (!rest.empty() && (is_space(rest.front()) || rest.front() == '*')) rest.remove_prefix(1);
        while (!rest.empty() && (is_space(rest.back()) || rest.back() == '*')) rest.remove_suffix(1);
        if (!rest.empty()) return std::string(rest);
    }
    return std::nullopt;
}

}  // namespace

std::string canonical_answer(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : trim(text)) {
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    if (out.size() == 1 && std::isalpha(static_cast<unsigned char>(out[0]))) {
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    }
    return out;
}

ParsedResponse parse_answer(std::string_view raw, TemplateId format) {
    ParsedResponse p;
    p.raw = std::string(raw);
    const auto positions = phrase_positions(raw);

    std::optional<std::string> answer;
    for (auto pos : positions) {
        if ((answer = boxed_at(raw.substr(pos)))) break;
    }
    if (!answer) {
        for (auto pos : positions) {
            if ((answer = letter_at(raw.substr(pos)))) break;
        }
    }
    if (!answer) {
        for (std::size_t i = 0; i < raw.size() && !answer; ++i) {
            if (raw[i] == '\\' || raw[i] == '/') answer = boxed_at(raw.substr(i));
        }
    }
    if (!answer && format == TemplateId::ShortAnswer && !positions.empty()) {
        auto rest = raw.substr(positions.front());
        rest = trim(rest.substr(0, rest.find('\n')));
        if (!rest.empty() && rest.back() == '.') rest.remove_suffix(1);
        if (!rest.empty()) answer = std::string(rest);
    }
    if (!answer && format == TemplateId::ShortAnswer) {
        std::string_view rest = raw;
        while (!rest.empty()) {
            auto nl = rest.find('\n');
            auto line = trim(rest.substr(0, nl));
            if (!line.empty()) {
                answer = std::string(line);
                break;
            }
            if (nl == std::string_view::npos) break;
            rest.remove_prefix(nl + 1);
        }
    }
    if (answer) {
        auto canon = canonical_answer(*answer);
        if (!canon.empty()) p.answer = std::move(canon);
    }
    p.parse_ok = p.answer.has_value();
    p.reasoning = extract_reasoning(raw);
    return p;
}

ParsedResponse generate_parsed(const Generator& gen, const GenRequest& request, TemplateId format) {
    try {
        return parse_answer(gen.generate(request), format);
    } catch (const GenerationError&) {
        return ParsedResponse{};
    }
}

}  // namespace rcts
