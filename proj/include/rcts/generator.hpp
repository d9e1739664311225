#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rcts {

/// Answer-format family; selects the prompt template and the parse rules.
enum class TemplateId { ScienceQA, MMMU, MathV, ShortAnswer };

TemplateId parse_template_id(std::string_view name);  // throws GenerationError
std::string_view template_name(TemplateId id);

enum class Role { User, Assistant };

std::string_view role_name(Role r);

struct Turn {
    Role role = Role::User;
    std::string text;
    std::vector<std::string> image_refs;

    bool operator==(const Turn&) const = default;
};

struct PromptBundle {
    std::string system;
    std::vector<Turn> turns;

    /// Single string over system, turns and image refs; mock rules match on it.
    std::string flatten() const;

    bool operator==(const PromptBundle&) const = default;
};

/// Human-readable, byte-stable rendering used for golden transcripts.
std::string to_transcript(const PromptBundle& bundle);

struct GenRequest {
    PromptBundle bundle;
    std::int64_t seed = 0;
    double temperature = 0.0;
    int max_tokens = 1024;
};

/// Text generation backend. Implementations must be safe to call from
/// several threads at once.
class Generator {
public:
    virtual ~Generator() = default;
    /// Returns raw model text or throws GenerationError.
    virtual std::string generate(const GenRequest& request) const = 0;
};

struct ParsedResponse {
    std::string raw;
    std::optional<std::string> answer;
    std::optional<std::string> reasoning;
    bool parse_ok = false;

    bool operator==(const ParsedResponse&) const = default;
};

/// Trim, collapse internal whitespace, uppercase single letters.
std::string canonical_answer(std::string_view text);

ParsedResponse parse_answer(std::string_view raw, TemplateId format);

/// Generates and parses; a backend failure becomes parse_ok = false.
ParsedResponse generate_parsed(const Generator& gen, const GenRequest& request, TemplateId format);

}  // namespace rcts
