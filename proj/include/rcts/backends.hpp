#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcts/generator.hpp"
#include "rcts/knowledge_base.hpp"

namespace rcts {

/// One line of a mock script. All `contains` strings must occur in the
/// flattened prompt. A seed missing from `responses_by_seed` falls back to
/// `response`; if that is also absent the rule does not match.
struct MockRule {
    std::vector<std::string> contains;
    std::optional<std::string> response;
    std::map<std::int64_t, std::string> responses_by_seed;
    // When set, a match raises GenerationError with this message.
    std::optional<std::string> error;
};

/// Deterministic scripted backend: first matching rule wins. Responses
/// depend only on prompt content and seed.
class MockGenerator final : public Generator {
public:
    MockGenerator(std::vector<MockRule> rules, std::optional<std::string> fallback = std::nullopt);

    static MockGenerator from_jsonl(std::istream& in);
    static MockGenerator load(const std::string& path);

    std::string generate(const GenRequest& request) const override;

    const std::vector<MockRule>& rules() const noexcept { return rules_; }
    const std::optional<std::string>& fallback() const noexcept { return fallback_; }

private:
    std::vector<MockRule> rules_;
    std::optional<std::string> fallback_;
};

Json mock_rule_to_json(const MockRule& rule);
void save_mock_script(const std::vector<MockRule>& rules, const std::optional<std::string>& fallback,
                      std::ostream& out);

/// Adapts a callable; handy for tests and language bindings.
class CallbackGenerator final : public Generator {
public:
    using Fn = std::function<std::string(const GenRequest&)>;
    explicit CallbackGenerator(Fn fn) : fn_(std::move(fn)) {}
    std::string generate(const GenRequest& request) const override { return fn_(request); }

private:
    Fn fn_;
};

struct HttpConfig {
    std::string endpoint;  // e.g. http://localhost:8000/v1
    std::string model = "default";
    std::optional<std::string> api_key;  // falls back to $RCTS_API_KEY
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    std::chrono::milliseconds timeout{120000};
};

/// OpenAI-style chat-completions client with bounded exponential-backoff retries.
class HttpGenerator final : public Generator {
public:
    explicit HttpGenerator(HttpConfig config);

    std::string generate(const GenRequest& request) const override;

    const HttpConfig& config() const noexcept { return config_; }

private:
    HttpConfig config_;
    std::string scheme_host_port_;
    std::string base_path_;
};

/// JSON body sent to {endpoint}/chat/completions.
Json chat_request_body(const GenRequest& request, const std::string& model);

/// Extracts choices[0].message.content; throws GenerationError otherwise.
std::string chat_response_content(const std::string& body);

}  // namespace rcts
