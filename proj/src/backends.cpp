#include "rcts/backends.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

#include "httplib.h"
#include "rcts/error.hpp"

namespace rcts {

// ---------------------------------------------------------------------------
// Mock

MockGenerator::MockGenerator(std::vector<MockRule> rules, std::optional<std::string> fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {
    for (const auto& r : rules_) {
        if (!r.response && r.responses_by_seed.empty() && !r.error) {
            throw GenerationError("mock rule needs a response, responses_by_seed or error");
        }
    }
}

MockGenerator MockGenerator::from_jsonl(std::istream& in) {
    std::vector<MockRule> rules;
    std::optional<std::string> fallback;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "mock script line " + std::to_string(lineno) + ": ";
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::exception& ex) {
            throw GenerationError(where + "malformed JSON: " + ex.what());
        }
        if (!j.is_object()) throw GenerationError(where + "expected an object");
        if (j.contains("fallback")) {
            if (fallback) throw GenerationError(where + "more than one fallback");
            fallback = j.at("fallback").get<std::string>();
            continue;
        }
        if (fallback) throw GenerationError(where + "rules may not follow the fallback");
        for (auto it = j.begin(); it != j.end(); ++it) {
            static const std::set<std::string> kKeys = {"match", "response", "responses_by_seed", "error"};
            if (!kKeys.count(it.key())) throw GenerationError(where + "unknown key '" + it.key() + "'");
        }
        try {
            MockRule rule;
            if (auto m = j.find("match"); m != j.end()) {
                const auto& c = m->at("contains");
                if (c.is_string()) {
                    rule.contains.push_back(c.get<std::string>());
                } else {
                    for (const auto& s : c) rule.contains.push_back(s.get<std::string>());
                }
            }
            if (auto r = j.find("response"); r != j.end()) rule.response = r->get<std::string>();
            if (auto r = j.find("responses_by_seed"); r != j.end()) {
                for (auto it = r->begin(); it != r->end(); ++it) {
                    rule.responses_by_seed[std::stoll(it.key())] = it.value().get<std::string>();
                }
            }
            if (auto e = j.find("error"); e != j.end()) rule.error = e->get<std::string>();
            rules.push_back(std::move(rule));
        } catch (const std::exception& ex) {
            throw GenerationError(where + ex.what());
        }
    }
    return MockGenerator(std::move(rules), std::move(fallback));
}

MockGenerator MockGenerator::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GenerationError("cannot open mock script '" + path + "'");
    return from_jsonl(in);
}

std::string MockGenerator::generate(const GenRequest& request) const {
    const std::string text = request.bundle.flatten();
    for (const auto& rule : rules_) {
        bool hit = true;
        for (const auto& needle : rule.contains) {
            if (text.find(needle) == std::string::npos) {
                hit = false;
                break;
            }
        }
        if (!hit) continue;
        if (rule.error) throw GenerationError(*rule.error);
        if (auto it = rule.responses_by_seed.find(request.seed); it != rule.responses_by_seed.end()) {
            return it->second;
        }
        if (rule.response) return *rule.response;
    }
    if (fallback_) return *fallback_;
    throw GenerationError("no mock rule matched and no fallback is configured");
}

Json mock_rule_to_json(const MockRule& rule) {
    Json j = Json::object();
    j["match"] = {{"contains", rule.contains}};
    if (rule.response) j["response"] = *rule.response;
    if (!rule.responses_by_seed.empty()) {
        Json by_seed = Json::object();
        for (const auto& [seed, text] : rule.responses_by_seed) by_seed[std::to_string(seed)] = text;
        j["responses_by_seed"] = by_seed;
    }
    if (rule.error) j["error"] = *rule.error;
    return j;
}

void save_mock_script(const std::vector<MockRule>& rules, const std::optional<std::string>& fallback,
                      std::ostream& out) {
    for (const auto& r : rules) out << mock_rule_to_json(r).dump() << '\n';
    if (fallback) out << Json{{"fallback", *fallback}}.dump() << '\n';
}

// ---------------------------------------------------------------------------
// HTTP

Json chat_request_body(const GenRequest& request, const std::string& model) {
    Json messages = Json::array();
    if (!request.bundle.system.empty()) {
        messages.push_back(
            {{"role", "system"},
             {"content", Json::array({{{"type", "text"}, {"text", request.bundle.system}}})}});
    }
    for (const auto& turn : request.bundle.turns) {
        Json content = Json::array();
        for (const auto& img : turn.image_refs) {
            content.push_back({{"type", "image_url"}, {"image_url", {{"url", img}}}});
        }
        content.push_back({{"type", "text"}, {"text", turn.text}});
        messages.push_back({{"role", std::string(role_name(turn.role))}, {"content", content}});
    }
    Json body = Json::object();
    body["model"] = model;
    body["messages"] = messages;
    body["temperature"] = request.temperature;
    body["seed"] = request.seed;
    body["max_tokens"] = request.max_tokens;
    return body;
}

std::string chat_response_content(const std::string& body) {
    try {
        const auto j = Json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        std::string out;
        for (const auto& part : content) {
            if (part.value("type", "") == "text") out += part.at("text").get<std::string>();
        }
        return out;
    } catch (const Json::exception& ex) {
        throw GenerationError(std::string("unexpected chat-completion body: ") + ex.what());
    }
}

HttpGenerator::HttpGenerator(HttpConfig config) : config_(std::move(config)) {
    const auto& ep = config_.endpoint;
    const auto scheme_end = ep.find("://");
    if (scheme_end == std::string::npos) {
        throw GenerationError("endpoint must include a scheme: '" + ep + "'");
    }
    const auto path_start = ep.find('/', scheme_end + 3);
    scheme_host_port_ = ep.substr(0, path_start);
    base_path_ = path_start == std::string::npos ? "" : ep.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    if (!config_.api_key) {
        if (const char* key = std::getenv("RCTS_API_KEY"); key && *key) config_.api_key = key;
    }
    if (config_.max_attempts < 1) config_.max_attempts = 1;
}

std::string HttpGenerator::generate(const GenRequest& request) const {
    const std::string body = chat_request_body(request, config_.model).dump();
    const std::string path = base_path_ + "/chat/completions";
    httplib::Headers headers;
    if (config_.api_key) headers.emplace("Authorization", "Bearer " + *config_.api_key);

    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        httplib::Client client(scheme_host_port_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs =
            std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        auto res = client.Post(path, headers, body, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            return chat_response_content(res->body);
        }
        last_error = res ? "HTTP status " + std::to_string(res->status)
                         : "transport error: " + httplib::to_string(res.error());
        if (attempt < config_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw GenerationError("chat completion failed after " + std::to_string(config_.max_attempts) +
                              " attempts: " + last_error,
                          true);
}

}  // namespace rcts
