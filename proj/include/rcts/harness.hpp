#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcts/generator.hpp"
#include "rcts/knowledge_base.hpp"
#include "rcts/mcts.hpp"
#include "rcts/retrieval.hpp"

namespace rcts {

enum class Method { ZeroShot, IclRandom, VanillaRag, Rcts };

Method parse_method(std::string_view name);
std::string_view method_name(Method m);

struct EvalConfig {
    std::vector<Method> methods = {Method::Rcts};
    std::size_t n_retrieve = 20;  // N, action-space size
    std::uint64_t seed = 0;
    SearchConfig search;          // K lives here and is shared by every method
    Json extra_config = Json::object();  // copied into the report's config snapshot
};

struct EvalRecord {
    std::string query_id;
    Method method = Method::ZeroShot;
    std::optional<std::string> predicted;
    std::string reference;
    bool correct = false;
    std::vector<std::string> context_ids;
    std::optional<std::size_t> rollouts_used;
    std::optional<Termination> termination;
    std::chrono::nanoseconds wall_time{0};
};

struct MethodSummary {
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;  // percent, rounded to 2 decimals
};

struct EvalReport {
    std::map<Method, MethodSummary> summary;
    std::vector<EvalRecord> records;
    Json config = Json::object();
};

/// Percent rounded to two decimals.
double accuracy_percent(std::size_t correct, std::size_t total);

/// Recomputes per-method accuracy from the record list.
std::map<Method, MethodSummary> summarize(std::span<const EvalRecord> records);

/// K examples drawn uniformly without replacement (query id excluded),
/// from a stream derived from (seed, query id).
std::vector<const KbEntry*> sample_random_examples(const KbStore& kb, std::string_view query_id,
                                                   std::size_t k, std::uint64_t seed);

EvalRecord evaluate_query(const KbEntry& query, Method method, const KbStore& kb,
                          const EmbeddingIndex& index, const EmbeddingProvider& provider,
                          const Generator& gen, const EvalConfig& cfg);

EvalReport run_eval(const KbStore& dataset, const KbStore& kb, const EmbeddingIndex& index,
                    const EmbeddingProvider& provider, const Generator& gen, const EvalConfig& cfg);

/// Deterministic report: config snapshot, per-method accuracy, records.
/// Wall times are excluded so identical runs give identical bytes.
Json report_to_json(const EvalReport& report);
Json timings_to_json(const EvalReport& report);

Json search_result_to_json(const SearchResult& result);

// ---------------------------------------------------------------------------
// Multiple-choice variant of a true/false spatial-relation set.

struct LabeledStatement {
    std::string id;
    std::string statement;
    std::string relation;
    std::optional<std::string> image_ref;
};

std::vector<LabeledStatement> load_labeled_statements(const std::string& path);
std::vector<std::string> load_vocabulary(const std::string& path);

inline constexpr std::size_t kMcqOptions = 6;

/// Gold relation plus five distinct distractors from the rest of the
/// vocabulary, shuffled; the answer is the gold option's letter.
KbEntry make_multiple_choice(const LabeledStatement& record,
                             std::span<const std::string> vocabulary, std::uint64_t seed);

KbStore build_multiple_choice_variant(std::span<const LabeledStatement> records,
                                      std::span<const std::string> vocabulary,
                                      std::uint64_t seed);

}  // namespace rcts
