#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "rcts/action_space.hpp"
#include "rcts/generator.hpp"
#include "rcts/prompt.hpp"

namespace rcts {

struct RewardConfig {
    int n_self = 5;
    int n_mutual = 5;
    double alpha = 0.2;

    void validate() const;
};

/// Prompt format and sampling knobs shared by every generation call.
struct GenerationSettings {
    TemplateId tmpl = TemplateId::ScienceQA;
    bool with_reasoning = false;
    double greedy_temperature = 0.0;
    double sampling_temperature = 0.7;
    int max_tokens = 1024;
};

struct RewardBreakdown {
    double q_self = 0.0;
    double q_mutual = 0.0;
    double q_combined = 0.0;
    std::vector<bool> self_verdicts;
    std::vector<bool> mutual_verdicts;

    bool operator==(const RewardBreakdown&) const = default;
};

struct VerdictMean {
    double mean = 0.0;
    std::vector<bool> verdicts;
};

/// True iff the response parsed and its canonical answer equals the reference's.
bool rule_evaluate(const ParsedResponse& predicted, std::string_view reference);

double mean_of(const std::vector<bool>& verdicts);

/// Regenerates the answer N_s times (seeds 1..N_s) from the query plus the
/// response's own reasoning and scores agreement with the response's answer.
VerdictMean self_consistency_reward(const Query& query, const ParsedResponse& response,
                                    const Generator& gen, const RewardConfig& cfg,
                                    const GenerationSettings& settings);

/// Top-N_m actions by similarity (ties: entry id ascending). Computed once
/// per query and shared by every branch.
std::vector<const KbEntry*> select_mutual_samples(const ActionSpace& space, const RewardConfig& cfg);

/// Asks each reference question with the query and branch response as
/// context and scores the answers against the references' ground truth.
VerdictMean mutual_reward(const Query& query, const ParsedResponse& response,
                          std::span<const KbEntry* const> mutual, const Generator& gen,
                          const GenerationSettings& settings);

double combine_rewards(double q_self, double q_mutual, const RewardConfig& cfg);

/// Full breakdown for one branch response; an unparsed response scores 0.
RewardBreakdown evaluate_rewards(const Query& query, const ParsedResponse& response,
                                 std::span<const KbEntry* const> mutual, const Generator& gen,
                                 const RewardConfig& cfg, const GenerationSettings& settings);

}  // namespace rcts
