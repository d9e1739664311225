#include "rcts/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "rcts/error.hpp"

namespace rcts {

void RewardConfig::validate() const {
    if (n_self < 1 || n_mutual < 1) throw SearchError("N_s and N_m must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw SearchError("alpha must lie in [0, 1]");
}

bool rule_evaluate(const ParsedResponse& predicted, std::string_view reference) {
    return predicted.parse_ok && predicted.answer &&
           canonical_answer(*predicted.answer) == canonical_answer(reference);
}

double mean_of(const std::vector<bool>& verdicts) {
    if (verdicts.empty()) return 0.0;
    const auto hits = std::count(verdicts.begin(), verdicts.end(), true);
    return static_cast<double>(hits) / static_cast<double>(verdicts.size());
}

VerdictMean self_consistency_reward(const Query& query, const ParsedResponse& response,
                                    const Generator& gen, const RewardConfig& cfg,
                                    const GenerationSettings& settings) {
    VerdictMean out;
    out.verdicts.assign(static_cast<std::size_t>(cfg.n_self), false);
    if (!response.parse_ok || !response.reasoning) return out;

    GenRequest req;
    req.bundle = reasoning_answer_prompt(query, *response.reasoning, settings.tmpl);
    req.temperature = settings.sampling_temperature;
    req.max_tokens = settings.max_tokens;
    for (int n = 1; n <= cfg.n_self; ++n) {
        req.seed = n;
        const auto regenerated = generate_parsed(gen, req, settings.tmpl);
        out.verdicts[static_cast<std::size_t>(n - 1)] = rule_evaluate(regenerated, *response.answer);
    }
    out.mean = mean_of(out.verdicts);
    return out;
}

std::vector<const KbEntry*> select_mutual_samples(const ActionSpace& space, const RewardConfig& cfg) {
    if (space.empty()) throw SearchError("cannot pick mutual samples from an empty action space");
    std::vector<const Action*> order;
    for (const auto& a : space.actions()) order.push_back(&a);
    std::stable_sort(order.begin(), order.end(), [](const Action* a, const Action* b) {
        if (a->sim != b->sim) return a->sim > b->sim;
        return a->id() < b->id();
    });
    const auto take = std::min(order.size(), static_cast<std::size_t>(cfg.n_mutual));
    std::vector<const KbEntry*> out;
    for (std::size_t i = 0; i < take; ++i) out.push_back(order[i]->entry);
    return out;
}

VerdictMean mutual_reward(const Query& query, const ParsedResponse& response,
                          std::span<const KbEntry* const> mutual, const Generator& gen,
                          const GenerationSettings& settings) {
    if (mutual.empty()) throw SearchError("mutual reward needs at least one reference sample");
    VerdictMean out;
    out.verdicts.reserve(mutual.size());
    for (const KbEntry* sample : mutual) {
        GenRequest req;
        req.bundle = mutual_prompt(query, response, *sample, settings.tmpl);
        req.seed = 0;
        req.temperature = settings.greedy_temperature;
        req.max_tokens = settings.max_tokens;
        out.verdicts.push_back(rule_evaluate(generate_parsed(gen, req, settings.tmpl), sample->answer));
    }
    out.mean = mean_of(out.verdicts);
    return out;
}

// alpha * Q_S + (1 - alpha) * Q_M, evaluated by std::lerp: exact at both ends
// of alpha and free of the 0.2 + 0.4 rounding of the expanded sum.
double combine_rewards(double q_self, double q_mutual, const RewardConfig& cfg) {
    return std::lerp(q_mutual, q_self, cfg.alpha);
}

RewardBreakdown evaluate_rewards(const Query& query, const ParsedResponse& response,
                                 std::span<const KbEntry* const> mutual, const Generator& gen,
                                 const RewardConfig& cfg, const GenerationSettings& settings) {
    RewardBreakdown r;
    if (!response.parse_ok) {
        r.self_verdicts.assign(static_cast<std::size_t>(cfg.n_self), false);
        r.mutual_verdicts.assign(mutual.size(), false);
        return r;
    }
    auto self = self_consistency_reward(query, response, gen, cfg, settings);
    auto mut = mutual_reward(query, response, mutual, gen, settings);
    r.q_self = self.mean;
    r.q_mutual = mut.mean;
    r.q_combined = combine_rewards(r.q_self, r.q_mutual, cfg);
    r.self_verdicts = std::move(self.verdicts);
    r.mutual_verdicts = std::move(mut.verdicts);
    return r;
}

}  // namespace rcts
