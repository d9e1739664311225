#include "rcts/reasoning.hpp"

#include <algorithm>

#include "rcts/error.hpp"
#include "rcts/prompt.hpp"
#include "rcts/rewards.hpp"

namespace rcts {

double score_candidate(const KbEntry& entry, const ReasoningCandidate& candidate,
                       const Generator& gen, const ReasoningConfig& cfg) {
    if (candidate.text.empty()) throw KbError("candidate reasoning must be nonempty");
    if (cfg.n_predictions < 1) throw KbError("N_p must be positive");
    GenRequest req;
    req.bundle = reasoning_answer_prompt(Query::from_entry(entry), candidate.text, cfg.tmpl);
    req.temperature = cfg.sampling_temperature;
    req.max_tokens = cfg.max_tokens;
    int correct = 0;
    for (int n = 1; n <= cfg.n_predictions; ++n) {
        req.seed = n;
        if (rule_evaluate(generate_parsed(gen, req, cfg.tmpl), entry.answer)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(cfg.n_predictions);
}

std::vector<ReasoningCandidate> generate_reasoning_candidates(const KbEntry& entry,
                                                              const Generator& gen,
                                                              const ReasoningConfig& cfg) {
    if (cfg.n_candidates < 1) throw KbError("N_c must be positive");
    GenRequest req;
    req.bundle = reasoning_generation_prompt(entry);
    req.temperature = cfg.sampling_temperature;
    req.max_tokens = cfg.max_tokens;
    std::vector<ReasoningCandidate> out;
    for (int i = 0; i < cfg.n_candidates; ++i) {
        req.seed = i + 1;
        std::string text;
        try {
            text = gen.generate(req);
        } catch (const GenerationError&) {
            continue;
        }
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        const auto last = text.find_last_not_of(" \t\r\n");
        ReasoningCandidate c;
        c.entry_id = entry.id;
        c.text = text.substr(first, last - first + 1);
        c.index = static_cast<std::size_t>(i);
        out.push_back(std::move(c));
    }
    return out;
}

const ReasoningCandidate& best_candidate(std::span<const ReasoningCandidate> candidates) {
    if (candidates.empty()) throw KbError("no reasoning candidates to choose from");
    const ReasoningCandidate* best = &candidates.front();
    for (const auto& c : candidates) {
        const bool better =
            c.score > best->score ||
            (c.score == best->score &&
             (c.text.size() < best->text.size() ||
              (c.text.size() == best->text.size() && c.index < best->index)));
        if (better) best = &c;
    }
    return *best;
}

ReasoningOutcome build_reasoning_context(KbEntry& entry, const Generator& gen,
                                         const ReasoningConfig& cfg) {
    ReasoningOutcome out;
    out.candidates = generate_reasoning_candidates(entry, gen, cfg);
    if (out.candidates.empty()) {
        throw KbError("entry '" + entry.id + "': no reasoning candidates were produced");
    }
    for (auto& c : out.candidates) {
        c.score = score_candidate(entry, c, gen, cfg);
        c.n_eval = cfg.n_predictions;
    }
    const auto& best = best_candidate(out.candidates);
    out.text = best.text;
    out.score = best.score;
    entry.reasoning = best.text;
    return out;
}

}  // namespace rcts
