#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rcts/generator.hpp"
#include "rcts/knowledge_base.hpp"

namespace rcts {

struct ReasoningConfig {
    int n_candidates = 10;   // N_c
    int n_predictions = 10;  // N_p
    TemplateId tmpl = TemplateId::ScienceQA;
    double sampling_temperature = 0.7;
    int max_tokens = 1024;
};

struct ReasoningCandidate {
    std::string entry_id;
    std::string text;
    double score = 0.0;  // correct / n_eval
    int n_eval = 0;
    std::size_t index = 0;  // generation order; candidate i used seed i + 1
};

/// Fraction of N_p answers (seeds 1..N_p) re-derived from question plus
/// candidate reasoning that match the entry's answer. Failed generations
/// count as misses.
double score_candidate(const KbEntry& entry, const ReasoningCandidate& candidate,
                       const Generator& gen, const ReasoningConfig& cfg);

/// N_c candidate texts from seeds 1..N_c. Failed or empty generations are dropped.
std::vector<ReasoningCandidate> generate_reasoning_candidates(const KbEntry& entry,
                                                              const Generator& gen,
                                                              const ReasoningConfig& cfg);

/// Highest score; ties go to the shorter text, then the lower index.
const ReasoningCandidate& best_candidate(std::span<const ReasoningCandidate> candidates);

struct ReasoningOutcome {
    std::string text;
    double score = 0.0;
    std::vector<ReasoningCandidate> candidates;
};

/// Generates, scores and picks a reasoning context and writes it into
/// `entry.reasoning`. Throws KbError (leaving the entry untouched) when no
/// candidate could be produced.
ReasoningOutcome build_reasoning_context(KbEntry& entry, const Generator& gen,
                                         const ReasoningConfig& cfg);

}  // namespace rcts
