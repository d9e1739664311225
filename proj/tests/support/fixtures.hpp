#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rcts/action_space.hpp"
#include "rcts/backends.hpp"
#include "rcts/knowledge_base.hpp"
#include "rcts/mcts.hpp"
#include "rcts/retrieval.hpp"
#include "rcts/rng.hpp"

namespace rcts::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// l x d matrix with entries uniform in [-1, 1).
TokenEmbeddings random_tokens(Rng& rng, std::size_t rows, std::size_t dim);

/// Store of `n` plain entries "e00", "e01", ... and a space over them with
/// the given similarities (in store order).
struct SpaceFixture {
    KbStore store;
    ActionSpace space;
};
SpaceFixture make_space(const std::vector<double>& sims);

/// Evaluator backed by a table from ordered branch (entry ids joined by
/// ',') to reward. Unlisted branches score `missing`. Every call is logged.
class TableEvaluator final : public BranchEvaluator {
public:
    TableEvaluator(std::map<std::string, double> table, std::string zero_shot_answer = "Z",
                   std::string branch_answer = "B", double missing = 0.0);

    ParsedResponse zero_shot() override;
    LeafEvaluation evaluate(std::span<const Action> branch) override;

    static std::string key(std::span<const Action> branch);

    const std::vector<std::string>& calls() const noexcept { return calls_; }

private:
    std::map<std::string, double> table_;
    std::string zero_shot_answer_;
    std::string branch_answer_;
    double missing_;
    std::vector<std::string> calls_;
};

// ---------------------------------------------------------------------------
// Golden-example family: each query has 20 retrievable neighbours sharing
// its answer; exactly one of them (placed at similarity rank 4..20) carries
// a reasoning clue that lets the scripted model answer correctly.

struct GoldenFamily {
    KbStore kb;
    KbStore dataset;
    std::map<std::string, std::size_t> golden_rank;   // query id -> 1-based rank
    std::map<std::string, std::string> golden_id;     // query id -> KB id
    std::vector<MockRule> rules;
    std::string fallback = "I cannot tell.";
    std::size_t dim = 64;
    std::uint64_t embed_seed = 0;
};

inline constexpr std::size_t kGoldenNeighbours = 20;

/// When `zero_shot_agrees` is set, the zero-shot answer equals the
/// neighbour-only answer so the search stops after its greedy rollout.
GoldenFamily make_golden_family(std::size_t queries, std::uint64_t seed,
                                bool zero_shot_agrees = false);

/// Writes kb.jsonl, dataset.jsonl and mock.jsonl into `dir`.
void write_golden_family(const GoldenFamily& family, const std::filesystem::path& dir);

}  // namespace rcts::testing
