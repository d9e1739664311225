#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rcts/action_space.hpp"
#include "rcts/generator.hpp"
#include "rcts/prompt.hpp"
#include "rcts/rewards.hpp"
#include "rcts/rng.hpp"

namespace rcts {

struct SearchConfig {
    std::size_t depth = 3;       // K, examples per prompt
    std::size_t max_width = 3;   // children per node
    std::size_t rollouts = 10;   // P
    double c = 1.41421;
    double epsilon = 1e-6;
    bool early_stop = true;
    std::uint64_t rng_seed = 0;
    RewardConfig reward;
    GenerationSettings generation;

    /// Throws SearchError unless 1 <= K <= space_size, width >= 1, P >= 1.
    void validate(std::size_t space_size) const;
};

struct TreeNode {
    std::size_t node_id = 0;
    std::optional<std::size_t> parent;
    std::optional<std::size_t> action;  // index into the ActionSpace; empty at the root
    std::size_t depth = 0;
    std::vector<std::size_t> children;
    double q = 0.0;
    std::int64_t visits = 0;
    std::optional<ParsedResponse> response;  // root zero-shot and simulated leaves
    std::optional<RewardBreakdown> reward;   // simulated leaves only
    std::optional<std::size_t> simulation;   // 0-based rollout index of a leaf
    bool fully_expanded = false;
};

/// Arena of nodes; node ids are creation order and index the arena.
class SearchTree {
public:
    SearchTree();

    std::size_t size() const noexcept { return nodes_.size(); }
    const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
    TreeNode& node(std::size_t id) { return nodes_.at(id); }
    const TreeNode& root() const { return nodes_.front(); }
    TreeNode& root() { return nodes_.front(); }
    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

    std::size_t add_child(std::size_t parent, std::size_t action);

    /// Action indices from the root down to `id`.
    std::vector<std::size_t> path_actions(std::size_t id) const;

    /// Actions not on the path to `id` and not already taken by its children.
    std::vector<std::size_t> valid_actions(std::size_t id, std::size_t space_size) const;

    void refresh_fully_expanded(std::size_t id, std::size_t space_size, std::size_t max_width);

    Json to_json(const ActionSpace& space) const;

private:
    std::vector<TreeNode> nodes_;
};

enum class Termination { EarlyStop, RolloutCap, Exhausted };

std::string_view termination_name(Termination t);

struct LeafEvaluation {
    ParsedResponse response;
    RewardBreakdown reward;
};

/// Source of the zero-shot root response and of branch rewards.
class BranchEvaluator {
public:
    virtual ~BranchEvaluator() = default;
    virtual ParsedResponse zero_shot() = 0;
    /// `branch` holds the K actions in prompt order.
    virtual LeafEvaluation evaluate(std::span<const Action> branch) = 0;
};

/// K-shot generation scored with self-consistency and mutual rewards.
class HeuristicEvaluator final : public BranchEvaluator {
public:
    HeuristicEvaluator(Query query, const ActionSpace& space, const Generator& gen,
                       RewardConfig reward, GenerationSettings settings);

    ParsedResponse zero_shot() override;
    LeafEvaluation evaluate(std::span<const Action> branch) override;

    const std::vector<const KbEntry*>& mutual_samples() const noexcept { return mutual_; }

private:
    Query query_;
    const Generator& gen_;
    RewardConfig reward_;
    GenerationSettings settings_;
    std::vector<const KbEntry*> mutual_;
};

/// UCT_a = Q(a) + c * sqrt((ln max(N_father, 1) + 1) / (N(a) + eps)).
double uct_score(double q, std::int64_t visits, std::int64_t parent_visits, double c, double eps);

/// UCT of a node; the root uses its own visit count as the father count.
double uct_value(const SearchTree& tree, std::size_t id, double c, double eps);

/// Q'(p) = 1/2 * ((Q(p) N(p) + Q(c)) / (N(p) + 1) + max_i Q(child_i)).
double backprop_update(double q_parent, std::int64_t n_parent, double q_child, double max_child_q);

/// Sets the leaf value, counts its visit, then refreshes every ancestor.
void backpropagate(SearchTree& tree, std::size_t leaf, double q);

/// Draws a position in `valid` with probability s_i / sum_j s_j.
std::size_t sample_action(std::span<const Action> valid, Rng& rng);

/// Not-fully-expanded node of depth < K with the highest UCT (ties: lowest id).
std::optional<std::size_t> select_for_expansion(const SearchTree& tree, const SearchConfig& cfg);

struct SearchResult {
    std::vector<Action> branch;
    ParsedResponse response;
    RewardBreakdown reward;
    std::size_t rollouts_used = 0;
    Termination termination = Termination::RolloutCap;
    std::size_t tree_size = 0;
    bool early_stop_enabled = true;
    SearchTree tree;
};

/// Step-wise driver; run() executes the full search.
class MctsSearch {
public:
    MctsSearch(const ActionSpace& space, BranchEvaluator& evaluator, SearchConfig cfg);

    /// Generates the zero-shot root response. Early stopping is disabled
    /// when it fails to parse.
    void init_root();

    /// Rollout #1: argmax-similarity action at every depth.
    std::size_t greedy_rollout();

    /// One UCT-guided rollout producing a fresh leaf; empty when no node can
    /// be expanded.
    std::optional<std::size_t> rollout();

    std::optional<Termination> check_termination() const;

    SearchResult run();
    SearchResult result(Termination reason) const;

    const SearchTree& tree() const noexcept { return tree_; }
    std::size_t rollouts_used() const noexcept { return rollouts_used_; }
    bool early_stop_enabled() const noexcept { return early_stop_enabled_; }

private:
    std::size_t expand(std::size_t parent, std::size_t action);
    void simulate(std::size_t leaf);

    const ActionSpace& space_;
    BranchEvaluator& evaluator_;
    SearchConfig cfg_;
    SearchTree tree_;
    Rng rng_;
    std::size_t rollouts_used_ = 0;
    bool early_stop_enabled_ = true;
    std::vector<std::size_t> leaves_;  // in simulation order
};

SearchResult run_search(const ActionSpace& space, BranchEvaluator& evaluator, const SearchConfig& cfg);
SearchResult run_search(const Query& query, const ActionSpace& space, const Generator& gen,
                        const SearchConfig& cfg);

}  // namespace rcts
