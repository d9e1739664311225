#include "rcts/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rcts/error.hpp"

namespace rcts {

void SearchConfig::validate(std::size_t space_size) const {
    if (space_size == 0) throw SearchError("action space is empty");
    if (depth < 1 || depth > space_size) {
        throw SearchError("depth K = " + std::to_string(depth) + " must lie in [1, " +
                          std::to_string(space_size) + "]");
    }
    if (max_width < 1) throw SearchError("max_width must be at least 1");
    if (rollouts < 1) throw SearchError("rollouts P must be at least 1");
    if (!(epsilon > 0.0)) throw SearchError("epsilon must be positive");
    reward.validate();
}

std::string_view termination_name(Termination t) {
    switch (t) {
        case Termination::EarlyStop: return "early_stop";
        case Termination::RolloutCap: return "rollout_cap";
        case Termination::Exhausted: return "exhausted";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Tree

SearchTree::SearchTree() { nodes_.push_back(TreeNode{}); }

std::size_t SearchTree::add_child(std::size_t parent, std::size_t action) {
    TreeNode child;
    child.node_id = nodes_.size();
    child.parent = parent;
    child.action = action;
    child.depth = nodes_.at(parent).depth + 1;
    nodes_.push_back(std::move(child));
    nodes_[parent].children.push_back(nodes_.back().node_id);
    return nodes_.back().node_id;
}

std::vector<std::size_t> SearchTree::path_actions(std::size_t id) const {
    std::vector<std::size_t> out;
    for (const TreeNode* n = &nodes_.at(id); n->action; n = &nodes_[*n->parent]) {
        out.push_back(*n->action);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<std::size_t> SearchTree::valid_actions(std::size_t id, std::size_t space_size) const {
    std::vector<bool> used(space_size, false);
    for (auto a : path_actions(id)) used[a] = true;
    for (auto c : nodes_.at(id).children) used[*nodes_[c].action] = true;
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < space_size; ++a) {
        if (!used[a]) out.push_back(a);
    }
    return out;
}

void SearchTree::refresh_fully_expanded(std::size_t id, std::size_t space_size,
                                        std::size_t max_width) {
    auto& n = nodes_.at(id);
    n.fully_expanded = n.children.size() >= max_width || valid_actions(id, space_size).empty();
}

Json SearchTree::to_json(const ActionSpace& space) const {
    Json nodes = Json::array();
    for (const auto& n : nodes_) {
        Json j = Json::object();
        j["node_id"] = n.node_id;
        j["parent"] = n.parent ? Json(*n.parent) : Json(nullptr);
        j["action_entry_id"] = n.action ? Json(space[*n.action].id()) : Json(nullptr);
        j["depth"] = n.depth;
        j["Q"] = n.q;
        j["N"] = n.visits;
        j["response_answer"] =
            n.response && n.response->answer ? Json(*n.response->answer) : Json(nullptr);
        nodes.push_back(std::move(j));
    }
    Json out = Json::object();
    out["tree_size"] = nodes_.size();
    out["nodes"] = std::move(nodes);
    return out;
}

// ---------------------------------------------------------------------------
// Formulas

double uct_score(double q, std::int64_t visits, std::int64_t parent_visits, double c, double eps) {
    const double father = static_cast<double>(std::max<std::int64_t>(parent_visits, 1));
    return q + c * std::sqrt((std::log(father) + 1.0) / (static_cast<double>(visits) + eps));
}

double uct_value(const SearchTree& tree, std::size_t id, double c, double eps) {
    const auto& n = tree.node(id);
    const auto father_visits = n.parent ? tree.node(*n.parent).visits : n.visits;
    return uct_score(n.q, n.visits, father_visits, c, eps);
}

double backprop_update(double q_parent, std::int64_t n_parent, double q_child, double max_child_q) {
    const double n = static_cast<double>(n_parent);
    return 0.5 * ((q_parent * n + q_child) / (n + 1.0) + max_child_q);
}

void backpropagate(SearchTree& tree, std::size_t leaf, double q) {
    auto& l = tree.node(leaf);
    l.q = q;
    l.visits += 1;
    std::size_t child = leaf;
    while (auto parent = tree.node(child).parent) {
        auto& p = tree.node(*parent);
        double best = 0.0;
        for (auto c : p.children) best = std::max(best, tree.node(c).q);
        p.q = backprop_update(p.q, p.visits, tree.node(child).q, best);
        p.visits += 1;
        child = *parent;
    }
}

std::size_t sample_action(std::span<const Action> valid, Rng& rng) {
    if (valid.empty()) throw SearchError("no valid actions to sample");
    double total = 0.0;
    for (const auto& a : valid) total += a.sim;
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < valid.size(); ++i) {
        acc += valid[i].sim;
        if (u < acc) return i;
    }
    return valid.size() - 1;  // u landed on the rounding slack at the top
}

std::optional<std::size_t> select_for_expansion(const SearchTree& tree, const SearchConfig& cfg) {
    std::optional<std::size_t> best;
    double best_uct = 0.0;
    for (const auto& n : tree.nodes()) {
        if (n.depth >= cfg.depth || n.fully_expanded) continue;
        const double u = uct_value(tree, n.node_id, cfg.c, cfg.epsilon);
        if (!best || u > best_uct) {
            best = n.node_id;
            best_uct = u;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Evaluator

HeuristicEvaluator::HeuristicEvaluator(Query query, const ActionSpace& space, const Generator& gen,
                                       RewardConfig reward, GenerationSettings settings)
    : query_(std::move(query)),
      gen_(gen),
      reward_(reward),
      settings_(settings),
      mutual_(select_mutual_samples(space, reward)) {}

ParsedResponse HeuristicEvaluator::zero_shot() {
    GenRequest req;
    req.bundle = assemble_prompt(query_, std::vector<KbEntry>{}, settings_.tmpl, false);
    req.temperature = settings_.greedy_temperature;
    req.max_tokens = settings_.max_tokens;
    return generate_parsed(gen_, req, settings_.tmpl);
}

LeafEvaluation HeuristicEvaluator::evaluate(std::span<const Action> branch) {
    std::vector<const KbEntry*> examples;
    examples.reserve(branch.size());
    for (const auto& a : branch) examples.push_back(a.entry);
    GenRequest req;
    req.bundle = assemble_prompt(query_, examples, settings_.tmpl, settings_.with_reasoning);
    req.temperature = settings_.greedy_temperature;
    req.max_tokens = settings_.max_tokens;
    LeafEvaluation out;
    out.response = generate_parsed(gen_, req, settings_.tmpl);
    out.reward = evaluate_rewards(query_, out.response, mutual_, gen_, reward_, settings_);
    return out;
}

// ---------------------------------------------------------------------------
// Search driver

MctsSearch::MctsSearch(const ActionSpace& space, BranchEvaluator& evaluator, SearchConfig cfg)
    : space_(space), evaluator_(evaluator), cfg_(std::move(cfg)), rng_(cfg_.rng_seed) {
    cfg_.validate(space_.size());
    early_stop_enabled_ = cfg_.early_stop;
}

void MctsSearch::init_root() {
    auto& root = tree_.root();
    root.q = 0.0;
    root.visits = 0;
    root.response = evaluator_.zero_shot();
    if (!root.response->parse_ok) early_stop_enabled_ = false;
}

std::size_t MctsSearch::expand(std::size_t parent, std::size_t action) {
    const auto child = tree_.add_child(parent, action);
    tree_.refresh_fully_expanded(parent, space_.size(), cfg_.max_width);
    tree_.refresh_fully_expanded(child, space_.size(), cfg_.max_width);
    return child;
}

void MctsSearch::simulate(std::size_t leaf) {
    std::vector<Action> branch;
    for (auto a : tree_.path_actions(leaf)) branch.push_back(space_[a]);
    auto eval = evaluator_.evaluate(branch);
    const double q = eval.reward.q_combined;
    if (!(q >= 0.0 && q <= 1.0)) throw SearchError("branch reward outside [0, 1]");
    auto& node = tree_.node(leaf);
    node.response = std::move(eval.response);
    node.reward = std::move(eval.reward);
    node.simulation = rollouts_used_;
    backpropagate(tree_, leaf, q);
    leaves_.push_back(leaf);
    ++rollouts_used_;
}

std::size_t MctsSearch::greedy_rollout() {
    std::size_t node = 0;
    while (tree_.node(node).depth < cfg_.depth) {
        const auto valid = tree_.valid_actions(node, space_.size());
        if (valid.empty()) throw SearchError("greedy branch ran out of actions");
        std::size_t best = valid.front();
        for (auto a : valid) {
            if (space_[a].sim > space_[best].sim) best = a;
        }
        node = expand(node, best);
    }
    simulate(node);
    return node;
}

std::optional<std::size_t> MctsSearch::rollout() {
    while (auto selected = select_for_expansion(tree_, cfg_)) {
        std::size_t node = *selected;
        bool stuck = false;
        while (tree_.node(node).depth < cfg_.depth) {
            const auto valid = tree_.valid_actions(node, space_.size());
            if (valid.empty()) {
                tree_.node(node).fully_expanded = true;
                stuck = true;
                break;
            }
            std::vector<Action> candidates;
            candidates.reserve(valid.size());
            for (auto a : valid) candidates.push_back(space_[a]);
            node = expand(node, valid[sample_action(candidates, rng_)]);
        }
        if (stuck) continue;
        simulate(node);
        return node;
    }
    return std::nullopt;
}

std::optional<Termination> MctsSearch::check_termination() const {
    if (early_stop_enabled_ && rollouts_used_ == 1) {
        const auto& root = *tree_.root().response;
        const auto& greedy = *tree_.node(leaves_.front()).response;
        if (root.parse_ok && greedy.parse_ok && *root.answer == *greedy.answer) {
            return Termination::EarlyStop;
        }
    }
    if (!select_for_expansion(tree_, cfg_)) return Termination::Exhausted;
    if (rollouts_used_ >= cfg_.rollouts) return Termination::RolloutCap;
    return std::nullopt;
}

SearchResult MctsSearch::result(Termination reason) const {
    if (leaves_.empty()) throw SearchError("no branch has been simulated");
    std::size_t best = leaves_.front();
    for (auto leaf : leaves_) {
        if (tree_.node(leaf).q > tree_.node(best).q) best = leaf;
    }
    SearchResult r;
    for (auto a : tree_.path_actions(best)) r.branch.push_back(space_[a]);
    r.response = *tree_.node(best).response;
    r.reward = *tree_.node(best).reward;
    r.rollouts_used = rollouts_used_;
    r.termination = reason;
    r.tree_size = tree_.size();
    r.early_stop_enabled = early_stop_enabled_;
    r.tree = tree_;
    return r;
}

SearchResult MctsSearch::run() {
    init_root();
    greedy_rollout();
    while (true) {
        if (auto reason = check_termination()) return result(*reason);
        if (!rollout()) return result(Termination::Exhausted);
    }
}

SearchResult run_search(const ActionSpace& space, BranchEvaluator& evaluator, const SearchConfig& cfg) {
    MctsSearch search(space, evaluator, cfg);
    return search.run();
}

SearchResult run_search(const Query& query, const ActionSpace& space, const Generator& gen,
                        const SearchConfig& cfg) {
    cfg.validate(space.size());
    HeuristicEvaluator evaluator(query, space, gen, cfg.reward, cfg.generation);
    return run_search(space, evaluator, cfg);
}

}  // namespace rcts
