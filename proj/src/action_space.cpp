#include "rcts/action_space.hpp"

#include <unordered_set>

#include "rcts/error.hpp"

namespace rcts {

ActionSpace::ActionSpace(std::vector<Action> actions) : actions_(std::move(actions)) {
    std::unordered_set<std::string> seen;
    for (const auto& a : actions_) {
        if (!a.entry) throw SearchError("action without an entry");
        if (!(a.sim > 0.0 && a.sim <= 1.0)) {
            throw SearchError("action '" + a.id() + "' similarity must lie in (0, 1]");
        }
        if (!seen.insert(a.id()).second) throw SearchError("duplicate action '" + a.id() + "'");
    }
}

ActionSpace make_action_space(const std::vector<RetrievalHit>& hits, const KbStore& store) {
    std::vector<Action> actions;
    actions.reserve(hits.size());
    for (const auto& h : hits) {
        const KbEntry* e = store.find(h.entry_id);
        if (!e) throw SearchError("retrieved id '" + h.entry_id + "' is not in the knowledge base");
        actions.push_back({e, h.norm_score});
    }
    return ActionSpace(std::move(actions));
}

}  // namespace rcts
