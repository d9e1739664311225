#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rcts/knowledge_base.hpp"
#include "rcts/retrieval.hpp"

namespace rcts {

/// A retrieved entry paired with its normalized similarity s_i.
struct Action {
    const KbEntry* entry = nullptr;
    double sim = 0.0;

    const std::string& id() const { return entry->id; }
};

/// Ordered candidate set for the tree search. Entries are borrowed; the
/// backing KbStore must outlive the space.
class ActionSpace {
public:
    ActionSpace() = default;
    explicit ActionSpace(std::vector<Action> actions);

    std::size_t size() const noexcept { return actions_.size(); }
    bool empty() const noexcept { return actions_.empty(); }
    const Action& operator[](std::size_t i) const { return actions_[i]; }
    std::span<const Action> actions() const noexcept { return actions_; }

private:
    std::vector<Action> actions_;
};

/// Resolves hits against the store, keeping retrieval order.
ActionSpace make_action_space(const std::vector<RetrievalHit>& hits, const KbStore& store);

}  // namespace rcts
