#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace rcts {

using Json = nlohmann::ordered_json;

/// One knowledge-base item: image reference, question, options, answer and
/// the (optional) generated reasoning context.
struct KbEntry {
    std::string id;
    std::optional<std::string> image_ref;
    std::string question;
    std::optional<std::vector<std::string>> options;
    std::string answer;
    std::optional<std::string> reasoning;
    Json meta = Json::object();
    // Fields not covered above, kept verbatim for round-trips.
    Json extra = Json::object();

    bool operator==(const KbEntry&) const = default;
};

/// Letter label for option `index` (0 -> 'A').
char option_letter(std::size_t index);

/// Throws KbError if the entry violates a field invariant.
void validate_entry(const KbEntry& entry);

KbEntry entry_from_json(const Json& record);
Json entry_to_json(const KbEntry& entry);

/// Insertion-ordered collection of entries with unique ids.
class KbStore {
public:
    KbStore() = default;

    /// Appends an entry. Throws KbError on a duplicate id or invalid entry.
    void add(KbEntry entry);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    const KbEntry* find(std::string_view id) const;
    KbEntry* find(std::string_view id);
    const KbEntry& at(std::size_t i) const { return entries_.at(i); }
    KbEntry& at(std::size_t i) { return entries_.at(i); }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }

    const std::vector<KbEntry>& entries() const noexcept { return entries_; }

private:
    std::vector<KbEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Reads a JSON-lines stream. Blank lines are skipped; errors name the
/// 1-based line number or the offending id.
KbStore parse_kb_jsonl(std::istream& in);
KbStore load_kb_jsonl(const std::string& path);

void save_kb_jsonl(const KbStore& store, std::ostream& out);
void save_kb_jsonl(const KbStore& store, const std::string& path);

}  // namespace rcts
