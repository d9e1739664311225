#include "rcts/knowledge_base.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "rcts/error.hpp"

namespace rcts {

namespace {

constexpr const char* kKnownFields[] = {"id", "image", "question", "options",
                                        "answer", "reasoning", "meta"};

bool is_known_field(const std::string& key) {
    for (const char* k : kKnownFields) {
        if (key == k) return true;
    }
    return false;
}

std::string require_string(const Json& record, const char* key) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string()) {
        throw KbError(std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const Json& record, const char* key) {
    auto it = record.find(key);
    if (it == record.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
        throw KbError(std::string("field '") + key + "' must be a string or null");
    }
    return it->get<std::string>();
}

}  // namespace

char option_letter(std::size_t index) {
    if (index >= 26) throw KbError("more than 26 options are not supported");
    return static_cast<char>('A' + index);
}

void validate_entry(const KbEntry& e) {
    if (e.id.empty()) throw KbError("entry id must be nonempty");
    if (e.question.empty()) throw KbError("entry '" + e.id + "': question must be nonempty");
    if (e.answer.empty()) throw KbError("entry '" + e.id + "': answer must be nonempty");
    if (e.reasoning && e.reasoning->empty()) {
        throw KbError("entry '" + e.id + "': reasoning, when present, must be nonempty");
    }
    if (e.options) {
        const auto& opts = *e.options;
        if (opts.empty() || opts.size() > 26) {
            throw KbError("entry '" + e.id + "': options must hold 1..26 items");
        }
        const bool letter = e.answer.size() == 1 && e.answer[0] >= 'A' &&
                            e.answer[0] < static_cast<char>('A' + opts.size());
        if (!letter) {
            throw KbError("entry '" + e.id + "': answer '" + e.answer +
                          "' is not an option letter in range");
        }
    }
    if (!e.meta.is_object()) throw KbError("entry '" + e.id + "': meta must be an object");
}

KbEntry entry_from_json(const Json& record) {
    if (!record.is_object()) throw KbError("record must be a JSON object");
    KbEntry e;
    e.id = require_string(record, "id");
    e.image_ref = optional_string(record, "image");
    e.question = require_string(record, "question");
    e.answer = require_string(record, "answer");
    e.reasoning = optional_string(record, "reasoning");
    if (auto it = record.find("options"); it != record.end() && !it->is_null()) {
        if (!it->is_array()) throw KbError("field 'options' must be an array or null");
        std::vector<std::string> opts;
        for (const auto& o : *it) {
            if (!o.is_string()) throw KbError("options must be strings");
            opts.push_back(o.get<std::string>());
        }
        e.options = std::move(opts);
    }
    if (auto it = record.find("meta"); it != record.end() && !it->is_null()) {
        e.meta = *it;
    }
    for (auto it = record.begin(); it != record.end(); ++it) {
        if (!is_known_field(it.key())) e.extra[it.key()] = it.value();
    }
    validate_entry(e);
    return e;
}

Json entry_to_json(const KbEntry& e) {
    Json j = Json::object();
    j["id"] = e.id;
    j["image"] = e.image_ref ? Json(*e.image_ref) : Json(nullptr);
    j["question"] = e.question;
    j["options"] = e.options ? Json(*e.options) : Json(nullptr);
    j["answer"] = e.answer;
    j["reasoning"] = e.reasoning ? Json(*e.reasoning) : Json(nullptr);
    j["meta"] = e.meta;
    for (auto it = e.extra.begin(); it != e.extra.end(); ++it) j[it.key()] = it.value();
    return j;
}

void KbStore::add(KbEntry entry) {
    validate_entry(entry);
    if (index_.count(entry.id)) throw KbError("duplicate id '" + entry.id + "'");
    index_.emplace(entry.id, entries_.size());
    entries_.push_back(std::move(entry));
}

const KbEntry* KbStore::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &entries_[it->second];
}

KbEntry* KbStore::find(std::string_view id) {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &entries_[it->second];
}

KbStore parse_kb_jsonl(std::istream& in) {
    KbStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        KbEntry entry;
        try {
            entry = entry_from_json(Json::parse(line));
        } catch (const Json::exception& ex) {
            throw KbError("line " + std::to_string(lineno) + ": malformed JSON: " + ex.what());
        } catch (const KbError& ex) {
            throw KbError("line " + std::to_string(lineno) + ": " + ex.what());
        }
        if (store.find(entry.id)) {
            throw KbError("line " + std::to_string(lineno) + ": duplicate id '" + entry.id + "'");
        }
        store.add(std::move(entry));
    }
    return store;
}

KbStore load_kb_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw KbError("cannot open '" + path + "'");
    return parse_kb_jsonl(in);
}

void save_kb_jsonl(const KbStore& store, std::ostream& out) {
    for (const auto& e : store) out << entry_to_json(e).dump() << '\n';
}

void save_kb_jsonl(const KbStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw KbError("cannot write '" + path + "'");
    save_kb_jsonl(store, out);
}

}  // namespace rcts
