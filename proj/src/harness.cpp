#include "rcts/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "rcts/action_space.hpp"
#include "rcts/error.hpp"
#include "rcts/prompt.hpp"
#include "rcts/rewards.hpp"
#include "rcts/rng.hpp"

namespace rcts {

Method parse_method(std::string_view name) {
    if (name == "zero_shot") return Method::ZeroShot;
    if (name == "icl_random") return Method::IclRandom;
    if (name == "vanilla_rag") return Method::VanillaRag;
    if (name == "rcts") return Method::Rcts;
    throw Error("unknown method '" + std::string(name) + "'");
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::ZeroShot: return "zero_shot";
        case Method::IclRandom: return "icl_random";
        case Method::VanillaRag: return "vanilla_rag";
        case Method::Rcts: return "rcts";
    }
    return "?";
}

double accuracy_percent(std::size_t correct, std::size_t total) {
    if (total == 0) return 0.0;
    const double pct = 100.0 * static_cast<double>(correct) / static_cast<double>(total);
    return std::round(pct * 100.0) / 100.0;
}

std::map<Method, MethodSummary> summarize(std::span<const EvalRecord> records) {
    std::map<Method, MethodSummary> out;
    for (const auto& r : records) {
        auto& s = out[r.method];
        ++s.total;
        if (r.correct) ++s.correct;
    }
    for (auto& [m, s] : out) s.accuracy = accuracy_percent(s.correct, s.total);
    return out;
}

std::vector<const KbEntry*> sample_random_examples(const KbStore& kb, std::string_view query_id,
                                                   std::size_t k, std::uint64_t seed) {
    std::vector<const KbEntry*> pool;
    for (const auto& e : kb) {
        if (e.id != query_id) pool.push_back(&e);
    }
    if (k > pool.size()) throw Error("not enough knowledge-base entries for K random examples");
    Rng rng(derive_seed(seed, "icl:" + std::string(query_id)));
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
    }
    pool.resize(k);
    return pool;
}

namespace {

ParsedResponse answer_with(const Query& query, std::span<const KbEntry* const> examples,
                           const Generator& gen, const GenerationSettings& settings,
                           bool with_reasoning) {
    GenRequest req;
    req.bundle = assemble_prompt(query, examples, settings.tmpl, with_reasoning);
    req.temperature = settings.greedy_temperature;
    req.max_tokens = settings.max_tokens;
    return generate_parsed(gen, req, settings.tmpl);
}

std::vector<RetrievalHit> retrieve_for(const KbEntry& query, const EmbeddingIndex& index,
                                       const EmbeddingProvider& provider, std::size_t n) {
    const auto q = embed(provider, query.question, query.image_ref);
    return retrieve_top_n(q, index, n, query.id);
}

}  // namespace

EvalRecord evaluate_query(const KbEntry& entry, Method method, const KbStore& kb,
                          const EmbeddingIndex& index, const EmbeddingProvider& provider,
                          const Generator& gen, const EvalConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const Query query = Query::from_entry(entry);
    const auto& settings = cfg.search.generation;
    const std::size_t k = cfg.search.depth;

    EvalRecord rec;
    rec.query_id = entry.id;
    rec.method = method;
    rec.reference = entry.answer;

    ParsedResponse response;
    switch (method) {
        case Method::ZeroShot:
            response = answer_with(query, {}, gen, settings, false);
            break;
        case Method::IclRandom: {
            const auto examples = sample_random_examples(kb, entry.id, k, cfg.seed);
            for (const auto* e : examples) rec.context_ids.push_back(e->id);
            response = answer_with(query, examples, gen, settings, settings.with_reasoning);
            break;
        }
        case Method::VanillaRag: {
            const auto hits = retrieve_for(entry, index, provider, k);
            std::vector<const KbEntry*> examples;
            for (const auto& h : hits) {
                const KbEntry* e = kb.find(h.entry_id);
                if (!e) throw RetrievalError("retrieved id '" + h.entry_id + "' not in knowledge base");
                examples.push_back(e);
                rec.context_ids.push_back(e->id);
            }
            response = answer_with(query, examples, gen, settings, settings.with_reasoning);
            break;
        }
        case Method::Rcts: {
            const auto hits = retrieve_for(entry, index, provider, cfg.n_retrieve);
            const auto space = make_action_space(hits, kb);
            SearchConfig sc = cfg.search;
            sc.rng_seed = derive_seed(cfg.seed, "rcts:" + entry.id);
            const auto result = run_search(query, space, gen, sc);
            for (const auto& a : result.branch) rec.context_ids.push_back(a.id());
            rec.rollouts_used = result.rollouts_used;
            rec.termination = result.termination;
            response = result.response;
            break;
        }
    }
    rec.predicted = response.answer;
    rec.correct = rule_evaluate(response, entry.answer);
    rec.wall_time = std::chrono::steady_clock::now() - start;
    return rec;
}

EvalReport run_eval(const KbStore& dataset, const KbStore& kb, const EmbeddingIndex& index,
                    const EmbeddingProvider& provider, const Generator& gen, const EvalConfig& cfg) {
    if (index.dim() != provider.dim()) {
        throw RetrievalError("dim mismatch: index " + std::to_string(index.dim()) + " vs provider " +
                             std::to_string(provider.dim()));
    }
    index.check_against(kb);
    EvalReport report;
    for (Method m : cfg.methods) {
        for (const auto& q : dataset) {
            report.records.push_back(evaluate_query(q, m, kb, index, provider, gen, cfg));
        }
    }
    report.summary = summarize(report.records);

    const auto& s = cfg.search;
    Json c = Json::object();
    Json methods = Json::array();
    for (Method m : cfg.methods) methods.push_back(std::string(method_name(m)));
    c["methods"] = methods;
    c["k"] = s.depth;
    c["n"] = cfg.n_retrieve;
    c["rollouts"] = s.rollouts;
    c["max_width"] = s.max_width;
    c["c"] = s.c;
    c["epsilon"] = s.epsilon;
    c["early_stop"] = s.early_stop;
    c["alpha"] = s.reward.alpha;
    c["n_self"] = s.reward.n_self;
    c["n_mutual"] = s.reward.n_mutual;
    c["template"] = std::string(template_name(s.generation.tmpl));
    c["with_reasoning"] = s.generation.with_reasoning;
    c["seed"] = cfg.seed;
    c["queries"] = dataset.size();
    for (auto it = cfg.extra_config.begin(); it != cfg.extra_config.end(); ++it) {
        c[it.key()] = it.value();
    }
    report.config = std::move(c);
    return report;
}

Json report_to_json(const EvalReport& report) {
    Json summary = Json::object();
    for (const auto& [m, s] : report.summary) {
        summary[std::string(method_name(m))] = {
            {"accuracy", s.accuracy}, {"correct", s.correct}, {"total", s.total}};
    }
    Json records = Json::array();
    for (const auto& r : report.records) {
        Json j = Json::object();
        j["query_id"] = r.query_id;
        j["method"] = std::string(method_name(r.method));
        j["predicted"] = r.predicted ? Json(*r.predicted) : Json(nullptr);
        j["reference"] = r.reference;
        j["correct"] = r.correct;
        j["context"] = r.context_ids;
        if (r.rollouts_used) j["rollouts_used"] = *r.rollouts_used;
        if (r.termination) j["termination"] = std::string(termination_name(*r.termination));
        records.push_back(std::move(j));
    }
    Json out = Json::object();
    out["config"] = report.config;
    out["summary"] = summary;
    out["records"] = records;
    return out;
}

Json timings_to_json(const EvalReport& report) {
    Json out = Json::array();
    for (const auto& r : report.records) {
        out.push_back({{"query_id", r.query_id},
                       {"method", std::string(method_name(r.method))},
                       {"wall_time_ms",
                        std::chrono::duration<double, std::milli>(r.wall_time).count()}});
    }
    return out;
}

Json search_result_to_json(const SearchResult& result) {
    Json branch = Json::array();
    for (const auto& a : result.branch) branch.push_back({{"entry_id", a.id()}, {"sim", a.sim}});
    const auto& rw = result.reward;
    Json out = Json::object();
    out["branch"] = branch;
    out["answer"] = result.response.answer ? Json(*result.response.answer) : Json(nullptr);
    out["reasoning"] = result.response.reasoning ? Json(*result.response.reasoning) : Json(nullptr);
    out["reward"] = {{"q_self", rw.q_self},
                     {"q_mutual", rw.q_mutual},
                     {"q_combined", rw.q_combined},
                     {"self_verdicts", rw.self_verdicts},
                     {"mutual_verdicts", rw.mutual_verdicts}};
    out["rollouts_used"] = result.rollouts_used;
    out["termination"] = std::string(termination_name(result.termination));
    out["tree_size"] = result.tree_size;
    return out;
}

// ---------------------------------------------------------------------------
// Multiple-choice builder

std::vector<LabeledStatement> load_labeled_statements(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw KbError("cannot open '" + path + "'");
    std::vector<LabeledStatement> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = Json::parse(line);
            LabeledStatement s;
            s.id = j.at("id").get<std::string>();
            s.statement = j.contains("statement") ? j.at("statement").get<std::string>()
                                                  : j.at("caption").get<std::string>();
            s.relation = j.at("relation").get<std::string>();
            if (auto it = j.find("image"); it != j.end() && !it->is_null()) {
                s.image_ref = it->get<std::string>();
            }
            out.push_back(std::move(s));
        } catch (const Json::exception& ex) {
            throw KbError("line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

std::vector<std::string> load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw KbError("cannot open '" + path + "'");
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(first, last - first + 1));
    }
    return out;
}

KbEntry make_multiple_choice(const LabeledStatement& record,
                             std::span<const std::string> vocabulary, std::uint64_t seed) {
    if (vocabulary.size() < kMcqOptions) {
        throw KbError("vocabulary needs at least " + std::to_string(kMcqOptions) + " relations");
    }
    std::vector<std::string> rest;
    bool found = false;
    for (const auto& v : vocabulary) {
        if (v == record.relation) {
            found = true;
        } else {
            rest.push_back(v);
        }
    }
    if (!found) {
        throw KbError("record '" + record.id + "': relation '" + record.relation +
                      "' is not in the vocabulary");
    }
    Rng rng(derive_seed(seed, "mcq:" + record.id));
    for (std::size_t i = 0; i + 1 < kMcqOptions; ++i) {
        std::swap(rest[i], rest[i + rng.uniform_index(rest.size() - i)]);
    }
    std::vector<std::string> options(rest.begin(), rest.begin() + (kMcqOptions - 1));
    options.push_back(record.relation);
    rng.shuffle(options.begin(), options.end());
    const auto gold = std::find(options.begin(), options.end(), record.relation) - options.begin();

    std::string masked = record.statement;
    if (auto pos = masked.find(record.relation); pos != std::string::npos) {
        masked.replace(pos, record.relation.size(), "___");
    }
    KbEntry e;
    e.id = record.id;
    e.image_ref = record.image_ref;
    e.question = masked + "\nWhich spatial relation fills in the blank?";
    e.options = std::move(options);
    e.answer = std::string(1, option_letter(static_cast<std::size_t>(gold)));
    e.meta = {{"source", "multiple-choice-variant"}, {"relation", record.relation}};
    return e;
}

KbStore build_multiple_choice_variant(std::span<const LabeledStatement> records,
                                      std::span<const std::string> vocabulary,
                                      std::uint64_t seed) {
    std::unordered_set<std::string> distinct(vocabulary.begin(), vocabulary.end());
    if (distinct.size() != vocabulary.size()) throw KbError("vocabulary contains duplicates");
    KbStore store;
    for (const auto& r : records) store.add(make_multiple_choice(r, vocabulary, seed));
    return store;
}

}  // namespace rcts
