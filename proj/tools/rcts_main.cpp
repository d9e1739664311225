// rcts command-line tool.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rcts/action_space.hpp"
#include "rcts/backends.hpp"
#include "rcts/error.hpp"
#include "rcts/harness.hpp"
#include "rcts/knowledge_base.hpp"
#include "rcts/mcts.hpp"
#include "rcts/prompt.hpp"
#include "rcts/reasoning.hpp"
#include "rcts/retrieval.hpp"

namespace {

using namespace rcts;

struct BackendOpts {
    std::string backend = "mock";
    std::string endpoint;
    std::string model = "default";
    std::string mock_script;
};

struct EmbedOpts {
    std::size_t dim = 64;
    std::uint64_t seed = 0;
    std::string image_root;
};

struct SearchOpts {
    std::size_t k = 3;
    std::size_t n = 20;
    std::size_t rollouts = 10;
    std::size_t max_width = 3;
    double alpha = 0.2;
    double c = 1.41421;
    double epsilon = 1e-6;
    int n_self = 5;
    int n_mutual = 5;
    bool no_early_stop = false;
    std::string tmpl = "scienceqa";
    bool with_reasoning = false;
    std::uint64_t seed = 0;
};

void add_backend_flags(CLI::App* cmd, BackendOpts& o) {
    cmd->add_option("--backend", o.backend, "Generation backend")
        ->check(CLI::IsMember({"http", "mock"}))
        ->capture_default_str();
    cmd->add_option("--endpoint", o.endpoint, "Chat-completions base URL, e.g. http://host:8000/v1");
    cmd->add_option("--model", o.model, "Model name sent to the HTTP endpoint")->capture_default_str();
    cmd->add_option("--mock-script", o.mock_script, "JSONL rule file for the mock backend");
}

void add_embed_flags(CLI::App* cmd, EmbedOpts& o, bool dim_flag) {
    if (dim_flag) cmd->add_option("--dim", o.dim, "Embedding dimension")->capture_default_str();
    cmd->add_option("--embed-seed", o.seed, "Hash-embedder seed")->capture_default_str();
    cmd->add_option("--image-root", o.image_root, "Directory image refs must resolve under");
}

void add_search_flags(CLI::App* cmd, SearchOpts& o) {
    cmd->add_option("--k", o.k, "Examples per prompt (K)")->capture_default_str();
    cmd->add_option("--n", o.n, "Action-space size (N)")->capture_default_str();
    cmd->add_option("--rollouts", o.rollouts, "Rollout cap (P)")->capture_default_str();
    cmd->add_option("--max-width", o.max_width, "Children per node")->capture_default_str();
    cmd->add_option("--alpha", o.alpha, "Weight of the self-consistency reward")->capture_default_str();
    cmd->add_option("--c", o.c, "UCT exploration constant")->capture_default_str();
    cmd->add_option("--epsilon", o.epsilon, "UCT visit-count guard")->capture_default_str();
    cmd->add_option("--n-self", o.n_self, "Self-consistency samples")->capture_default_str();
    cmd->add_option("--n-mutual", o.n_mutual, "Mutual reference questions")->capture_default_str();
    cmd->add_flag("--no-early-stop", o.no_early_stop, "Disable early stopping");
    cmd->add_option("--template", o.tmpl, "scienceqa | mmmu | mathv | short-answer")
        ->capture_default_str();
    cmd->add_flag("--with-reasoning", o.with_reasoning, "Include reasoning contexts in examples");
    cmd->add_option("--seed", o.seed, "Search seed")->capture_default_str();
}

std::unique_ptr<Generator> make_generator(const BackendOpts& o) {
    if (o.backend == "mock") {
        if (o.mock_script.empty()) throw Error("--backend mock requires --mock-script");
        return std::make_unique<MockGenerator>(MockGenerator::load(o.mock_script));
    }
    if (o.endpoint.empty()) throw Error("--backend http requires --endpoint");
    HttpConfig cfg;
    cfg.endpoint = o.endpoint;
    cfg.model = o.model;
    return std::make_unique<HttpGenerator>(cfg);
}

HashEmbedder make_embedder(const EmbedOpts& o, std::size_t dim) {
    std::optional<std::filesystem::path> root;
    if (!o.image_root.empty()) root = o.image_root;
    return HashEmbedder(dim, o.seed, root);
}

SearchConfig make_search_config(const SearchOpts& o) {
    SearchConfig cfg;
    cfg.depth = o.k;
    cfg.max_width = o.max_width;
    cfg.rollouts = o.rollouts;
    cfg.c = o.c;
    cfg.epsilon = o.epsilon;
    cfg.early_stop = !o.no_early_stop;
    cfg.rng_seed = o.seed;
    cfg.reward.alpha = o.alpha;
    cfg.reward.n_self = o.n_self;
    cfg.reward.n_mutual = o.n_mutual;
    cfg.reward.validate();
    cfg.generation.tmpl = parse_template_id(o.tmpl);
    cfg.generation.with_reasoning = o.with_reasoning;
    return cfg;
}

void write_json(const Json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

// Loads the index and checks it against the KB and the requested dim.
EmbeddingIndex load_checked_index(const std::string& path, const KbStore& kb,
                                  std::optional<std::size_t> expected_dim) {
    auto index = read_index(path);
    index.check_against(kb);
    if (expected_dim && *expected_dim != index.dim()) {
        throw RetrievalError("dim mismatch: --dim " + std::to_string(*expected_dim) + " vs index " +
                             std::to_string(index.dim()));
    }
    return index;
}

struct QueryOpts {
    std::string id = "query";
    std::string question;
    std::string image;
    std::vector<std::string> options;
    std::string answer;

    KbEntry entry() const {
        KbEntry e;
        e.id = id;
        e.question = question;
        if (!image.empty()) e.image_ref = image;
        if (!options.empty()) e.options = options;
        e.answer = answer.empty() ? "?" : answer;
        return e;
    }
};

void add_query_flags(CLI::App* cmd, QueryOpts& o) {
    cmd->add_option("--question", o.question, "Query question text")->required();
    cmd->add_option("--image", o.image, "Query image reference");
    cmd->add_option("--option", o.options, "Answer option (repeatable, in order)");
    cmd->add_option("--query-id", o.id, "Id excluded from retrieval")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented in-context example re-ranking"};
    app.require_subcommand(1);

    // kb build | kb reason
    auto* kb = app.add_subcommand("kb", "Knowledge-base utilities");
    kb->require_subcommand(1);
    std::string kb_in, kb_out;
    auto* kb_build = kb->add_subcommand("build", "Validate and normalize a JSONL knowledge base");
    kb_build->add_option("--input", kb_in, "Source JSONL")->required();
    kb_build->add_option("--out", kb_out, "Output JSONL")->required();

    auto* kb_reason = kb->add_subcommand("reason", "Generate reasoning contexts for KB entries");
    BackendOpts reason_backend;
    ReasoningConfig reason_cfg;
    std::string reason_tmpl = "scienceqa";
    bool reason_overwrite = false;
    kb_reason->add_option("--kb", kb_in, "Input KB")->required();
    kb_reason->add_option("--out", kb_out, "Output KB")->required();
    kb_reason->add_option("--n-candidates", reason_cfg.n_candidates, "Candidates per entry")
        ->capture_default_str();
    kb_reason->add_option("--n-predictions", reason_cfg.n_predictions, "Predictions per candidate")
        ->capture_default_str();
    kb_reason->add_option("--template", reason_tmpl, "Answer format")->capture_default_str();
    kb_reason->add_flag("--overwrite", reason_overwrite, "Regenerate existing reasoning");
    add_backend_flags(kb_reason, reason_backend);

    // index build
    auto* index = app.add_subcommand("index", "Embedding index utilities");
    index->require_subcommand(1);
    auto* index_build = index->add_subcommand("build", "Embed every KB entry into a sidecar file");
    std::string index_kb, index_out;
    EmbedOpts index_embed;
    index_build->add_option("--kb", index_kb, "KB JSONL")->required();
    index_build->add_option("--out", index_out, "Sidecar path")->required();
    add_embed_flags(index_build, index_embed, true);

    // retrieve
    auto* retrieve = app.add_subcommand("retrieve", "Top-N retrieval for one query");
    std::string ret_kb, ret_index;
    std::size_t ret_n = 20;
    QueryOpts ret_query;
    EmbedOpts ret_embed;
    retrieve->add_option("--kb", ret_kb, "KB JSONL")->required();
    retrieve->add_option("--index", ret_index, "Sidecar path")->required();
    retrieve->add_option("--n", ret_n, "Number of hits")->capture_default_str();
    add_query_flags(retrieve, ret_query);
    add_embed_flags(retrieve, ret_embed, false);

    // rerank
    auto* rerank = app.add_subcommand("rerank", "Re-rank retrieved examples for one query");
    std::string rr_kb, rr_index, rr_dump;
    QueryOpts rr_query;
    EmbedOpts rr_embed;
    SearchOpts rr_search;
    BackendOpts rr_backend;
    rerank->add_option("--kb", rr_kb, "KB JSONL")->required();
    rerank->add_option("--index", rr_index, "Sidecar path")->required();
    rerank->add_option("--dump-tree", rr_dump, "Write the search tree as JSON");
    add_query_flags(rerank, rr_query);
    add_embed_flags(rerank, rr_embed, false);
    add_search_flags(rerank, rr_search);
    add_backend_flags(rerank, rr_backend);

    // eval
    auto* eval = app.add_subcommand("eval", "Batch evaluation over a labeled dataset");
    std::string ev_dataset, ev_kb, ev_index, ev_out, ev_timings;
    std::vector<std::string> ev_methods{"rcts"};
    std::optional<std::size_t> ev_dim;
    EmbedOpts ev_embed;
    SearchOpts ev_search;
    BackendOpts ev_backend;
    eval->add_option("--dataset", ev_dataset, "Query JSONL (same schema as the KB)")->required();
    eval->add_option("--kb", ev_kb, "KB JSONL")->required();
    eval->add_option("--index", ev_index, "Sidecar path")->required();
    eval->add_option("--method", ev_methods, "zero_shot | icl_random | vanilla_rag | rcts (repeatable)")
        ->capture_default_str();
    eval->add_option("--out", ev_out, "Report path")->required();
    eval->add_option("--timings", ev_timings, "Per-query wall-time JSON");
    eval->add_option("--dim", ev_dim, "Expected embedding dimension");
    add_embed_flags(eval, ev_embed, false);
    add_search_flags(eval, ev_search);
    add_backend_flags(eval, ev_backend);

    // mcq-build
    auto* mcq = app.add_subcommand("mcq-build", "Six-option variant of a labeled relation set");
    std::string mcq_in, mcq_vocab, mcq_out;
    std::uint64_t mcq_seed = 0;
    mcq->add_option("--input", mcq_in, "Labeled JSONL {id, statement, relation, image}")->required();
    mcq->add_option("--vocab", mcq_vocab, "Relation vocabulary, one per line")->required();
    mcq->add_option("--out", mcq_out, "Output dataset JSONL")->required();
    mcq->add_option("--seed", mcq_seed, "Shuffle seed")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (kb_build->parsed()) {
            const auto store = load_kb_jsonl(kb_in);
            save_kb_jsonl(store, kb_out);
            std::cout << "wrote " << store.size() << " entries to " << kb_out << '\n';
        } else if (kb_reason->parsed()) {
            auto store = load_kb_jsonl(kb_in);
            const auto gen = make_generator(reason_backend);
            reason_cfg.tmpl = parse_template_id(reason_tmpl);
            KbStore out;
            std::size_t built = 0;
            for (auto entry : store) {
                if (!entry.reasoning || reason_overwrite) {
                    const auto outcome = build_reasoning_context(entry, *gen, reason_cfg);
                    ++built;
                    std::cout << entry.id << "\tscore=" << outcome.score << '\n';
                }
                out.add(std::move(entry));
            }
            save_kb_jsonl(out, kb_out);
            std::cout << "generated reasoning for " << built << " entries\n";
        } else if (index_build->parsed()) {
            const auto store = load_kb_jsonl(index_kb);
            const auto embedder = make_embedder(index_embed, index_embed.dim);
            const auto idx = build_index(store, embedder);
            write_index(idx, index_out);
            std::cout << "indexed " << idx.size() << " entries (dim " << idx.dim() << ")\n";
        } else if (retrieve->parsed()) {
            const auto store = load_kb_jsonl(ret_kb);
            const auto idx = load_checked_index(ret_index, store, std::nullopt);
            const auto embedder = make_embedder(ret_embed, idx.dim());
            const auto q = ret_query.entry();
            const auto hits = retrieve_top_n(embed(embedder, q.question, q.image_ref), idx, ret_n, q.id);
            for (const auto& h : hits) {
                std::cout << h.rank << '\t' << h.entry_id << '\t' << h.raw_score << '\t' << h.norm_score
                          << '\n';
            }
        } else if (rerank->parsed()) {
            const auto store = load_kb_jsonl(rr_kb);
            const auto idx = load_checked_index(rr_index, store, std::nullopt);
            const auto embedder = make_embedder(rr_embed, idx.dim());
            const auto gen = make_generator(rr_backend);
            const auto q = rr_query.entry();
            const auto hits =
                retrieve_top_n(embed(embedder, q.question, q.image_ref), idx, rr_search.n, q.id);
            const auto space = make_action_space(hits, store);
            const auto result = run_search(Query::from_entry(q), space, *gen, make_search_config(rr_search));

            std::cout << "context:\n";
            for (std::size_t i = 0; i < result.branch.size(); ++i) {
                std::cout << "  " << i + 1 << ". " << result.branch[i].id() << " (s=" << result.branch[i].sim
                          << ")\n";
            }
            std::cout << "answer: " << result.response.answer.value_or("<unparsed>") << '\n';
            std::cout << "reward: Q_S=" << result.reward.q_self << " Q_M=" << result.reward.q_mutual
                      << " Q=" << result.reward.q_combined << '\n';
            std::cout << "rollouts: " << result.rollouts_used << '\n';
            std::cout << "termination: " << termination_name(result.termination) << '\n';
            std::cout << "tree_size: " << result.tree_size << '\n';
            if (!rr_dump.empty()) write_json(result.tree.to_json(space), rr_dump);
        } else if (eval->parsed()) {
            const auto dataset = load_kb_jsonl(ev_dataset);
            const auto store = load_kb_jsonl(ev_kb);
            const auto idx = read_index(ev_index);
            const auto embedder = make_embedder(ev_embed, ev_dim.value_or(idx.dim()));
            const auto gen = make_generator(ev_backend);

            EvalConfig cfg;
            cfg.methods.clear();
            for (const auto& m : ev_methods) cfg.methods.push_back(parse_method(m));
            cfg.n_retrieve = ev_search.n;
            cfg.seed = ev_search.seed;
            cfg.search = make_search_config(ev_search);
            cfg.extra_config["backend"] = ev_backend.backend;
            cfg.extra_config["embed_seed"] = ev_embed.seed;
            cfg.extra_config["dim"] = idx.dim();

            const auto report = run_eval(dataset, store, idx, embedder, *gen, cfg);
            write_json(report_to_json(report), ev_out);
            if (!ev_timings.empty()) write_json(timings_to_json(report), ev_timings);
            for (const auto& [m, s] : report.summary) {
                std::cout << method_name(m) << '\t' << s.correct << '/' << s.total << '\t' << s.accuracy
                          << "%\n";
            }
        } else if (mcq->parsed()) {
            const auto records = load_labeled_statements(mcq_in);
            const auto vocab = load_vocabulary(mcq_vocab);
            const auto store = build_multiple_choice_variant(records, vocab, mcq_seed);
            save_kb_jsonl(store, mcq_out);
            std::cout << "wrote " << store.size() << " questions to " << mcq_out << '\n';
        }
    } catch (const std::exception& ex) {
        std::cerr << "rcts: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}
