// Python bindings. Records cross the boundary as plain dicts and lists,
// converted through JSON text.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "rcts/backends.hpp"
#include "rcts/error.hpp"
#include "rcts/harness.hpp"
#include "rcts/knowledge_base.hpp"
#include "rcts/mcts.hpp"
#include "rcts/reasoning.hpp"
#include "rcts/retrieval.hpp"

namespace py = pybind11;
using namespace rcts;

namespace {

Json to_json(const py::handle& obj) {
    const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return Json::parse(text);
}

py::object to_py(const Json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

KbStore store_from_records(const py::list& records) {
    KbStore store;
    for (const auto& r : records) store.add(entry_from_json(to_json(r)));
    return store;
}

TokenEmbeddings to_tokens(const std::vector<std::vector<float>>& rows) {
    if (rows.empty()) throw RetrievalError("embedding needs at least one row");
    const auto dim = rows.front().size();
    std::vector<float> flat;
    for (const auto& r : rows) {
        if (r.size() != dim) throw RetrievalError("ragged embedding rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return TokenEmbeddings(rows.size(), dim, std::move(flat));
}

// Index plus the embedder that produced it, so queries embed the same way.
struct PyIndex {
    EmbeddingIndex index;
    HashEmbedder embedder;
};

PyIndex build_py_index(const KbStore& kb, std::size_t dim, std::uint64_t embed_seed) {
    HashEmbedder embedder(dim, embed_seed);
    return {build_index(kb, embedder), embedder};
}

std::shared_ptr<Generator> make_generator(const py::object& backend) {
    if (py::isinstance<Generator>(backend)) return backend.cast<std::shared_ptr<Generator>>();
    if (py::isinstance<py::function>(backend)) {
        auto fn = backend.cast<std::function<std::string(std::string, std::int64_t)>>();
        return std::make_shared<CallbackGenerator>([fn](const GenRequest& r) {
            py::gil_scoped_acquire gil;
            return fn(r.bundle.flatten(), r.seed);
        });
    }
    throw py::type_error("backend must be a MockBackend or a callable (prompt, seed) -> str");
}

SearchConfig search_config(std::size_t k, std::size_t rollouts, std::size_t max_width, double alpha,
                           bool early_stop, const std::string& tmpl, bool with_reasoning,
                           std::uint64_t seed) {
    SearchConfig cfg;
    cfg.depth = k;
    cfg.rollouts = rollouts;
    cfg.max_width = max_width;
    cfg.early_stop = early_stop;
    cfg.rng_seed = seed;
    cfg.reward.alpha = alpha;
    cfg.reward.validate();
    cfg.generation.tmpl = parse_template_id(tmpl);
    cfg.generation.with_reasoning = with_reasoning;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_rcts, m) {
    m.doc() = "Retrieval re-ranking with Monte Carlo tree search";

    auto base = py::register_exception<Error>(m, "RctsError", PyExc_RuntimeError);
    py::register_exception<KbError>(m, "KbError", base.ptr());
    py::register_exception<RetrievalError>(m, "RetrievalError", base.ptr());
    py::register_exception<GenerationError>(m, "GenerationError", base.ptr());
    py::register_exception<SearchError>(m, "SearchError", base.ptr());

    m.def(
        "parse_answer",
        [](const std::string& raw, const std::string& tmpl) {
            const auto p = parse_answer(raw, parse_template_id(tmpl));
            py::dict d;
            d["answer"] = p.answer ? py::cast(*p.answer) : py::none();
            d["reasoning"] = p.reasoning ? py::cast(*p.reasoning) : py::none();
            d["parse_ok"] = p.parse_ok;
            return d;
        },
        py::arg("raw"), py::arg("template") = "scienceqa");

    m.def(
        "maxsim",
        [](const std::vector<std::vector<float>>& query, const std::vector<std::vector<float>>& doc) {
            return maxsim_relevance({to_tokens(query), std::nullopt}, {to_tokens(doc), std::nullopt});
        },
        py::arg("query"), py::arg("doc"), "Sum over query rows of the best dot product with a doc row.");

    py::class_<KbStore>(m, "KnowledgeBase")
        .def(py::init([](const py::list& records) { return store_from_records(records); }),
             py::arg("records") = py::list())
        .def_static("load", &load_kb_jsonl, py::arg("path"))
        .def("save", py::overload_cast<const KbStore&, const std::string&>(&save_kb_jsonl), py::arg("path"))
        .def("__len__", &KbStore::size)
        .def("ids",
             [](const KbStore& s) {
                 std::vector<std::string> ids;
                 for (const auto& e : s) ids.push_back(e.id);
                 return ids;
             })
        .def("__getitem__",
             [](const KbStore& s, const std::string& id) {
                 const auto* e = s.find(id);
                 if (!e) throw py::key_error(id);
                 return to_py(entry_to_json(*e));
             })
        .def("records", [](const KbStore& s) {
            py::list out;
            for (const auto& e : s) out.append(to_py(entry_to_json(e)));
            return out;
        });

    py::class_<PyIndex>(m, "Index")
        .def_static("build", &build_py_index, py::arg("kb"), py::arg("dim") = 64, py::arg("embed_seed") = 0)
        .def_static(
            "load",
            [](const std::string& path, std::uint64_t embed_seed) {
                auto index = read_index(path);
                const auto dim = index.dim();
                return PyIndex{std::move(index), HashEmbedder(dim, embed_seed)};
            },
            py::arg("path"), py::arg("embed_seed") = 0)
        .def("save", [](const PyIndex& i, const std::string& path) { write_index(i.index, path); }, py::arg("path"))
        .def("__len__", [](const PyIndex& i) { return i.index.size(); })
        .def_property_readonly("dim", [](const PyIndex& i) { return i.index.dim(); })
        .def(
            "retrieve",
            [](const PyIndex& i, const std::string& question, std::size_t n, std::optional<std::string> image,
               std::optional<std::string> exclude) {
                std::optional<std::string_view> ex;
                if (exclude) ex = *exclude;
                const auto hits = retrieve_top_n(embed(i.embedder, question, image), i.index, n, ex);
                py::list out;
                for (const auto& h : hits) {
                    py::dict d;
                    d["entry_id"] = h.entry_id;
                    d["raw_score"] = h.raw_score;
                    d["norm_score"] = h.norm_score;
                    d["rank"] = h.rank;
                    out.append(d);
                }
                return out;
            },
            py::arg("question"), py::arg("n") = 20, py::arg("image") = py::none(), py::arg("exclude") = py::none());

    py::class_<Generator, std::shared_ptr<Generator>>(m, "Generator");
    py::class_<MockGenerator, Generator, std::shared_ptr<MockGenerator>>(m, "MockBackend")
        .def(py::init([](const py::list& rules, std::optional<std::string> fallback) {
                 std::ostringstream text;
                 for (const auto& r : rules) text << to_json(r).dump() << '\n';
                 std::istringstream in(text.str());
                 auto gen = MockGenerator::from_jsonl(in);
                 return std::make_shared<MockGenerator>(gen.rules(), fallback ? fallback : gen.fallback());
             }),
             py::arg("rules"), py::arg("fallback") = py::none())
        .def_static("load", [](const std::string& path) { return std::make_shared<MockGenerator>(MockGenerator::load(path)); },
                    py::arg("path"));

    m.def(
        "rerank",
        [](const KbStore& kb, const PyIndex& index, const py::dict& query, const py::object& backend,
           std::size_t n, std::size_t k, std::size_t rollouts, std::size_t max_width, double alpha,
           bool early_stop, const std::string& tmpl, bool with_reasoning, std::uint64_t seed) {
            const Json j = to_json(query);
            Query q;
            q.id = j.value("id", "query");
            q.question = j.at("question").get<std::string>();
            if (j.contains("image") && !j.at("image").is_null()) q.image_ref = j.at("image").get<std::string>();
            if (j.contains("options")) q.options = j.at("options").get<std::vector<std::string>>();
            const auto gen = make_generator(backend);
            const auto cfg = search_config(k, rollouts, max_width, alpha, early_stop, tmpl, with_reasoning, seed);
            SearchResult result;
            {
                py::gil_scoped_release release;
                const auto hits =
                    retrieve_top_n(embed(index.embedder, q.question, q.image_ref), index.index, n, q.id);
                const auto space = make_action_space(hits, kb);
                result = run_search(q, space, *gen, cfg);
            }
            return to_py(search_result_to_json(result));
        },
        py::arg("kb"), py::arg("index"), py::arg("query"), py::arg("backend"), py::arg("n") = 20, py::arg("k") = 3,
        py::arg("rollouts") = 10, py::arg("max_width") = 3, py::arg("alpha") = 0.2, py::arg("early_stop") = true,
        py::arg("template") = "scienceqa", py::arg("with_reasoning") = false, py::arg("seed") = 0);

    m.def(
        "evaluate",
        [](const KbStore& dataset, const KbStore& kb, const PyIndex& index, const py::object& backend,
           const std::vector<std::string>& methods, std::size_t n, std::size_t k, std::size_t rollouts,
           std::size_t max_width, double alpha, bool early_stop, const std::string& tmpl, bool with_reasoning,
           std::uint64_t seed) {
            EvalConfig cfg;
            cfg.methods.clear();
            for (const auto& name : methods) cfg.methods.push_back(parse_method(name));
            cfg.n_retrieve = n;
            cfg.seed = seed;
            cfg.search = search_config(k, rollouts, max_width, alpha, early_stop, tmpl, with_reasoning, seed);
            const auto gen = make_generator(backend);
            EvalReport report;
            {
                py::gil_scoped_release release;
                report = run_eval(dataset, kb, index.index, index.embedder, *gen, cfg);
            }
            return to_py(report_to_json(report));
        },
        py::arg("dataset"), py::arg("kb"), py::arg("index"), py::arg("backend"),
        py::arg("methods") = std::vector<std::string>{"rcts"}, py::arg("n") = 20, py::arg("k") = 3,
        py::arg("rollouts") = 10, py::arg("max_width") = 3, py::arg("alpha") = 0.2, py::arg("early_stop") = true,
        py::arg("template") = "scienceqa", py::arg("with_reasoning") = false, py::arg("seed") = 0);

    m.def(
        "build_reasoning",
        [](KbStore& kb, const py::object& backend, int n_candidates, int n_predictions, const std::string& tmpl,
           bool overwrite) {
            ReasoningConfig cfg;
            cfg.n_candidates = n_candidates;
            cfg.n_predictions = n_predictions;
            cfg.tmpl = parse_template_id(tmpl);
            const auto gen = make_generator(backend);
            py::dict scores;
            for (auto& e : kb) {
                if (e.reasoning && !overwrite) continue;
                double score;
                {
                    py::gil_scoped_release release;
                    score = build_reasoning_context(e, *gen, cfg).score;
                }
                scores[py::str(e.id)] = score;
            }
            return scores;
        },
        py::arg("kb"), py::arg("backend"), py::arg("n_candidates") = 10, py::arg("n_predictions") = 10,
        py::arg("template") = "scienceqa", py::arg("overwrite") = false,
        "Fills missing reasoning contexts in place; returns the chosen score per entry.");

    m.def(
        "build_multiple_choice",
        [](const py::list& records, const std::vector<std::string>& vocabulary, std::uint64_t seed) {
            std::vector<LabeledStatement> labeled;
            for (const auto& r : records) {
                const Json j = to_json(r);
                LabeledStatement s;
                s.id = j.at("id").get<std::string>();
                s.statement = j.contains("statement") ? j.at("statement").get<std::string>()
                                                      : j.at("caption").get<std::string>();
                s.relation = j.at("relation").get<std::string>();
                if (j.contains("image") && !j.at("image").is_null()) s.image_ref = j.at("image").get<std::string>();
                labeled.push_back(std::move(s));
            }
            return build_multiple_choice_variant(labeled, vocabulary, seed);
        },
        py::arg("records"), py::arg("vocabulary"), py::arg("seed") = 0);
}
