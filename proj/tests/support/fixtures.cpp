#include "fixtures.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace rcts::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    const auto base = fs::temp_directory_path();
    for (;;) {
        auto candidate = base / ("rcts-test-" + std::to_string(::getpid()) + "-" +
                                 std::to_string(counter++));
        if (fs::create_directory(candidate)) {
            path_ = candidate;
            return;
        }
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

TokenEmbeddings random_tokens(Rng& rng, std::size_t rows, std::size_t dim) {
    std::vector<float> v(rows * dim);
    for (auto& x : v) x = static_cast<float>(rng.uniform() * 2.0 - 1.0);
    return TokenEmbeddings(rows, dim, std::move(v));
}

SpaceFixture make_space(const std::vector<double>& sims) {
    SpaceFixture f;
    for (std::size_t i = 0; i < sims.size(); ++i) {
        KbEntry e;
        char id[16];
        std::snprintf(id, sizeof id, "e%02zu", i);
        e.id = id;
        e.question = "question " + e.id;
        e.answer = "answer " + e.id;
        f.store.add(std::move(e));
    }
    std::vector<Action> actions;
    for (std::size_t i = 0; i < sims.size(); ++i) actions.push_back({&f.store.at(i), sims[i]});
    f.space = ActionSpace(std::move(actions));
    return f;
}

TableEvaluator::TableEvaluator(std::map<std::string, double> table, std::string zero_shot_answer,
                               std::string branch_answer, double missing)
    : table_(std::move(table)),
      zero_shot_answer_(std::move(zero_shot_answer)),
      branch_answer_(std::move(branch_answer)),
      missing_(missing) {}

std::string TableEvaluator::key(std::span<const Action> branch) {
    std::string k;
    for (const auto& a : branch) {
        if (!k.empty()) k += ',';
        k += a.id();
    }
    return k;
}

ParsedResponse TableEvaluator::zero_shot() {
    return {"The answer is " + zero_shot_answer_ + ".", zero_shot_answer_, std::nullopt, true};
}

LeafEvaluation TableEvaluator::evaluate(std::span<const Action> branch) {
    const auto k = key(branch);
    calls_.push_back(k);
    const auto it = table_.find(k);
    const double q = it == table_.end() ? missing_ : it->second;
    LeafEvaluation out;
    out.response = {"The answer is " + branch_answer_ + ".", branch_answer_, std::nullopt, true};
    out.reward.q_self = q;
    out.reward.q_mutual = q;
    out.reward.q_combined = q;
    return out;
}

namespace {

std::string tag(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "q%03zu", i);
    return buf;
}

const std::vector<std::string> kOptions = {"alpha", "beta", "gamma", "delta"};

}  // namespace

GoldenFamily make_golden_family(std::size_t queries, std::uint64_t seed, bool zero_shot_agrees) {
    GoldenFamily fam;
    const HashEmbedder embedder(fam.dim, fam.embed_seed);
    Rng rng(seed);

    for (std::size_t i = 0; i < queries; ++i) {
        const auto t = tag(i);
        std::string topic;
        for (int w = 0; w < 6; ++w) topic += " topic-" + t + "-w" + std::to_string(w);
        const std::string answer(1, option_letter(i % 4));

        KbEntry q;
        q.id = t;
        q.question = "QRY-" + t + topic;
        q.options = kOptions;
        q.answer = answer;
        fam.dataset.add(q);

        // Nineteen neighbours share every topic word; the last one shares half.
        for (std::size_t j = 0; j < kGoldenNeighbours; ++j) {
            KbEntry e;
            char id[32];
            std::snprintf(id, sizeof id, "kb-%s-%02zu", t.c_str(), j);
            e.id = id;
            std::string words;
            const int shared = j + 1 < kGoldenNeighbours ? 6 : 3;
            for (int w = 0; w < shared; ++w) words += " topic-" + t + "-w" + std::to_string(w);
            e.question = "NBR-" + t + words + " detail-" + e.id;
            e.options = kOptions;
            e.answer = answer;
            fam.kb.add(std::move(e));
        }
    }

    const auto index = build_index(fam.kb, embedder);
    for (std::size_t i = 0; i < queries; ++i) {
        const auto t = tag(i);
        const auto& q = *fam.dataset.find(t);
        const auto hits = retrieve_top_n(embed(embedder, q.question, q.image_ref), index,
                                         kGoldenNeighbours, q.id);
        for (const auto& h : hits) {
            if (h.entry_id.compare(0, 7, "kb-" + t) != 0) {
                throw std::logic_error("golden family: foreign entry retrieved for " + t);
            }
        }
        const std::size_t rank = 4 + rng.uniform_index(kGoldenNeighbours - 3);
        const auto& golden = hits[rank - 1].entry_id;
        fam.kb.find(golden)->reasoning = "The decisive clue-" + t + " settles it.";
        fam.golden_rank[t] = rank;
        fam.golden_id[t] = golden;

        const std::string a = q.answer;
        const std::string wrong(1, option_letter((i + 1) % 4));
        const std::string zero(1, option_letter((i + 2) % 4));
        fam.rules.push_back({{"insight-" + t}, "The answer is " + a + ". BECAUSE: insight-" + t, {}, {}});
        fam.rules.push_back({{"clue-" + t},
                             "The answer is " + a + ". BECAUSE: recalled clue-" + t + " via insight-" + t + ".",
                             {},
                             {}});
        fam.rules.push_back({{"QRY-" + t, "NBR-" + t}, "The answer is " + wrong + ". BECAUSE: unsure.", {}, {}});
        fam.rules.push_back(
            {{"QRY-" + t}, "The answer is " + (zero_shot_agrees ? wrong : zero) + ".", {}, {}});
    }
    return fam;
}

void write_golden_family(const GoldenFamily& family, const fs::path& dir) {
    save_kb_jsonl(family.kb, (dir / "kb.jsonl").string());
    save_kb_jsonl(family.dataset, (dir / "dataset.jsonl").string());
    std::ofstream mock(dir / "mock.jsonl", std::ios::binary);
    save_mock_script(family.rules, family.fallback, mock);
}

}  // namespace rcts::testing
