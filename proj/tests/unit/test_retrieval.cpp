#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "../support/fixtures.hpp"
#include "rcts/error.hpp"
#include "rcts/retrieval.hpp"

using namespace rcts;
using rcts::testing::random_tokens;

namespace {

HybridEmbedding hybrid(std::size_t rows, std::size_t dim, std::vector<float> v) {
    return {TokenEmbeddings(rows, dim, std::move(v)), std::nullopt};
}

// Independent double-loop reference.
double oracle_maxsim(const HybridEmbedding& q, const HybridEmbedding& d) {
    double total = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        double best = -INFINITY;
        for (std::size_t k = 0; k < d.rows(); ++k) {
            double dot = 0.0;
            for (std::size_t j = 0; j < q.dim(); ++j) {
                dot += static_cast<double>(q.row(i)[j]) * static_cast<double>(d.row(k)[j]);
            }
            best = std::max(best, dot);
        }
        total += best;
    }
    return total;
}

EmbeddingIndex random_index(Rng& rng, std::size_t n, std::size_t dim) {
    std::vector<EmbeddingIndex::Record> recs;
    for (std::size_t i = 0; i < n; ++i) {
        recs.push_back({"doc" + std::to_string(i), {random_tokens(rng, 1 + rng.uniform_index(6), dim), std::nullopt}});
    }
    return EmbeddingIndex(std::move(recs));
}

std::vector<std::string> oracle_top(const HybridEmbedding& q, const EmbeddingIndex& index, std::size_t n) {
    std::vector<std::pair<double, std::string>> all;
    for (const auto& r : index.records()) all.emplace_back(oracle_maxsim(q, r.embedding), r.id);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(all[i].second);
    return ids;
}

std::vector<std::string> ids_of(const std::vector<RetrievalHit>& hits) {
    std::vector<std::string> ids;
    for (const auto& h : hits) ids.push_back(h.entry_id);
    return ids;
}

}  // namespace

TEST_CASE("hash embedder shapes and determinism") {
    const HashEmbedder emb(8, 3);
    const auto h = embed(emb, "one two three four", std::nullopt);
    CHECK(h.text.rows() == 4);
    CHECK(h.dim() == 8);
    CHECK_FALSE(h.image.has_value());
    CHECK(h.rows() == 4);
    CHECK(embed(emb, "one two three four", std::nullopt) == h);

    for (std::size_t i = 0; i < h.rows(); ++i) {
        double norm = 0.0;
        for (float x : h.row(i)) norm += double(x) * x;
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
    }

    const auto with_image = embed(emb, "one two", std::string("cat.png"));
    REQUIRE(with_image.image.has_value());
    CHECK(with_image.image->rows() == HashEmbedder::kImageRows);
    CHECK(with_image.rows() == 2 + HashEmbedder::kImageRows);

    CHECK(HashEmbedder(8, 4).token_vector("one") != emb.token_vector("one"));
    CHECK_THROWS_AS(embed(emb, "   ", std::nullopt), RetrievalError);
}

TEST_CASE("image refs must resolve when an image root is set") {
    rcts::testing::TempDir dir;
    rcts::testing::write_file(dir.file("present.png"), "x");
    const HashEmbedder emb(8, 0, dir.path());
    CHECK_NOTHROW(embed(emb, "q", std::string("present.png")));
    try {
        embed(emb, "q", std::string("missing.png"));
        FAIL("expected an error");
    } catch (const RetrievalError& e) {
        CHECK(std::string(e.what()).find("missing.png") != std::string::npos);
    }
}

TEST_CASE("maxsim worked values") {
    CHECK(maxsim_relevance(hybrid(1, 2, {1, 0}), hybrid(2, 2, {1, 0, 0, 1})) == 1.0);
    CHECK(maxsim_relevance(hybrid(2, 2, {1, 0, 0, 1}), hybrid(2, 2, {0.5f, 0.5f, 1, 0})) == 1.5);

    const HashEmbedder emb(32, 9);
    const auto q = embed(emb, "alpha beta gamma delta epsilon", std::string("img"));
    CHECK(maxsim_relevance(q, q) == doctest::Approx(double(q.rows())).epsilon(1e-6));

    CHECK_THROWS_AS(maxsim_relevance(hybrid(1, 2, {1, 0}), hybrid(1, 3, {1, 0, 0})), RetrievalError);
}

TEST_CASE("maxsim properties against the double-loop oracle") {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        const std::size_t dim = 1 + rng.uniform_index(32);
        HybridEmbedding q{random_tokens(rng, 1 + rng.uniform_index(16), dim), std::nullopt};
        HybridEmbedding d{random_tokens(rng, 1 + rng.uniform_index(16), dim),
                          rng.uniform() < 0.5 ? std::optional(random_tokens(rng, 4, dim)) : std::nullopt};
        const double r = maxsim_relevance(q, d);
        const double o = oracle_maxsim(q, d);
        CHECK(std::abs(r - o) <= 1e-9 * std::max(1.0, std::abs(o)));

        // Permuting doc rows changes nothing.
        std::vector<std::size_t> perm(d.text.rows());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        rng.shuffle(perm.begin(), perm.end());
        std::vector<float> pv;
        for (auto i : perm) pv.insert(pv.end(), d.text.row(i).begin(), d.text.row(i).end());
        HybridEmbedding dp{TokenEmbeddings(d.text.rows(), dim, pv), d.image};
        CHECK(std::abs(maxsim_relevance(q, dp) - r) <= 1e-9 * std::max(1.0, std::abs(r)));

        // Appending a doc row never lowers the score.
        auto more = d.text.values();
        const auto extra = random_tokens(rng, 1, dim);
        more.insert(more.end(), extra.values().begin(), extra.values().end());
        HybridEmbedding dm{TokenEmbeddings(d.text.rows() + 1, dim, more), d.image};
        CHECK(maxsim_relevance(q, dm) >= r);

        // Additive over query rows.
        double split = 0.0;
        for (std::size_t i = 0; i < q.rows(); ++i) {
            std::vector<float> row(q.row(i).begin(), q.row(i).end());
            split += maxsim_relevance(hybrid(1, dim, row), d);
        }
        CHECK(std::abs(split - r) <= 1e-9 * std::max(1.0, std::abs(r)));
    }
}

TEST_CASE("top-N matches a full-sort oracle") {
    Rng rng(17);
    const auto index = random_index(rng, 100, 16);
    for (int t = 0; t < 20; ++t) {
        HybridEmbedding q{random_tokens(rng, 1 + rng.uniform_index(8), 16), std::nullopt};
        const auto hits = retrieve_top_n(q, index, 20);
        CHECK(ids_of(hits) == oracle_top(q, index, 20));
        for (std::size_t i = 0; i < hits.size(); ++i) {
            CHECK(hits[i].rank == i + 1);
            if (i) CHECK(hits[i].raw_score <= hits[i - 1].raw_score);
        }
        // Prefix property.
        auto shorter = ids_of(retrieve_top_n(q, index, 7));
        auto longer = ids_of(hits);
        longer.resize(7);
        CHECK(shorter == longer);
    }
}

TEST_CASE("top-N self retrieval, ties and exclusion") {
    KbStore kb;
    for (int i = 0; i < 30; ++i) {
        kb.add({"doc" + std::to_string(i), std::nullopt,
                "word" + std::to_string(i) + " token" + std::to_string(i * 7) + " shared", std::nullopt, "x",
                std::nullopt});
    }
    const HashEmbedder emb(16, 2);
    const auto index = build_index(kb, emb);
    const auto query = *index.find("doc12");
    CHECK(retrieve_top_n(query, index, 5).front().entry_id == "doc12");
    CHECK(retrieve_top_n(query, index, 5, "doc12").front().entry_id != "doc12");
    CHECK(retrieve_top_n(query, index, 29, "doc12").size() == 29);
    CHECK_THROWS_AS(retrieve_top_n(query, index, 31), RetrievalError);
    CHECK_THROWS_AS(retrieve_top_n(query, index, 30, "doc0"), RetrievalError);
    CHECK_THROWS_AS(retrieve_top_n(query, EmbeddingIndex{}, 1), RetrievalError);

    const auto same = hybrid(1, 2, {1, 1});
    const EmbeddingIndex tied({{"zeta", same}, {"alpha", same}, {"mid", hybrid(1, 2, {0, 0.5f})}});
    const auto hits = retrieve_top_n(hybrid(1, 2, {1, 0}), tied, 3);
    CHECK(ids_of(hits) == std::vector<std::string>{"alpha", "zeta", "mid"});
}

TEST_CASE("normalization") {
    auto make = [](std::vector<double> raw) {
        std::vector<RetrievalHit> hits;
        for (std::size_t i = 0; i < raw.size(); ++i) hits.push_back({"e" + std::to_string(i), raw[i], 0.0, i + 1});
        normalize_similarities(hits);
        std::vector<double> s;
        for (const auto& h : hits) s.push_back(h.norm_score);
        return s;
    };
    CHECK(make({10, 5, 0}) == std::vector<double>{1.0, 0.5, 0.001});
    CHECK(make({7, 7}) == std::vector<double>{1.0, 1.0});
    CHECK(make({3.5}) == std::vector<double>{1.0});
    std::vector<RetrievalHit> empty;
    CHECK_THROWS_AS(normalize_similarities(empty), RetrievalError);

    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> raw;
        const auto n = 1 + rng.uniform_index(25);
        for (std::size_t i = 0; i < n; ++i) raw.push_back(rng.uniform() * 40 - 20);
        std::sort(raw.rbegin(), raw.rend());
        const auto s = make(raw);
        CHECK(std::count(s.begin(), s.end(), 1.0) >= 1);
        for (double x : s) CHECK((x >= kSimilarityFloor && x <= 1.0));
    }
}

TEST_CASE("index build excludes answers and reasoning") {
    KbStore kb;
    kb.add({"a", std::nullopt, "shared words here", std::nullopt, "answer one", std::string("why one")});
    kb.add({"b", std::string("pic.png"), "shared words here", std::nullopt, "answer two", std::nullopt});
    const HashEmbedder emb(16, 1);
    const auto index = build_index(kb, emb);
    CHECK(index.size() == 2);
    CHECK(index.dim() == 16);
    CHECK(index.find("a")->text == index.find("b")->text);
    CHECK(index.find("b")->image.has_value());
    CHECK_NOTHROW(index.check_against(kb));
    KbStore other;
    other.add({"a", std::nullopt, "q", std::nullopt, "x", std::nullopt});
    CHECK_THROWS_AS(index.check_against(other), RetrievalError);
}

TEST_CASE("sidecar round trip and corruption") {
    KbStore kb;
    kb.add({"text-only", std::nullopt, "a b c", std::nullopt, "x", std::nullopt});
    kb.add({"with-image", std::string("i.png"), "d e", std::nullopt, "y", std::nullopt});
    const auto index = build_index(kb, HashEmbedder(12, 4));

    std::stringstream buf;
    write_index(index, buf);
    const std::string bytes = buf.str();
    CHECK(bytes.substr(0, 4) == "RCTE");
    std::istringstream in(bytes);
    const auto back = read_index(in);
    REQUIRE(back.size() == 2);
    CHECK(back.dim() == 12);
    for (const auto& r : index.records()) CHECK(*back.find(r.id) == r.embedding);

    std::istringstream bad_magic("XXXX" + bytes.substr(4));
    CHECK_THROWS_AS(read_index(bad_magic), RetrievalError);
    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_index(truncated), RetrievalError);
    CHECK_THROWS_AS(read_index(std::string("/nonexistent/index.rcte")), RetrievalError);

    rcts::testing::TempDir dir;
    write_index(index, dir.file("idx.rcte"));
    CHECK(read_index(dir.file("idx.rcte")).size() == 2);
}

TEST_CASE("token embeddings reject bad shapes") {
    CHECK_THROWS_AS(TokenEmbeddings(0, 4, {}), RetrievalError);
    CHECK_THROWS_AS(TokenEmbeddings(1, 2, {1.0f}), RetrievalError);
    CHECK_THROWS_AS(TokenEmbeddings(1, 1, {NAN}), RetrievalError);
}
