#include "rcts/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rcts/error.hpp"
#include "rcts/rng.hpp"

namespace rcts {

TokenEmbeddings::TokenEmbeddings(std::size_t rows, std::size_t dim, std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
    if (rows == 0 || dim == 0) throw RetrievalError("token embeddings need rows >= 1 and dim >= 1");
    if (values_.size() != rows * dim) {
        throw RetrievalError("token embeddings: expected " + std::to_string(rows * dim) +
                             " values, got " + std::to_string(values_.size()));
    }
    for (float v : values_) {
        if (!std::isfinite(v)) throw RetrievalError("token embeddings contain a non-finite value");
    }
}

// ---------------------------------------------------------------------------
// Hash embedder

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed,
                           std::optional<std::filesystem::path> image_root)
    : dim_(dim), seed_(seed), image_root_(std::move(image_root)) {
    if (dim == 0) throw RetrievalError("embedding dim must be positive");
}

std::vector<float> HashEmbedder::token_vector(std::string_view token) const {
    std::uint64_t state = derive_seed(seed_, token);
    std::vector<double> v(dim_);
    double norm2 = 0.0;
    for (auto& x : v) {
        state = splitmix64(state);
        x = static_cast<double>(state >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
        norm2 += x * x;
    }
    const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
    std::vector<float> out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<float>(v[i] * inv);
    return out;
}

TokenEmbeddings HashEmbedder::embed_text(std::string_view text) const {
    const auto tokens = whitespace_tokens(text);
    if (tokens.empty()) throw RetrievalError("cannot embed text without tokens");
    std::vector<float> values;
    values.reserve(tokens.size() * dim_);
    for (const auto& t : tokens) {
        auto v = token_vector(t);
        values.insert(values.end(), v.begin(), v.end());
    }
    return TokenEmbeddings(tokens.size(), dim_, std::move(values));
}

TokenEmbeddings HashEmbedder::embed_image(std::string_view image_ref) const {
    if (image_ref.empty()) throw RetrievalError("empty image reference");
    if (image_root_) {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(*image_root_ / std::string(image_ref), ec)) {
            throw RetrievalError("unresolvable image reference '" + std::string(image_ref) + "'");
        }
    }
    std::vector<float> values;
    values.reserve(kImageRows * dim_);
    for (std::size_t k = 0; k < kImageRows; ++k) {
        auto v = token_vector("\x01img:" + std::string(image_ref) + "#" + std::to_string(k));
        values.insert(values.end(), v.begin(), v.end());
    }
    return TokenEmbeddings(kImageRows, dim_, std::move(values));
}

HybridEmbedding embed(const EmbeddingProvider& provider, std::string_view question,
                      const std::optional<std::string>& image_ref) {
    HybridEmbedding h;
    h.text = provider.embed_text(question);
    if (h.text.dim() != provider.dim()) throw RetrievalError("provider returned wrong text dim");
    if (image_ref) {
        h.image = provider.embed_image(*image_ref);
        if (h.image->dim() != h.text.dim()) throw RetrievalError("image/text dim mismatch");
    }
    return h;
}

// ---------------------------------------------------------------------------
// Scoring

double maxsim_relevance(const HybridEmbedding& query, const HybridEmbedding& doc) {
    if (query.dim() != doc.dim()) {
        throw RetrievalError("dim mismatch: query " + std::to_string(query.dim()) + " vs doc " +
                             std::to_string(doc.dim()));
    }
    const std::size_t d = query.dim();
    const std::size_t lq = query.rows();
    const std::size_t ld = doc.rows();
    double total = 0.0;
    for (std::size_t j = 0; j < lq; ++j) {
        const float* q = query.row(j).data();
        double best = -INFINITY;
        for (std::size_t k = 0; k < ld; ++k) {
            const float* x = doc.row(k).data();
            double dot = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                dot += static_cast<double>(q[t]) * static_cast<double>(x[t]);
            }
            best = std::max(best, dot);
        }
        total += best;
    }
    return total;
}

EmbeddingIndex::EmbeddingIndex(std::vector<Record> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (i == 0) dim_ = r.embedding.dim();
        if (r.embedding.dim() != dim_ ||
            (r.embedding.image && r.embedding.image->dim() != dim_)) {
            throw RetrievalError("index record '" + r.id + "' has inconsistent dim");
        }
        if (!by_id_.emplace(r.id, i).second) {
            throw RetrievalError("duplicate index record '" + r.id + "'");
        }
    }
}

const HybridEmbedding* EmbeddingIndex::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &records_[it->second].embedding;
}

void EmbeddingIndex::check_against(const KbStore& store) const {
    for (const auto& r : records_) {
        if (!store.find(r.id)) {
            throw RetrievalError("index record '" + r.id + "' not found in knowledge base");
        }
    }
}

EmbeddingIndex build_index(const KbStore& store, const EmbeddingProvider& provider) {
    std::vector<EmbeddingIndex::Record> records;
    records.reserve(store.size());
    for (const auto& e : store) {
        records.push_back({e.id, embed(provider, e.question, e.image_ref)});
    }
    return EmbeddingIndex(std::move(records));
}

std::vector<RetrievalHit> retrieve_top_n(const HybridEmbedding& query, const EmbeddingIndex& index,
                                         std::size_t n, std::optional<std::string_view> exclude_id) {
    if (index.empty()) throw RetrievalError("cannot retrieve from an empty index");
    if (n == 0) throw RetrievalError("N must be positive");
    if (query.dim() != index.dim()) {
        throw RetrievalError("dim mismatch: query " + std::to_string(query.dim()) + " vs index " +
                             std::to_string(index.dim()));
    }
    std::vector<RetrievalHit> scored;
    scored.reserve(index.size());
    for (const auto& r : index.records()) {
        if (exclude_id && r.id == *exclude_id) continue;
        scored.push_back({r.id, maxsim_relevance(query, r.embedding), 0.0, 0});
    }
    if (n > scored.size()) {
        throw RetrievalError("N = " + std::to_string(n) + " exceeds the " +
                             std::to_string(scored.size()) + " candidates in the index");
    }
    auto better = [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.raw_score != b.raw_score) return a.raw_score > b.raw_score;
        return a.entry_id < b.entry_id;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n),
                      scored.end(), better);
    scored.resize(n);
    for (std::size_t i = 0; i < n; ++i) scored[i].rank = i + 1;
    normalize_similarities(scored);
    return scored;
}

void normalize_similarities(std::vector<RetrievalHit>& hits) {
    if (hits.empty()) throw RetrievalError("cannot normalize an empty hit list");
    double lo = hits.front().raw_score;
    double hi = lo;
    for (const auto& h : hits) {
        lo = std::min(lo, h.raw_score);
        hi = std::max(hi, h.raw_score);
    }
    for (auto& h : hits) {
        if (hi > lo) {
            h.norm_score = std::max((h.raw_score - lo) / (hi - lo), kSimilarityFloor);
        } else {
            h.norm_score = 1.0;
        }
    }
}

// ---------------------------------------------------------------------------
// Sidecar I/O

namespace {

constexpr char kMagic[4] = {'R', 'C', 'T', 'E'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
        throw RetrievalError("truncated embedding sidecar");
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

void put_block(std::ostream& out, const std::string& id, std::uint8_t flag,
               const TokenEmbeddings& m) {
    if (id.size() > 0xffff) throw RetrievalError("id too long for sidecar: '" + id + "'");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    put_le<std::uint8_t>(out, flag);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
    for (float f : m.values()) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        put_le<std::uint32_t>(out, bits);
    }
}

}  // namespace

void write_index(const EmbeddingIndex& index, std::ostream& out) {
    std::size_t blocks = 0;
    for (const auto& r : index.records()) blocks += r.embedding.image ? 2 : 1;
    out.write(kMagic, 4);
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(blocks));
    for (const auto& r : index.records()) {
        put_block(out, r.id, 0, r.embedding.text);
        if (r.embedding.image) put_block(out, r.id, 1, *r.embedding.image);
    }
    if (!out) throw RetrievalError("failed writing embedding sidecar");
}

void write_index(const EmbeddingIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RetrievalError("cannot write '" + path + "'");
    write_index(index, out);
}

EmbeddingIndex read_index(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw RetrievalError("not an RCTE embedding sidecar");
    }
    const auto version = get_le<std::uint32_t>(in);
    if (version != kVersion) {
        throw RetrievalError("unsupported sidecar version " + std::to_string(version));
    }
    const auto blocks = get_le<std::uint32_t>(in);
    std::vector<EmbeddingIndex::Record> records;
    for (std::uint32_t b = 0; b < blocks; ++b) {
        const auto id_len = get_le<std::uint16_t>(in);
        std::string id(id_len, '\0');
        if (!in.read(id.data(), id_len)) throw RetrievalError("truncated embedding sidecar");
        const auto flag = get_le<std::uint8_t>(in);
        const auto rows = get_le<std::uint32_t>(in);
        const auto dim = get_le<std::uint32_t>(in);
        std::vector<float> values(static_cast<std::size_t>(rows) * dim);
        for (auto& f : values) {
            const auto bits = get_le<std::uint32_t>(in);
            std::memcpy(&f, &bits, sizeof f);
        }
        TokenEmbeddings m(rows, dim, std::move(values));
        if (flag == 0) {
            records.push_back({std::move(id), HybridEmbedding{std::move(m), std::nullopt}});
        } else if (flag == 1) {
            if (records.empty() || records.back().id != id || records.back().embedding.image) {
                throw RetrievalError("image block for '" + id + "' does not follow its text block");
            }
            records.back().embedding.image = std::move(m);
        } else {
            throw RetrievalError("unknown block flag " + std::to_string(flag));
        }
    }
    return EmbeddingIndex(std::move(records));
}

EmbeddingIndex read_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RetrievalError("cannot open '" + path + "'");
    return read_index(in);
}

}  // namespace rcts
