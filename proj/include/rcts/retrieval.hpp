#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rcts/knowledge_base.hpp"

namespace rcts {

/// l x d token embedding matrix, row-major float32.
class TokenEmbeddings {
public:
    TokenEmbeddings() = default;
    TokenEmbeddings(std::size_t rows, std::size_t dim, std::vector<float> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const float> row(std::size_t i) const {
        return {values_.data() + i * dim_, dim_};
    }
    const std::vector<float>& values() const noexcept { return values_; }

    bool operator==(const TokenEmbeddings&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> values_;
};

/// Text tokens followed by optional image tokens; MaxSim treats the two as
/// one concatenated matrix of l_T + l_I rows.
struct HybridEmbedding {
    TokenEmbeddings text;
    std::optional<TokenEmbeddings> image;

    std::size_t rows() const noexcept { return text.rows() + (image ? image->rows() : 0); }
    std::size_t dim() const noexcept { return text.dim(); }
    std::span<const float> row(std::size_t i) const {
        return i < text.rows() ? text.row(i) : image->row(i - text.rows());
    }

    bool operator==(const HybridEmbedding&) const = default;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    virtual TokenEmbeddings embed_text(std::string_view text) const = 0;
    virtual TokenEmbeddings embed_image(std::string_view image_ref) const = 0;
};

/// Weight-free deterministic embedder. Whitespace tokens are hashed to seeded
/// pseudo-random unit vectors; an image ref becomes a fixed 4-row block.
class HashEmbedder final : public EmbeddingProvider {
public:
    static constexpr std::size_t kImageRows = 4;

    explicit HashEmbedder(std::size_t dim, std::uint64_t seed = 0,
                          std::optional<std::filesystem::path> image_root = std::nullopt);

    std::size_t dim() const override { return dim_; }
    TokenEmbeddings embed_text(std::string_view text) const override;
    // With an image root configured, the ref must name an existing file below it.
    TokenEmbeddings embed_image(std::string_view image_ref) const override;

    std::vector<float> token_vector(std::string_view token) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::optional<std::filesystem::path> image_root_;
};

std::vector<std::string> whitespace_tokens(std::string_view text);

HybridEmbedding embed(const EmbeddingProvider& provider, std::string_view question,
                      const std::optional<std::string>& image_ref);

/// Sum over query rows of the best dot product against any doc row,
/// accumulated in double in row order.
double maxsim_relevance(const HybridEmbedding& query, const HybridEmbedding& doc);

struct RetrievalHit {
    std::string entry_id;
    double raw_score = 0.0;
    double norm_score = 0.0;
    std::size_t rank = 0;
};

inline constexpr double kSimilarityFloor = 1e-3;

/// Immutable id -> embedding map, kept in build order.
class EmbeddingIndex {
public:
    struct Record {
        std::string id;
        HybridEmbedding embedding;
    };

    EmbeddingIndex() = default;
    explicit EmbeddingIndex(std::vector<Record> records);

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<Record>& records() const noexcept { return records_; }
    const HybridEmbedding* find(std::string_view id) const;

    /// Throws RetrievalError if any record id is missing from the store.
    void check_against(const KbStore& store) const;

private:
    std::size_t dim_ = 0;
    std::vector<Record> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Embeds question text and image of every entry; answers and reasoning are
/// never embedded.
EmbeddingIndex build_index(const KbStore& store, const EmbeddingProvider& provider);

/// Top-N by raw score (ties: ascending entry id), skipping `exclude_id`.
std::vector<RetrievalHit> retrieve_top_n(const HybridEmbedding& query, const EmbeddingIndex& index,
                                         std::size_t n,
                                         std::optional<std::string_view> exclude_id = std::nullopt);

/// Per-list min-max scaling floored at kSimilarityFloor; all-equal lists map to 1.
void normalize_similarities(std::vector<RetrievalHit>& hits);

// Embedding sidecar ("RCTE" v1, little-endian).
void write_index(const EmbeddingIndex& index, std::ostream& out);
void write_index(const EmbeddingIndex& index, const std::string& path);
EmbeddingIndex read_index(std::istream& in);
EmbeddingIndex read_index(const std::string& path);

}  // namespace rcts
