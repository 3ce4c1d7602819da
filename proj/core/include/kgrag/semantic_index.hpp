#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgrag {

using EmbeddingVector = std::vector<double>;

// Throws InvalidArgument on dimension mismatch or a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Text -> dense vector. Implementations must be deterministic for a fixed
// configuration and safe to call from several threads.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;

    // Rejects text that is empty after trimming.
    EmbeddingVector embed(std::string_view text) const;
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const;

protected:
    virtual std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) const = 0;
};

// Offline stand-in for a sentence-transformer. Text is split on non-alphanumeric
// bytes, ASCII-lowercased, and every token is mapped to a pseudo-random unit vector
// seeded by its hash. The normalized sum is the embedding, so texts sharing tokens
// land close together and case or spacing never changes the result.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dimension = 64, std::uint64_t seed = 0,
                                   std::string name = {});

    std::string name() const override { return name_; }
    std::size_t dimension() const override { return dimension_; }

    static std::vector<std::string> tokenize(std::string_view text);

protected:
    std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) const override;

private:
    std::size_t dimension_;
    std::uint64_t seed_;
    std::string name_;
};

struct RemoteEndpoint {
    std::string url;  // full URL, e.g. https://api.openai.com/v1/embeddings
    std::string api_key;
    int timeout_ms = 30000;
    int max_attempts = 3;
    int backoff_ms = 500;  // doubled after every failed attempt
};

// OpenAI-style embeddings endpoint: POST {"input": [...], "model": m} -> {"data": [{"embedding": [...]}]}.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    RemoteEmbeddingProvider(std::string model, std::size_t dimension, RemoteEndpoint endpoint);

    std::string name() const override { return model_; }
    std::size_t dimension() const override { return dimension_; }

protected:
    std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) const override;

private:
    std::string model_;
    std::size_t dimension_;
    RemoteEndpoint endpoint_;
};

struct IndexEntry {
    std::string item_id;
    std::string text;
    EmbeddingVector vector;
};

struct ScoredItem {
    std::string item_id;
    double score = 0;
};

// Exact-scan cosine index. Immutable once built; concurrent searches are fine.
class VectorIndex {
public:
    // items: (item_id, text). Duplicate ids are rejected.
    static VectorIndex build(const EmbeddingProvider& provider,
                             const std::vector<std::pair<std::string, std::string>>& items);
    static VectorIndex from_entries(std::string provider_name, std::size_t dimension,
                                    std::vector<IndexEntry> entries);

    // JSONL: a header line {"provider","dimension"} followed by one {id,text,vector} per line.
    void save(const std::filesystem::path& path) const;
    // Throws ConfigError when the recorded provider differs from `expected_provider`.
    static VectorIndex load(const std::filesystem::path& path,
                            const std::string& expected_provider);

    const std::string& provider_name() const { return provider_name_; }
    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<IndexEntry>& entries() const { return entries_; }
    const IndexEntry& entry(const std::string& item_id) const;

    // k best by cosine, descending; ties by ascending item_id; all items when k > size.
    std::vector<ScoredItem> search(std::span<const double> query, std::size_t k) const;

private:
    std::string provider_name_;
    std::size_t dimension_ = 0;
    std::vector<IndexEntry> entries_;
    std::vector<double> norms_;
};

// Embeds `query_text` with `provider` (which must match the index) and searches.
std::vector<ScoredItem> top_k(const VectorIndex& index, const EmbeddingProvider& provider,
                              std::string_view query_text, std::size_t k);

}  // namespace kgrag
