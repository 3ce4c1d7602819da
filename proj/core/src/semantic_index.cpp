#include "kgrag/semantic_index.hpp"

#include "http_client.hpp"
#include "json_lines.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

namespace kgrag {

using nlohmann::json;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

// Same expression as cosine_similarity so index scores match it exactly.
double cosine_from_parts(double dot_ab, double norm2_a, double norm2_b) {
    return std::clamp(dot_ab / std::sqrt(norm2_a * norm2_b), -1.0, 1.0);
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n\f\v");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\f\v");
    return s.substr(first, last - first + 1);
}

void check_vector(const EmbeddingVector& v, std::size_t dimension, const std::string& who) {
    if (v.size() != dimension)
        throw InvalidArgument(who + ": expected dimension " + std::to_string(dimension) +
                              ", got " + std::to_string(v.size()));
    for (const double x : v)
        if (!std::isfinite(x)) throw InvalidArgument(who + ": non-finite embedding value");
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InvalidArgument("cosine_similarity: dimension mismatch (" +
                              std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    const double na = dot(a, a);
    const double nb = dot(b, b);
    if (na == 0 || nb == 0) throw InvalidArgument("cosine_similarity: zero vector");
    return cosine_from_parts(dot(a, b), na, nb);
}

EmbeddingVector EmbeddingProvider::embed(std::string_view text) const {
    return embed_batch({std::string(text)}).front();
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) const {
    for (const auto& t : texts)
        if (trim(t).empty()) throw InvalidArgument("cannot embed empty text");
    if (texts.empty()) return {};
    auto vectors = do_embed(texts);
    if (vectors.size() != texts.size())
        throw InvalidArgument(name() + ": returned " + std::to_string(vectors.size()) +
                              " embeddings for " + std::to_string(texts.size()) + " texts");
    for (const auto& v : vectors) check_vector(v, dimension(), name());
    return vectors;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dimension, std::uint64_t seed,
                                             std::string name)
    : dimension_(dimension), seed_(seed), name_(std::move(name)) {
    if (dimension_ == 0) throw InvalidArgument("embedding dimension must be positive");
    if (name_.empty()) name_ = "hash-" + std::to_string(dimension_) + "-" + std::to_string(seed_);
}

std::vector<std::string> HashEmbeddingProvider::tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        const bool ascii_alnum = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                                 (c >= 'A' && c <= 'Z');
        if (ascii_alnum || c >= 0x80) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<EmbeddingVector> HashEmbeddingProvider::do_embed(
    const std::vector<std::string>& texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::vector<double> token_vec(dimension_);
    for (const auto& text : texts) {
        const auto tokens = tokenize(text);
        if (tokens.empty()) throw InvalidArgument("text has no alphanumeric tokens: " + text);
        EmbeddingVector sum(dimension_, 0.0);
        for (const auto& token : tokens) {
            SplitMix64 rng(fnv1a64(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL));
            double norm2 = 0;
            for (auto& x : token_vec) {
                x = 2.0 * rng.unit() - 1.0;
                norm2 += x * x;
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t i = 0; i < dimension_; ++i) sum[i] += token_vec[i] * inv;
        }
        const double norm = std::sqrt(dot(sum, sum));
        if (norm == 0) throw InvalidArgument("degenerate embedding for: " + text);
        for (auto& x : sum) x /= norm;
        out.push_back(std::move(sum));
    }
    return out;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(std::string model, std::size_t dimension,
                                                 RemoteEndpoint endpoint)
    : model_(std::move(model)), dimension_(dimension), endpoint_(std::move(endpoint)) {
    if (dimension_ == 0) throw InvalidArgument("embedding dimension must be positive");
    if (endpoint_.url.empty()) throw ConfigError("remote embedding provider needs an endpoint URL");
}

std::vector<EmbeddingVector> RemoteEmbeddingProvider::do_embed(
    const std::vector<std::string>& texts) const {
    const json body = {{"input", texts}, {"model", model_}};
    const auto reply = detail::post_json(
        endpoint_.url, endpoint_.api_key, body,
        {endpoint_.timeout_ms, endpoint_.max_attempts, endpoint_.backoff_ms});
    std::vector<EmbeddingVector> out;
    try {
        for (const auto& item : reply.at("data"))
            out.push_back(item.at("embedding").get<EmbeddingVector>());
    } catch (const json::exception& e) {
        throw ProviderError(200, "malformed embeddings reply: " + std::string(e.what()));
    }
    return out;
}

VectorIndex VectorIndex::build(const EmbeddingProvider& provider,
                               const std::vector<std::pair<std::string, std::string>>& items) {
    std::vector<std::string> texts;
    texts.reserve(items.size());
    for (const auto& [id, text] : items) texts.push_back(text);
    auto vectors = provider.embed_batch(texts);
    std::vector<IndexEntry> entries;
    entries.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i)
        entries.push_back({items[i].first, items[i].second, std::move(vectors[i])});
    return from_entries(provider.name(), provider.dimension(), std::move(entries));
}

VectorIndex VectorIndex::from_entries(std::string provider_name, std::size_t dimension,
                                      std::vector<IndexEntry> entries) {
    VectorIndex index;
    index.provider_name_ = std::move(provider_name);
    index.dimension_ = dimension;
    std::unordered_set<std::string> seen;
    index.norms_.reserve(entries.size());
    for (const auto& e : entries) {
        if (!seen.insert(e.item_id).second)
            throw InvalidArgument("duplicate index item id " + e.item_id);
        check_vector(e.vector, dimension, "index entry " + e.item_id);
        const double n2 = dot(e.vector, e.vector);
        if (n2 == 0) throw InvalidArgument("index entry " + e.item_id + " has a zero vector");
        index.norms_.push_back(n2);
    }
    index.entries_ = std::move(entries);
    return index;
}

void VectorIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write index file " + path.string());
    out << json{{"provider", provider_name_}, {"dimension", dimension_}}.dump() << '\n';
    for (const auto& e : entries_)
        out << json{{"id", e.item_id}, {"text", e.text}, {"vector", e.vector}}.dump() << '\n';
    if (!out) throw Error("failed writing index file " + path.string());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path,
                              const std::string& expected_provider) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open index file " + path.string());
    std::string text;
    std::size_t line = 0;
    std::string provider;
    std::size_t dimension = 0;
    std::vector<IndexEntry> entries;
    while (std::getline(in, text)) {
        ++line;
        if (detail::is_blank(text)) continue;
        const auto obj = detail::parse_line(text, line);
        try {
            if (provider.empty()) {
                provider = obj.at("provider").get<std::string>();
                dimension = obj.at("dimension").get<std::size_t>();
                continue;
            }
            entries.push_back({obj.at("id").get<std::string>(), obj.at("text").get<std::string>(),
                               obj.at("vector").get<EmbeddingVector>()});
        } catch (const json::exception& e) {
            throw FormatError(e.what(), line);
        }
    }
    if (provider.empty()) throw FormatError("index file has no header: " + path.string(), 0);
    if (provider != expected_provider)
        throw ConfigError("index " + path.string() + " was built with provider " + provider +
                          ", not " + expected_provider);
    return from_entries(provider, dimension, std::move(entries));
}

const IndexEntry& VectorIndex::entry(const std::string& item_id) const {
    const auto it = std::find_if(entries_.begin(), entries_.end(),
                                 [&](const IndexEntry& e) { return e.item_id == item_id; });
    if (it == entries_.end()) throw NotFoundError("no index item " + item_id);
    return *it;
}

std::vector<ScoredItem> VectorIndex::search(std::span<const double> query, std::size_t k) const {
    if (entries_.empty()) throw InvalidArgument("search on an empty index");
    if (k == 0) throw InvalidArgument("k must be at least 1");
    if (query.size() != dimension_)
        throw InvalidArgument("query dimension " + std::to_string(query.size()) +
                              " does not match index dimension " + std::to_string(dimension_));
    const double qn = dot(query, query);
    if (qn == 0) throw InvalidArgument("zero query vector");

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i)
        scored.emplace_back(cosine_from_parts(dot(query, entries_[i].vector), qn, norms_[i]), i);

    const auto better = [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return entries_[a.second].item_id < entries_[b.second].item_id;
    };
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);

    std::vector<ScoredItem> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
        out.push_back({entries_[scored[i].second].item_id, scored[i].first});
    return out;
}

std::vector<ScoredItem> top_k(const VectorIndex& index, const EmbeddingProvider& provider,
                              std::string_view query_text, std::size_t k) {
    if (index.empty()) throw InvalidArgument("top_k on an empty index");
    if (provider.name() != index.provider_name())
        throw InvalidArgument("index built with " + index.provider_name() + ", queried with " +
                              provider.name());
    const auto query = provider.embed(query_text);
    return index.search(query, k);
}

}  // namespace kgrag
