#pragma once

#include "kgrag/kg_store.hpp"
#include "kgrag/llm_gateway.hpp"
#include "kgrag/semantic_index.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct EntityMatch {
    std::string mention;  // empty for whole-prompt fallback matches
    NodeRecord node;
    double score = 0;
};

// Vector index over the names of every Disease node of a store. Holds non-owning
// references; the store and provider must outlive it.
class DiseaseIndex {
public:
    static DiseaseIndex build(const KgStore& store, const EmbeddingProvider& provider);
    // Adopts a prebuilt index after checking that it matches the provider and that
    // every item is a Disease node of the store.
    static DiseaseIndex adopt(const KgStore& store, const EmbeddingProvider& provider,
                              VectorIndex index);

    const VectorIndex& index() const { return index_; }
    const KgStore& store() const { return *store_; }
    const EmbeddingProvider& provider() const { return *provider_; }
    std::size_t size() const { return index_.size(); }

    std::vector<EntityMatch> nearest(std::string_view text, std::size_t k,
                                     const std::string& mention) const;

private:
    DiseaseIndex(const KgStore& store, const EmbeddingProvider& provider, VectorIndex index)
        : store_(&store), provider_(&provider), index_(std::move(index)) {}

    const KgStore* store_;
    const EmbeddingProvider* provider_;
    VectorIndex index_;
};

struct ExtractionResult {
    std::vector<std::string> mentions;
    TokenUsage usage;
    bool parse_failed = false;  // both attempts unparseable; mentions is empty
    std::string diagnostic;
};

extern const char* const kExtractionSystemPrompt;

// Parses {"diseases": [..]} (optionally in a ``` fence); nullopt when the reply
// is not exactly that shape. Result strings are trimmed, non-empty and distinct.
std::optional<std::vector<std::string>> parse_extraction_reply(std::string_view reply);

// Zero-shot JSON extraction with one re-ask on an unparseable reply.
ExtractionResult extract_disease_mentions(const ChatProvider& chat_provider,
                                          const ChatConfig& chat_config, std::string_view prompt);

// Top-1 link of a mention to a Disease node.
EntityMatch match_entity(const DiseaseIndex& diseases, std::string_view mention);

inline constexpr std::size_t kFallbackDiseaseCount = 5;

struct Recognition {
    std::vector<EntityMatch> matches;
    TokenUsage usage;
    bool used_fallback = false;
    std::vector<std::string> diagnostics;
};

// One match per extracted mention (deduplicated by node, first mention kept), or
// the five diseases nearest to the whole prompt when nothing was extracted.
Recognition recognize(const ChatProvider& chat_provider, const ChatConfig& chat_config,
                      const DiseaseIndex& diseases, std::string_view prompt);

}  // namespace kgrag
