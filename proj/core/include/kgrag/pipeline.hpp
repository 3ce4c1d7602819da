#pragma once

#include "kgrag/context_builder.hpp"
#include "kgrag/context_pruner.hpp"
#include "kgrag/entity_recognition.hpp"
#include "kgrag/kg_store.hpp"
#include "kgrag/llm_gateway.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

extern const char* const kAnswerSystemPrompt;

struct AssembledPrompt {
    std::string system_prompt;
    std::string user_prompt;
};

// Header, a "Context:" block with one sentence per line in the given order, then
// "Question: <question>". An empty context renders "Context: (none retrieved)".
AssembledPrompt assemble_prompt(std::string_view question,
                                const std::vector<ContextSentence>& context,
                                std::string_view system_prompt = kAnswerSystemPrompt);
AssembledPrompt assemble_prompt(std::string_view question, const PrunedContext& pruned,
                                std::string_view system_prompt = kAnswerSystemPrompt);

// Lines between "Context:" and "Question:" of an assembled user prompt.
std::vector<std::string> context_lines(std::string_view user_prompt);

struct PipelineOptions {
    PruneConfig prune;
    ChatConfig chat;
    bool include_evidence = false;
    std::string answer_system_prompt = kAnswerSystemPrompt;
};

struct ConfigSnapshot {
    PruneConfig prune;
    ChatConfig chat;  // credentials are never serialized
    bool include_evidence = false;
    std::string chat_provider;
    std::string entity_embedding;
    std::string context_embedding;
};

struct AnswerRecord {
    std::string system;  // "kg-rag" or "baseline"
    std::string question;
    std::string answer_text;
    std::vector<EntityMatch> entities;
    std::vector<ContextSentence> contexts_used;
    std::map<std::string, double> per_disease_thresholds;
    TokenUsage usage;
    ConfigSnapshot config_snapshot;
    std::string system_prompt;
    std::string user_prompt;
    bool used_fallback = false;
    bool retrieval_success = false;
    std::optional<std::string> generated_query;  // baseline only
    std::vector<std::string> diagnostics;
};

nlohmann::json to_json(const TokenUsage& usage);
nlohmann::json to_json(const PruneConfig& config);
nlohmann::json to_json(const ConfigSnapshot& snapshot);
nlohmann::json to_json(const ContextSentence& sentence);
nlohmann::json to_json(const AnswerRecord& record);

// recognize -> retrieve -> verbalize -> prune -> assemble -> answer.
// All referenced components must outlive the pipeline; answer() is const and
// safe to call concurrently.
class KgRagPipeline {
public:
    KgRagPipeline(const KgStore& store, const DiseaseIndex& diseases,
                  const EmbeddingProvider& context_provider, const ChatProvider& chat_provider,
                  PipelineOptions options);

    AnswerRecord answer(std::string_view question) const;
    AnswerRecord answer(std::string_view question, bool include_evidence) const;

    const PipelineOptions& options() const { return options_; }

private:
    const KgStore* store_;
    const DiseaseIndex* diseases_;
    const EmbeddingProvider* context_provider_;
    const ChatProvider* chat_provider_;
    PipelineOptions options_;
};

}  // namespace kgrag
