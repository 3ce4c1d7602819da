#include "kgrag/pipeline.hpp"

#include "kgrag/errors.hpp"

#include <utility>

namespace kgrag {

using nlohmann::json;

const char* const kAnswerSystemPrompt =
    "You are a biomedical assistant. Answer using only the provided context. Cite the "
    "Provenance strings of the context you rely on. Say 'insufficient context' when the "
    "context does not cover the question.";

namespace {

constexpr std::string_view kUserHeader =
    "Answer the question using the knowledge graph context below.";
constexpr std::string_view kContextMarker = "Context:";
constexpr std::string_view kNoContext = "Context: (none retrieved)";
constexpr std::string_view kQuestionMarker = "Question: ";

template <typename F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

AssembledPrompt assemble_prompt(std::string_view question,
                                const std::vector<ContextSentence>& context,
                                std::string_view system_prompt) {
    std::string user(kUserHeader);
    user += '\n';
    if (context.empty()) {
        user += kNoContext;
        user += '\n';
    } else {
        user += kContextMarker;
        user += '\n';
        for (const auto& s : context) {
            user += s.text;
            user += '\n';
        }
    }
    user += kQuestionMarker;
    user += question;
    return {std::string(system_prompt), std::move(user)};
}

AssembledPrompt assemble_prompt(std::string_view question, const PrunedContext& pruned,
                                std::string_view system_prompt) {
    return assemble_prompt(question, pruned.sentences, system_prompt);
}

std::vector<std::string> context_lines(std::string_view user_prompt) {
    std::vector<std::string> lines;
    bool inside = false;
    std::size_t start = 0;
    while (start <= user_prompt.size()) {
        const auto end = std::min(user_prompt.find('\n', start), user_prompt.size());
        const auto line = user_prompt.substr(start, end - start);
        if (!inside) {
            if (line == kContextMarker) inside = true;
        } else {
            if (line.substr(0, kQuestionMarker.size()) == kQuestionMarker) break;
            lines.emplace_back(line);
        }
        start = end + 1;
    }
    return lines;
}

json to_json(const TokenUsage& usage) {
    return {{"prompt_tokens", usage.prompt_tokens},
            {"completion_tokens", usage.completion_tokens},
            {"total_tokens", usage.total_tokens},
            {"estimated", usage.estimated}};
}

json to_json(const PruneConfig& config) {
    return {{"context_volume", config.context_volume},
            {"min_similarity", config.min_similarity},
            {"percentile", config.percentile}};
}

json to_json(const ConfigSnapshot& s) {
    return {{"prune", to_json(s.prune)},
            {"chat",
             {{"model", s.chat.model_name},
              {"temperature", s.chat.temperature},
              {"max_output_tokens", s.chat.max_output_tokens},
              {"provider", s.chat_provider}}},
            {"include_evidence", s.include_evidence},
            {"entity_embedding", s.entity_embedding},
            {"context_embedding", s.context_embedding}};
}

namespace {

json node_json(const NodeRecord& n) {
    json out = {{"id", n.node_id}, {"type", n.node_type}, {"name", n.name}};
    if (n.identifier) out["identifier"] = *n.identifier;
    return out;
}

}  // namespace

json to_json(const ContextSentence& s) {
    const auto& t = s.source_triple;
    json out = {{"text", s.text},
                {"disease_node_id", s.disease_node_id},
                {"subject_id", t.subject.node_id},
                {"predicate", t.predicate},
                {"object_id", t.object.node_id},
                {"direction", std::string(to_string(t.direction))},
                {"provenance", t.provenance}};
    out["similarity"] = s.similarity ? json(*s.similarity) : json(nullptr);
    return out;
}

json to_json(const AnswerRecord& r) {
    json entities = json::array();
    for (const auto& e : r.entities)
        entities.push_back({{"mention", e.mention}, {"node", node_json(e.node)}, {"score", e.score}});
    json contexts = json::array();
    for (const auto& s : r.contexts_used) contexts.push_back(to_json(s));
    json out = {{"system", r.system},
                {"question", r.question},
                {"answer_text", r.answer_text},
                {"entities", std::move(entities)},
                {"contexts_used", std::move(contexts)},
                {"per_disease_thresholds", r.per_disease_thresholds},
                {"usage", to_json(r.usage)},
                {"config_snapshot", to_json(r.config_snapshot)},
                {"system_prompt", r.system_prompt},
                {"user_prompt", r.user_prompt},
                {"used_fallback", r.used_fallback},
                {"retrieval_success", r.retrieval_success},
                {"diagnostics", r.diagnostics}};
    out["generated_query"] = r.generated_query ? json(*r.generated_query) : json(nullptr);
    return out;
}

KgRagPipeline::KgRagPipeline(const KgStore& store, const DiseaseIndex& diseases,
                             const EmbeddingProvider& context_provider,
                             const ChatProvider& chat_provider, PipelineOptions options)
    : store_(&store),
      diseases_(&diseases),
      context_provider_(&context_provider),
      chat_provider_(&chat_provider),
      options_(std::move(options)) {
    options_.prune.validate();
    options_.chat.validate();
}

AnswerRecord KgRagPipeline::answer(std::string_view question) const {
    return answer(question, options_.include_evidence);
}

AnswerRecord KgRagPipeline::answer(std::string_view question, bool include_evidence) const {
    AnswerRecord record;
    record.system = "kg-rag";
    record.question = std::string(question);
    record.config_snapshot = {options_.prune,
                              options_.chat,
                              include_evidence,
                              chat_provider_->name(),
                              diseases_->provider().name(),
                              context_provider_->name()};

    auto recognition = in_stage("recognize", [&] {
        return recognize(*chat_provider_, options_.chat, *diseases_, question);
    });
    record.entities = recognition.matches;
    record.usage = recognition.usage;
    record.used_fallback = recognition.used_fallback;
    record.diagnostics = std::move(recognition.diagnostics);

    std::map<std::string, std::vector<ContextSentence>> contexts;
    in_stage("retrieve", [&] {
        for (const auto& match : record.entities) {
            auto sentences = build_context(*store_, match.node.node_id, include_evidence);
            if (!sentences.empty()) contexts.emplace(match.node.node_id, std::move(sentences));
        }
    });

    PrunedContext pruned;
    if (!contexts.empty()) {
        pruned = in_stage("prune", [&] {
            return prune(question, contexts, *context_provider_, options_.prune);
        });
    }
    if (pruned.empty()) record.diagnostics.emplace_back("no context retrieved");
    record.per_disease_thresholds = pruned.per_disease_thresholds;
    record.contexts_used = std::move(pruned.sentences);
    record.retrieval_success = !record.contexts_used.empty();

    auto prompt = assemble_prompt(question, record.contexts_used, options_.answer_system_prompt);
    const auto reply = in_stage("answer", [&] {
        return chat(*chat_provider_, options_.chat,
                    {"answer", prompt.system_prompt, prompt.user_prompt});
    });
    record.answer_text = reply.text;
    record.usage += reply.usage;
    record.system_prompt = std::move(prompt.system_prompt);
    record.user_prompt = std::move(prompt.user_prompt);
    return record;
}

}  // namespace kgrag
