#include "kgrag/entity_recognition.hpp"

#include "kgrag/errors.hpp"

#include <nlohmann/json.hpp>

#include <unordered_set>

namespace kgrag {

using nlohmann::json;

const char* const kExtractionSystemPrompt =
    "You are an expert biomedical entity extractor. Identify every disease named in the "
    "user's text. Reply with JSON only, exactly of the form {\"diseases\": [\"<disease name>\", "
    "...]}, copying each name as it is written in the text. If the text names no disease, "
    "reply {\"diseases\": []}.";

namespace {

constexpr const char* kRetrySuffix =
    "\n\nRespond only with JSON of the form {\"diseases\": [\"<disease name>\", ...]}.";

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::string_view strip_fence(std::string_view s) {
    s = trim(s);
    if (s.substr(0, 3) != "```") return s;
    const auto body = s.find('\n');
    const auto close = s.rfind("```");
    if (body == std::string_view::npos || close <= body) return s;
    return trim(s.substr(body + 1, close - body - 1));
}

}  // namespace

DiseaseIndex DiseaseIndex::build(const KgStore& store, const EmbeddingProvider& provider) {
    std::vector<std::pair<std::string, std::string>> items;
    for (const auto& n : store.nodes())
        if (n.node_type == "Disease") items.emplace_back(n.node_id, n.name);
    return DiseaseIndex(store, provider, VectorIndex::build(provider, items));
}

DiseaseIndex DiseaseIndex::adopt(const KgStore& store, const EmbeddingProvider& provider,
                                 VectorIndex index) {
    if (index.provider_name() != provider.name())
        throw ConfigError("disease index was built with " + index.provider_name() +
                          " but the configured provider is " + provider.name());
    if (index.dimension() != provider.dimension())
        throw ConfigError("disease index dimension does not match the provider");
    for (const auto& e : index.entries()) {
        if (!store.contains(e.item_id))
            throw NotFoundError("disease index refers to unknown node " + e.item_id);
        if (store.node(e.item_id).node_type != "Disease")
            throw ConfigError("disease index item " + e.item_id + " is not a Disease node");
    }
    return DiseaseIndex(store, provider, std::move(index));
}

std::vector<EntityMatch> DiseaseIndex::nearest(std::string_view text, std::size_t k,
                                               const std::string& mention) const {
    if (index_.empty()) throw InvalidArgument("disease index is empty");
    std::vector<EntityMatch> out;
    for (auto& hit : top_k(index_, *provider_, text, k))
        out.push_back({mention, store_->node(hit.item_id), hit.score});
    return out;
}

std::optional<std::vector<std::string>> parse_extraction_reply(std::string_view reply) {
    const auto body = strip_fence(reply);
    const auto doc = json::parse(body.begin(), body.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || doc.size() != 1 || !doc.contains("diseases"))
        return std::nullopt;
    const auto& list = doc.at("diseases");
    if (!list.is_array()) return std::nullopt;
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& item : list) {
        if (!item.is_string()) return std::nullopt;
        const auto name = std::string(trim(item.get<std::string>()));
        if (!name.empty() && seen.insert(name).second) out.push_back(name);
    }
    return out;
}

ExtractionResult extract_disease_mentions(const ChatProvider& chat_provider,
                                          const ChatConfig& chat_config, std::string_view prompt) {
    if (trim(prompt).empty()) throw InvalidArgument("prompt is empty");
    ExtractionResult result;

    const std::string user(prompt);
    auto reply = chat(chat_provider, chat_config, {"extract", kExtractionSystemPrompt, user});
    result.usage += reply.usage;
    if (auto parsed = parse_extraction_reply(reply.text)) {
        result.mentions = std::move(*parsed);
        return result;
    }

    reply = chat(chat_provider, chat_config,
                 {"extract-retry", kExtractionSystemPrompt, user + kRetrySuffix});
    result.usage += reply.usage;
    if (auto parsed = parse_extraction_reply(reply.text)) {
        result.mentions = std::move(*parsed);
        return result;
    }
    result.parse_failed = true;
    result.diagnostic = "disease extraction reply was not valid JSON after one retry: " + reply.text;
    return result;
}

EntityMatch match_entity(const DiseaseIndex& diseases, std::string_view mention) {
    return diseases.nearest(mention, 1, std::string(mention)).front();
}

Recognition recognize(const ChatProvider& chat_provider, const ChatConfig& chat_config,
                      const DiseaseIndex& diseases, std::string_view prompt) {
    if (diseases.size() == 0) throw InvalidArgument("disease index is empty");
    Recognition out;
    auto extraction = extract_disease_mentions(chat_provider, chat_config, prompt);
    out.usage = extraction.usage;
    if (extraction.parse_failed) out.diagnostics.push_back(extraction.diagnostic);

    if (extraction.mentions.empty()) {
        out.used_fallback = true;
        out.matches = diseases.nearest(prompt, kFallbackDiseaseCount, "");
        return out;
    }
    std::unordered_set<std::string> seen;
    for (const auto& mention : extraction.mentions) {
        auto match = match_entity(diseases, mention);
        if (seen.insert(match.node.node_id).second) out.matches.push_back(std::move(match));
    }
    return out;
}

}  // namespace kgrag
