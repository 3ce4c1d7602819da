#include "kgrag/llm_gateway.hpp"

#include "http_client.hpp"
#include "json_lines.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/rng.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace kgrag {

using nlohmann::json;

void ChatConfig::validate() const {
    if (!(temperature >= 0)) throw InvalidArgument("temperature must be >= 0");
    if (max_output_tokens < 1) throw InvalidArgument("max_output_tokens must be >= 1");
}

TokenUsage& TokenUsage::operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    total_tokens += other.total_tokens;
    estimated = estimated || other.estimated;
    return *this;
}

long long estimate_tokens(std::string_view text) {
    return static_cast<long long>((text.size() + 3) / 4);
}

ChatReply chat(const ChatProvider& provider, const ChatConfig& config, const ChatRequest& request) {
    config.validate();
    if (request.system_prompt.empty()) throw InvalidArgument("system prompt is empty");
    if (request.user_prompt.empty()) throw InvalidArgument("user prompt is empty");

    auto raw = provider.complete(config, request);
    ChatReply reply;
    reply.provider = provider.name();
    if (raw.usage) {
        reply.usage = *raw.usage;
        reply.usage.estimated = false;
    } else {
        reply.usage.prompt_tokens =
            estimate_tokens(request.system_prompt) + estimate_tokens(request.user_prompt);
        reply.usage.completion_tokens = estimate_tokens(raw.text);
        reply.usage.total_tokens = reply.usage.prompt_tokens + reply.usage.completion_tokens;
        reply.usage.estimated = true;
    }
    reply.text = std::move(raw.text);
    return reply;
}

RawChatReply OpenAiChatProvider::complete(const ChatConfig& config,
                                          const ChatRequest& request) const {
    if (config.endpoint.empty()) throw ConfigError("chat endpoint URL is not configured");
    const json body = {
        {"model", config.model_name},
        {"temperature", config.temperature},
        {"max_tokens", config.max_output_tokens},
        {"messages",
         json::array({{{"role", "system"}, {"content", request.system_prompt}},
                      {{"role", "user"}, {"content", request.user_prompt}}})},
    };
    const auto reply = detail::post_json(config.endpoint, config.api_key, body,
                                         {config.timeout_ms, config.max_attempts, config.backoff_ms});
    RawChatReply out;
    try {
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        out.text = content.is_null() ? std::string() : content.get<std::string>();
        if (const auto it = reply.find("usage"); it != reply.end() && it->is_object()) {
            TokenUsage u;
            u.prompt_tokens = it->value("prompt_tokens", 0LL);
            u.completion_tokens = it->value("completion_tokens", 0LL);
            u.total_tokens = it->value("total_tokens", u.prompt_tokens + u.completion_tokens);
            out.usage = u;
        }
    } catch (const json::exception& e) {
        throw ProviderError(200, reply.dump());
    }
    return out;
}

namespace {

std::uint64_t script_key(std::string_view stage, std::string_view user) {
    return fnv1a64(user) ^ (fnv1a64(stage) * 0x100000001b3ULL);
}

}  // namespace

ScriptedChatProvider::ScriptedChatProvider(std::vector<ScriptEntry> entries) {
    for (auto& e : entries) add(std::move(e));
}

void ScriptedChatProvider::add(ScriptEntry entry) {
    if (entry.user_exact) {
        const auto key = script_key(entry.stage, *entry.user_exact);
        const auto [first, last] = exact_.equal_range(key);
        for (auto it = first; it != last; ++it) {
            // First entry for a (stage, prompt) pair wins.
            if (it->second.stage == entry.stage && it->second.user_exact == entry.user_exact)
                return;
        }
        exact_.emplace(key, std::move(entry));
    } else {
        rules_.push_back(std::move(entry));
    }
}

ScriptedChatProvider ScriptedChatProvider::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open chat script " + path.string());
    ScriptedChatProvider provider;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (detail::is_blank(text)) continue;
        const auto obj = detail::parse_line(text, line);
        try {
            ScriptEntry e;
            e.stage = obj.value("stage", "");
            if (obj.contains("user")) e.user_exact = obj.at("user").get<std::string>();
            if (obj.contains("user_contains"))
                e.user_contains = obj.at("user_contains").get<std::string>();
            if (obj.contains("system_contains"))
                e.system_contains = obj.at("system_contains").get<std::string>();
            const auto& reply = obj.at("reply");
            e.reply = reply.is_string() ? reply.get<std::string>() : reply.dump();
            if (obj.contains("usage")) {
                const auto& u = obj.at("usage");
                TokenUsage usage;
                usage.prompt_tokens = u.at("prompt_tokens").get<long long>();
                usage.completion_tokens = u.at("completion_tokens").get<long long>();
                usage.total_tokens = u.value("total_tokens",
                                             usage.prompt_tokens + usage.completion_tokens);
                e.usage = usage;
            }
            provider.add(std::move(e));
        } catch (const json::exception& ex) {
            throw FormatError(ex.what(), line);
        }
    }
    return provider;
}

RawChatReply ScriptedChatProvider::complete(const ChatConfig&, const ChatRequest& request) const {
    const auto to_raw = [](const ScriptEntry& e) { return RawChatReply{e.reply, e.usage}; };

    // Stage-specific exact entries win over stage-less ones.
    for (const std::string_view stage : {std::string_view(request.stage), std::string_view{}}) {
        const auto [first, last] = exact_.equal_range(script_key(stage, request.user_prompt));
        for (auto it = first; it != last; ++it) {
            if (it->second.stage == stage && *it->second.user_exact == request.user_prompt)
                return to_raw(it->second);
        }
        if (request.stage.empty()) break;
    }
    for (const auto& e : rules_) {
        if (!e.stage.empty() && e.stage != request.stage) continue;
        if (e.user_contains && request.user_prompt.find(*e.user_contains) == std::string::npos)
            continue;
        if (e.system_contains &&
            request.system_prompt.find(*e.system_contains) == std::string::npos)
            continue;
        return to_raw(e);
    }
    throw NotFoundError("unscripted prompt (stage \"" + request.stage + "\")");
}

}  // namespace kgrag
