#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgrag {

struct ChatConfig {
    std::string model_name = "scripted";
    double temperature = 0.0;
    int max_output_tokens = 1024;
    std::string endpoint;  // chat-completions URL; unused by the scripted double
    std::string api_key;
    int timeout_ms = 60000;
    int max_attempts = 3;
    int backoff_ms = 500;

    // Throws InvalidArgument when temperature < 0 or max_output_tokens < 1.
    void validate() const;
};

struct TokenUsage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    long long total_tokens = 0;
    bool estimated = false;

    TokenUsage& operator+=(const TokenUsage& other);
    bool operator==(const TokenUsage&) const = default;
};

struct ChatReply {
    std::string text;
    TokenUsage usage;
    std::string provider;
};

// Call-site label; never sent over the wire. Lets the scripted double tell the
// extraction, answer and query-generation calls apart.
struct ChatRequest {
    std::string stage;
    std::string system_prompt;
    std::string user_prompt;
};

// What a provider hands back before the gateway settles usage.
struct RawChatReply {
    std::string text;
    std::optional<TokenUsage> usage;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string name() const = 0;
    virtual RawChatReply complete(const ChatConfig& config, const ChatRequest& request) const = 0;
};

// ceil(characters / 4). Only used when a provider omits usage.
long long estimate_tokens(std::string_view text);

// Validates inputs, forwards the request untouched, and fills estimated usage
// when the provider reports none.
ChatReply chat(const ChatProvider& provider, const ChatConfig& config, const ChatRequest& request);

// OpenAI-style chat completions over HTTP(S), with bounded retry.
class OpenAiChatProvider final : public ChatProvider {
public:
    std::string name() const override { return "openai-compatible"; }
    RawChatReply complete(const ChatConfig& config, const ChatRequest& request) const override;
};

struct ScriptEntry {
    std::string stage;  // empty matches any stage
    std::optional<std::string> user_exact;
    std::optional<std::string> user_contains;
    std::optional<std::string> system_contains;
    std::string reply;
    std::optional<TokenUsage> usage;
};

// Deterministic test double. Entries with user_exact are keyed by the FNV-1a hash of
// the user prompt (plus stage); the rest are tried in insertion order. A request that
// matches nothing fails with "unscripted prompt".
class ScriptedChatProvider final : public ChatProvider {
public:
    ScriptedChatProvider() = default;
    explicit ScriptedChatProvider(std::vector<ScriptEntry> entries);

    // JSONL: {"stage"?, "user"?, "user_contains"?, "system_contains"?, "reply", "usage"?}
    static ScriptedChatProvider load(const std::filesystem::path& path);

    void add(ScriptEntry entry);
    std::size_t size() const { return exact_.size() + rules_.size(); }

    std::string name() const override { return "scripted"; }
    RawChatReply complete(const ChatConfig& config, const ChatRequest& request) const override;

private:
    std::unordered_multimap<std::uint64_t, ScriptEntry> exact_;
    std::vector<ScriptEntry> rules_;
};

}  // namespace kgrag
