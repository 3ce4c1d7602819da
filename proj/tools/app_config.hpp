#pragma once

#include <kgrag/context_pruner.hpp>
#include <kgrag/llm_gateway.hpp>
#include <kgrag/semantic_index.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace kgrag::cli {

struct EmbeddingSpec {
    std::string provider = "hash";  // "hash" or "remote"
    std::string name;               // model name; hash providers derive one when empty
    std::size_t dimension = 64;
    std::uint64_t seed = 0;
    std::string endpoint;
    std::string api_key;
};

struct ChatSpec {
    std::string provider = "scripted";  // "scripted" or "openai"
    std::filesystem::path script;        // scripted provider replies
    ChatConfig config;
};

struct AppConfig {
    std::filesystem::path nodes_path;
    std::filesystem::path edges_path;
    std::filesystem::path index_path;
    EmbeddingSpec entity_embedding;
    EmbeddingSpec context_embedding;
    std::vector<EmbeddingSpec> sweep_embeddings;
    std::vector<std::size_t> sweep_volumes{10, 50, 100, 150, 200};
    ChatSpec chat;
    PruneConfig prune;
    bool context_volume_set = false;  // explicit in file or flags
    bool evidence = false;
    std::uint64_t seed = 0;
    bool offline = false;

    // Throws ConfigError.
    void validate() const;
    // Snapshot embedded in every output; never contains credentials.
    nlohmann::json snapshot() const;
};

// Command-line values that override the file and environment.
struct Overrides {
    std::optional<std::filesystem::path> nodes_path;
    std::optional<std::filesystem::path> edges_path;
    std::optional<std::size_t> context_volume;
    std::optional<double> min_similarity;
    std::optional<bool> evidence;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> chat_script;
    bool offline = false;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_env();

// Precedence: overrides > environment > config file > defaults. Relative paths in
// the file resolve against the file's directory. Throws ConfigError.
AppConfig load_config(const std::optional<std::filesystem::path>& config_path,
                      const Overrides& overrides, const EnvLookup& env = process_env());

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingSpec& spec);
std::unique_ptr<ChatProvider> make_chat_provider(const ChatSpec& spec);

}  // namespace kgrag::cli
