#include "app_config.hpp"

#include <kgrag/errors.hpp>

#include <cstdlib>
#include <fstream>

namespace kgrag::cli {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base.empty()) return base / path;
    return path;
}

EmbeddingSpec embedding_from(const json& j, const EnvLookup& env, const char* env_prefix) {
    EmbeddingSpec spec;
    spec.provider = j.value("provider", spec.provider);
    spec.name = j.value("name", spec.name);
    spec.dimension = j.value("dimension", spec.dimension);
    spec.seed = j.value("seed", spec.seed);
    spec.endpoint = j.value("endpoint", spec.endpoint);
    if (const auto key_env = j.value("api_key_env", std::string()); !key_env.empty())
        if (auto v = env(key_env)) spec.api_key = *v;
    const std::string prefix(env_prefix);
    if (auto v = env(prefix + "_ENDPOINT")) spec.endpoint = *v;
    if (auto v = env(prefix + "_API_KEY")) spec.api_key = *v;
    return spec;
}

std::string spec_name(const EmbeddingSpec& s) {
    if (!s.name.empty()) return s.name;
    return "hash-" + std::to_string(s.dimension) + "-" + std::to_string(s.seed);
}

json spec_json(const EmbeddingSpec& s) {
    json out = {{"provider", s.provider}, {"name", spec_name(s)}, {"dimension", s.dimension}};
    if (s.provider == "hash") out["seed"] = s.seed;
    else out["endpoint"] = s.endpoint;
    return out;
}

}  // namespace

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str()); v && *v) return std::string(v);
        return std::nullopt;
    };
}

void AppConfig::validate() const {
    if (nodes_path.empty() || edges_path.empty())
        throw ConfigError("graph node and edge files must be configured (--config or "
                          "--graph-nodes/--graph-edges)");
    for (const auto* spec : {&entity_embedding, &context_embedding}) {
        if (spec->provider != "hash" && spec->provider != "remote")
            throw ConfigError("unknown embedding provider " + spec->provider);
        if (spec->dimension == 0) throw ConfigError("embedding dimension must be positive");
        if (spec->provider == "remote" && (spec->endpoint.empty() || spec->name.empty()))
            throw ConfigError("remote embedding provider needs a model name and an endpoint");
    }
    if (chat.provider != "scripted" && chat.provider != "openai")
        throw ConfigError("unknown chat provider " + chat.provider);
    if (chat.provider == "scripted" && chat.script.empty())
        throw ConfigError("scripted chat provider needs a script file (chat.script)");
    if (chat.provider == "openai" && chat.config.endpoint.empty())
        throw ConfigError("chat endpoint is not configured (chat.endpoint or KGRAG_CHAT_ENDPOINT)");
    try {
        prune.validate();
        chat.config.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (offline && (chat.provider != "scripted" || entity_embedding.provider != "hash" ||
                    context_embedding.provider != "hash"))
        throw ConfigError("offline mode only allows scripted chat and hash embeddings");
}

json AppConfig::snapshot() const {
    json sweep = json::array();
    for (const auto& s : sweep_embeddings) sweep.push_back(spec_json(s));
    return {{"graph", {{"nodes", nodes_path.string()}, {"edges", edges_path.string()}}},
            {"index", index_path.string()},
            {"entity_embedding", spec_json(entity_embedding)},
            {"context_embedding", spec_json(context_embedding)},
            {"chat",
             {{"provider", chat.provider},
              {"model", chat.config.model_name},
              {"temperature", chat.config.temperature},
              {"max_output_tokens", chat.config.max_output_tokens}}},
            {"prune",
             {{"context_volume", prune.context_volume},
              {"min_similarity", prune.min_similarity},
              {"percentile", prune.percentile}}},
            {"evidence", evidence},
            {"seed", seed},
            {"offline", offline}};
}

AppConfig load_config(const std::optional<std::filesystem::path>& config_path,
                      const Overrides& overrides, const EnvLookup& env) {
    AppConfig cfg;
    json file = json::object();
    std::filesystem::path base;
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw ConfigError("cannot open config file " + config_path->string());
        try {
            file = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("invalid config file " + config_path->string() + ": " + e.what());
        }
        base = config_path->parent_path();
    }

    try {
        if (file.contains("graph")) {
            const auto& g = file.at("graph");
            if (g.contains("nodes")) cfg.nodes_path = resolve(base, g.at("nodes").get<std::string>());
            if (g.contains("edges")) cfg.edges_path = resolve(base, g.at("edges").get<std::string>());
        }
        if (file.contains("index")) cfg.index_path = resolve(base, file.at("index").get<std::string>());

        cfg.entity_embedding =
            embedding_from(file.value("entity_embedding", json::object()), env, "KGRAG_EMBEDDING");
        cfg.context_embedding = embedding_from(
            file.value("context_embedding", file.value("entity_embedding", json::object())), env,
            "KGRAG_EMBEDDING");
        if (file.contains("sweep")) {
            const auto& s = file.at("sweep");
            for (const auto& e : s.value("embeddings", json::array()))
                cfg.sweep_embeddings.push_back(embedding_from(e, env, "KGRAG_EMBEDDING"));
            if (s.contains("volumes")) cfg.sweep_volumes = s.at("volumes").get<std::vector<std::size_t>>();
        }

        const auto chat = file.value("chat", json::object());
        cfg.chat.provider = chat.value("provider", cfg.chat.provider);
        if (chat.contains("script")) cfg.chat.script = resolve(base, chat.at("script").get<std::string>());
        cfg.chat.config.model_name = chat.value("model", cfg.chat.config.model_name);
        cfg.chat.config.temperature = chat.value("temperature", cfg.chat.config.temperature);
        cfg.chat.config.max_output_tokens =
            chat.value("max_output_tokens", cfg.chat.config.max_output_tokens);
        cfg.chat.config.endpoint = chat.value("endpoint", cfg.chat.config.endpoint);
        cfg.chat.config.timeout_ms = chat.value("timeout_ms", cfg.chat.config.timeout_ms);
        if (const auto key_env = chat.value("api_key_env", std::string()); !key_env.empty())
            if (auto v = env(key_env)) cfg.chat.config.api_key = *v;

        const auto prune = file.value("prune", json::object());
        if (prune.contains("context_volume")) {
            cfg.prune.context_volume = prune.at("context_volume").get<std::size_t>();
            cfg.context_volume_set = true;
        }
        cfg.prune.min_similarity = prune.value("min_similarity", cfg.prune.min_similarity);
        cfg.prune.percentile = prune.value("percentile", cfg.prune.percentile);
        cfg.evidence = file.value("evidence", cfg.evidence);
        cfg.seed = file.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config value: ") + e.what());
    }

    if (auto v = env("KGRAG_CHAT_ENDPOINT")) cfg.chat.config.endpoint = *v;
    if (auto v = env("KGRAG_CHAT_API_KEY")) cfg.chat.config.api_key = *v;
    if (auto v = env("KGRAG_CHAT_MODEL")) cfg.chat.config.model_name = *v;

    if (overrides.nodes_path) cfg.nodes_path = *overrides.nodes_path;
    if (overrides.edges_path) cfg.edges_path = *overrides.edges_path;
    if (overrides.context_volume) {
        cfg.prune.context_volume = *overrides.context_volume;
        cfg.context_volume_set = true;
    }
    if (overrides.min_similarity) cfg.prune.min_similarity = *overrides.min_similarity;
    if (overrides.evidence) cfg.evidence = *overrides.evidence;
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.chat_script) cfg.chat.script = *overrides.chat_script;
    cfg.offline = overrides.offline;
    if (cfg.offline) cfg.chat.provider = "scripted";

    cfg.validate();
    return cfg;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbeddingSpec& spec) {
    if (spec.provider == "hash")
        return std::make_unique<HashEmbeddingProvider>(spec.dimension, spec.seed, spec.name);
    RemoteEndpoint endpoint;
    endpoint.url = spec.endpoint;
    endpoint.api_key = spec.api_key;
    return std::make_unique<RemoteEmbeddingProvider>(spec.name, spec.dimension, endpoint);
}

std::unique_ptr<ChatProvider> make_chat_provider(const ChatSpec& spec) {
    if (spec.provider == "scripted")
        return std::make_unique<ScriptedChatProvider>(ScriptedChatProvider::load(spec.script));
    return std::make_unique<OpenAiChatProvider>();
}

}  // namespace kgrag::cli
