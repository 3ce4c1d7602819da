#pragma once

#include "kgrag/kg_store.hpp"
#include "kgrag/llm_gateway.hpp"
#include "kgrag/pipeline.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace kgrag {

// FIND <TYPE> "<name>" [REL <PREDICATE> TO <TYPE>]
struct MiniQuery {
    std::string node_type;
    std::string node_name;  // matched byte-for-byte
    std::optional<std::string> predicate;
    std::optional<std::string> target_type;

    bool operator==(const MiniQuery&) const = default;
};

// Throws QueryParseError (with byte offset) on anything outside the grammar.
// Unknown types or predicates are accepted here; execution decides.
MiniQuery parse_query(std::string_view text);
std::string render_query(const MiniQuery& query);

// One "node <Type>" line per node type, then one "edge (<S>)-[<P>]->(<O>)" line
// per edge type, in schema order.
std::string serialize_schema(const GraphSchema& schema);

extern const char* const kQuerySystemPrompt;

struct BaselineOptions {
    ChatConfig chat;
    bool include_evidence = false;
};

// Schema-in-prompt query generation: the model sees the whole schema, writes a
// MiniQuery, the store executes it by exact match, and a second call answers
// from whatever came back. Token usage of both calls is summed.
class SchemaQueryBaseline {
public:
    SchemaQueryBaseline(const KgStore& store, const ChatProvider& chat_provider,
                        BaselineOptions options);

    AnswerRecord run(std::string_view question) const;

    const std::string& schema_text() const { return schema_text_; }

    // Prompt for the query-generation call.
    AssembledPrompt query_prompt(std::string_view question) const;

private:
    const KgStore* store_;
    const ChatProvider* chat_provider_;
    BaselineOptions options_;
    std::string schema_text_;
};

}  // namespace kgrag
