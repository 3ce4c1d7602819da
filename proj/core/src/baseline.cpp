#include "kgrag/baseline.hpp"

#include "kgrag/context_builder.hpp"
#include "kgrag/errors.hpp"

namespace kgrag {

const char* const kQuerySystemPrompt =
    "You translate biomedical questions into graph queries. Use only the node types and "
    "edge types of the schema given by the user. The query language is:\n"
    "  FIND <NodeType> \"<exact node name>\" [REL <PREDICATE> TO <NodeType>]\n"
    "Reply with a single query and nothing else.";

namespace {

class QueryLexer {
public:
    explicit QueryLexer(std::string_view text) : text_(text) {}

    std::size_t pos() const { return pos_; }

    void skip_space() {
        while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
    }
    bool at_end() {
        skip_space();
        return pos_ >= text_.size();
    }

    void expect_keyword(std::string_view kw) {
        skip_space();
        const auto start = pos_;
        const auto word = take_while([](char c) { return is_alpha(c); });
        if (word != kw)
            throw QueryParseError("expected " + std::string(kw) + ", found " + describe(word),
                                  start);
    }

    // TYPE := [A-Za-z]+
    std::string type() {
        skip_space();
        const auto start = pos_;
        const auto word = take_while([](char c) { return is_alpha(c); });
        if (word.empty() || !boundary())
            throw QueryParseError("expected a node type", start);
        return std::string(word);
    }

    // PREDICATE := [A-Z_]+ [a-zA-Z]*
    std::string predicate() {
        skip_space();
        const auto start = pos_;
        const auto head = take_while([](char c) { return (c >= 'A' && c <= 'Z') || c == '_'; });
        if (head.empty()) throw QueryParseError("expected a predicate", start);
        take_while([](char c) { return is_alpha(c); });
        if (!boundary()) throw QueryParseError("unexpected character in predicate", pos_);
        return std::string(text_.substr(start, pos_ - start));
    }

    // QUOTED_NAME := '"' non-quote* '"'
    std::string quoted() {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != '"')
            throw QueryParseError("expected a quoted node name", pos_);
        const auto open = pos_++;
        const auto close = text_.find('"', pos_);
        if (close == std::string_view::npos)
            throw QueryParseError("unterminated quoted name", open);
        std::string name(text_.substr(pos_, close - pos_));
        pos_ = close + 1;
        return name;
    }

private:
    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
    static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

    bool boundary() const {
        return pos_ >= text_.size() || is_space(text_[pos_]) || text_[pos_] == '"';
    }

    template <typename Pred>
    std::string_view take_while(Pred pred) {
        const auto start = pos_;
        while (pos_ < text_.size() && pred(text_[pos_])) ++pos_;
        return text_.substr(start, pos_ - start);
    }

    std::string describe(std::string_view word) const {
        if (!word.empty()) return "\"" + std::string(word) + "\"";
        if (pos_ >= text_.size()) return "end of input";
        return "'" + std::string(1, text_[pos_]) + "'";
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string strip_code_fence(std::string_view reply) {
    auto first = reply.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    reply.remove_prefix(first);
    if (reply.substr(0, 3) == "```") {
        const auto body = reply.find('\n');
        const auto close = reply.rfind("```");
        if (body != std::string_view::npos && close > body)
            reply = reply.substr(body + 1, close - body - 1);
    }
    const auto last = reply.find_last_not_of(" \t\r\n");
    return std::string(last == std::string_view::npos ? std::string_view{}
                                                      : reply.substr(0, last + 1));
}

}  // namespace

MiniQuery parse_query(std::string_view text) {
    QueryLexer lex(text);
    MiniQuery q;
    lex.expect_keyword("FIND");
    q.node_type = lex.type();
    q.node_name = lex.quoted();
    if (!lex.at_end()) {
        lex.expect_keyword("REL");
        q.predicate = lex.predicate();
        lex.expect_keyword("TO");
        q.target_type = lex.type();
        if (!lex.at_end()) throw QueryParseError("trailing input after query", lex.pos());
    }
    return q;
}

std::string render_query(const MiniQuery& q) {
    std::string out = "FIND " + q.node_type + " \"" + q.node_name + "\"";
    if (q.predicate) out += " REL " + *q.predicate + " TO " + q.target_type.value_or("");
    return out;
}

std::string serialize_schema(const GraphSchema& schema) {
    std::string out;
    for (const auto& t : schema.node_types) out += "node " + t + "\n";
    for (const auto& e : schema.edge_types)
        out += "edge (" + e.subject_type + ")-[" + e.predicate + "]->(" + e.object_type + ")\n";
    return out;
}

SchemaQueryBaseline::SchemaQueryBaseline(const KgStore& store, const ChatProvider& chat_provider,
                                         BaselineOptions options)
    : store_(&store),
      chat_provider_(&chat_provider),
      options_(std::move(options)),
      schema_text_(serialize_schema(store.schema())) {
    options_.chat.validate();
}

AssembledPrompt SchemaQueryBaseline::query_prompt(std::string_view question) const {
    std::string user = "Graph schema:\n" + schema_text_ + "Question: ";
    user += question;
    return {kQuerySystemPrompt, std::move(user)};
}

AnswerRecord SchemaQueryBaseline::run(std::string_view question) const {
    AnswerRecord record;
    record.system = "baseline";
    record.question = std::string(question);
    record.config_snapshot.chat = options_.chat;
    record.config_snapshot.include_evidence = options_.include_evidence;
    record.config_snapshot.chat_provider = chat_provider_->name();

    const auto qp = query_prompt(question);
    ChatReply query_reply;
    try {
        query_reply = chat(*chat_provider_, options_.chat, {"query", qp.system_prompt, qp.user_prompt});
    } catch (const std::exception& e) {
        throw StageError("query-generation", e.what());
    }
    record.usage = query_reply.usage;
    record.generated_query = strip_code_fence(query_reply.text);

    try {
        const auto query = parse_query(*record.generated_query);
        const auto node = store_->find_node_exact(query.node_type, query.node_name);
        if (!node) {
            record.diagnostics.push_back("no " + query.node_type + " node named \"" +
                                         query.node_name + "\" (exact match)");
        } else {
            record.entities.push_back({query.node_name, *node, 1.0});
            for (const auto& triple : store_->neighborhood(node->node_id)) {
                if (query.predicate && triple.predicate != *query.predicate) continue;
                const auto& other =
                    triple.direction == Direction::outgoing ? triple.object : triple.subject;
                if (query.target_type && other.node_type != *query.target_type) continue;
                auto sentence = verbalize_triple(triple, options_.include_evidence);
                sentence.disease_node_id = node->node_id;
                record.contexts_used.push_back(std::move(sentence));
            }
            if (record.contexts_used.empty())
                record.diagnostics.emplace_back("query matched a node but no edges");
        }
    } catch (const QueryParseError& e) {
        record.diagnostics.emplace_back(e.what());
    }
    record.retrieval_success = !record.contexts_used.empty();

    auto prompt = assemble_prompt(question, record.contexts_used);
    try {
        const auto reply = chat(*chat_provider_, options_.chat,
                                {"baseline-answer", prompt.system_prompt, prompt.user_prompt});
        record.answer_text = reply.text;
        record.usage += reply.usage;
    } catch (const std::exception& e) {
        throw StageError("answer", e.what());
    }
    record.system_prompt = std::move(prompt.system_prompt);
    record.user_prompt = std::move(prompt.user_prompt);
    return record;
}

}  // namespace kgrag
