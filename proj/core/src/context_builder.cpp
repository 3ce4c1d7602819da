#include "kgrag/context_builder.hpp"

#include "kgrag/errors.hpp"

#include <cctype>

namespace kgrag {

namespace {

// Sentences are rendered one per prompt line, so control whitespace is flattened.
std::string one_line(std::string_view text) {
    std::string out(text);
    for (auto& c : out)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    return out;
}

}  // namespace

std::string parse_predicate(std::string_view predicate) {
    if (!is_schema_predicate(predicate))
        throw InvalidArgument("predicate " + std::string(predicate) +
                              " has no _XyZ type-abbreviation suffix");
    std::string verb(predicate.substr(0, predicate.size() - 4));
    for (auto& c : verb)
        c = c == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return verb;
}

ContextSentence verbalize_triple(const Triple& triple, bool include_evidence) {
    std::string text;
    text += one_line(triple.subject.node_type) + ' ' + one_line(triple.subject.name) + ' ';
    text += parse_predicate(triple.predicate) + ' ';
    text += one_line(triple.object.node_type) + ' ' + one_line(triple.object.name) + '.';
    text += " Provenance: " + one_line(triple.provenance) + '.';
    if (include_evidence && !triple.evidence.empty()) {
        text += " Evidence: ";
        bool first = true;
        for (const auto& [key, value] : triple.evidence) {  // std::map: sorted keys
            if (!first) text += ", ";
            text += one_line(key) + '=' + one_line(value);
            first = false;
        }
        text += '.';
    }
    return ContextSentence{std::move(text), triple, {}, std::nullopt};
}

std::vector<ContextSentence> build_context(const KgStore& store, const std::string& node_id,
                                           bool include_evidence) {
    std::vector<ContextSentence> out;
    for (const auto& triple : store.neighborhood(node_id)) {
        auto sentence = verbalize_triple(triple, include_evidence);
        sentence.disease_node_id = node_id;
        out.push_back(std::move(sentence));
    }
    return out;
}

}  // namespace kgrag
