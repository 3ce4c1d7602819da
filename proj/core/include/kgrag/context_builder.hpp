#pragma once

#include "kgrag/kg_store.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgrag {

struct ContextSentence {
    std::string text;
    Triple source_triple;
    std::string disease_node_id;
    std::optional<double> similarity;  // set by the pruner
};

// "LOCALIZES_IN_GlA" -> "localizes in". Throws InvalidArgument without a _XyZ suffix.
std::string parse_predicate(std::string_view predicate);

// "<SubjectType> <subject> <verb> <ObjectType> <object>. Provenance: <p>."
// followed by " Evidence: k1=v1, k2=v2." (sorted keys) when requested and present.
ContextSentence verbalize_triple(const Triple& triple, bool include_evidence);

// One sentence per neighborhood triple, in store order, stored orientation kept.
std::vector<ContextSentence> build_context(const KgStore& store, const std::string& node_id,
                                           bool include_evidence);

}  // namespace kgrag
