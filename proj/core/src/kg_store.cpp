#include "kgrag/kg_store.hpp"

#include "json_lines.hpp"
#include "kgrag/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <unordered_set>

namespace kgrag {

using nlohmann::json;

std::string_view to_string(Direction d) {
    return d == Direction::outgoing ? "outgoing" : "incoming";
}

bool is_schema_predicate(std::string_view predicate) {
    auto is_upper = [](char c) { return c >= 'A' && c <= 'Z'; };
    auto is_lower = [](char c) { return c >= 'a' && c <= 'z'; };
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };

    // Trailing "_XyZ".
    if (predicate.size() < 5) return false;
    const auto suffix = predicate.substr(predicate.size() - 4);
    if (suffix[0] != '_' || !is_upper(suffix[1]) || !is_lower(suffix[2]) || !is_upper(suffix[3]))
        return false;

    const auto name = predicate.substr(0, predicate.size() - 4);
    std::size_t start = 0;
    while (start <= name.size()) {
        const auto end = std::min(name.find('_', start), name.size());
        const auto token = name.substr(start, end - start);
        if (token.empty() || !is_upper(token.front())) return false;
        if (!std::all_of(token.begin(), token.end(),
                         [&](char c) { return is_upper(c) || is_digit(c); }))
            return false;
        start = end + 1;
    }
    return true;
}

std::optional<double> numeric_evidence(const Evidence& evidence, const std::string& key) {
    const auto it = evidence.find(key);
    if (it == evidence.end()) return std::nullopt;
    const auto& text = it->second;
    double value = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return value;
}

namespace {

std::string required_string(const json& obj, const char* key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(std::string("missing field \"") + key + "\"", line);
    if (!it->is_string())
        throw FormatError(std::string("field \"") + key + "\" must be a string", line);
    auto value = it->get<std::string>();
    if (value.empty()) throw FormatError(std::string("field \"") + key + "\" is empty", line);
    return value;
}

}  // namespace

IngestCounts KgStore::ingest(const std::filesystem::path& nodes_path,
                             const std::filesystem::path& edges_path) {
    std::ifstream nodes(nodes_path);
    if (!nodes) throw NotFoundError("cannot open nodes file " + nodes_path.string());
    std::ifstream edges(edges_path);
    if (!edges) throw NotFoundError("cannot open edges file " + edges_path.string());
    return ingest(nodes, edges);
}

IngestCounts KgStore::ingest(std::istream& nodes_in, std::istream& edges_in) {
    KgStore next;
    std::string text;

    std::size_t line = 0;
    while (std::getline(nodes_in, text)) {
        ++line;
        if (detail::is_blank(text)) continue;
        const auto obj = detail::parse_line(text, line);
        if (!obj.is_object()) throw FormatError("expected a JSON object", line);
        NodeRecord node;
        node.node_id = required_string(obj, "id", line);
        node.node_type = required_string(obj, "type", line);
        node.name = required_string(obj, "name", line);
        if (const auto it = obj.find("identifier"); it != obj.end() && !it->is_null())
            node.identifier = detail::scalar_text(*it);
        if (next.index_.count(node.node_id))
            throw FormatError("duplicate node id " + node.node_id, line);
        next.index_.emplace(node.node_id, next.nodes_.size());
        next.by_type_name_.emplace(std::pair{node.node_type, node.name}, next.nodes_.size());
        next.nodes_.push_back(std::move(node));
    }

    std::vector<std::string> unknown;
    std::unordered_set<std::string> unknown_seen;
    line = 0;
    while (std::getline(edges_in, text)) {
        ++line;
        if (detail::is_blank(text)) continue;
        const auto obj = detail::parse_line_keep_float_text(text, line);
        if (!obj.is_object()) throw FormatError("expected a JSON object", line);
        EdgeRecord edge;
        edge.subject_id = required_string(obj, "subject", line);
        edge.predicate = required_string(obj, "predicate", line);
        edge.object_id = required_string(obj, "object", line);
        edge.provenance = required_string(obj, "provenance", line);
        if (!is_schema_predicate(edge.predicate))
            throw FormatError("predicate " + edge.predicate + " does not follow NAME_XyZ", line);
        if (const auto it = obj.find("evidence"); it != obj.end() && !it->is_null()) {
            if (!it->is_object()) throw FormatError("field \"evidence\" must be an object", line);
            for (const auto& [key, value] : it->items()) {
                if (value.is_structured())
                    throw FormatError("evidence value for " + key + " must be a scalar", line);
                edge.evidence.emplace(key, detail::scalar_text(value));
            }
        }
        for (const auto* id : {&edge.subject_id, &edge.object_id}) {
            if (!next.index_.count(*id) && unknown_seen.insert(*id).second) unknown.push_back(*id);
        }
        next.edges_.push_back(std::move(edge));
    }

    if (!unknown.empty()) {
        std::string msg = unknown.size() == 1 ? "unknown node " : "unknown nodes ";
        for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", " : "") + unknown[i];
        throw NotFoundError(msg);
    }

    for (std::size_t i = 0; i < next.edges_.size(); ++i) {
        const auto& e = next.edges_[i];
        next.incident_[e.subject_id].push_back(i);
        if (e.object_id != e.subject_id) next.incident_[e.object_id].push_back(i);
    }

    *this = std::move(next);
    return {nodes_.size(), edges_.size()};
}

const NodeRecord& KgStore::node(const std::string& node_id) const {
    const auto it = index_.find(node_id);
    if (it == index_.end()) throw NotFoundError("unknown node " + node_id);
    return nodes_[it->second];
}

std::vector<NodeRecord> KgStore::nodes_of_type(const std::string& node_type) const {
    std::vector<NodeRecord> out;
    for (const auto& n : nodes_)
        if (n.node_type == node_type) out.push_back(n);
    return out;
}

std::vector<Triple> KgStore::neighborhood(const std::string& node_id) const {
    if (!contains(node_id)) throw NotFoundError("unknown node " + node_id);

    struct Keyed {
        std::size_t edge;
        Direction direction;
        const std::string* counterpart;
    };
    std::vector<Keyed> keyed;
    if (const auto it = incident_.find(node_id); it != incident_.end()) {
        for (const auto i : it->second) {
            const auto& e = edges_[i];
            if (e.subject_id == node_id)
                keyed.push_back({i, Direction::outgoing, &e.object_id});
            else
                keyed.push_back({i, Direction::incoming, &e.subject_id});
        }
    }
    std::sort(keyed.begin(), keyed.end(), [&](const Keyed& a, const Keyed& b) {
        const auto& pa = edges_[a.edge].predicate;
        const auto& pb = edges_[b.edge].predicate;
        if (pa != pb) return pa < pb;
        if (*a.counterpart != *b.counterpart) return *a.counterpart < *b.counterpart;
        if (a.direction != b.direction) return a.direction == Direction::outgoing;
        return a.edge < b.edge;
    });

    std::vector<Triple> out;
    out.reserve(keyed.size());
    for (const auto& k : keyed) {
        const auto& e = edges_[k.edge];
        out.push_back(Triple{node(e.subject_id), e.predicate, node(e.object_id), e.provenance,
                             e.evidence, k.direction});
    }
    return out;
}

std::optional<NodeRecord> KgStore::find_node_exact(const std::string& node_type,
                                                   const std::string& name) const {
    const auto it = by_type_name_.find({node_type, name});
    if (it == by_type_name_.end()) return std::nullopt;
    return nodes_[it->second];
}

GraphSchema KgStore::schema() const {
    GraphSchema s;
    for (const auto& n : nodes_) s.node_types.insert(n.node_type);
    std::set<EdgeType> types;
    for (const auto& e : edges_) {
        types.insert({e.predicate, node(e.subject_id).node_type, node(e.object_id).node_type});
        s.property_keys.insert("provenance");
        for (const auto& [key, value] : e.evidence) s.property_keys.insert(key);
    }
    s.edge_types.assign(types.begin(), types.end());
    return s;
}

std::string GraphSchema::serialize() const {
    json edges = json::array();
    for (const auto& t : edge_types) edges.push_back({t.predicate, t.subject_type, t.object_type});
    json out;
    out["node_types"] = node_types;
    out["edge_types"] = std::move(edges);
    out["property_keys"] = property_keys;
    return out.dump();
}

}  // namespace kgrag
