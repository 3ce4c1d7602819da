#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace kgrag {

struct NodeRecord {
    std::string node_id;
    std::string node_type;
    std::string name;
    std::optional<std::string> identifier;

    bool operator==(const NodeRecord&) const = default;
};

// Evidence values are stored as text; numeric_evidence() parses on demand.
using Evidence = std::map<std::string, std::string>;

struct EdgeRecord {
    std::string subject_id;
    std::string predicate;
    std::string object_id;
    std::string provenance;
    Evidence evidence;
};

enum class Direction { outgoing, incoming };

std::string_view to_string(Direction d);

struct Triple {
    NodeRecord subject;
    std::string predicate;
    NodeRecord object;
    std::string provenance;
    Evidence evidence;
    Direction direction = Direction::outgoing;  // relative to the queried node
};

struct EdgeType {
    std::string predicate;
    std::string subject_type;
    std::string object_type;

    auto operator<=>(const EdgeType&) const = default;
};

struct GraphSchema {
    std::set<std::string> node_types;
    std::vector<EdgeType> edge_types;  // sorted, unique
    std::set<std::string> property_keys;

    bool empty() const { return node_types.empty() && edge_types.empty(); }
    // Stable JSON text; identical for any line order of the same input files.
    std::string serialize() const;
};

struct IngestCounts {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
};

// True when `predicate` follows NAME(_NAME)*_XyZ.
bool is_schema_predicate(std::string_view predicate);

std::optional<double> numeric_evidence(const Evidence& evidence, const std::string& key);

// In-memory typed property graph, read-only once ingested.
class KgStore {
public:
    KgStore() = default;

    // Replaces any previous content. Throws FormatError (with line number) on a
    // malformed line and NotFoundError listing unknown node ids on dangling edges.
    IngestCounts ingest(const std::filesystem::path& nodes_path,
                        const std::filesystem::path& edges_path);
    IngestCounts ingest(std::istream& nodes, std::istream& edges);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    const NodeRecord& node(const std::string& node_id) const;
    bool contains(const std::string& node_id) const { return index_.count(node_id) != 0; }
    const std::vector<NodeRecord>& nodes() const { return nodes_; }
    const std::vector<EdgeRecord>& edges() const { return edges_; }
    std::vector<NodeRecord> nodes_of_type(const std::string& node_type) const;

    // Every incident edge, sorted by predicate then counterpart node id.
    std::vector<Triple> neighborhood(const std::string& node_id) const;

    // Byte-exact, case-sensitive (type, name) lookup.
    std::optional<NodeRecord> find_node_exact(const std::string& node_type,
                                              const std::string& name) const;

    GraphSchema schema() const;

private:
    std::vector<NodeRecord> nodes_;
    std::vector<EdgeRecord> edges_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::vector<std::size_t>> incident_;
    std::map<std::pair<std::string, std::string>, std::size_t> by_type_name_;
};

}  // namespace kgrag
