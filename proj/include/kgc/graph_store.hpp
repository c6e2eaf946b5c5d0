#pragma once

#include "kgc/core.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgc {

struct Neighbor {
  NodeId node;
  TypeId edge_type;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct Edge {
  NodeId source;
  NodeId target;
  TypeId type;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Dense name <-> index tables for node types and edge types.
class TypeRegistry {
 public:
  TypeId intern_node_type(std::string_view name);
  TypeId intern_edge_type(std::string_view name);

  std::optional<TypeId> find_node_type(std::string_view name) const;
  std::optional<TypeId> find_edge_type(std::string_view name) const;

  // Throws ConfigError naming the type when it is not registered.
  TypeId node_type(std::string_view name) const;
  TypeId edge_type(std::string_view name) const;

  const std::string& node_type_name(TypeId id) const;
  const std::string& edge_type_name(TypeId id) const;

  std::size_t node_type_count() const noexcept { return node_types_.size(); }
  std::size_t edge_type_count() const noexcept { return edge_types_.size(); }

  const std::vector<std::string>& node_type_names() const noexcept { return node_types_; }
  const std::vector<std::string>& edge_type_names() const noexcept { return edge_types_; }

  friend bool operator==(const TypeRegistry& a, const TypeRegistry& b) {
    return a.node_types_ == b.node_types_ && a.edge_types_ == b.edge_types_;
  }

 private:
  static TypeId intern(std::vector<std::string>& names,
                       std::unordered_map<std::string, TypeId>& index,
                       std::string_view name);

  std::vector<std::string> node_types_;
  std::vector<std::string> edge_types_;
  std::unordered_map<std::string, TypeId> node_index_;
  std::unordered_map<std::string, TypeId> edge_index_;
};

struct TypeRule {
  std::string pattern;
  std::string type_name;
};

/// Ordered URI-substring rules; the first match wins. URIs matching no rule
/// fall back to their second-to-last path segment, or "untyped".
class TypeRuleSet {
 public:
  TypeRuleSet() = default;
  explicit TypeRuleSet(std::vector<TypeRule> rules) : rules_(std::move(rules)) {}

  // TSV of `pattern<TAB>typename`; blank lines and `#` comments ignored.
  static TypeRuleSet parse(std::istream& in);

  std::string classify(std::string_view uri) const;

  const std::vector<TypeRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<TypeRule> rules_;
};

inline constexpr std::string_view kUntypedNode = "untyped";

// Second-to-last path segment of a URI (scheme and authority excluded), or
// an empty string when the path has fewer than two segments.
std::string fallback_type(std::string_view uri);

struct IngestStats {
  std::size_t lines_read = 0;
  std::size_t triples = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t literals_skipped = 0;
};

/// Typed, interned graph with undirected CSR adjacency. Immutable once built;
/// safe to share between concurrent readers.
class HeteroGraph {
 public:
  HeteroGraph() = default;

  std::size_t node_count() const noexcept { return node_uris_.size(); }
  // Undirected (deduplicated) edge count; the CSR stores twice as many entries.
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::span<const Neighbor> neighbors(NodeId node) const;
  std::size_t degree(NodeId node) const { return neighbors(node).size(); }
  bool has_edge(NodeId u, NodeId v) const;
  std::vector<NodeId> nodes_by_type(TypeId type) const;

  const std::string& node_uri(NodeId node) const;
  TypeId node_type(NodeId node) const;
  std::optional<NodeId> find_node(std::string_view uri) const;

  const std::vector<std::string>& node_uris() const noexcept { return node_uris_; }
  const std::vector<TypeId>& node_types() const noexcept { return node_types_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::uint64_t>& csr_offsets() const noexcept { return offsets_; }
  const std::vector<Neighbor>& csr_neighbors() const noexcept { return adjacency_; }
  const TypeRegistry& types() const noexcept { return registry_; }

  friend bool operator==(const HeteroGraph& a, const HeteroGraph& b) {
    return a.node_uris_ == b.node_uris_ && a.node_types_ == b.node_types_ &&
           a.edges_ == b.edges_ && a.offsets_ == b.offsets_ &&
           a.adjacency_ == b.adjacency_ && a.registry_ == b.registry_;
  }

 private:
  friend class GraphBuilder;
  friend HeteroGraph load_graph_cache(std::istream& in);

  void check_node(NodeId node) const;
  void build_csr();
  void rebuild_uri_index();

  std::vector<std::string> node_uris_;
  std::vector<TypeId> node_types_;
  std::vector<Edge> edges_;
  std::vector<std::uint64_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
  TypeRegistry registry_;
  std::unordered_map<std::string, NodeId> uri_index_;
};

/// Incremental construction: intern URIs and add typed edges, then finish().
/// Self-loops and repeated (unordered pair, edge type) records are dropped
/// and counted in stats().
class GraphBuilder {
 public:
  explicit GraphBuilder(TypeRuleSet rules = {});

  NodeId add_node(std::string_view uri);
  // Adds a node with an explicit type, bypassing rule inference.
  NodeId add_node(std::string_view uri, std::string_view type_name);
  // Registers a node type even if no node ends up carrying it.
  TypeId add_node_type(std::string_view type_name);
  void add_edge(std::string_view subject, std::string_view predicate,
                std::string_view object);
  void add_edge(NodeId source, NodeId target, std::string_view predicate);

  IngestStats& stats() noexcept { return stats_; }

  // Throws DataError("empty graph") when no node was added.
  HeteroGraph finish() &&;

 private:
  TypeRuleSet rules_;
  HeteroGraph graph_;
  std::unordered_map<std::uint64_t, std::vector<TypeId>> seen_pairs_;
  IngestStats stats_;
};

struct IngestResult {
  HeteroGraph graph;
  IngestStats stats;
};

/// Reads N-Triples-like (`<s> <p> <o> .`) or TSV (`s<TAB>p<TAB>o`) lines.
/// Triples with literal objects are skipped and counted.
IngestResult ingest_triples(std::istream& in, const TypeRuleSet& rules = {});

// Binary cache with a versioned header.
inline constexpr std::uint32_t kGraphCacheVersion = 1;
void save_graph_cache(const HeteroGraph& graph, std::ostream& out);
HeteroGraph load_graph_cache(std::istream& in);

}  // namespace kgc
