#include "kgc/graph_store.hpp"

#include <algorithm>
#include <istream>

namespace kgc {

// ---------------------------------------------------------------------------
// TypeRegistry

TypeId TypeRegistry::intern(std::vector<std::string>& names,
                            std::unordered_map<std::string, TypeId>& index,
                            std::string_view name) {
  auto [it, inserted] = index.try_emplace(std::string(name), static_cast<TypeId>(names.size()));
  if (inserted) names.emplace_back(name);
  return it->second;
}

TypeId TypeRegistry::intern_node_type(std::string_view name) {
  return intern(node_types_, node_index_, name);
}

TypeId TypeRegistry::intern_edge_type(std::string_view name) {
  return intern(edge_types_, edge_index_, name);
}

std::optional<TypeId> TypeRegistry::find_node_type(std::string_view name) const {
  auto it = node_index_.find(std::string(name));
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TypeId> TypeRegistry::find_edge_type(std::string_view name) const {
  auto it = edge_index_.find(std::string(name));
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

TypeId TypeRegistry::node_type(std::string_view name) const {
  if (auto id = find_node_type(name)) return *id;
  throw ConfigError("unknown node type '" + std::string(name) + "'");
}

TypeId TypeRegistry::edge_type(std::string_view name) const {
  if (auto id = find_edge_type(name)) return *id;
  throw ConfigError("unknown edge type '" + std::string(name) + "'");
}

const std::string& TypeRegistry::node_type_name(TypeId id) const {
  if (id >= node_types_.size())
    throw ConfigError("node type index " + std::to_string(id) + " out of range");
  return node_types_[id];
}

const std::string& TypeRegistry::edge_type_name(TypeId id) const {
  if (id >= edge_types_.size())
    throw ConfigError("edge type index " + std::to_string(id) + " out of range");
  return edge_types_[id];
}

// ---------------------------------------------------------------------------
// Type inference

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string fallback_type(std::string_view uri) {
  std::string_view path = uri;
  if (auto scheme = path.find("://"); scheme != std::string_view::npos) {
    path.remove_prefix(scheme + 3);
    auto slash = path.find('/');
    path = slash == std::string_view::npos ? std::string_view{} : path.substr(slash);
  }
  // Query and fragment are not part of the path.
  path = path.substr(0, path.find_first_of("?#"));

  std::vector<std::string_view> segments;
  while (!path.empty()) {
    auto slash = path.find('/');
    auto segment = path.substr(0, slash);
    if (!segment.empty()) segments.push_back(segment);
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  if (segments.size() < 2) return {};
  return std::string(segments[segments.size() - 2]);
}

TypeRuleSet TypeRuleSet::parse(std::istream& in) {
  std::vector<TypeRule> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto tab = text.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(line_no, "type rule needs `pattern<TAB>typename`");
    auto pattern = trim(text.substr(0, tab));
    auto name = trim(text.substr(tab + 1));
    if (pattern.empty() || name.empty())
      throw ParseError(line_no, "type rule has an empty pattern or type name");
    rules.push_back({std::string(pattern), std::string(name)});
  }
  return TypeRuleSet(std::move(rules));
}

std::string TypeRuleSet::classify(std::string_view uri) const {
  for (const auto& rule : rules_) {
    if (uri.find(rule.pattern) != std::string_view::npos) return rule.type_name;
  }
  auto type = fallback_type(uri);
  return type.empty() ? std::string(kUntypedNode) : type;
}

// ---------------------------------------------------------------------------
// HeteroGraph

void HeteroGraph::check_node(NodeId node) const {
  if (node >= node_count())
    throw ConfigError("node index " + std::to_string(node) + " out of range (node count " +
                      std::to_string(node_count()) + ")");
}

std::span<const Neighbor> HeteroGraph::neighbors(NodeId node) const {
  check_node(node);
  return {adjacency_.data() + offsets_[node], adjacency_.data() + offsets_[node + 1]};
}

bool HeteroGraph::has_edge(NodeId u, NodeId v) const {
  check_node(v);
  auto range = neighbors(u);
  auto it = std::lower_bound(range.begin(), range.end(), v,
                             [](const Neighbor& n, NodeId id) { return n.node < id; });
  return it != range.end() && it->node == v;
}

std::vector<NodeId> HeteroGraph::nodes_by_type(TypeId type) const {
  if (type >= registry_.node_type_count())
    throw ConfigError("node type index " + std::to_string(type) + " is not registered");
  std::vector<NodeId> out;
  for (NodeId n = 0; n < node_count(); ++n)
    if (node_types_[n] == type) out.push_back(n);
  return out;
}

const std::string& HeteroGraph::node_uri(NodeId node) const {
  check_node(node);
  return node_uris_[node];
}

TypeId HeteroGraph::node_type(NodeId node) const {
  check_node(node);
  return node_types_[node];
}

std::optional<NodeId> HeteroGraph::find_node(std::string_view uri) const {
  auto it = uri_index_.find(std::string(uri));
  if (it == uri_index_.end()) return std::nullopt;
  return it->second;
}

void HeteroGraph::build_csr() {
  const std::size_t n = node_count();
  offsets_.assign(n + 1, 0);
  for (const auto& e : edges_) {
    ++offsets_[e.source + 1];
    ++offsets_[e.target + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];

  adjacency_.assign(offsets_[n], Neighbor{0, 0});
  std::vector<std::uint64_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[cursor[e.source]++] = {e.target, e.type};
    adjacency_[cursor[e.target]++] = {e.source, e.type};
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]),
              [](const Neighbor& a, const Neighbor& b) {
                return a.node != b.node ? a.node < b.node : a.edge_type < b.edge_type;
              });
  }
}

void HeteroGraph::rebuild_uri_index() {
  uri_index_.clear();
  uri_index_.reserve(node_uris_.size());
  for (NodeId i = 0; i < node_uris_.size(); ++i) uri_index_.emplace(node_uris_[i], i);
}

// ---------------------------------------------------------------------------
// GraphBuilder

GraphBuilder::GraphBuilder(TypeRuleSet rules) : rules_(std::move(rules)) {}

NodeId GraphBuilder::add_node(std::string_view uri) {
  if (auto id = graph_.find_node(uri)) return *id;
  return add_node(uri, rules_.classify(uri));
}

NodeId GraphBuilder::add_node(std::string_view uri, std::string_view type_name) {
  if (auto id = graph_.find_node(uri)) return *id;
  const auto id = static_cast<NodeId>(graph_.node_uris_.size());
  graph_.node_uris_.emplace_back(uri);
  graph_.node_types_.push_back(graph_.registry_.intern_node_type(type_name));
  graph_.uri_index_.emplace(std::string(uri), id);
  return id;
}

TypeId GraphBuilder::add_node_type(std::string_view type_name) {
  return graph_.registry_.intern_node_type(type_name);
}

void GraphBuilder::add_edge(std::string_view subject, std::string_view predicate,
                            std::string_view object) {
  if (subject == object) {
    ++stats_.self_loops_dropped;
    return;
  }
  const NodeId s = add_node(subject);
  const NodeId o = add_node(object);
  add_edge(s, o, predicate);
}

void GraphBuilder::add_edge(NodeId source, NodeId target, std::string_view predicate) {
  graph_.check_node(source);
  graph_.check_node(target);
  if (source == target) {
    ++stats_.self_loops_dropped;
    return;
  }
  const TypeId type = graph_.registry_.intern_edge_type(predicate);
  const auto lo = std::min(source, target);
  const auto hi = std::max(source, target);
  auto& types = seen_pairs_[(static_cast<std::uint64_t>(lo) << 32) | hi];
  if (std::find(types.begin(), types.end(), type) != types.end()) {
    ++stats_.duplicates_dropped;
    return;
  }
  types.push_back(type);
  graph_.edges_.push_back({source, target, type});
}

HeteroGraph GraphBuilder::finish() && {
  if (graph_.node_count() == 0) throw DataError("empty graph");
  graph_.build_csr();
  seen_pairs_.clear();
  return std::move(graph_);
}

// ---------------------------------------------------------------------------
// Triple parsing

namespace {

enum class TermKind { iri, blank, literal, bare };

struct Term {
  TermKind kind;
  std::string_view text;
};

// Reads one N-Triples term starting at `pos`; advances past it.
Term read_term(std::string_view line, std::size_t& pos, std::size_t line_no) {
  while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  if (pos >= line.size()) throw ParseError(line_no, "expected a term, found end of line");
  const char c = line[pos];
  if (c == '<') {
    const auto close = line.find('>', pos + 1);
    if (close == std::string_view::npos) throw ParseError(line_no, "unterminated IRI");
    Term t{TermKind::iri, line.substr(pos + 1, close - pos - 1)};
    if (t.text.empty()) throw ParseError(line_no, "empty IRI");
    pos = close + 1;
    return t;
  }
  if (c == '"') {
    std::size_t i = pos + 1;
    while (i < line.size() && line[i] != '"') i += line[i] == '\\' ? 2 : 1;
    if (i >= line.size()) throw ParseError(line_no, "unterminated literal");
    ++i;
    // Optional language tag or datatype.
    if (i < line.size() && line[i] == '@') {
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    } else if (line.substr(i, 3) == "^^<") {
      const auto close = line.find('>', i + 3);
      if (close == std::string_view::npos) throw ParseError(line_no, "unterminated datatype IRI");
      i = close + 1;
    }
    Term t{TermKind::literal, line.substr(pos, i - pos)};
    pos = i;
    return t;
  }
  if (line.substr(pos, 2) == "_:") {
    auto end = line.find_first_of(" \t", pos);
    if (end == std::string_view::npos) end = line.size();
    Term t{TermKind::blank, line.substr(pos, end - pos)};
    pos = end;
    return t;
  }
  throw ParseError(line_no, "unexpected character '" + std::string(1, c) + "'");
}

}  // namespace

IngestResult ingest_triples(std::istream& in, const TypeRuleSet& rules) {
  GraphBuilder builder(rules);
  auto& stats = builder.stats();
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    ++stats.lines_read;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    std::string_view subject, predicate, object;
    bool literal = false;
    if (line.front() == '<' || line.substr(0, 2) == "_:") {
      std::size_t pos = 0;
      const Term s = read_term(line, pos, line_no);
      const Term p = read_term(line, pos, line_no);
      const Term o = read_term(line, pos, line_no);
      if (s.kind == TermKind::literal) throw ParseError(line_no, "subject cannot be a literal");
      if (p.kind != TermKind::iri) throw ParseError(line_no, "predicate must be an IRI");
      const auto rest = trim(line.substr(pos));
      if (rest != ".") throw ParseError(line_no, "expected '.' after object");
      subject = s.text;
      predicate = p.text;
      object = o.text;
      literal = o.kind == TermKind::literal;
    } else {
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos)
        throw ParseError(line_no, "expected `<s> <p> <o> .` or three tab-separated fields");
      subject = trim(line.substr(0, t1));
      predicate = trim(line.substr(t1 + 1, t2 - t1 - 1));
      object = trim(line.substr(t2 + 1));
      if (subject.empty() || predicate.empty() || object.empty())
        throw ParseError(line_no, "empty field in tab-separated triple");
    }

    ++stats.triples;
    if (literal) {
      ++stats.literals_skipped;
      continue;
    }
    builder.add_edge(subject, predicate, object);
  }
  IngestStats final_stats = stats;
  return {std::move(builder).finish(), final_stats};
}

}  // namespace kgc
