#include "kgc/graph_store.hpp"

#include "binary_io.hpp"

namespace kgc {

namespace {
constexpr char kMagic[5] = "KGCG";
}

void save_graph_cache(const HeteroGraph& graph, std::ostream& out) {
  using namespace detail;
  write_header(out, kMagic, kGraphCacheVersion);
  write_pod<std::uint64_t>(out, graph.node_count());
  write_pod<std::uint64_t>(out, graph.edge_count());
  write_strings(out, graph.types().node_type_names());
  write_strings(out, graph.types().edge_type_names());
  write_strings(out, graph.node_uris());
  write_vector(out, graph.node_types());
  write_vector(out, graph.edges());
  write_vector(out, graph.csr_offsets());
  write_vector(out, graph.csr_neighbors());
  if (!out) throw Error("failed writing graph cache");
}

HeteroGraph load_graph_cache(std::istream& in) {
  using namespace detail;
  read_header(in, kMagic, kGraphCacheVersion, "graph cache");
  const auto node_count = read_pod<std::uint64_t>(in, "node count");
  const auto edge_count = read_pod<std::uint64_t>(in, "edge count");

  HeteroGraph g;
  for (const auto& name : read_strings(in, "node types")) g.registry_.intern_node_type(name);
  for (const auto& name : read_strings(in, "edge types")) g.registry_.intern_edge_type(name);
  g.node_uris_ = read_strings(in, "node uris");
  g.node_types_ = read_vector<TypeId>(in, "node types");
  g.edges_ = read_vector<Edge>(in, "edges");
  g.offsets_ = read_vector<std::uint64_t>(in, "csr offsets");
  g.adjacency_ = read_vector<Neighbor>(in, "csr neighbors");

  if (g.node_uris_.size() != node_count || g.node_types_.size() != node_count ||
      g.edges_.size() != edge_count || g.offsets_.size() != node_count + 1 ||
      g.adjacency_.size() != 2 * edge_count || g.offsets_.back() != g.adjacency_.size())
    throw DataError("graph cache is internally inconsistent");
  for (auto t : g.node_types_)
    if (t >= g.registry_.node_type_count()) throw DataError("graph cache has an unregistered node type");
  for (const auto& e : g.edges_)
    if (e.source >= node_count || e.target >= node_count || e.type >= g.registry_.edge_type_count())
      throw DataError("graph cache has an out-of-range edge");
  g.rebuild_uri_index();
  return g;
}

}  // namespace kgc
