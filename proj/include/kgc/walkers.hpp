#pragma once

#include "kgc/graph_store.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kgc {

enum class WalkStrategy { uniform, node2vec, metapath, edge2vec };

std::string to_string(WalkStrategy s);
WalkStrategy parse_walk_strategy(std::string_view name);

/// Cyclic node-type schema. Position i of a walk must carry type
/// types[i mod (types.size() - 1)].
struct Metapath {
  std::vector<TypeId> types;

  TypeId head() const { return types.front(); }
  TypeId expected_at(std::size_t position) const {
    return types[position % (types.size() - 1)];
  }
  void validate() const;
};

// One type name per line; every name must be registered in `registry`.
Metapath parse_metapath(std::istream& in, const TypeRegistry& registry);
Metapath make_metapath(std::span<const std::string> type_names, const TypeRegistry& registry);

struct WalkConfig {
  std::size_t walk_length = 20;
  std::size_t walks_per_node = 10;
  WalkStrategy strategy = WalkStrategy::uniform;
  double p = 1.0;
  double q = 1.0;
  Metapath metapath;
  std::size_t em_iterations = 5;
  std::size_t em_window = 2;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  void validate() const;
  // Stable hash over every field that influences the corpus.
  std::uint64_t hash() const;
};

/// Edge-type x edge-type walk-bias weights; rows sum to one.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(Eigen::MatrixXd weights);

  static TransitionMatrix uniform(std::size_t edge_types);

  // Laplace-smoothed row normalisation of co-occurrence counts.
  static TransitionMatrix from_counts(const Eigen::MatrixXd& counts, double smoothing = 1.0);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
  double operator()(TypeId from, TypeId to) const { return weights_(from, to); }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }

 private:
  Eigen::MatrixXd weights_;
};

struct WalkStats {
  std::size_t truncated_walks = 0;    // ended before walk_length at a dead end
  std::size_t uniform_fallbacks = 0;  // edge2vec steps whose weights were all zero
};

struct WalkCorpus {
  std::vector<std::vector<NodeId>> walks;
  WalkStrategy strategy = WalkStrategy::uniform;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  WalkStats stats;

  std::size_t token_count() const;
};

// node2vec unnormalised second-order weight: 1/p to return to `prev`,
// 1 for candidates adjacent to `prev`, 1/q otherwise.
double node2vec_weight(const HeteroGraph& graph, NodeId prev, NodeId curr, NodeId candidate,
                       double p, double q);

// Uniform draw among `curr`'s neighbours of `expected_type`; nullopt on a dead end.
std::optional<NodeId> metapath_next(const HeteroGraph& graph, NodeId curr, TypeId expected_type,
                                    Rng& rng);

struct Edge2vecStep {
  Neighbor next;
  bool fallback = false;  // all weights were zero, sampled uniformly instead
};

// Samples a neighbour of `curr` proportionally to M[prev_edge_type][type];
// uniform when prev_edge_type is kNoType.
Edge2vecStep edge2vec_step(const HeteroGraph& graph, TypeId prev_edge_type, NodeId curr,
                           const TransitionMatrix& matrix, Rng& rng);

/// EM-style training of the edge2vec matrix: sample walks under the current
/// matrix, count edge-type co-occurrences within `em_window`, renormalise.
TransitionMatrix em_train_transition(const HeteroGraph& graph, const WalkConfig& config);

// Per-window co-occurrence counts of edge-type sequences (symmetric).
Eigen::MatrixXd count_edge_cooccurrence(const std::vector<std::vector<TypeId>>& sequences,
                                        std::size_t edge_types, std::size_t window);

/// Walks for every start node (`walks_per_node` each). Walk r of start i is
/// drawn from its own stream derived from (seed, i, r), so the corpus does not
/// depend on the worker count. For edge2vec the matrix is trained first unless
/// one is supplied.
WalkCorpus generate_corpus(const HeteroGraph& graph, const WalkConfig& config,
                           const TransitionMatrix* transitions = nullptr);

// Corpus file: `#` header lines with provenance, then one walk of URIs per line.
void write_corpus(const WalkCorpus& corpus, const HeteroGraph& graph, std::ostream& out);
WalkCorpus read_corpus(std::istream& in, const HeteroGraph& graph);

}  // namespace kgc
