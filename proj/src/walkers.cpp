#include "kgc/walkers.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace kgc {

std::string to_string(WalkStrategy s) {
  switch (s) {
    case WalkStrategy::uniform: return "uniform";
    case WalkStrategy::node2vec: return "node2vec";
    case WalkStrategy::metapath: return "metapath";
    case WalkStrategy::edge2vec: return "edge2vec";
  }
  return "unknown";
}

WalkStrategy parse_walk_strategy(std::string_view name) {
  if (name == "uniform" || name == "deepwalk") return WalkStrategy::uniform;
  if (name == "node2vec") return WalkStrategy::node2vec;
  if (name == "metapath" || name == "metapath2vec") return WalkStrategy::metapath;
  if (name == "edge2vec") return WalkStrategy::edge2vec;
  throw ConfigError("unknown walk strategy '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Configuration

void Metapath::validate() const {
  if (types.size() < 2) throw ConfigError("metapath needs at least two types");
  if (types.front() != types.back())
    throw ConfigError("metapath must be cyclic (first and last type equal)");
}

Metapath make_metapath(std::span<const std::string> type_names, const TypeRegistry& registry) {
  Metapath path;
  for (const auto& name : type_names) path.types.push_back(registry.node_type(name));
  path.validate();
  return path;
}

Metapath parse_metapath(std::istream& in, const TypeRegistry& registry) {
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    names.push_back(line.substr(first, last - first + 1));
  }
  return make_metapath(names, registry);
}

void WalkConfig::validate() const {
  if (walk_length < 2) throw ConfigError("walk_length must be >= 2");
  if (walks_per_node < 1) throw ConfigError("walks_per_node must be >= 1");
  if (strategy == WalkStrategy::node2vec && !(p > 0.0 && q > 0.0))
    throw ConfigError("node2vec requires p > 0 and q > 0");
  if (strategy == WalkStrategy::metapath) metapath.validate();
  if (strategy == WalkStrategy::edge2vec && em_window < 1)
    throw ConfigError("em_window must be >= 1");
}

std::uint64_t WalkConfig::hash() const {
  std::ostringstream s;
  s << "strategy=" << to_string(strategy) << ";walk_length=" << walk_length
    << ";walks_per_node=" << walks_per_node << ";seed=" << seed;
  if (strategy == WalkStrategy::node2vec) s << ";p=" << format_double(p) << ";q=" << format_double(q);
  if (strategy == WalkStrategy::metapath) {
    s << ";metapath=";
    for (auto t : metapath.types) s << t << ',';
  }
  if (strategy == WalkStrategy::edge2vec)
    s << ";em_iterations=" << em_iterations << ";em_window=" << em_window;
  return fnv1a(s.str());
}

std::size_t WalkCorpus::token_count() const {
  std::size_t n = 0;
  for (const auto& w : walks) n += w.size();
  return n;
}

// ---------------------------------------------------------------------------
// TransitionMatrix

TransitionMatrix::TransitionMatrix(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols()) throw ConfigError("transition matrix must be square");
  if ((weights_.array() < 0.0).any() || !weights_.allFinite())
    throw ConfigError("transition matrix entries must be finite and non-negative");
}

TransitionMatrix TransitionMatrix::uniform(std::size_t edge_types) {
  if (edge_types == 0) throw ConfigError("graph has no edge types");
  const auto n = static_cast<Eigen::Index>(edge_types);
  return TransitionMatrix(Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n)));
}

TransitionMatrix TransitionMatrix::from_counts(const Eigen::MatrixXd& counts, double smoothing) {
  if (counts.rows() != counts.cols() || counts.rows() == 0)
    throw ConfigError("co-occurrence counts must be a non-empty square matrix");
  Eigen::MatrixXd m = counts.array() + smoothing;
  const Eigen::VectorXd sums = m.rowwise().sum();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!(sums(i) > 0.0)) throw ConfigError("transition row has zero mass");
    m.row(i) /= sums(i);
  }
  return TransitionMatrix(std::move(m));
}

// ---------------------------------------------------------------------------
// Single steps

double node2vec_weight(const HeteroGraph& graph, NodeId prev, NodeId curr, NodeId candidate,
                       double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw ConfigError("node2vec requires p > 0 and q > 0");
  (void)curr;
  if (candidate == prev) return 1.0 / p;
  if (graph.has_edge(prev, candidate)) return 1.0;
  return 1.0 / q;
}

std::optional<NodeId> metapath_next(const HeteroGraph& graph, NodeId curr, TypeId expected_type,
                                    Rng& rng) {
  const auto nbrs = graph.neighbors(curr);
  const auto& types = graph.node_types();
  const auto matches = static_cast<std::size_t>(std::count_if(
      nbrs.begin(), nbrs.end(), [&](const Neighbor& n) { return types[n.node] == expected_type; }));
  if (matches == 0) return std::nullopt;
  auto pick = rng.below(matches);
  for (const auto& n : nbrs) {
    if (types[n.node] != expected_type) continue;
    if (pick-- == 0) return n.node;
  }
  return std::nullopt;  // unreachable
}

namespace {

// Draws an index from unnormalised non-negative weights with positive total.
std::size_t sample_weighted(std::span<const double> weights, double total, Rng& rng) {
  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (target < acc) return i;
  }
  // Rounding left target at the top edge; take the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

Edge2vecStep edge2vec_step_impl(std::span<const Neighbor> nbrs, TypeId prev_edge_type,
                                const TransitionMatrix& matrix, Rng& rng,
                                std::vector<double>& scratch) {
  if (prev_edge_type == kNoType) return {nbrs[rng.below(nbrs.size())], false};
  scratch.resize(nbrs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    scratch[i] = matrix(prev_edge_type, nbrs[i].edge_type);
    total += scratch[i];
  }
  if (!(total > 0.0)) return {nbrs[rng.below(nbrs.size())], true};
  return {nbrs[sample_weighted(scratch, total, rng)], false};
}

}  // namespace

Edge2vecStep edge2vec_step(const HeteroGraph& graph, TypeId prev_edge_type, NodeId curr,
                           const TransitionMatrix& matrix, Rng& rng) {
  const auto nbrs = graph.neighbors(curr);
  if (nbrs.empty()) throw ConfigError("edge2vec_step from a node without neighbours");
  if (matrix.size() != graph.types().edge_type_count())
    throw ConfigError("transition matrix size does not match the edge-type count");
  std::vector<double> scratch;
  return edge2vec_step_impl(nbrs, prev_edge_type, matrix, rng, scratch);
}

// ---------------------------------------------------------------------------
// Walk engine

namespace {

class Walker {
 public:
  Walker(const HeteroGraph& graph, const WalkConfig& config, const TransitionMatrix* matrix)
      : graph_(graph), config_(config), matrix_(matrix) {}

  // Fills `walk` (and `edge_types` for edge2vec) starting at `start`.
  // Returns false when the walk hit a dead end before reaching walk_length.
  bool walk(NodeId start, Rng& rng, std::vector<NodeId>& walk, std::vector<TypeId>* edge_types,
            WalkStats& stats) {
    walk.clear();
    if (edge_types) edge_types->clear();
    walk.push_back(start);
    TypeId prev_type = kNoType;
    while (walk.size() < config_.walk_length) {
      const NodeId curr = walk.back();
      const auto nbrs = graph_.neighbors(curr);
      if (nbrs.empty()) return false;
      switch (config_.strategy) {
        case WalkStrategy::uniform:
          walk.push_back(nbrs[rng.below(nbrs.size())].node);
          break;
        case WalkStrategy::node2vec:
          walk.push_back(node2vec_next(walk, nbrs, rng));
          break;
        case WalkStrategy::metapath: {
          auto next = metapath_next(graph_, curr, config_.metapath.expected_at(walk.size()), rng);
          if (!next) return false;
          walk.push_back(*next);
          break;
        }
        case WalkStrategy::edge2vec: {
          auto step = edge2vec_step_impl(nbrs, prev_type, *matrix_, rng, scratch_);
          if (step.fallback) ++stats.uniform_fallbacks;
          prev_type = step.next.edge_type;
          walk.push_back(step.next.node);
          if (edge_types) edge_types->push_back(prev_type);
          break;
        }
      }
    }
    return true;
  }

 private:
  NodeId node2vec_next(const std::vector<NodeId>& walk, std::span<const Neighbor> nbrs, Rng& rng) {
    // p = q = 1 is exactly the uniform walk; share its draw sequence.
    if (walk.size() < 2 || (config_.p == 1.0 && config_.q == 1.0))
      return nbrs[rng.below(nbrs.size())].node;
    const NodeId prev = walk[walk.size() - 2];
    const double inv_p = 1.0 / config_.p;
    const double inv_q = 1.0 / config_.q;
    scratch_.resize(nbrs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      const NodeId cand = nbrs[i].node;
      const double w = cand == prev ? inv_p : graph_.has_edge(prev, cand) ? 1.0 : inv_q;
      scratch_[i] = w;
      total += w;
    }
    return nbrs[sample_weighted(scratch_, total, rng)].node;
  }

  const HeteroGraph& graph_;
  const WalkConfig& config_;
  const TransitionMatrix* matrix_;
  std::vector<double> scratch_;
};

std::vector<NodeId> start_nodes(const HeteroGraph& graph, const WalkConfig& config) {
  if (config.strategy == WalkStrategy::metapath) {
    auto starts = graph.nodes_by_type(config.metapath.head());
    if (starts.empty())
      throw ConfigError("metapath head type '" +
                        graph.types().node_type_name(config.metapath.head()) + "' has no nodes");
    return starts;
  }
  std::vector<NodeId> all(graph.node_count());
  for (NodeId i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

struct RawCorpus {
  std::vector<std::vector<NodeId>> walks;
  std::vector<std::vector<TypeId>> edge_types;
  WalkStats stats;
};

RawCorpus run_walks(const HeteroGraph& graph, const WalkConfig& config,
                    const TransitionMatrix* matrix, std::uint64_t seed, bool record_types) {
  const auto starts = start_nodes(graph, config);
  const std::size_t total = starts.size() * config.walks_per_node;
  RawCorpus raw;
  raw.walks.resize(total);
  if (record_types) raw.edge_types.resize(total);

  const std::size_t workers = std::clamp<std::size_t>(config.workers, 1, std::max<std::size_t>(total, 1));
  std::vector<WalkStats> stats(workers);

  auto run_range = [&](std::size_t worker, std::size_t begin, std::size_t end) {
    Walker walker(graph, config, matrix);
    Rng rng;
    for (std::size_t slot = begin; slot < end; ++slot) {
      const std::size_t round = slot / starts.size();
      const NodeId start = starts[slot % starts.size()];
      rng.reseed(derive_seed(seed, start, round));
      const bool full = walker.walk(start, rng, raw.walks[slot],
                                    record_types ? &raw.edge_types[slot] : nullptr, stats[worker]);
      if (!full) ++stats[worker].truncated_walks;
    }
  };

  if (workers == 1) {
    run_range(0, 0, total);
  } else {
    std::vector<std::jthread> threads;
    const std::size_t chunk = (total + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(total, w * chunk);
      const std::size_t end = std::min(total, begin + chunk);
      threads.emplace_back(run_range, w, begin, end);
    }
  }
  for (const auto& s : stats) {
    raw.stats.truncated_walks += s.truncated_walks;
    raw.stats.uniform_fallbacks += s.uniform_fallbacks;
  }
  return raw;
}

}  // namespace

Eigen::MatrixXd count_edge_cooccurrence(const std::vector<std::vector<TypeId>>& sequences,
                                        std::size_t edge_types, std::size_t window) {
  const auto n = static_cast<Eigen::Index>(edge_types);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& seq : sequences) {
    for (std::size_t a = 0; a < seq.size(); ++a) {
      const std::size_t stop = std::min(seq.size(), a + window + 1);
      for (std::size_t b = a + 1; b < stop; ++b) {
        counts(seq[a], seq[b]) += 1.0;
        counts(seq[b], seq[a]) += 1.0;
      }
    }
  }
  return counts;
}

TransitionMatrix em_train_transition(const HeteroGraph& graph, const WalkConfig& config) {
  const std::size_t edge_types = graph.types().edge_type_count();
  if (edge_types == 0) throw ConfigError("graph has no edge types");
  WalkConfig em_config = config;
  em_config.strategy = WalkStrategy::edge2vec;
  em_config.validate();

  auto matrix = TransitionMatrix::uniform(edge_types);
  for (std::size_t iter = 0; iter < config.em_iterations; ++iter) {
    const auto raw = run_walks(graph, em_config, &matrix,
                               derive_seed(config.seed, 0x656d5f73746570ULL, iter), true);
    matrix = TransitionMatrix::from_counts(
        count_edge_cooccurrence(raw.edge_types, edge_types, config.em_window));
  }
  return matrix;
}

WalkCorpus generate_corpus(const HeteroGraph& graph, const WalkConfig& config,
                           const TransitionMatrix* transitions) {
  config.validate();
  if (graph.node_count() == 0) throw ConfigError("cannot walk an empty graph");

  TransitionMatrix trained;
  if (config.strategy == WalkStrategy::edge2vec) {
    if (!transitions) {
      trained = em_train_transition(graph, config);
      transitions = &trained;
    }
    if (transitions->size() != graph.types().edge_type_count())
      throw ConfigError("transition matrix size does not match the edge-type count");
  }

  auto raw = run_walks(graph, config, transitions, config.seed, false);
  WalkCorpus corpus;
  corpus.walks = std::move(raw.walks);
  corpus.strategy = config.strategy;
  corpus.seed = config.seed;
  corpus.config_hash = config.hash();
  corpus.stats = raw.stats;
  return corpus;
}

// ---------------------------------------------------------------------------
// Corpus files

void write_corpus(const WalkCorpus& corpus, const HeteroGraph& graph, std::ostream& out) {
  out << "# strategy=" << to_string(corpus.strategy) << " seed=" << corpus.seed
      << " config_hash=" << hex64(corpus.config_hash) << '\n';
  out << "# walks=" << corpus.walks.size() << " truncated=" << corpus.stats.truncated_walks
      << " uniform_fallbacks=" << corpus.stats.uniform_fallbacks << '\n';
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i) out << ' ';
      out << graph.node_uri(walk[i]);
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing corpus");
}

WalkCorpus read_corpus(std::istream& in, const HeteroGraph& graph) {
  WalkCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream fields(line.substr(1));
      std::string field;
      while (fields >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const auto key = field.substr(0, eq);
        const auto value = field.substr(eq + 1);
        if (key == "strategy") corpus.strategy = parse_walk_strategy(value);
        else if (key == "seed") corpus.seed = std::stoull(value);
        else if (key == "config_hash") corpus.config_hash = std::stoull(value, nullptr, 16);
      }
      continue;
    }
    std::istringstream tokens(line);
    std::vector<NodeId> walk;
    std::string uri;
    while (tokens >> uri) {
      auto id = graph.find_node(uri);
      if (!id) throw ParseError(line_no, "unknown node '" + uri + "' in corpus");
      walk.push_back(*id);
    }
    if (!walk.empty()) corpus.walks.push_back(std::move(walk));
  }
  return corpus;
}

}  // namespace kgc
