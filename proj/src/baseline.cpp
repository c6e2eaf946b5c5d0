#include "kgc/baseline.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace kgc {

std::string to_string(FeatureMode mode) {
  return mode == FeatureMode::hadamard ? "hadamard" : "concat";
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "hadamard") return FeatureMode::hadamard;
  if (name == "concat") return FeatureMode::concat;
  throw ConfigError("unknown feature mode '" + std::string(name) + "'");
}

Eigen::VectorXd pair_features(const EmbeddingMatrix& model, const std::string& source,
                              const std::string& target, FeatureMode mode) {
  const auto s = model.find(source);
  if (!s) throw DataError("node '" + source + "' has no embedding");
  const auto t = model.find(target);
  if (!t) throw DataError("node '" + target + "' has no embedding");
  const auto a = model.vector(*s);
  const auto b = model.vector(*t);
  if (mode == FeatureMode::hadamard) return hadamard(a, b).transpose();
  return concat(a, b);
}

FeatureTable build_features(const EmbeddingMatrix& model, const LabeledPairSet& pairs,
                            FeatureMode mode) {
  FeatureTable table;
  for (const auto& p : pairs.pairs()) {
    if (model.find(p.source) && model.find(p.target)) table.used.push_back(p);
    else table.skipped.push_back(p);
  }
  const auto dim = static_cast<Eigen::Index>(mode == FeatureMode::hadamard ? model.dim() : 2 * model.dim());
  table.features.resize(static_cast<Eigen::Index>(table.used.size()), dim);
  table.labels.resize(static_cast<Eigen::Index>(table.used.size()));
  for (std::size_t i = 0; i < table.used.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    table.features.row(row) = pair_features(model, table.used[i].source, table.used[i].target, mode).transpose();
    table.labels(row) = table.used[i].label;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Link sampling

namespace {

std::uint64_t pair_key(NodeId u, NodeId v) { return (static_cast<std::uint64_t>(u) << 32) | v; }

std::vector<std::pair<NodeId, NodeId>> matching_edges(const HeteroGraph& graph,
                                                      const RelationFilter& filter,
                                                      const LabeledPairSet* exclude) {
  const auto& types = graph.node_types();
  auto type_ok = [&](NodeId n, const std::optional<TypeId>& want) { return !want || types[n] == *want; };

  // Oriented so the source carries the source type.
  std::vector<std::pair<NodeId, NodeId>> matching;
  for (const auto& e : graph.edges()) {
    if (filter.edge_type && e.type != *filter.edge_type) continue;
    if (type_ok(e.source, filter.source_type) && type_ok(e.target, filter.target_type))
      matching.emplace_back(e.source, e.target);
    else if (type_ok(e.target, filter.source_type) && type_ok(e.source, filter.target_type))
      matching.emplace_back(e.target, e.source);
  }
  if (exclude) {
    std::erase_if(matching, [&](const auto& e) {
      return exclude->contains(graph.node_uri(e.first), graph.node_uri(e.second)) ||
             exclude->contains(graph.node_uri(e.second), graph.node_uri(e.first));
    });
  }
  return matching;
}

}  // namespace

std::size_t count_matching_edges(const HeteroGraph& graph, const RelationFilter& filter,
                                 const LabeledPairSet* exclude) {
  return matching_edges(graph, filter, exclude).size();
}

LabeledPairSet sample_training_links(const HeteroGraph& graph, const RelationFilter& filter,
                                     std::size_t n_pos, std::size_t n_neg, Rng& rng,
                                     const LabeledPairSet* exclude) {
  const auto& types = graph.node_types();
  auto matching = matching_edges(graph, filter, exclude);
  auto excluded = [&](NodeId u, NodeId v) {
    return exclude && (exclude->contains(graph.node_uri(u), graph.node_uri(v)) ||
                       exclude->contains(graph.node_uri(v), graph.node_uri(u)));
  };
  if (matching.size() < n_pos)
    throw DataError("insufficient edges: " + std::to_string(matching.size()) +
                    " match the relation filter, " + std::to_string(n_pos) + " requested");

  LabeledPairSet out;
  std::unordered_set<std::uint64_t> taken;
  std::vector<std::pair<NodeId, NodeId>> positives;
  for (std::size_t i = 0; i < n_pos; ++i) {
    const auto j = i + rng.below(matching.size() - i);
    std::swap(matching[i], matching[j]);
    const auto [u, v] = matching[i];
    positives.emplace_back(u, v);
    taken.insert(pair_key(u, v));
    taken.insert(pair_key(v, u));
    out.add(graph.node_uri(u), graph.node_uri(v), 1);
  }
  if (n_neg == 0) return out;

  // Type pools for negatives: from the filter, or from sampled positives.
  auto pool_for = [&](std::optional<TypeId> t) {
    if (t) return graph.nodes_by_type(*t);
    std::vector<NodeId> all(graph.node_count());
    for (NodeId i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  };
  const bool typed = filter.source_type && filter.target_type;
  std::unordered_map<TypeId, std::vector<NodeId>> by_type;
  auto nodes_of = [&](TypeId t) -> const std::vector<NodeId>& {
    auto it = by_type.find(t);
    if (it == by_type.end()) it = by_type.emplace(t, graph.nodes_by_type(t)).first;
    return it->second;
  };
  const auto src_pool = pool_for(filter.source_type);
  const auto dst_pool = pool_for(filter.target_type);

  const std::size_t max_rejections = 1000 * n_neg;
  std::size_t rejections = 0;
  std::size_t accepted = 0;
  while (accepted < n_neg) {
    const std::vector<NodeId>* sources = &src_pool;
    const std::vector<NodeId>* targets = &dst_pool;
    if (!typed && !positives.empty()) {
      const auto& [pu, pv] = positives[rng.below(positives.size())];
      sources = &nodes_of(types[pu]);
      targets = &nodes_of(types[pv]);
    }
    if (sources->empty() || targets->empty())
      throw DataError("no nodes of the requested types for negative sampling");
    const NodeId u = (*sources)[rng.below(sources->size())];
    const NodeId v = (*targets)[rng.below(targets->size())];
    if (u == v || graph.has_edge(u, v) || taken.count(pair_key(u, v)) || excluded(u, v)) {
      if (++rejections > max_rejections) throw DataError("graph too dense");
      continue;
    }
    taken.insert(pair_key(u, v));
    taken.insert(pair_key(v, u));
    out.add(graph.node_uri(u), graph.node_uri(v), 0);
    ++accepted;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

double logreg_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                   double b, double l2) {
  const Eigen::VectorXd margin = (x * w).array() + b;
  double total = 0.0;
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    const double m = margin(i);
    // log(1 + exp(-m)) for y = 1, log(1 + exp(m)) for y = 0, both stable.
    const double z = y(i) > 0.5 ? -m : m;
    total += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return total / static_cast<double>(margin.size()) + 0.5 * l2 * w.squaredNorm();
}

void logreg_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     double b, double l2, Eigen::VectorXd& grad_w, double& grad_b) {
  const Eigen::VectorXd margin = (x * w).array() + b;
  Eigen::VectorXd residual(margin.size());
  for (Eigen::Index i = 0; i < margin.size(); ++i) {
    const double m = margin(i);
    const double p = m >= 0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
    residual(i) = p - y(i);
  }
  const double n = static_cast<double>(margin.size());
  grad_w = x.transpose() * residual / n + l2 * w;
  grad_b = residual.sum() / n;
}

LogRegModel fit_logreg(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const LogRegOptions& options) {
  if (x.rows() != y.size()) throw ConfigError("feature and label counts differ");
  if (x.rows() == 0) throw DataError("no training examples");
  const auto positives = (y.array() > 0.5).count();
  if (positives == 0 || positives == y.size())
    throw DataError("logistic regression needs examples of both classes");
  if (!x.allFinite()) throw DataError("non-finite training features");

  LogRegModel model;
  model.weights = Eigen::VectorXd::Zero(x.cols());
  double loss = logreg_loss(x, y, model.weights, model.bias, options.l2);
  model.loss_trace.push_back(loss);

  double rate = options.learning_rate;
  Eigen::VectorXd grad_w;
  double grad_b = 0.0;
  for (std::size_t epoch = 0; epoch < options.max_epochs; ++epoch) {
    logreg_gradient(x, y, model.weights, model.bias, options.l2, grad_w, grad_b);
    Eigen::VectorXd w_next;
    double b_next = 0.0;
    double next_loss = loss;
    for (int halvings = 0;; ++halvings) {
      w_next = model.weights - rate * grad_w;
      b_next = model.bias - rate * grad_b;
      next_loss = logreg_loss(x, y, w_next, b_next, options.l2);
      if (next_loss <= loss || halvings == 60) break;
      rate *= 0.5;
    }
    if (next_loss > loss) break;  // no descent direction left
    const double improvement = loss - next_loss;
    model.weights = std::move(w_next);
    model.bias = b_next;
    loss = next_loss;
    model.loss_trace.push_back(loss);
    model.iterations = epoch + 1;
    if (improvement < options.tolerance) break;
  }
  model.final_loss = loss;
  return model;
}

LogRegPrediction predict_logreg(const LogRegModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.weights.size())
    throw ConfigError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                      std::to_string(model.weights.size()));
  const double margin = model.weights.dot(x) + model.bias;
  return {sigmoid(margin), margin >= 0.0};
}

void save_logreg(const LogRegModel& model, std::ostream& out) {
  out << "kgc-logreg " << kLogRegFormatVersion << '\n';
  out << "dim " << model.weights.size() << '\n';
  out << "bias " << format_double(model.bias) << '\n';
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) out << format_double(model.weights(i)) << '\n';
  if (!out) throw Error("failed writing logistic model");
}

LogRegModel load_logreg(std::istream& in) {
  std::string tag, key;
  int version = 0;
  if (!(in >> tag >> version) || tag != "kgc-logreg") throw DataError("not a logistic model file");
  if (version != kLogRegFormatVersion)
    throw DataError("logistic model version mismatch: file has " + std::to_string(version));
  Eigen::Index dim = 0;
  LogRegModel model;
  if (!(in >> key >> dim) || key != "dim" || dim < 0) throw DataError("logistic model: bad dim line");
  if (!(in >> key >> model.bias) || key != "bias") throw DataError("logistic model: bad bias line");
  model.weights.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    if (!(in >> model.weights(i))) throw DataError("logistic model: missing weight " + std::to_string(i));
  return model;
}

}  // namespace kgc
