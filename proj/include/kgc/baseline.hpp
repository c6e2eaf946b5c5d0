#pragma once

#include "kgc/graph_store.hpp"
#include "kgc/pairs.hpp"
#include "kgc/skipgram.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace kgc {

enum class FeatureMode { hadamard, concat };

std::string to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view name);

template <typename DerivedA, typename DerivedB>
auto hadamard(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return a.cwiseProduct(b);
}

template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> concat(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> out(a.size() + b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out(i) = a(i);
  for (Eigen::Index i = 0; i < b.size(); ++i) out(a.size() + i) = b(i);
  return out;
}

// Throws DataError when either node has no embedding.
Eigen::VectorXd pair_features(const EmbeddingMatrix& model, const std::string& source,
                              const std::string& target, FeatureMode mode);

struct FeatureTable {
  Eigen::MatrixXd features;  // one row per used pair
  Eigen::VectorXd labels;
  std::vector<LabeledPair> used;
  std::vector<LabeledPair> skipped;
};

FeatureTable build_features(const EmbeddingMatrix& model, const LabeledPairSet& pairs,
                            FeatureMode mode);

struct RelationFilter {
  std::optional<TypeId> edge_type;
  std::optional<TypeId> source_type;
  std::optional<TypeId> target_type;
};

// Number of edges `sample_training_links` could draw positives from.
std::size_t count_matching_edges(const HeteroGraph& graph, const RelationFilter& filter,
                                 const LabeledPairSet* exclude = nullptr);

/// Positives: edges matching `filter`, uniformly without replacement, oriented
/// source-type -> target-type. Negatives: type-compatible non-edges found by
/// rejection, disjoint from positives and from `exclude`.
LabeledPairSet sample_training_links(const HeteroGraph& graph, const RelationFilter& filter,
                                     std::size_t n_pos, std::size_t n_neg, Rng& rng,
                                     const LabeledPairSet* exclude = nullptr);

struct LogRegOptions {
  double l2 = 1e-4;
  double learning_rate = 0.1;
  std::size_t max_epochs = 200;
  double tolerance = 1e-6;
};

struct LogRegModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  std::vector<double> loss_trace;
};

// Mean logistic loss plus (l2/2)|w|^2; the bias is not penalised.
double logreg_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w, double b, double l2);
void logreg_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                     double b, double l2, Eigen::VectorXd& grad_w, double& grad_b);

/// Full-batch gradient descent from zero weights. A step that would raise the
/// loss is retried at half the rate, so the loss trace never increases.
LogRegModel fit_logreg(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const LogRegOptions& options = {});

struct LogRegPrediction {
  double probability = 0.5;
  bool label = true;
};

// label = (w.x + b >= 0), which is probability >= 0.5 without rounding issues.
LogRegPrediction predict_logreg(const LogRegModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

inline constexpr int kLogRegFormatVersion = 1;
void save_logreg(const LogRegModel& model, std::ostream& out);
LogRegModel load_logreg(std::istream& in);

}  // namespace kgc
