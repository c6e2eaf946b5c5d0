#pragma once

#include "kgc/walkers.hpp"

#include <cmath>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace kgc {

inline constexpr double kSigmoidClamp = 30.0;

template <typename Scalar>
Scalar clamp_logit(Scalar x) {
  return std::min<Scalar>(std::max<Scalar>(x, Scalar(-kSigmoidClamp)), Scalar(kSigmoidClamp));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-clamp_logit(x)));
}

// log(sigmoid(x)) without cancellation, after clamping.
template <typename Scalar>
Scalar log_sigmoid(Scalar x) {
  x = clamp_logit(x);
  return x >= Scalar(0) ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

using VocabIndex = std::uint32_t;

struct Vocabulary {
  std::vector<NodeId> nodes;              // vocab index -> node
  std::vector<std::uint64_t> counts;      // vocab index -> occurrences
  std::unordered_map<NodeId, VocabIndex> index;
  std::uint64_t total_tokens = 0;         // before min_count filtering
  std::uint64_t retained_tokens = 0;

  std::size_t size() const noexcept { return nodes.size(); }
  std::optional<VocabIndex> find(NodeId node) const;
};

// Vocab indices are assigned in order of first appearance in the corpus.
Vocabulary build_vocab(const WalkCorpus& corpus, std::uint64_t min_count = 1);

/// Cumulative noise distribution P(w) proportional to count(w)^power.
class NoiseTable {
 public:
  explicit NoiseTable(const Vocabulary& vocab, double power = 0.75);

  VocabIndex draw(Rng& rng) const;
  double probability(VocabIndex i) const;
  std::span<const double> cumulative() const noexcept { return cdf_; }

 private:
  std::vector<double> cdf_;
};

struct TrainConfig {
  std::size_t dim = 128;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  double min_learning_rate_ratio = 1e-4;
  std::uint64_t min_count = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool deterministic = true;

  void validate() const;
  std::uint64_t hash() const;
};

/// Learned model: center vectors (the node embeddings) and context vectors,
/// one row per vocabulary entry, labelled by node URI.
struct EmbeddingMatrix {
  std::vector<std::string> labels;
  RowMatrixXd center;
  RowMatrixXd context;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<std::string> labels, RowMatrixXd center, RowMatrixXd context = {});

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(center.cols()); }
  bool has_context() const noexcept { return context.rows() > 0; }

  std::optional<std::size_t> find(std::string_view label) const;
  auto vector(std::size_t row) const { return center.row(static_cast<Eigen::Index>(row)); }

  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

/// One negative-sampling SGD update for (center, context, negatives).
/// Returns the loss before the update,
///   -log s(u_o . v_c) - sum_j log s(-u_j . v_c).
/// All gradients are computed from pre-update values, then applied.
template <typename Scalar>
Scalar sgd_step(Eigen::Index center, Eigen::Index context, std::span<const VocabIndex> negatives,
                Scalar lr, RowMatrix<Scalar>& center_vecs, RowMatrix<Scalar>& context_vecs,
                Eigen::Matrix<Scalar, 1, Eigen::Dynamic>& grad_center) {
  auto v = center_vecs.row(center);
  grad_center.setZero(center_vecs.cols());

  auto check = [](const auto& row) {
    if (!row.allFinite()) throw DataError("non-finite embedding vector in sgd_step");
  };
  check(v);
  check(context_vecs.row(context));
  for (auto j : negatives) check(context_vecs.row(j));

  Scalar loss = 0;
  const Scalar pos_dot = context_vecs.row(context).dot(v);
  loss -= log_sigmoid(pos_dot);
  const Scalar pos_g = sigmoid(pos_dot) - Scalar(1);

  // Scores for every negative from pre-update vectors.
  Scalar neg_g_buf[64];
  std::vector<Scalar> neg_g_heap;
  Scalar* neg_g = neg_g_buf;
  if (negatives.size() > 64) {
    neg_g_heap.resize(negatives.size());
    neg_g = neg_g_heap.data();
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const Scalar dot = context_vecs.row(negatives[k]).dot(v);
    loss -= log_sigmoid(-dot);
    neg_g[k] = sigmoid(dot);
  }

  grad_center.noalias() += pos_g * context_vecs.row(context);
  for (std::size_t k = 0; k < negatives.size(); ++k)
    grad_center.noalias() += neg_g[k] * context_vecs.row(negatives[k]);

  context_vecs.row(context) -= (lr * pos_g) * v;
  for (std::size_t k = 0; k < negatives.size(); ++k)
    context_vecs.row(negatives[k]) -= (lr * neg_g[k]) * v;
  v -= lr * grad_center;
  return loss;
}

// Convenience overload on a whole model.
double sgd_step(EmbeddingMatrix& model, std::size_t center, std::size_t context,
                std::span<const VocabIndex> negatives, double lr);

// Loss of one tuple without touching the model.
double pair_loss(const EmbeddingMatrix& model, std::size_t center, std::size_t context,
                 std::span<const VocabIndex> negatives);

struct TrainStats {
  std::vector<double> epoch_loss;  // mean per-pair loss of each epoch
  std::uint64_t pairs_trained = 0;
  std::uint64_t negatives_skipped = 0;  // re-draw cap hit
};

struct TrainResult {
  EmbeddingMatrix model;
  Vocabulary vocab;
  TrainStats stats;
};

// Number of (center, context) pairs one epoch visits.
std::uint64_t count_window_pairs(const std::vector<std::vector<VocabIndex>>& sentences,
                                 std::size_t window);

/// Skip-gram with negative sampling over a walk corpus. `node_labels` maps
/// NodeId to the label stored with each embedding row (normally the URI).
TrainResult train(const WalkCorpus& corpus, const TrainConfig& config,
                  std::span<const std::string> node_labels);

// Mean loss over `samples` random (center, context, negatives) tuples drawn
// with `seed`; the model is not modified.
double mean_loss(const EmbeddingMatrix& model, const Vocabulary& vocab, const WalkCorpus& corpus,
                 const TrainConfig& config, std::size_t samples, std::uint64_t seed);

// Text: `N D` header then `label v1 ... vD` (center vectors, 17 digits).
void save_embeddings_text(const EmbeddingMatrix& model, std::ostream& out);
EmbeddingMatrix load_embeddings_text(std::istream& in);

inline constexpr std::uint32_t kEmbeddingVersion = 1;
void save_embeddings_binary(const EmbeddingMatrix& model, std::ostream& out,
                            bool include_context = true);
// expected_dim = 0 accepts any dimension.
EmbeddingMatrix load_embeddings_binary(std::istream& in, std::size_t expected_dim = 0);

}  // namespace kgc
