#pragma once

#include "kgc/pairs.hpp"
#include "kgc/skipgram.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kgc {

/// Cosine similarity, clamped to [-1, 1]. Throws on a zero-norm vector or a
/// dimension mismatch.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a,
                                 const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size())
    throw ConfigError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) throw DataError("undefined similarity: zero-norm vector");
  const Scalar c = a.dot(b) / (na * nb);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

struct RankedEntry {
  std::string target;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
};

struct RankedList {
  std::string source;
  std::vector<RankedEntry> entries;
  std::size_t skipped = 0;  // candidates without an embedding
};

// Descending score, ties by ascending label.
inline bool ranks_before(double score_a, const std::string& a, double score_b,
                         const std::string& b) {
  return score_a != score_b ? score_a > score_b : a < b;
}

/// Top-K candidates of `source` by cosine. The source itself is never ranked.
/// Large pools go through a bounded heap; small ones are fully sorted.
RankedList rank_targets(const EmbeddingMatrix& model, const std::string& source,
                        std::span<const std::string> candidates, std::size_t k);

struct PairPrediction {
  std::string source;
  std::string target;
  double score = 0.0;
  std::size_t rank = 0;
  bool predicted = false;
};

struct TopKPredictions {
  std::vector<PairPrediction> predictions;
  std::vector<LabeledPair> skipped;  // a node without an embedding
};

/// Groups labeled pairs by source, ranks each source's labeled targets by
/// cosine and predicts positive for ranks <= K.
TopKPredictions predict_topk(const EmbeddingMatrix& model, const LabeledPairSet& pairs,
                             std::size_t k);

// Same, with a per-source K.
TopKPredictions predict_topk(const EmbeddingMatrix& model, const LabeledPairSet& pairs,
                             const std::function<std::size_t(const std::string&)>& k_for_source);

// `source,target,score,rank,predicted_label` with header.
void write_predictions_csv(const TopKPredictions& predictions, std::ostream& out);
// `target,score` in rank order.
void write_ranking_csv(const RankedList& ranking, std::ostream& out);

}  // namespace kgc
