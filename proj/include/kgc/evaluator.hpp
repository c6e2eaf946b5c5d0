#pragma once

#include "kgc/baseline.hpp"
#include "kgc/pairs.hpp"
#include "kgc/similarity.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace kgc {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t skipped = 0;

  std::size_t evaluated() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct BinaryPrediction {
  std::string source;
  std::string target;
  bool predicted = false;
};

// Labeled pairs without a prediction count as skipped; a prediction for an
// unlabeled pair is an error.
ConfusionCounts confusion(std::span<const BinaryPrediction> predictions, const LabeledPairSet& labels);
ConfusionCounts confusion(const TopKPredictions& predictions, const LabeledPairSet& labels);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no positive predictions
  bool recall_undefined = false;     // no positive labels
};

Metrics metrics(const ConfusionCounts& c);

struct ReportRow {
  std::string strategy;
  std::string method;  // "logreg" or "topK@k"
  ConfusionCounts counts;
  Metrics metrics;
};

struct ComparisonReport {
  std::string feature_mode;
  std::vector<ReportRow> rows;
};

/// One logistic-regression row plus one top-K row per k, all on `pairs`.
std::vector<ReportRow> compare_report(const EmbeddingMatrix& model, const LabeledPairSet& pairs,
                                      std::span<const std::size_t> ks, const LogRegModel& baseline,
                                      FeatureMode mode, const std::string& strategy);

void write_report_csv(const ComparisonReport& report, std::ostream& out);
void write_report_table(const ComparisonReport& report, std::ostream& out);

std::string format_metric(double value);  // 4 decimals

}  // namespace kgc
