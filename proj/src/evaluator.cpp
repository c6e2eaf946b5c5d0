#include "kgc/evaluator.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

namespace kgc {

// ---------------------------------------------------------------------------
// LabeledPairSet

std::string LabeledPairSet::key(const std::string& source, const std::string& target) {
  std::string k;
  k.reserve(source.size() + target.size() + 1);
  k.append(source).push_back('\x1f');
  k.append(target);
  return k;
}

bool LabeledPairSet::add(std::string source, std::string target, int label) {
  if (label != 0 && label != 1) throw DataError("label must be 0 or 1");
  auto [it, inserted] = index_.try_emplace(key(source, target), pairs_.size());
  if (!inserted) {
    if (pairs_[it->second].label != label)
      throw DataError("conflicting labels for pair (" + source + ", " + target + ")");
    return false;
  }
  positives_ += label;
  pairs_.push_back({std::move(source), std::move(target), label});
  return true;
}

bool LabeledPairSet::contains(const std::string& source, const std::string& target) const {
  return index_.count(key(source, target)) != 0;
}

const int* LabeledPairSet::find_label(const std::string& source, const std::string& target) const {
  auto it = index_.find(key(source, target));
  return it == index_.end() ? nullptr : &pairs_[it->second].label;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

LabeledPairSet load_labeled_pairs(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line) != "source,target,label")
    throw ParseError(line_no, "expected header `source,target,label`");

  LabeledPairSet set;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto c1 = text.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : text.find(',', c1 + 1);
    if (c2 == std::string_view::npos || text.find(',', c2 + 1) != std::string_view::npos)
      throw ParseError(line_no, "expected three comma-separated fields");
    const auto source = trim(text.substr(0, c1));
    const auto target = trim(text.substr(c1 + 1, c2 - c1 - 1));
    const auto label = trim(text.substr(c2 + 1));
    if (source.empty() || target.empty()) throw ParseError(line_no, "empty source or target");
    if (label != "0" && label != "1")
      throw ParseError(line_no, "label must be 0 or 1, got '" + std::string(label) + "'");
    try {
      set.add(std::string(source), std::string(target), label == "1" ? 1 : 0);
    } catch (const DataError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return set;
}

void save_labeled_pairs(const LabeledPairSet& pairs, std::ostream& out) {
  out << "source,target,label\n";
  for (const auto& p : pairs.pairs()) out << p.source << ',' << p.target << ',' << p.label << '\n';
}

// ---------------------------------------------------------------------------
// Confusion and metrics

ConfusionCounts confusion(std::span<const BinaryPrediction> predictions, const LabeledPairSet& labels) {
  ConfusionCounts c;
  LabeledPairSet seen;
  for (const auto& p : predictions) {
    const int* label = labels.find_label(p.source, p.target);
    if (!label) throw DataError("prediction for unlabeled pair (" + p.source + ", " + p.target + ")");
    if (!seen.add(p.source, p.target, *label))
      throw DataError("duplicate prediction for pair (" + p.source + ", " + p.target + ")");
    if (p.predicted) (*label ? c.tp : c.fp)++;
    else (*label ? c.fn : c.tn)++;
  }
  c.skipped = labels.size() - predictions.size();
  return c;
}

ConfusionCounts confusion(const TopKPredictions& predictions, const LabeledPairSet& labels) {
  std::vector<BinaryPrediction> binary;
  binary.reserve(predictions.predictions.size());
  for (const auto& p : predictions.predictions) binary.push_back({p.source, p.target, p.predicted});
  return confusion(binary, labels);
}

Metrics metrics(const ConfusionCounts& c) {
  const auto total = c.evaluated();
  if (total == 0) throw DataError("no evaluable pairs");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  if (c.tp + c.fp == 0) m.precision_undefined = true;
  else m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn == 0) m.recall_undefined = true;
  else m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision + m.recall > 0.0) m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

// ---------------------------------------------------------------------------
// Reports

std::vector<ReportRow> compare_report(const EmbeddingMatrix& model, const LabeledPairSet& pairs,
                                      std::span<const std::size_t> ks, const LogRegModel& baseline,
                                      FeatureMode mode, const std::string& strategy) {
  if (pairs.empty()) throw DataError("empty pair set");
  std::vector<ReportRow> rows;

  const auto table = build_features(model, pairs, mode);
  if (table.used.empty()) throw DataError("no evaluable pairs");
  std::vector<BinaryPrediction> binary;
  binary.reserve(table.used.size());
  for (std::size_t i = 0; i < table.used.size(); ++i) {
    const auto pred = predict_logreg(baseline, table.features.row(static_cast<Eigen::Index>(i)).transpose());
    binary.push_back({table.used[i].source, table.used[i].target, pred.label});
  }
  {
    ReportRow row{strategy, "logreg", confusion(binary, pairs), {}};
    row.metrics = metrics(row.counts);
    rows.push_back(std::move(row));
  }

  for (auto k : ks) {
    ReportRow row{strategy, "topK@" + std::to_string(k), confusion(predict_topk(model, pairs, k), pairs), {}};
    row.metrics = metrics(row.counts);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_metric(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

void write_report_csv(const ComparisonReport& report, std::ostream& out) {
  out << "strategy,method,feature_mode,accuracy,f1,precision,recall,tp,fp,tn,fn,skipped,"
         "precision_undefined,recall_undefined\n";
  for (const auto& r : report.rows) {
    const auto& m = r.metrics;
    out << r.strategy << ',' << r.method << ',' << report.feature_mode << ','
        << format_metric(m.accuracy) << ',' << format_metric(m.f1) << ','
        << format_metric(m.precision) << ',' << format_metric(m.recall) << ',' << r.counts.tp
        << ',' << r.counts.fp << ',' << r.counts.tn << ',' << r.counts.fn << ','
        << r.counts.skipped << ',' << m.precision_undefined << ',' << m.recall_undefined << '\n';
  }
}

void write_report_table(const ComparisonReport& report, std::ostream& out) {
  std::size_t strategy_w = 8, method_w = 6;
  for (const auto& r : report.rows) {
    strategy_w = std::max(strategy_w, r.strategy.size());
    method_w = std::max(method_w, r.method.size());
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  out << "feature mode: " << report.feature_mode << '\n';
  out << pad("Strategy", strategy_w) << "  " << pad("Method", method_w)
      << "  Accuracy  F1        Precision Recall    Skipped\n";
  for (const auto& r : report.rows) {
    const auto& m = r.metrics;
    out << pad(r.strategy, strategy_w) << "  " << pad(r.method, method_w) << "  "
        << pad(format_metric(m.accuracy), 8) << "  " << pad(format_metric(m.f1), 8) << "  "
        << pad(format_metric(m.precision) + (m.precision_undefined ? "*" : ""), 9) << " "
        << pad(format_metric(m.recall) + (m.recall_undefined ? "*" : ""), 9) << " "
        << r.counts.skipped << '\n';
  }
  out << "(* undefined, reported as 0)\n";
}

}  // namespace kgc
