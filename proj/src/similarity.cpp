#include "kgc/similarity.hpp"

#include <algorithm>
#include <ostream>
#include <queue>
#include <unordered_map>

namespace kgc {

namespace {

struct Candidate {
  double score;
  const std::string* label;
};

bool before(const Candidate& a, const Candidate& b) {
  return ranks_before(a.score, *a.label, b.score, *b.label);
}

std::vector<Candidate> select_top(std::vector<Candidate> pool, std::size_t k) {
  if (pool.size() <= 10 * k) {
    std::sort(pool.begin(), pool.end(), before);
    if (pool.size() > k) pool.resize(k);
    return pool;
  }
  // Max-heap on "worst first" keeps the k best seen so far.
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(&before)> heap(before);
  for (const auto& c : pool) {
    if (heap.size() < k) {
      heap.push(c);
    } else if (before(c, heap.top())) {
      heap.pop();
      heap.push(c);
    }
  }
  std::vector<Candidate> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

RankedList rank_targets(const EmbeddingMatrix& model, const std::string& source,
                        std::span<const std::string> candidates, std::size_t k) {
  if (k == 0) throw ConfigError("K must be >= 1");
  const auto src = model.find(source);
  if (!src) throw DataError("source '" + source + "' is not in the embedding vocabulary");

  RankedList list;
  list.source = source;
  const auto v = model.vector(*src);
  std::vector<Candidate> pool;
  pool.reserve(candidates.size());
  for (const auto& c : candidates) {
    const auto row = model.find(c);
    if (!row) {
      ++list.skipped;
      continue;
    }
    if (*row == *src) continue;
    pool.push_back({cosine(v, model.vector(*row)), &model.labels[*row]});
  }
  if (pool.empty()) throw DataError("no candidate of '" + source + "' has an embedding");

  const auto top = select_top(std::move(pool), k);
  list.entries.reserve(top.size());
  for (std::size_t i = 0; i < top.size(); ++i)
    list.entries.push_back({*top[i].label, top[i].score, i + 1});
  return list;
}

TopKPredictions predict_topk(const EmbeddingMatrix& model, const LabeledPairSet& pairs,
                             std::size_t k) {
  if (k == 0) throw ConfigError("K must be >= 1");
  return predict_topk(model, pairs, [k](const std::string&) { return k; });
}

TopKPredictions predict_topk(const EmbeddingMatrix& model, const LabeledPairSet& pairs,
                             const std::function<std::size_t(const std::string&)>& k_for_source) {
  if (pairs.empty()) throw DataError("empty pair set");

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const LabeledPair*>> groups;
  for (const auto& p : pairs.pairs()) {
    auto [it, inserted] = groups.try_emplace(p.source);
    if (inserted) order.push_back(p.source);
    it->second.push_back(&p);
  }

  TopKPredictions out;
  out.predictions.reserve(pairs.size());
  std::vector<std::pair<double, const LabeledPair*>> scored;
  for (const auto& source : order) {
    const auto& group = groups[source];
    const auto src = model.find(source);
    if (!src) {
      for (const auto* p : group) out.skipped.push_back(*p);
      continue;
    }
    const auto v = model.vector(*src);
    scored.clear();
    for (const auto* p : group) {
      const auto row = model.find(p->target);
      if (!row) {
        out.skipped.push_back(*p);
        continue;
      }
      scored.emplace_back(cosine(v, model.vector(*row)), p);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return ranks_before(a.first, a.second->target, b.first, b.second->target);
    });
    const std::size_t k = k_for_source(source);
    for (std::size_t i = 0; i < scored.size(); ++i) {
      const auto& [score, p] = scored[i];
      out.predictions.push_back({p->source, p->target, score, i + 1, i + 1 <= k});
    }
  }
  return out;
}

void write_predictions_csv(const TopKPredictions& predictions, std::ostream& out) {
  out << "source,target,score,rank,predicted_label\n";
  for (const auto& p : predictions.predictions)
    out << p.source << ',' << p.target << ',' << format_double(p.score) << ',' << p.rank << ','
        << (p.predicted ? 1 : 0) << '\n';
}

void write_ranking_csv(const RankedList& ranking, std::ostream& out) {
  out << "target,score\n";
  for (const auto& e : ranking.entries) out << e.target << ',' << format_double(e.score) << '\n';
}

}  // namespace kgc
