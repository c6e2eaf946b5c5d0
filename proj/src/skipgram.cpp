#include "kgc/skipgram.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

namespace kgc {

std::optional<VocabIndex> Vocabulary::find(NodeId node) const {
  auto it = index.find(node);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocab(const WalkCorpus& corpus, std::uint64_t min_count) {
  if (corpus.walks.empty()) throw DataError("cannot build a vocabulary from an empty corpus");

  std::vector<NodeId> order;
  std::unordered_map<NodeId, std::uint64_t> counts;
  std::uint64_t total = 0;
  for (const auto& walk : corpus.walks) {
    for (NodeId n : walk) {
      auto [it, inserted] = counts.try_emplace(n, 0);
      if (inserted) order.push_back(n);
      ++it->second;
      ++total;
    }
  }

  Vocabulary vocab;
  vocab.total_tokens = total;
  for (NodeId n : order) {
    const auto c = counts[n];
    if (c < min_count) continue;
    vocab.index.emplace(n, static_cast<VocabIndex>(vocab.nodes.size()));
    vocab.nodes.push_back(n);
    vocab.counts.push_back(c);
    vocab.retained_tokens += c;
  }
  if (vocab.nodes.empty())
    throw DataError("every node fell below min_count=" + std::to_string(min_count));
  return vocab;
}

// ---------------------------------------------------------------------------
// NoiseTable

NoiseTable::NoiseTable(const Vocabulary& vocab, double power) {
  if (vocab.size() == 0) throw DataError("noise table needs a non-empty vocabulary");
  cdf_.resize(vocab.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    acc += std::pow(static_cast<double>(vocab.counts[i]), power);
    cdf_[i] = acc;
  }
  for (auto& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

VocabIndex NoiseTable::draw(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<VocabIndex>(it - cdf_.begin());
}

double NoiseTable::probability(VocabIndex i) const {
  return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1];
}

// ---------------------------------------------------------------------------
// Config and model

void TrainConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (negatives < 1) throw ConfigError("negatives must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(min_learning_rate_ratio > 0.0 && min_learning_rate_ratio <= 1.0))
    throw ConfigError("min_learning_rate_ratio must be in (0, 1]");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::uint64_t TrainConfig::hash() const {
  std::ostringstream s;
  s << "dim=" << dim << ";window=" << window << ";negatives=" << negatives
    << ";epochs=" << epochs << ";lr=" << format_double(learning_rate)
    << ";lr_min=" << format_double(min_learning_rate_ratio) << ";min_count=" << min_count
    << ";seed=" << seed << ";workers=" << (deterministic ? 1 : workers);
  return fnv1a(s.str());
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> labels_, RowMatrixXd center_,
                                 RowMatrixXd context_)
    : labels(std::move(labels_)), center(std::move(center_)), context(std::move(context_)) {
  if (static_cast<std::size_t>(center.rows()) != labels.size())
    throw DataError("embedding row count does not match label count");
  if (context.rows() != 0 && (context.rows() != center.rows() || context.cols() != center.cols()))
    throw DataError("context matrix shape does not match center matrix");
  reindex();
}

void EmbeddingMatrix::reindex() {
  index_.clear();
  index_.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (!index_.emplace(labels[i], i).second)
      throw DataError("duplicate embedding label '" + labels[i] + "'");
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double sgd_step(EmbeddingMatrix& model, std::size_t center, std::size_t context,
                std::span<const VocabIndex> negatives, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  const auto n = model.size();
  if (center >= n || context >= n) throw ConfigError("sgd_step index out of range");
  for (auto j : negatives)
    if (j >= n) throw ConfigError("sgd_step negative index out of range");
  Eigen::Matrix<double, 1, Eigen::Dynamic> grad(model.dim());
  return sgd_step<double>(static_cast<Eigen::Index>(center), static_cast<Eigen::Index>(context),
                          negatives, lr, model.center, model.context, grad);
}

double pair_loss(const EmbeddingMatrix& model, std::size_t center, std::size_t context,
                 std::span<const VocabIndex> negatives) {
  const auto v = model.center.row(static_cast<Eigen::Index>(center));
  double loss = -log_sigmoid(model.context.row(static_cast<Eigen::Index>(context)).dot(v));
  for (auto j : negatives) loss -= log_sigmoid(-model.context.row(j).dot(v));
  return loss;
}

// ---------------------------------------------------------------------------
// Training

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kTrainStream = 0x747261696eULL;
constexpr int kRedrawCap = 100;

std::vector<std::vector<VocabIndex>> to_sentences(const WalkCorpus& corpus, const Vocabulary& vocab) {
  std::vector<std::vector<VocabIndex>> sentences;
  sentences.reserve(corpus.walks.size());
  for (const auto& walk : corpus.walks) {
    std::vector<VocabIndex> s;
    s.reserve(walk.size());
    for (NodeId n : walk)
      if (auto v = vocab.find(n)) s.push_back(*v);
    sentences.push_back(std::move(s));
  }
  return sentences;
}

// Draws negatives for one pair, re-drawing any that hit the true context.
// Returns the number of negatives that had to be skipped.
std::size_t draw_negatives(const NoiseTable& noise, VocabIndex context, std::size_t k, Rng& rng,
                           std::vector<VocabIndex>& out) {
  out.clear();
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < k; ++i) {
    bool found = false;
    for (int attempt = 0; attempt < kRedrawCap; ++attempt) {
      const auto j = noise.draw(rng);
      if (j != context) {
        out.push_back(j);
        found = true;
        break;
      }
    }
    if (!found) ++skipped;
  }
  return skipped;
}

struct ShardResult {
  double loss = 0.0;
  std::uint64_t pairs = 0;
  std::uint64_t skipped = 0;
};

class EpochRunner {
 public:
  EpochRunner(const std::vector<std::vector<VocabIndex>>& sentences, const NoiseTable& noise,
              const TrainConfig& config, EmbeddingMatrix& model, std::uint64_t total_pairs,
              std::atomic<std::uint64_t>& processed)
      : sentences_(sentences), noise_(noise), config_(config), model_(model),
        total_pairs_(total_pairs), processed_(processed) {}

  ShardResult run(std::size_t begin, std::size_t end, Rng& rng) const {
    ShardResult result;
    std::vector<VocabIndex> negatives;
    Eigen::Matrix<double, 1, Eigen::Dynamic> grad(model_.dim());
    const auto window = static_cast<std::ptrdiff_t>(config_.window);
    const double lr0 = config_.learning_rate;
    const double lr_floor = lr0 * config_.min_learning_rate_ratio;
    for (std::size_t s = begin; s < end; ++s) {
      const auto& sentence = sentences_[s];
      const auto len = static_cast<std::ptrdiff_t>(sentence.size());
      for (std::ptrdiff_t t = 0; t < len; ++t) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, t - window);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len - 1, t + window);
        for (std::ptrdiff_t o = lo; o <= hi; ++o) {
          if (o == t) continue;
          const auto done = processed_.fetch_add(1, std::memory_order_relaxed);
          const double progress = static_cast<double>(done) / static_cast<double>(total_pairs_);
          const double lr = std::max(lr_floor, lr0 * (1.0 - progress));
          const VocabIndex context = sentence[o];
          result.skipped += draw_negatives(noise_, context, config_.negatives, rng, negatives);
          result.loss += sgd_step<double>(sentence[t], context, negatives, lr, model_.center,
                                          model_.context, grad);
          ++result.pairs;
        }
      }
    }
    return result;
  }

 private:
  const std::vector<std::vector<VocabIndex>>& sentences_;
  const NoiseTable& noise_;
  const TrainConfig& config_;
  EmbeddingMatrix& model_;
  std::uint64_t total_pairs_;
  std::atomic<std::uint64_t>& processed_;
};

}  // namespace

std::uint64_t count_window_pairs(const std::vector<std::vector<VocabIndex>>& sentences,
                                 std::size_t window) {
  std::uint64_t pairs = 0;
  for (const auto& s : sentences) {
    const std::size_t len = s.size();
    for (std::size_t t = 0; t < len; ++t)
      pairs += std::min(window, t) + std::min(window, len - 1 - t);
  }
  return pairs;
}

TrainResult train(const WalkCorpus& corpus, const TrainConfig& config,
                  std::span<const std::string> node_labels) {
  config.validate();
  TrainResult result;
  result.vocab = build_vocab(corpus, config.min_count);
  const auto& vocab = result.vocab;
  const NoiseTable noise(vocab);

  const auto rows = static_cast<Eigen::Index>(vocab.size());
  const auto cols = static_cast<Eigen::Index>(config.dim);
  std::vector<std::string> labels;
  labels.reserve(vocab.size());
  for (NodeId n : vocab.nodes) {
    if (n >= node_labels.size())
      throw DataError("corpus node " + std::to_string(n) + " has no label");
    labels.push_back(node_labels[n]);
  }

  RowMatrixXd center(rows, cols);
  Rng init_rng(derive_seed(config.seed, kInitStream));
  const double half = 0.5 / static_cast<double>(config.dim);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) center(i, j) = (init_rng.uniform() * 2.0 - 1.0) * half;
  result.model = EmbeddingMatrix(std::move(labels), std::move(center), RowMatrixXd::Zero(rows, cols));

  const auto sentences = to_sentences(corpus, vocab);
  const std::uint64_t per_epoch = count_window_pairs(sentences, config.window);
  const std::uint64_t total_pairs = std::max<std::uint64_t>(1, per_epoch * config.epochs);
  std::atomic<std::uint64_t> processed{0};
  const EpochRunner runner(sentences, noise, config, result.model, total_pairs, processed);

  const std::size_t workers =
      config.deterministic ? 1 : std::clamp<std::size_t>(config.workers, 1, std::max<std::size_t>(1, sentences.size()));
  Rng rng(derive_seed(config.seed, kTrainStream));

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ShardResult total;
    if (workers == 1) {
      total = runner.run(0, sentences.size(), rng);
    } else {
      // Lock-free shared updates: shards may race on common rows.
      std::vector<ShardResult> shards(workers);
      {
        std::vector<std::jthread> threads;
        const std::size_t chunk = (sentences.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
          threads.emplace_back([&, w] {
            Rng shard_rng(derive_seed(config.seed, kTrainStream + 1 + epoch, w));
            const std::size_t begin = std::min(sentences.size(), w * chunk);
            const std::size_t end = std::min(sentences.size(), begin + chunk);
            shards[w] = runner.run(begin, end, shard_rng);
          });
        }
      }
      for (const auto& s : shards) {
        total.loss += s.loss;
        total.pairs += s.pairs;
        total.skipped += s.skipped;
      }
    }
    result.stats.pairs_trained += total.pairs;
    result.stats.negatives_skipped += total.skipped;
    result.stats.epoch_loss.push_back(total.pairs ? total.loss / static_cast<double>(total.pairs) : 0.0);
  }
  return result;
}

double mean_loss(const EmbeddingMatrix& model, const Vocabulary& vocab, const WalkCorpus& corpus,
                 const TrainConfig& config, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw DataError("mean_loss needs at least one sample");
  if (!model.has_context()) throw DataError("mean_loss needs context vectors");
  const auto sentences = to_sentences(corpus, vocab);
  if (count_window_pairs(sentences, config.window) == 0)
    throw DataError("corpus has no (center, context) pairs to sample");

  const NoiseTable noise(vocab);
  Rng rng(seed);
  std::vector<VocabIndex> negatives;
  double loss = 0.0;
  std::size_t drawn = 0;
  while (drawn < samples) {
    const auto& s = sentences[rng.below(sentences.size())];
    if (s.size() < 2) continue;
    const std::size_t t = rng.below(s.size());
    const std::size_t lo = t >= config.window ? t - config.window : 0;
    const std::size_t hi = std::min(s.size() - 1, t + config.window);
    std::size_t o = lo + rng.below(hi - lo);  // hi - lo >= 1 offsets besides t
    if (o >= t) ++o;
    draw_negatives(noise, s[o], config.negatives, rng, negatives);
    loss += pair_loss(model, s[t], s[o], negatives);
    ++drawn;
  }
  return loss / static_cast<double>(samples);
}

}  // namespace kgc
