#include "kgc/similarity.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace kgc;

namespace {

// Row i labelled by `labels[i]`.
EmbeddingMatrix model_of(std::vector<std::string> labels, const std::vector<std::vector<double>>& rows) {
  RowMatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return EmbeddingMatrix(std::move(labels), std::move(m));
}

// Source "s" at (1,0); targets at angles whose cosines are 0.9, 0.5, 0.1.
EmbeddingMatrix engineered() {
  auto at = [](double c) { return std::vector<double>{c, std::sqrt(1.0 - c * c)}; };
  return model_of({"s", "hi", "mid", "lo"}, {{1.0, 0.0}, at(0.9), at(0.5), at(0.1)});
}

double plain_cosine(const EmbeddingMatrix& m, std::size_t a, std::size_t b) {
  double dot = 0, na = 0, nb = 0;
  for (Eigen::Index j = 0; j < m.center.cols(); ++j) {
    const double x = m.center(static_cast<Eigen::Index>(a), j);
    const double y = m.center(static_cast<Eigen::Index>(b), j);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return dot / std::sqrt(na * nb);
}

// Small-integer vectors so that many cosines tie exactly.
EmbeddingMatrix lattice_model(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back("t" + std::to_string((i * 7919) % n));
    std::vector<double> v(3);
    do {
      for (auto& x : v) x = static_cast<double>(rng.below(5)) - 2.0;
    } while (v[0] == 0 && v[1] == 0 && v[2] == 0);
    rows.push_back(v);
  }
  return model_of(std::move(labels), rows);
}

}  // namespace

TEST_CASE("cosine examples") {
  Eigen::Vector2d a(1, 2), b(3, 4);
  CHECK(cosine(a, b) == doctest::Approx(11.0 / (std::sqrt(5.0) * 5.0)));
  CHECK(cosine(a, b) == cosine(b, a));
  CHECK(cosine(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
  CHECK(cosine(Eigen::Vector2d(1, 0), Eigen::Vector2d(-3, 0)) == -1.0);

  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd v(1 + rng.below(40));
    for (auto& x : v) x = rng.uniform() * 2e3 - 1e3;
    CHECK(std::abs(cosine(v, v) - 1.0) <= 1e-12);
    CHECK(cosine(v, v) <= 1.0);
  }
  Eigen::VectorXf f(3);
  f << 1, 1, 0;
  CHECK(cosine(f, f) == 1.0f);
}

TEST_CASE("cosine errors") {
  CHECK_THROWS_WITH_AS(cosine(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0)),
                       doctest::Contains("undefined similarity"), DataError);
  CHECK_THROWS_AS(cosine(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3)), ConfigError);
}

TEST_CASE("rank_targets on engineered scores") {
  const auto m = engineered();
  const std::vector<std::string> cands{"lo", "hi", "mid"};
  const auto r = rank_targets(m, "s", cands, 3);
  REQUIRE(r.entries.size() == 3);
  CHECK(r.entries[0].target == "hi");
  CHECK(r.entries[0].score == doctest::Approx(0.9));
  CHECK(r.entries[1].target == "mid");
  CHECK(r.entries[1].score == doctest::Approx(0.5));
  CHECK(r.entries[2].target == "lo");
  CHECK(r.entries[2].score == doctest::Approx(0.1));
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.entries[i].rank == i + 1);

  CHECK(rank_targets(m, "s", cands, 1).entries.size() == 1);
  CHECK(rank_targets(m, "s", cands, 50).entries.size() == 3);
}

TEST_CASE("rank_targets skips, excludes the source, and reports errors") {
  const auto m = engineered();
  const std::vector<std::string> cands{"s", "hi", "ghost"};
  const auto r = rank_targets(m, "s", cands, 5);
  REQUIRE(r.entries.size() == 1);
  CHECK(r.entries[0].target == "hi");
  CHECK(r.skipped == 1);

  CHECK_THROWS_WITH_AS(rank_targets(m, "nobody", cands, 5), doctest::Contains("nobody"), DataError);
  const std::vector<std::string> none{"ghost"};
  CHECK_THROWS_AS(rank_targets(m, "s", none, 5), DataError);
  CHECK_THROWS_AS(rank_targets(m, "s", cands, 0), ConfigError);
}

TEST_CASE("heap selection and full sort agree with a brute-force oracle") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto m = lattice_model(400, seed);
    const std::vector<std::string> cands(m.labels.begin(), m.labels.end());
    for (std::size_t src : {0u, 17u, 399u}) {
      std::vector<double> oracle;
      for (std::size_t i = 0; i < m.size(); ++i)
        if (i != src) oracle.push_back(std::clamp(plain_cosine(m, src, i), -1.0, 1.0));
      std::sort(oracle.rbegin(), oracle.rend());
      // n = 399: K <= 39 goes through the heap, larger K through the sort.
      const auto full = rank_targets(m, m.labels[src], cands, 500);
      REQUIRE(full.entries.size() == oracle.size());
      for (std::size_t i = 0; i < oracle.size(); ++i) {
        CHECK(std::abs(full.entries[i].score - oracle[i]) <= 1e-12);
        if (i) {
          const auto& a = full.entries[i - 1];
          const auto& b = full.entries[i];
          CHECK(ranks_before(a.score, a.target, b.score, b.target));
        }
      }
      for (std::size_t k : {1u, 5u, 39u, 40u, 60u}) {
        const auto r = rank_targets(m, m.labels[src], cands, k);
        REQUIRE(r.entries.size() == k);
        for (std::size_t i = 0; i < k; ++i) {
          CHECK(r.entries[i].target == full.entries[i].target);
          CHECK(r.entries[i].score == full.entries[i].score);
          CHECK(r.entries[i].rank == i + 1);
        }
      }
    }
  }
}

TEST_CASE("equal scores are ordered by label") {
  std::vector<std::string> labels{"s"};
  std::vector<std::vector<double>> rows{{1.0, 0.0}};
  for (int i = 29; i >= 0; --i) {
    labels.push_back("x" + std::to_string(i));
    rows.push_back(i % 2 ? std::vector<double>{0.5, 0.5} : std::vector<double>{0.5, -0.5});
  }
  const auto m = model_of(labels, rows);
  const std::vector<std::string> cands(labels.begin() + 1, labels.end());
  for (std::size_t k : {2u, 30u}) {
    const auto r = rank_targets(m, "s", cands, k);
    std::vector<std::string> expected;
    for (const auto& l : cands) expected.push_back(l);
    std::sort(expected.begin(), expected.end());
    expected.resize(k);
    std::vector<std::string> got;
    for (const auto& e : r.entries) got.push_back(e.target);
    CHECK(got == expected);
  }
}

TEST_CASE("ranking is invariant to positive rescaling") {
  auto m = lattice_model(120, 9);
  Rng rng(4);
  const std::vector<std::string> cands(m.labels.begin(), m.labels.end());
  std::vector<std::vector<std::string>> before;
  for (std::size_t src = 0; src < 10; ++src) {
    std::vector<std::string> order;
    for (const auto& e : rank_targets(m, m.labels[src], cands, 30).entries) order.push_back(e.target);
    before.push_back(order);
  }
  for (Eigen::Index i = 0; i < m.center.rows(); ++i) m.center.row(i) *= std::pow(2.0, 1 + static_cast<double>(rng.below(10)));
  for (std::size_t src = 0; src < 10; ++src) {
    std::vector<std::string> order;
    for (const auto& e : rank_targets(m, m.labels[src], cands, 30).entries) order.push_back(e.target);
    CHECK(order == before[src]);
  }
}

TEST_CASE("predict_topk on engineered scores") {
  const auto m = engineered();
  LabeledPairSet pairs;
  pairs.add("s", "hi", 1);
  pairs.add("s", "mid", 0);
  pairs.add("s", "lo", 1);
  const auto out = predict_topk(m, pairs, 1);
  REQUIRE(out.predictions.size() == 3);
  std::size_t tp = 0, tn = 0, fn = 0, fp = 0;
  for (const auto& p : out.predictions) {
    const int label = *pairs.find_label(p.source, p.target);
    if (p.predicted) (label ? tp : fp) += 1;
    else (label ? fn : tn) += 1;
  }
  CHECK(tp == 1);
  CHECK(tn == 1);
  CHECK(fn == 1);
  CHECK(fp == 0);

  for (const auto& p : predict_topk(m, pairs, 3).predictions) CHECK(p.predicted);
  for (const auto& p : predict_topk(m, pairs, 100).predictions) CHECK(p.predicted);
  CHECK_THROWS_AS(predict_topk(m, pairs, 0), ConfigError);
  CHECK_THROWS_AS(predict_topk(m, LabeledPairSet{}, 1), DataError);
}

TEST_CASE("predict_topk skips pairs outside the vocabulary") {
  const auto m = engineered();
  LabeledPairSet pairs;
  pairs.add("s", "hi", 1);
  pairs.add("s", "ghost", 1);
  pairs.add("ghost", "hi", 0);
  const auto out = predict_topk(m, pairs, 1);
  CHECK(out.predictions.size() == 1);
  CHECK(out.skipped.size() == 2);
}

TEST_CASE("positive predictions grow with K") {
  const auto m = lattice_model(60, 12);
  Rng rng(6);
  LabeledPairSet pairs;
  for (int i = 0; i < 300; ++i) {
    const auto s = m.labels[rng.below(6)];
    const auto t = m.labels[6 + rng.below(54)];
    pairs.add(s, t, static_cast<int>(fnv1a(s + t) & 1));
  }
  std::set<std::pair<std::string, std::string>> prev;
  for (std::size_t k = 1; k <= 60; ++k) {
    std::set<std::pair<std::string, std::string>> cur;
    for (const auto& p : predict_topk(m, pairs, k).predictions)
      if (p.predicted) cur.emplace(p.source, p.target);
    CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
    prev = std::move(cur);
  }
  const auto a = predict_topk(m, pairs, 7);
  const auto b = predict_topk(m, pairs, 7);
  REQUIRE(a.predictions.size() == b.predictions.size());
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    CHECK(a.predictions[i].target == b.predictions[i].target);
    CHECK(a.predictions[i].rank == b.predictions[i].rank);
  }
}

TEST_CASE("per-source K") {
  const auto m = engineered();
  LabeledPairSet pairs;
  pairs.add("s", "hi", 1);
  pairs.add("s", "mid", 1);
  pairs.add("s", "lo", 0);
  const auto out = predict_topk(m, pairs, [](const std::string&) { return std::size_t{2}; });
  for (const auto& p : out.predictions) CHECK(p.predicted == (p.target != "lo"));
}

TEST_CASE("CSV output") {
  const auto m = engineered();
  const std::vector<std::string> cands{"hi", "mid"};
  std::ostringstream r;
  write_ranking_csv(rank_targets(m, "s", cands, 2), r);
  CHECK(r.str().rfind("target,score\nhi,0.9", 0) == 0);

  LabeledPairSet pairs;
  pairs.add("s", "mid", 0);
  std::ostringstream p;
  write_predictions_csv(predict_topk(m, pairs, 1), p);
  CHECK(p.str().rfind("source,target,score,rank,predicted_label\ns,mid,0.5", 0) == 0);
  CHECK(p.str().substr(p.str().size() - 5) == ",1,1\n");
}
