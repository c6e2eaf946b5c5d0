#include "kgc/baseline.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace kgc;
using kgc::testing::make_graph;

namespace {

// Typed bipartite-ish graph: compounds c0..c9, genes g0..g14, two relations.
HeteroGraph drug_graph() {
  GraphBuilder b;
  for (int i = 0; i < 10; ++i) b.add_node("c" + std::to_string(i), "compound");
  for (int i = 0; i < 15; ++i) b.add_node("g" + std::to_string(i), "gene");
  Rng rng(3);
  for (NodeId c = 0; c < 10; ++c)
    for (int k = 0; k < 3; ++k) b.add_edge(c, static_cast<NodeId>(10 + rng.below(15)), "binds");
  for (NodeId g = 10; g < 24; ++g) b.add_edge(g, g + 1, "interacts");
  return std::move(b).finish();
}

double reference_loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                      double b, double l2) {
  double total = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(x.row(i).dot(w) + b)));
    total -= y(i) > 0.5 ? std::log(p) : std::log(1.0 - p);
  }
  return total / static_cast<double>(x.rows()) + 0.5 * l2 * w.squaredNorm();
}

}  // namespace

TEST_CASE("pair feature maps") {
  Eigen::Vector2d a(1, 2), b(3, 4);
  CHECK(hadamard(a, b) == Eigen::Vector2d(3, 8));
  CHECK(hadamard(a, Eigen::Vector2d::Zero()).isZero(0.0));
  Eigen::VectorXd ab(4);
  ab << 1, 2, 3, 4;
  CHECK(concat(a, b) == ab);

  RowMatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  const EmbeddingMatrix model({"a", "b"}, m);
  CHECK(pair_features(model, "a", "b", FeatureMode::hadamard) == Eigen::Vector2d(3, 8));
  CHECK(pair_features(model, "a", "b", FeatureMode::concat) == ab);
  CHECK_THROWS_WITH_AS(pair_features(model, "a", "zz", FeatureMode::hadamard), doctest::Contains("zz"),
                       DataError);

  CHECK(parse_feature_mode(to_string(FeatureMode::concat)) == FeatureMode::concat);
  CHECK_THROWS_AS(parse_feature_mode("sum"), ConfigError);
}

TEST_CASE("feature tables skip pairs without embeddings") {
  RowMatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const EmbeddingMatrix model({"a", "b"}, m);
  LabeledPairSet pairs;
  pairs.add("a", "b", 1);
  pairs.add("a", "x", 0);
  pairs.add("b", "a", 0);
  const auto t = build_features(model, pairs, FeatureMode::concat);
  CHECK(t.features.rows() == 2);
  CHECK(t.features.cols() == 6);
  CHECK(t.labels == Eigen::Vector2d(1, 0));
  CHECK(t.skipped.size() == 1);
  CHECK(t.features.row(1) == (Eigen::RowVectorXd(6) << 4, 5, 6, 1, 2, 3).finished());
}

TEST_CASE("sampling training links") {
  const auto g = drug_graph();
  const RelationFilter filter{g.types().edge_type("binds"), g.types().node_type("compound"),
                              g.types().node_type("gene")};
  const std::size_t available = count_matching_edges(g, filter);
  REQUIRE(available >= 20);

  Rng rng(11);
  CHECK(sample_training_links(g, filter, 0, 0, rng).empty());

  const auto set = sample_training_links(g, filter, 20, 25, rng);
  CHECK(set.positives() == 20);
  CHECK(set.negatives() == 25);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& p : set.pairs()) {
    const NodeId u = *g.find_node(p.source);
    const NodeId v = *g.find_node(p.target);
    CHECK(g.node_type(u) == *filter.source_type);
    CHECK(g.node_type(v) == *filter.target_type);
    CHECK(g.has_edge(u, v) == (p.label == 1));
    CHECK(seen.emplace(p.source, p.target).second);
  }

  Rng r1(5), r2(5);
  const auto a = sample_training_links(g, filter, 10, 10, r1);
  const auto b = sample_training_links(g, filter, 10, 10, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.pairs()[i].target == b.pairs()[i].target);

  CHECK_THROWS_WITH_AS(sample_training_links(g, filter, available + 1, 0, rng),
                       doctest::Contains("insufficient edges"), DataError);
}

TEST_CASE("negatives inherit types from positives without a typed filter") {
  const auto g = drug_graph();
  const RelationFilter filter{g.types().edge_type("binds"), std::nullopt, std::nullopt};
  Rng rng(2);
  const auto set = sample_training_links(g, filter, 10, 30, rng);
  const TypeId compound = g.types().node_type("compound");
  const TypeId gene = g.types().node_type("gene");
  for (const auto& p : set.pairs()) {
    if (p.label == 1) continue;
    const auto tu = g.node_type(*g.find_node(p.source));
    const auto tv = g.node_type(*g.find_node(p.target));
    CHECK(((tu == compound && tv == gene) || (tu == gene && tv == compound)));
  }
}

TEST_CASE("excluded pairs are never sampled") {
  const auto g = drug_graph();
  const RelationFilter filter{g.types().edge_type("binds"), g.types().node_type("compound"),
                              g.types().node_type("gene")};
  LabeledPairSet exclude;
  const auto& first = g.edges().front();
  exclude.add(g.node_uri(first.target), g.node_uri(first.source), 1);
  exclude.add("c0", "g0", 0);
  exclude.add("c1", "g1", 0);
  CHECK(count_matching_edges(g, filter, &exclude) == count_matching_edges(g, filter) - 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto set = sample_training_links(g, filter, 10, 40, rng, &exclude);
    for (const auto& p : set.pairs()) {
      CHECK_FALSE(exclude.contains(p.source, p.target));
      CHECK_FALSE(exclude.contains(p.target, p.source));
    }
  }
}

TEST_CASE("a path graph has no type-compatible non-edges") {
  // a:compound - b:gene - c:compound; both compound-gene pairs are edges.
  const auto g = make_graph(3, {{0, 1}, {1, 2}}, {"compound", "gene", "compound"});
  const RelationFilter filter{std::nullopt, g.types().node_type("compound"), g.types().node_type("gene")};
  Rng rng(1);
  CHECK(sample_training_links(g, filter, 2, 0, rng).size() == 2);
  CHECK_THROWS_WITH_AS(sample_training_links(g, filter, 0, 1, rng), doctest::Contains("graph too dense"),
                       DataError);
}

TEST_CASE("logistic loss and gradient") {
  Rng rng(17);
  Eigen::MatrixXd x(30, 5);
  Eigen::VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = rng.uniform() * 4 - 2;
    y(i) = static_cast<double>(rng.below(2));
  }
  CHECK(logreg_loss(x, y, Eigen::VectorXd::Zero(5), 0.0, 1e-4) == doctest::Approx(std::log(2.0)));

  const double h = 1e-6;
  double worst = 0;
  for (int point = 0; point < 20; ++point) {
    Eigen::VectorXd w(5);
    for (auto& v : w) v = rng.uniform() * 2 - 1;
    double b = rng.uniform() * 2 - 1;
    const double l2 = point % 2 ? 1e-4 : 0.5;
    CHECK(logreg_loss(x, y, w, b, l2) == doctest::Approx(reference_loss(x, y, w, b, l2)).epsilon(1e-12));

    Eigen::VectorXd gw;
    double gb = 0;
    logreg_gradient(x, y, w, b, l2, gw, gb);
    auto rel = [](double a, double fd) { return std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-2}); };
    for (Eigen::Index j = 0; j < 5; ++j) {
      Eigen::VectorXd up = w, down = w;
      up(j) += h;
      down(j) -= h;
      const double fd = (reference_loss(x, y, up, b, l2) - reference_loss(x, y, down, b, l2)) / (2 * h);
      worst = std::max(worst, rel(gw(j), fd));
    }
    const double fd_b = (reference_loss(x, y, w, b + h, l2) - reference_loss(x, y, w, b - h, l2)) / (2 * h);
    worst = std::max(worst, rel(gb, fd_b));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("fit_logreg") {
  SUBCASE("two separable points") {
    Eigen::MatrixXd x(2, 1);
    x << -1, 1;
    const Eigen::Vector2d y(0, 1);
    const auto m = fit_logreg(x, y);
    CHECK(m.loss_trace.front() == doctest::Approx(std::log(2.0)));
    CHECK(m.weights(0) > 0.0);
    CHECK_FALSE(predict_logreg(m, x.row(0).transpose()).label);
    CHECK(predict_logreg(m, x.row(1).transpose()).label);
  }
  SUBCASE("loss trace never increases") {
    Rng rng(4);
    Eigen::MatrixXd x(200, 6);
    Eigen::VectorXd y(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      for (Eigen::Index j = 0; j < 6; ++j) x(i, j) = rng.uniform() * 2 - 1;
      y(i) = x(i, 0) + 0.5 * x(i, 1) + 0.3 * (rng.uniform() - 0.5) > 0 ? 1 : 0;
    }
    LogRegOptions opts;
    opts.learning_rate = 50.0;  // forces step halving
    const auto m = fit_logreg(x, y, opts);
    REQUIRE(m.loss_trace.size() >= 2);
    for (std::size_t i = 1; i < m.loss_trace.size(); ++i) CHECK(m.loss_trace[i] <= m.loss_trace[i - 1]);
    CHECK(m.final_loss == m.loss_trace.back());
    CHECK(m.weights.allFinite());
    CHECK(m.final_loss < std::log(2.0));

    const auto again = fit_logreg(x, y, opts);
    CHECK(again.weights == m.weights);
    CHECK(again.bias == m.bias);
  }
  SUBCASE("errors") {
    Eigen::MatrixXd x(2, 1);
    x << -1, 1;
    CHECK_THROWS_AS(fit_logreg(x, Eigen::Vector2d(1, 1)), DataError);
    CHECK_THROWS_AS(fit_logreg(x, Eigen::Vector2d(0, 0)), DataError);
    CHECK_THROWS_AS(fit_logreg(x, Eigen::Vector3d(0, 1, 0)), ConfigError);
  }
}

TEST_CASE("predict_logreg") {
  LogRegModel zero;
  zero.weights = Eigen::VectorXd::Zero(3);
  const auto p = predict_logreg(zero, Eigen::Vector3d(1, 2, 3));
  CHECK(p.probability == 0.5);
  CHECK(p.label);

  LogRegModel one;
  one.weights = Eigen::VectorXd::Ones(1);
  const auto q = predict_logreg(one, Eigen::VectorXd::Constant(1, 30.0));
  CHECK(q.probability == doctest::Approx(1.0));
  CHECK(q.label);
  CHECK_FALSE(predict_logreg(one, Eigen::VectorXd::Constant(1, -1e-300)).label);
  CHECK_THROWS_AS(predict_logreg(one, Eigen::Vector2d(1, 1)), ConfigError);

  // Probability order equals margin order.
  LogRegModel m;
  m.weights = Eigen::Vector2d(0.7, -1.3);
  m.bias = 0.2;
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    Eigen::Vector2d a(rng.uniform() * 10 - 5, rng.uniform() * 10 - 5);
    Eigen::Vector2d b(rng.uniform() * 10 - 5, rng.uniform() * 10 - 5);
    const double ma = m.weights.dot(a) + m.bias;
    const double mb = m.weights.dot(b) + m.bias;
    const auto pa = predict_logreg(m, a);
    const auto pb = predict_logreg(m, b);
    if (ma < mb) CHECK(pa.probability <= pb.probability);
    CHECK(pa.label == (ma >= 0));
  }
}

TEST_CASE("logistic model persistence") {
  LogRegModel m;
  m.weights = Eigen::Vector3d(0.1, -2.5e-7, 1.0 / 3.0);
  m.bias = -0.7;
  std::stringstream s;
  save_logreg(m, s);
  CHECK(s.str().rfind("kgc-logreg 1\ndim 3\n", 0) == 0);
  const auto back = load_logreg(s);
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);

  std::istringstream wrong("kgc-logreg 2\ndim 1\nbias 0\n0\n");
  CHECK_THROWS_WITH_AS(load_logreg(wrong), doctest::Contains("version"), DataError);
  std::istringstream truncated("kgc-logreg 1\ndim 3\nbias 0\n0.5\n");
  CHECK_THROWS_AS(load_logreg(truncated), DataError);
}
