#include "kgc/pipeline.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace kgc;
using kgc::testing::data_path;
using kgc::testing::read_file;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "kgc_test_pipeline" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

PipelineConfig apicidin_config(const fs::path& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> overrides{
      "paths.triples=\"" + data_path("apicidin.nt") + "\"",
      "paths.output_dir=\"" + dir.string() + "\"",
      "train.epochs=2",
  };
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  return PipelineConfig::from_json(nullptr, overrides);
}

// Compounds c0..c7 and genes g0..g39 in four clusters; compounds bind the
// genes of their own cluster, genes in a cluster interact in a ring.
std::string cluster_triples() {
  std::ostringstream t;
  const std::string ns = "http://ex.org/";
  for (int c = 0; c < 8; ++c)
    for (int k = 0; k < 10; k += 2 - c % 2) {
      const int g = (c / 2) * 10 + (k + c) % 10;
      t << ns << "compound/c" << c << '\t' << ns << "binds\t" << ns << "gene/g" << g << '\n';
    }
  for (int g = 0; g < 40; ++g) {
    const int next = (g / 10) * 10 + (g + 1) % 10;
    t << ns << "gene/g" << g << '\t' << ns << "interacts\t" << ns << "gene/g" << next << '\n';
  }
  return t.str();
}

std::string cluster_test_set() {
  std::ostringstream t;
  const std::string ns = "http://ex.org/";
  t << "source,target,label\n";
  for (int c = 0; c < 8; ++c) {
    t << ns << "compound/c" << c << ',' << ns << "gene/g" << (c / 2) * 10 + 9 << ",1\n";
    t << ns << "compound/c" << c << ',' << ns << "gene/g" << ((c / 2 + 1) % 4) * 10 + 3 << ",0\n";
    t << ns << "compound/c" << c << ',' << ns << "gene/g" << ((c / 2 + 2) % 4) * 10 + 5 << ",0\n";
  }
  return t.str();
}

PipelineConfig cluster_config(const fs::path& dir, std::vector<std::string> extra = {}) {
  write_text(dir / "triples.tsv", cluster_triples());
  write_text(dir / "test.csv", cluster_test_set());
  std::vector<std::string> overrides{
      "paths.triples=\"" + (dir / "triples.tsv").string() + "\"",
      "paths.output_dir=\"" + (dir / "out").string() + "\"",
      "paths.test_sets=[\"" + (dir / "test.csv").string() + "\"]",
      "train.dim=16",
      "train.epochs=3",
      "eval.k=[1,2,3]",
      "eval.baseline.source_type=compound",
      "eval.baseline.target_type=gene",
      "eval.baseline.edge_type=\"http://ex.org/binds\"",
  };
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  return PipelineConfig::from_json(nullptr, overrides);
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto d = PipelineConfig::from_json(nullptr);
  CHECK(d.seed == 42);
  CHECK(d.walk.walk_length == 20);
  CHECK(d.walk.walks_per_node == 10);
  CHECK(d.train.dim == 128);
  CHECK(d.ks == std::vector<std::size_t>{10, 50, 100});
  CHECK(d.strategies == std::vector<WalkStrategy>{WalkStrategy::node2vec});
  CHECK(d.feature_mode == FeatureMode::hadamard);

  const auto c = PipelineConfig::from_json(
      nlohmann::json{{"seed", 7}, {"walk", {{"strategy", {"uniform", "edge2vec"}}}}},
      {"walk.p=0.5", "train.dim=64", "eval.feature_mode=concat", "seed=9"});
  CHECK(c.seed == 9);
  CHECK(c.walk.seed == 9);
  CHECK(c.train.seed == 9);
  CHECK(c.walk.p == 0.5);
  CHECK(c.train.dim == 64);
  CHECK(c.feature_mode == FeatureMode::concat);
  CHECK(c.strategies == std::vector<WalkStrategy>{WalkStrategy::uniform, WalkStrategy::edge2vec});
  CHECK(c.document["train"]["dim"] == 64);

  CHECK_THROWS_AS(PipelineConfig::from_json(nullptr, {"no-equals"}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nullptr, {"walk.strategy=line"}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nullptr, {"train.dim=\"big\""}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nullptr, {"eval.k=[0]"}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(nlohmann::json::array()), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::load("/nonexistent/run.json"), ConfigError);
}

TEST_CASE("config file on disk") {
  const auto dir = fresh_dir("config_file");
  write_text(dir / "run.json", R"({"walk": {"walks_per_node": 3}, "eval": {"k": [5]}})");
  const auto c = PipelineConfig::load(dir / "run.json", {"walk.q=2"});
  CHECK(c.walk.walks_per_node == 3);
  CHECK(c.walk.q == 2.0);
  CHECK(c.ks == std::vector<std::size_t>{5});
  write_text(dir / "bad.json", "{ nope");
  CHECK_THROWS_AS(PipelineConfig::load(dir / "bad.json"), ConfigError);
}

TEST_CASE("ingest the Apicidin fixture") {
  const auto dir = fresh_dir("ingest");
  const auto config = apicidin_config(dir);
  std::ostringstream log;
  cmd_ingest(config, log);
  const auto report = read_file(dir / "ingest_report.txt");
  CHECK(report.find("nodes: 16\n") != std::string::npos);
  CHECK(report.find("edges: 15\n") != std::string::npos);
  CHECK(report.find("  gene: 15\n") != std::string::npos);
  CHECK(report.find("  pubchem_compound: 1\n") != std::string::npos);

  const auto first = read_file(config.graph_cache());
  cmd_ingest(config, log);
  CHECK(read_file(config.graph_cache()) == first);

  std::ostringstream inspect;
  cmd_inspect(config, {}, inspect);
  CHECK(inspect.str().find("max degree: 15") != std::string::npos);
}

TEST_CASE("ingest errors") {
  const auto dir = fresh_dir("ingest_errors");
  write_text(dir / "empty.nt", "");
  std::ostringstream log;
  auto config = apicidin_config(dir, {"paths.triples=\"" + (dir / "empty.nt").string() + "\""});
  CHECK_THROWS_AS(cmd_ingest(config, log), DataError);

  write_text(dir / "broken.nt", "<a> <b> <c> .\n<a> <b>\n");
  config = apicidin_config(dir, {"paths.triples=\"" + (dir / "broken.nt").string() + "\""});
  CHECK_THROWS_WITH_AS(cmd_ingest(config, log), doctest::Contains("line 2"), ParseError);

  config = apicidin_config(dir, {"paths.triples=\"" + (dir / "missing.nt").string() + "\""});
  CHECK_THROWS_AS(cmd_ingest(config, log), ConfigError);

  CHECK_THROWS_WITH_AS(cmd_walk(apicidin_config(dir / "nowhere"), log), doctest::Contains("kgc ingest"),
                       ConfigError);
}

TEST_CASE("train writes embeddings, corpus and manifest") {
  const auto dir = fresh_dir("train");
  const auto config = apicidin_config(dir);
  std::ostringstream log;
  cmd_ingest(config, log);
  cmd_train(config, log);

  const auto sdir = config.strategy_dir(WalkStrategy::node2vec);
  const auto text = read_file(sdir / "embeddings.txt");
  CHECK(text.rfind("16 128\n", 0) == 0);
  const auto bin = read_file(sdir / "embeddings.bin");
  const auto manifest = nlohmann::json::parse(read_file(sdir / "manifest.json"));
  CHECK(manifest["strategy"] == "node2vec");
  CHECK(manifest["seed"] == 42);
  CHECK(manifest["loss_trace"].size() == 2);
  CHECK(manifest["config"]["train"]["epochs"] == 2);
  CHECK(read_file(sdir / "corpus.txt").rfind("# strategy=node2vec seed=42", 0) == 0);

  cmd_train(config, log);
  CHECK(read_file(sdir / "embeddings.bin") == bin);

  std::ostringstream inspect;
  cmd_inspect(config, sdir / "embeddings.bin", inspect);
  CHECK(inspect.str().find("dim: 128") != std::string::npos);
  CHECK_THROWS_AS(cmd_inspect(config, sdir / "corpus.txt", inspect), DataError);
}

TEST_CASE("metapath training") {
  const auto dir = fresh_dir("metapath");
  std::ostringstream log;
  auto config = apicidin_config(dir, {"walk.strategy=metapath", "paths.metapath=\"" + data_path("metapath.txt") + "\""});
  cmd_ingest(config, log);
  cmd_train(config, log);
  CHECK(fs::exists(config.strategy_dir(WalkStrategy::metapath) / "embeddings.bin"));

  auto absent = apicidin_config(dir, {"walk.strategy=metapath", "walk.metapath=[\"protein\",\"gene\",\"protein\"]"});
  CHECK_THROWS_WITH_AS(cmd_train(absent, log), doctest::Contains("protein"), ConfigError);
  CHECK_THROWS_WITH_AS(cmd_train(absent, log), doctest::Contains("[metapath]"), ConfigError);

  auto unset = apicidin_config(dir, {"walk.strategy=metapath"});
  CHECK_THROWS_AS(cmd_train(unset, log), ConfigError);
}

TEST_CASE("rank queries") {
  const auto dir = fresh_dir("rank");
  const auto config = apicidin_config(dir, {"eval.rank_target_type=gene"});
  std::ostringstream log;
  cmd_ingest(config, log);
  cmd_train(config, log);
  const std::string source = "http://chem2bio2rdf.org/pubchem/resource/pubchem_compound/467801";

  const auto path = cmd_rank(config, source, 20, std::nullopt, {}, log);
  CHECK(path.filename() == "rank_top20.csv");
  std::istringstream rows(read_file(path));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "target,score");
  double prev = 2.0;
  std::size_t n = 0;
  while (std::getline(rows, line)) {
    const auto comma = line.rfind(',');
    CHECK(line.find("/gene/") != std::string::npos);
    const double score = std::stod(line.substr(comma + 1));
    CHECK(score <= prev);
    CHECK(score >= -1.0);
    prev = score;
    ++n;
  }
  CHECK(n == 15);  // fewer candidates than K

  const auto first = read_file(path);
  cmd_rank(config, source, 20, WalkStrategy::node2vec, {}, log);
  CHECK(read_file(path) == first);

  const auto small = cmd_rank(config, source, 3, std::nullopt, dir / "top3.csv", log);
  CHECK(small == dir / "top3.csv");
  const auto small_text = read_file(small);
  CHECK(std::count(small_text.begin(), small_text.end(), '\n') == 4);

  try {
    cmd_rank(config, "http://chem2bio2rdf.org/pubchem/resource/pubchem_compound/4678", 5, std::nullopt, {}, log);
    FAIL("expected an unknown-URI error");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("unknown source URI") != std::string::npos);
    CHECK(what.find(source) != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_rank(config, source, 5, WalkStrategy::edge2vec, {}, log), ConfigError);
}

TEST_CASE("nearest_by_prefix") {
  RowMatrixXd m = RowMatrixXd::Ones(4, 2);
  const EmbeddingMatrix model({"gene/HDAC1", "gene/HDAC10", "gene/F3", "compound/1"}, m);
  const auto near = nearest_by_prefix(model, "gene/HDAC1x", 2);
  CHECK(near == std::vector<std::string>{"gene/HDAC1", "gene/HDAC10"});
}

TEST_CASE("evaluate end to end") {
  const auto dir = fresh_dir("evaluate");
  const auto config = cluster_config(dir, {"walk.strategy=[\"node2vec\",\"uniform\"]"});
  std::ostringstream log;
  cmd_ingest(config, log);
  cmd_train(config, log);
  cmd_evaluate(config, log);

  const auto out = dir / "out";
  const auto csv = read_file(out / "report_test.csv");
  std::istringstream lines(csv);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 1 + 2 * 4);
  CHECK(rows[1].rfind("node2vec,logreg,hadamard,", 0) == 0);
  CHECK(rows[2].rfind("node2vec,topK@1,", 0) == 0);
  CHECK(rows[5].rfind("uniform,logreg,", 0) == 0);
  CHECK(fs::exists(out / "report_test.txt"));
  CHECK(fs::exists(out / "node2vec" / "baseline.logreg"));
  CHECK(fs::exists(out / "node2vec" / "predictions_test_k2.csv"));

  // Test pairs never leak into the baseline's training links.
  std::ifstream test_in(dir / "test.csv");
  const auto test = load_labeled_pairs(test_in);
  std::ifstream links_in(out / "node2vec" / "training_links.csv");
  const auto links = load_labeled_pairs(links_in);
  CHECK(links.positives() > 0);
  CHECK(links.negatives() > 0);
  for (const auto& p : links.pairs()) {
    CHECK_FALSE(test.contains(p.source, p.target));
    CHECK_FALSE(test.contains(p.target, p.source));
  }

  const auto table = read_file(out / "report_test.txt");
  cmd_evaluate(config, log);
  CHECK(read_file(out / "report_test.csv") == csv);
  CHECK(read_file(out / "report_test.txt") == table);
}

TEST_CASE("evaluate errors") {
  const auto dir = fresh_dir("evaluate_errors");
  auto config = cluster_config(dir);
  std::ostringstream log;
  cmd_ingest(config, log);
  cmd_train(config, log);

  write_text(dir / "oov.csv", "source,target,label\nx:nowhere,y:nothing,1\nx:nowhere,y:else,0\n");
  auto oov = cluster_config(dir, {"paths.test_sets=[\"" + (dir / "oov.csv").string() + "\"]"});
  CHECK_THROWS_WITH_AS(cmd_evaluate(oov, log), doctest::Contains("no evaluable pairs"), DataError);

  write_text(dir / "bad.csv", "source,target,label\na,b,yes\n");
  auto bad = cluster_config(dir, {"paths.test_sets=[\"" + (dir / "bad.csv").string() + "\"]"});
  CHECK_THROWS_WITH_AS(cmd_evaluate(bad, log), doctest::Contains("line 2"), DataError);

  auto none = cluster_config(dir, {"paths.test_sets=[]"});
  CHECK_THROWS_AS(cmd_evaluate(none, log), ConfigError);
}
