// kgc: knowledge-graph embedding and completion pipeline.
//
//   kgc ingest   --config run.json
//   kgc walk     --config run.json
//   kgc train    --config run.json [--strategy node2vec] [--set train.dim=64]
//   kgc rank     --config run.json --source <uri> -k 20
//   kgc evaluate --config run.json
//   kgc inspect  --config run.json [file]

#include "kgc/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string strategy;
  std::string output_dir;
  std::string triples;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path,
                  std::string("JSON config file (default: $") + kgc::kConfigEnvVar + ")");
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set walk.p=0.5")
      ->take_all();
  cmd->add_option("--seed", opts.seed, "seed (config key: seed)");
  cmd->add_option("--strategy", opts.strategy, "walk strategy (config key: walk.strategy)");
  cmd->add_option("--output-dir", opts.output_dir, "output directory (config key: paths.output_dir)");
  cmd->add_option("--triples", opts.triples, "triples file (config key: paths.triples)");
}

kgc::PipelineConfig resolve(const CommonOptions& opts) {
  std::string path = opts.config_path;
  if (path.empty())
    if (const char* env = std::getenv(kgc::kConfigEnvVar)) path = env;
  auto overrides = opts.overrides;
  if (opts.seed) overrides.push_back("seed=" + std::to_string(*opts.seed));
  if (!opts.strategy.empty()) overrides.push_back("walk.strategy=\"" + opts.strategy + "\"");
  if (!opts.output_dir.empty()) overrides.push_back("paths.output_dir=\"" + opts.output_dir + "\"");
  if (!opts.triples.empty()) overrides.push_back("paths.triples=\"" + opts.triples + "\"");
  return kgc::PipelineConfig::load(path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph embedding, top-K link completion and evaluation"};
  app.require_subcommand(1);

  CommonOptions opts;
  auto* ingest = app.add_subcommand("ingest", "parse triples and write the binary graph cache");
  auto* walk = app.add_subcommand("walk", "generate walk corpora only");
  auto* train = app.add_subcommand("train", "generate walks and train embeddings");
  auto* rank = app.add_subcommand("rank", "top-K cosine ranking for one source node");
  auto* evaluate = app.add_subcommand("evaluate", "compare top-K ranking with the logistic baseline");
  auto* inspect = app.add_subcommand("inspect", "print graph cache or embedding statistics");
  for (auto* cmd : {ingest, walk, train, rank, evaluate, inspect}) add_common(cmd, opts);

  std::string source, out_file, inspect_file;
  std::size_t k = 20;
  rank->add_option("--source", source, "source node URI")->required();
  rank->add_option("-k,--top", k, "number of targets")->check(CLI::PositiveNumber);
  rank->add_option("-o,--out", out_file, "output CSV (default: <output>/<strategy>/rank_topK.csv)");
  inspect->add_option("file", inspect_file, "graph cache or binary embeddings (default: graph cache)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = resolve(opts);
    if (*ingest) kgc::cmd_ingest(config, std::cout);
    else if (*walk) kgc::cmd_walk(config, std::cout);
    else if (*train) kgc::cmd_train(config, std::cout);
    else if (*rank) {
      std::optional<kgc::WalkStrategy> strategy;
      if (!opts.strategy.empty()) strategy = kgc::parse_walk_strategy(opts.strategy);
      kgc::cmd_rank(config, source, k, strategy, out_file, std::cout);
    } else if (*evaluate) kgc::cmd_evaluate(config, std::cout);
    else if (*inspect) kgc::cmd_inspect(config, inspect_file, std::cout);
  } catch (const kgc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kgc::kExitConfigError;
  } catch (const kgc::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kgc::kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kgc::kExitInternalError;
  }
  return kgc::kExitOk;
}
