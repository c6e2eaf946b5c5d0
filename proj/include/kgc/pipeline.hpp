#pragma once

// End-to-end commands shared by the `kgc` tool and the integration tests.

#include "kgc/baseline.hpp"
#include "kgc/evaluator.hpp"
#include "kgc/walkers.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace kgc {

namespace fs = std::filesystem;

inline constexpr const char* kConfigEnvVar = "KGC_CONFIG";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitDataError = 3,
  kExitInternalError = 4,
};

struct BaselineConfig {
  std::optional<std::string> source_type;
  std::optional<std::string> target_type;
  std::optional<std::string> edge_type;
  std::size_t positives = 0;  // 0: every matching edge, capped at 10000
  std::size_t negatives = 0;  // 0: same as positives
  double validation_fraction = 0.2;
  LogRegOptions options;
};

struct PipelineConfig {
  fs::path triples;
  fs::path type_rules;
  fs::path metapath_file;
  std::vector<fs::path> test_sets;
  fs::path output_dir = "kgc_out";

  std::vector<WalkStrategy> strategies{WalkStrategy::node2vec};
  std::vector<std::string> metapath;  // type names; used when metapath_file is empty
  WalkConfig walk;
  TrainConfig train;
  std::vector<std::size_t> ks{10, 50, 100};
  FeatureMode feature_mode = FeatureMode::hadamard;
  std::optional<std::string> rank_target_type;
  BaselineConfig baseline;
  std::uint64_t seed = 42;

  nlohmann::json document;  // merged config as loaded, for manifests

  static nlohmann::json defaults();
  // `overrides` are `dotted.key=value`; values parse as JSON, else as strings.
  static PipelineConfig from_json(nlohmann::json doc, const std::vector<std::string>& overrides = {});
  static PipelineConfig load(const fs::path& file, const std::vector<std::string>& overrides = {});

  fs::path graph_cache() const { return output_dir / "graph.kgcg"; }
  fs::path strategy_dir(WalkStrategy s) const { return output_dir / to_string(s); }
};

void cmd_ingest(const PipelineConfig& config, std::ostream& log);
void cmd_walk(const PipelineConfig& config, std::ostream& log);
void cmd_train(const PipelineConfig& config, std::ostream& log);
// Returns the path of the written ranking CSV.
fs::path cmd_rank(const PipelineConfig& config, const std::string& source, std::size_t k,
                  std::optional<WalkStrategy> strategy, const fs::path& out_file, std::ostream& log);
void cmd_evaluate(const PipelineConfig& config, std::ostream& log);
void cmd_inspect(const PipelineConfig& config, const fs::path& file, std::ostream& log);

// Labels in the model closest to `uri` by shared prefix, best first.
std::vector<std::string> nearest_by_prefix(const EmbeddingMatrix& model, const std::string& uri,
                                           std::size_t limit = 5);

}  // namespace kgc
