#include "kgc/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace kgc {

using nlohmann::json;

namespace {

std::ifstream open_input(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("no ") + what + " path configured");
  if (!fs::is_regular_file(path))
    throw ConfigError(std::string(what) + " '" + path.string() + "' does not exist");
}

// Applies `a.b.c=value` onto the document.
void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  std::string pointer;
  std::istringstream keys(assignment.substr(0, eq));
  std::string key;
  while (std::getline(keys, key, '.')) {
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
    pointer += "/" + key;
  }
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  doc[json::json_pointer(pointer)] = value;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_or<std::string>(j, key, "");
}

fs::path path_or_empty(const json& j, const char* key) {
  return fs::path(get_or<std::string>(j, key, ""));
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

json PipelineConfig::defaults() {
  return json{
      {"seed", 42},
      {"paths",
       {{"triples", ""}, {"type_rules", ""}, {"metapath", ""}, {"test_sets", json::array()},
        {"output_dir", "kgc_out"}}},
      {"walk",
       {{"strategy", "node2vec"}, {"walk_length", 20}, {"walks_per_node", 10}, {"p", 1.0},
        {"q", 1.0}, {"metapath", json::array()}, {"em_iterations", 5}, {"em_window", 2},
        {"workers", 1}}},
      {"train",
       {{"dim", 128}, {"window", 5}, {"negatives", 5}, {"epochs", 5}, {"learning_rate", 0.025},
        {"min_count", 1}, {"workers", 1}, {"deterministic", true}}},
      {"eval",
       {{"k", {10, 50, 100}},
        {"feature_mode", "hadamard"},
        {"rank_target_type", nullptr},
        {"baseline",
         {{"source_type", nullptr}, {"target_type", nullptr}, {"edge_type", nullptr},
          {"positives", 0}, {"negatives", 0}, {"validation_fraction", 0.2}, {"l2", 1e-4},
          {"learning_rate", 0.1}, {"max_epochs", 200}, {"tolerance", 1e-6}}}}},
  };
}

PipelineConfig PipelineConfig::from_json(json doc, const std::vector<std::string>& overrides) {
  json merged = defaults();
  if (!doc.is_null()) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    merged.merge_patch(doc);
  }
  for (const auto& o : overrides) apply_override(merged, o);

  PipelineConfig c;
  c.document = merged;
  c.seed = get_or<std::uint64_t>(merged, "seed", 42);

  const auto& paths = merged["paths"];
  c.triples = path_or_empty(paths, "triples");
  c.type_rules = path_or_empty(paths, "type_rules");
  c.metapath_file = path_or_empty(paths, "metapath");
  c.output_dir = get_or<std::string>(paths, "output_dir", "kgc_out");
  if (paths.contains("test_sets")) {
    const auto& ts = paths["test_sets"];
    if (ts.is_string()) c.test_sets.emplace_back(ts.get<std::string>());
    else
      for (const auto& t : ts) c.test_sets.emplace_back(t.get<std::string>());
  }

  const auto& walk = merged["walk"];
  c.strategies.clear();
  if (walk["strategy"].is_array()) {
    for (const auto& s : walk["strategy"]) c.strategies.push_back(parse_walk_strategy(s.get<std::string>()));
  } else {
    c.strategies.push_back(parse_walk_strategy(get_or<std::string>(walk, "strategy", "node2vec")));
  }
  if (c.strategies.empty()) throw ConfigError("walk.strategy lists no strategy");
  c.walk.walk_length = get_or<std::size_t>(walk, "walk_length", 20);
  c.walk.walks_per_node = get_or<std::size_t>(walk, "walks_per_node", 10);
  c.walk.p = get_or<double>(walk, "p", 1.0);
  c.walk.q = get_or<double>(walk, "q", 1.0);
  c.walk.em_iterations = get_or<std::size_t>(walk, "em_iterations", 5);
  c.walk.em_window = get_or<std::size_t>(walk, "em_window", 2);
  c.walk.workers = get_or<std::size_t>(walk, "workers", 1);
  c.walk.seed = c.seed;
  c.metapath = get_or<std::vector<std::string>>(walk, "metapath", {});

  const auto& train = merged["train"];
  c.train.dim = get_or<std::size_t>(train, "dim", 128);
  c.train.window = get_or<std::size_t>(train, "window", 5);
  c.train.negatives = get_or<std::size_t>(train, "negatives", 5);
  c.train.epochs = get_or<std::size_t>(train, "epochs", 5);
  c.train.learning_rate = get_or<double>(train, "learning_rate", 0.025);
  c.train.min_count = get_or<std::uint64_t>(train, "min_count", 1);
  c.train.workers = get_or<std::size_t>(train, "workers", 1);
  c.train.deterministic = get_or<bool>(train, "deterministic", true);
  c.train.seed = c.seed;

  const auto& eval = merged["eval"];
  c.ks = get_or<std::vector<std::size_t>>(eval, "k", {10, 50, 100});
  for (auto k : c.ks)
    if (k == 0) throw ConfigError("eval.k values must be >= 1");
  c.feature_mode = parse_feature_mode(get_or<std::string>(eval, "feature_mode", "hadamard"));
  c.rank_target_type = optional_string(eval, "rank_target_type");
  const auto& base = eval["baseline"];
  c.baseline.source_type = optional_string(base, "source_type");
  c.baseline.target_type = optional_string(base, "target_type");
  c.baseline.edge_type = optional_string(base, "edge_type");
  c.baseline.positives = get_or<std::size_t>(base, "positives", 0);
  c.baseline.negatives = get_or<std::size_t>(base, "negatives", 0);
  c.baseline.validation_fraction = get_or<double>(base, "validation_fraction", 0.2);
  c.baseline.options.l2 = get_or<double>(base, "l2", 1e-4);
  c.baseline.options.learning_rate = get_or<double>(base, "learning_rate", 0.1);
  c.baseline.options.max_epochs = get_or<std::size_t>(base, "max_epochs", 200);
  c.baseline.options.tolerance = get_or<double>(base, "tolerance", 1e-6);
  if (!(c.baseline.validation_fraction >= 0.0 && c.baseline.validation_fraction < 1.0))
    throw ConfigError("eval.baseline.validation_fraction must be in [0, 1)");

  c.train.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& file, const std::vector<std::string>& overrides) {
  json doc;
  if (!file.empty()) {
    auto in = open_input(file, "config file");
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file '" + file.string() + "' is not valid JSON");
  }
  return from_json(std::move(doc), overrides);
}

// ---------------------------------------------------------------------------
// Shared loading

namespace {

HeteroGraph load_graph(const PipelineConfig& config) {
  const auto path = config.graph_cache();
  if (!fs::is_regular_file(path))
    throw ConfigError("graph cache '" + path.string() + "' not found; run `kgc ingest` first");
  auto in = open_input(path, "graph cache");
  return load_graph_cache(in);
}

EmbeddingMatrix load_model(const PipelineConfig& config, WalkStrategy strategy) {
  const auto path = config.strategy_dir(strategy) / "embeddings.bin";
  if (!fs::is_regular_file(path))
    throw ConfigError("embeddings '" + path.string() + "' not found; run `kgc train` first");
  auto in = open_input(path, "embeddings");
  return load_embeddings_binary(in);
}

WalkConfig walk_config_for(const PipelineConfig& config, const HeteroGraph& graph,
                           WalkStrategy strategy) {
  WalkConfig walk = config.walk;
  walk.strategy = strategy;
  if (strategy == WalkStrategy::metapath) {
    if (!config.metapath_file.empty()) {
      auto in = open_input(config.metapath_file, "metapath file");
      walk.metapath = parse_metapath(in, graph.types());
    } else if (!config.metapath.empty()) {
      walk.metapath = make_metapath(config.metapath, graph.types());
    } else {
      throw ConfigError("metapath strategy needs paths.metapath or walk.metapath");
    }
  }
  walk.validate();
  return walk;
}

std::string strategy_context(WalkStrategy s) { return "[" + to_string(s) + "] "; }

template <typename Fn>
void with_strategy_context(WalkStrategy s, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    throw ConfigError(strategy_context(s) + e.what());
  } catch (const DataError& e) {
    throw DataError(strategy_context(s) + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

void cmd_ingest(const PipelineConfig& config, std::ostream& log) {
  require_file(config.triples, "triples file");
  TypeRuleSet rules;
  if (!config.type_rules.empty()) {
    auto in = open_input(config.type_rules, "type rules file");
    rules = TypeRuleSet::parse(in);
  }
  auto in = open_input(config.triples, "triples file");
  const auto result = ingest_triples(in, rules);
  const auto& g = result.graph;

  {
    auto out = open_output(config.graph_cache());
    save_graph_cache(g, out);
  }

  std::map<std::string, std::size_t> per_type;
  for (auto t : g.node_types()) ++per_type[g.types().node_type_name(t)];

  std::ostringstream report;
  report << "nodes: " << g.node_count() << '\n'
         << "edges: " << g.edge_count() << '\n'
         << "node types: " << g.types().node_type_count() << '\n';
  for (const auto& [name, count] : per_type) report << "  " << name << ": " << count << '\n';
  report << "edge types: " << g.types().edge_type_count() << '\n'
         << "lines read: " << result.stats.lines_read << '\n'
         << "triples: " << result.stats.triples << '\n'
         << "duplicates dropped: " << result.stats.duplicates_dropped << '\n'
         << "self-loops dropped: " << result.stats.self_loops_dropped << '\n'
         << "literal triples skipped: " << result.stats.literals_skipped << '\n';
  {
    auto out = open_output(config.output_dir / "ingest_report.txt");
    out << report.str();
  }
  log << report.str() << "graph cache: " << config.graph_cache().string() << '\n';
}

void cmd_walk(const PipelineConfig& config, std::ostream& log) {
  const auto graph = load_graph(config);
  for (auto strategy : config.strategies) {
    with_strategy_context(strategy, [&] {
      const auto walk = walk_config_for(config, graph, strategy);
      const auto corpus = generate_corpus(graph, walk);
      const auto path = config.strategy_dir(strategy) / "corpus.txt";
      auto out = open_output(path);
      write_corpus(corpus, graph, out);
      log << to_string(strategy) << ": " << corpus.walks.size() << " walks, "
          << corpus.stats.truncated_walks << " truncated -> " << path.string() << '\n';
    });
  }
}

void cmd_train(const PipelineConfig& config, std::ostream& log) {
  const auto graph = load_graph(config);
  for (auto strategy : config.strategies) {
    with_strategy_context(strategy, [&] {
      const auto walk = walk_config_for(config, graph, strategy);
      const auto corpus = generate_corpus(graph, walk);
      const auto result = train(corpus, config.train, graph.node_uris());
      const auto dir = config.strategy_dir(strategy);
      {
        auto out = open_output(dir / "corpus.txt");
        write_corpus(corpus, graph, out);
      }
      {
        auto out = open_output(dir / "embeddings.txt");
        save_embeddings_text(result.model, out);
      }
      {
        auto out = open_output(dir / "embeddings.bin");
        save_embeddings_binary(result.model, out);
      }
      json manifest{
          {"strategy", to_string(strategy)},
          {"seed", config.seed},
          {"walk_config_hash", hex64(walk.hash())},
          {"train_config_hash", hex64(config.train.hash())},
          {"corpus",
           {{"walks", corpus.walks.size()},
            {"tokens", corpus.token_count()},
            {"truncated_walks", corpus.stats.truncated_walks},
            {"uniform_fallbacks", corpus.stats.uniform_fallbacks}}},
          {"vocab_size", result.vocab.size()},
          {"pairs_trained", result.stats.pairs_trained},
          {"negatives_skipped", result.stats.negatives_skipped},
          {"loss_trace", result.stats.epoch_loss},
          {"config", config.document},
      };
      {
        auto out = open_output(dir / "manifest.json");
        out << manifest.dump(2) << '\n';
      }
      log << to_string(strategy) << ": " << result.model.size() << " embeddings of dim "
          << result.model.dim() << ", epoch losses";
      for (double l : result.stats.epoch_loss) log << ' ' << format_double(l);
      log << " -> " << dir.string() << '\n';
    });
  }
}

std::vector<std::string> nearest_by_prefix(const EmbeddingMatrix& model, const std::string& uri,
                                           std::size_t limit) {
  std::vector<std::pair<std::size_t, const std::string*>> scored;
  scored.reserve(model.size());
  for (const auto& label : model.labels) {
    const auto n = std::min(label.size(), uri.size());
    std::size_t common = 0;
    while (common < n && label[common] == uri[common]) ++common;
    scored.emplace_back(common, &label);
  }
  const auto take = std::min(limit, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : *a.second < *b.second;
                    });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(*scored[i].second);
  return out;
}

fs::path cmd_rank(const PipelineConfig& config, const std::string& source, std::size_t k,
                  std::optional<WalkStrategy> strategy_opt, const fs::path& out_file,
                  std::ostream& log) {
  if (k == 0) throw ConfigError("K must be >= 1");
  const auto strategy = strategy_opt.value_or(config.strategies.front());
  const auto graph = load_graph(config);
  const auto model = load_model(config, strategy);

  if (!model.find(source)) {
    std::string msg = "unknown source URI '" + source + "'";
    const auto near = nearest_by_prefix(model, source);
    if (!near.empty()) {
      msg += "; closest matches:";
      for (const auto& n : near) msg += "\n  " + n;
    }
    throw DataError(msg);
  }

  std::vector<std::string> candidates;
  if (config.rank_target_type) {
    const auto type = graph.types().node_type(*config.rank_target_type);
    for (NodeId n : graph.nodes_by_type(type)) candidates.push_back(graph.node_uri(n));
  } else {
    candidates = model.labels;
  }
  const auto ranking = rank_targets(model, source, candidates, k);

  const fs::path path = out_file.empty() ? config.strategy_dir(strategy) / ("rank_top" + std::to_string(k) + ".csv")
                                         : out_file;
  auto out = open_output(path);
  write_ranking_csv(ranking, out);
  log << "ranked " << ranking.entries.size() << " targets for " << source << " -> " << path.string()
      << '\n';
  return path;
}

void cmd_evaluate(const PipelineConfig& config, std::ostream& log) {
  if (config.test_sets.empty()) throw ConfigError("no test sets configured (paths.test_sets)");
  std::vector<std::pair<std::string, LabeledPairSet>> tests;
  LabeledPairSet all_test_pairs;
  for (const auto& path : config.test_sets) {
    require_file(path, "test set");
    auto in = open_input(path, "test set");
    try {
      auto set = load_labeled_pairs(in);
      set.provenance = path.string();
      for (const auto& p : set.pairs()) {
        // A pair labelled differently across test sets is still excluded once.
        if (!all_test_pairs.contains(p.source, p.target)) all_test_pairs.add(p.source, p.target, 0);
      }
      tests.emplace_back(path.stem().string(), std::move(set));
    } catch (const ParseError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }

  const auto graph = load_graph(config);
  RelationFilter filter;
  const auto& types = graph.types();
  if (config.baseline.source_type) filter.source_type = types.node_type(*config.baseline.source_type);
  if (config.baseline.target_type) filter.target_type = types.node_type(*config.baseline.target_type);
  if (config.baseline.edge_type) filter.edge_type = types.edge_type(*config.baseline.edge_type);

  std::size_t n_pos = config.baseline.positives;
  if (n_pos == 0) n_pos = std::min<std::size_t>(10000, count_matching_edges(graph, filter, &all_test_pairs));
  const std::size_t n_neg = config.baseline.negatives ? config.baseline.negatives : n_pos;

  std::map<std::string, ComparisonReport> reports;
  for (const auto& [name, _] : tests) reports[name].feature_mode = to_string(config.feature_mode);

  for (auto strategy : config.strategies) {
    with_strategy_context(strategy, [&] {
      const auto model = load_model(config, strategy);
      const auto dir = config.strategy_dir(strategy);

      Rng rng(derive_seed(config.seed, 0x626173656c696e65ULL));
      const auto links = sample_training_links(graph, filter, n_pos, n_neg, rng, &all_test_pairs);
      {
        auto out = open_output(dir / "training_links.csv");
        save_labeled_pairs(links, out);
      }

      // Deterministic train/validation split.
      std::vector<std::size_t> order(links.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      const auto n_val = static_cast<std::size_t>(static_cast<double>(links.size()) * config.baseline.validation_fraction);
      LabeledPairSet train_set, val_set;
      for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& p = links.pairs()[order[i]];
        (i < n_val ? val_set : train_set).add(p.source, p.target, p.label);
      }

      const auto table = build_features(model, train_set, config.feature_mode);
      const auto baseline = fit_logreg(table.features, table.labels, config.baseline.options);
      {
        auto out = open_output(dir / "baseline.logreg");
        save_logreg(baseline, out);
      }
      log << to_string(strategy) << ": baseline fitted on " << table.used.size() << " pairs ("
          << to_string(config.feature_mode) << "), final loss " << format_metric(baseline.final_loss);
      if (!val_set.empty()) {
        const auto rows = compare_report(model, val_set, {}, baseline, config.feature_mode, to_string(strategy));
        log << ", validation accuracy " << format_metric(rows.front().metrics.accuracy);
      }
      log << '\n';

      for (const auto& [name, pairs] : tests) {
        auto rows = compare_report(model, pairs, config.ks, baseline, config.feature_mode, to_string(strategy));
        auto& report = reports[name];
        report.rows.insert(report.rows.end(), rows.begin(), rows.end());
        for (auto k : config.ks) {
          auto out = open_output(dir / ("predictions_" + name + "_k" + std::to_string(k) + ".csv"));
          write_predictions_csv(predict_topk(model, pairs, k), out);
        }
      }
    });
  }

  for (const auto& [name, report] : reports) {
    {
      auto out = open_output(config.output_dir / ("report_" + name + ".csv"));
      write_report_csv(report, out);
    }
    std::ostringstream table;
    write_report_table(report, table);
    {
      auto out = open_output(config.output_dir / ("report_" + name + ".txt"));
      out << table.str();
    }
    log << "test set " << name << ":\n" << table.str();
  }
}

void cmd_inspect(const PipelineConfig& config, const fs::path& file_arg, std::ostream& log) {
  const fs::path file = file_arg.empty() ? config.graph_cache() : file_arg;
  auto in = open_input(file, "file");
  char magic[4] = {};
  in.read(magic, 4);
  in.seekg(0);
  const std::string tag(magic, 4);
  if (tag == "KGCG") {
    const auto g = load_graph_cache(in);
    std::size_t isolated = 0, max_degree = 0;
    for (NodeId n = 0; n < g.node_count(); ++n) {
      isolated += g.degree(n) == 0;
      max_degree = std::max(max_degree, g.degree(n));
    }
    log << "graph cache " << file.string() << '\n'
        << "nodes: " << g.node_count() << '\n'
        << "edges: " << g.edge_count() << '\n'
        << "max degree: " << max_degree << '\n'
        << "isolated nodes: " << isolated << '\n'
        << "node types:\n";
    for (TypeId t = 0; t < g.types().node_type_count(); ++t)
      log << "  " << g.types().node_type_name(t) << ": " << g.nodes_by_type(t).size() << '\n';
    log << "edge types:\n";
    for (const auto& name : g.types().edge_type_names()) log << "  " << name << '\n';
  } else if (tag == "KGCE") {
    const auto m = load_embeddings_binary(in);
    const Eigen::VectorXd norms = m.center.rowwise().norm();
    log << "embeddings " << file.string() << '\n'
        << "rows: " << m.size() << '\n'
        << "dim: " << m.dim() << '\n'
        << "context vectors: " << (m.has_context() ? "yes" : "no") << '\n';
    if (m.size() > 0)
      log << "norm min/mean/max: " << format_double(norms.minCoeff()) << ' '
          << format_double(norms.mean()) << ' ' << format_double(norms.maxCoeff()) << '\n';
  } else {
    throw DataError("'" + file.string() + "' is neither a graph cache nor a binary embedding file");
  }
}

}  // namespace kgc
