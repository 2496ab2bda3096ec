#include "treeattn/cli.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "treeattn/checkpoint.hpp"
#include "treeattn/error.hpp"
#include "treeattn/rng.hpp"

namespace treeattn {

namespace {

using json = nlohmann::json;

const char* kConfigHelp = R"(Config file (JSON; unknown keys are rejected; flags override):
  max_dist          15              largest tree distance with its own mask
  tree_kinds        ["dependency", "constituency"]
  mode              "additive"      or "multiplicative"
  self_loops        true
  literal_sibling   true            false excludes ancestor pairs from sibling masks
  prune_empty       false
  seed              0               parameter/embedding seed for attend and bench
  seeds             [1, 2, 3, 4, 5] toytrain seeds
  model             {d_model: 32, heads: 4, d_head: 8, d_ff: 64, layers: 1, max_len: 64}
  probe             {rank: 0 (= d_model), learning_rate: 0.05, epochs: 300,
                     batch_size: 10, seed: 0, train_fraction: 0.8}
  toy               {task: "root_distance_parity", k: 1, train: 2000, dev: 200, test: 500,
                     min_len: 5, max_len: 10, data_seed: 0, max_dist: 6,
                     learning_rate: 0.05, epochs: 4, batch_size: 8,
                     modes: ["syntax", "random", "full"]}
  input, params, embeddings, trees, output    optional file paths
Exit codes: 0 ok, 1 usage, 2 input format, 3 structure/validation, 4 numerical.)";

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw UsageError(fmt::format("config: {} must be an object", where));
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw UsageError(fmt::format("config: unknown key '{}{}'", where, key));
  }
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(fmt::format("config: bad value for '{}': {}", key, e.what()));
  }
}

std::vector<TreeKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<TreeKind> kinds;
  for (const auto& n : names) kinds.push_back(tree_kind_from_string(n));
  return kinds;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", what, e.what()));
  }
}

enum class InputFormat { Conllu, Ptb, Json };

InputFormat format_from_string(const std::string& name) {
  if (name == "conllu") return InputFormat::Conllu;
  if (name == "ptb") return InputFormat::Ptb;
  if (name == "json") return InputFormat::Json;
  throw UsageError(fmt::format("unknown format '{}'", name));
}

InputFormat detect_format(const std::string& path, const std::string& forced) {
  if (!forced.empty()) return format_from_string(forced);
  auto ends_with = [&](const char* ext) {
    const std::string e(ext);
    return path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0;
  };
  if (ends_with(".conllu") || ends_with(".conll")) return InputFormat::Conllu;
  if (ends_with(".ptb") || ends_with(".mrg") || ends_with(".tree")) return InputFormat::Ptb;
  if (ends_with(".json")) return InputFormat::Json;
  throw UsageError(fmt::format("cannot infer the format of '{}'; pass --format", path));
}

std::vector<SyntaxTree> load_trees(const std::string& path, const std::string& forced_format) {
  const std::string text = read_file(path);
  switch (detect_format(path, forced_format)) {
    case InputFormat::Conllu: return parse_conllu(text);
    case InputFormat::Ptb: return parse_ptb(text);
    case InputFormat::Json: {
      const json j = parse_json_text(text, path);
      std::vector<SyntaxTree> trees;
      if (j.is_array()) {
        for (const auto& t : j) trees.push_back(tree_from_json(t));
      } else {
        trees.push_back(tree_from_json(j));
      }
      for (const auto& t : trees) require_valid(t);
      return trees;
    }
  }
  return {};
}

// Sentence s of the input is tree s of every file; files contribute one tree kind each.
TreeGroup sentence_group(const std::vector<std::vector<SyntaxTree>>& files, std::size_t s) {
  TreeGroup group;
  for (const auto& trees : files) {
    if (s >= trees.size()) throw StructureError(fmt::format("input has no sentence {}", s + 1));
    group.push_back(trees[s]);
  }
  check_group(group);
  return group;
}

struct SentenceInput {
  bool is_pair = false;
  TreeGroup single;
  SentencePair pair;

  std::size_t size() const { return is_pair ? pair.combined_size() : single.front().token_count(); }
  std::vector<std::string> forms() const {
    std::vector<std::string> out;
    auto add = [&](const TreeGroup& g) {
      for (const auto& t : g.front().tokens) out.push_back(t.form);
    };
    if (is_pair) {
      add(pair.first);
      add(pair.second);
    } else {
      add(single);
    }
    return out;
  }
  MaskSet masks(const MaskConfig& config) const {
    return is_pair ? build_mask_set(pair, config) : build_mask_set(single, config);
  }
};

SentenceInput load_input(const std::vector<std::string>& paths, const std::string& format, bool pair) {
  if (paths.empty()) throw UsageError("no input files given");
  std::vector<std::vector<SyntaxTree>> files;
  for (const auto& p : paths) files.push_back(load_trees(p, format));
  SentenceInput in;
  in.is_pair = pair;
  if (pair) {
    in.pair.first = sentence_group(files, 0);
    in.pair.second = sentence_group(files, 1);
    check_pair(in.pair);
  } else {
    in.single = sentence_group(files, 0);
  }
  return in;
}

void emit(const std::string& text, const std::optional<std::string>& path, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f) throw UsageError(fmt::format("cannot write '{}'", *path));
  f << text;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Overrides {
  std::string config_path;
  std::optional<int> max_dist;
  std::optional<std::string> tree_kinds;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  bool prune_empty = false;
  bool strict_sibling = false;
  bool no_self_loops = false;
  std::optional<std::string> output;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON run config");
  cmd->add_option("--max-dist", o.max_dist, "Override max_dist");
  cmd->add_option("--tree-kinds", o.tree_kinds, "Override tree_kinds, comma separated (dependency,constituency)");
  cmd->add_option("--mode", o.mode, "Override masking mode (additive, multiplicative)");
  cmd->add_option("--seed", o.seed, "Override seed");
  cmd->add_flag("--prune-empty", o.prune_empty, "Drop masks with no off-diagonal entry");
  cmd->add_flag("--strict-sibling", o.strict_sibling, "Exclude ancestor pairs from sibling masks");
  cmd->add_flag("--no-self-loops", o.no_self_loops, "Do not force the mask diagonal on");
  cmd->add_option("--out", o.output, "Write the result to this file instead of stdout");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.max_dist) cfg.masks.max_dist = *o.max_dist;
  if (o.tree_kinds) {
    std::vector<std::string> names;
    std::stringstream ss(*o.tree_kinds);
    for (std::string item; std::getline(ss, item, ',');) names.push_back(item);
    cfg.masks.tree_kinds = parse_kinds(names);
  }
  if (o.mode) cfg.mode = mask_mode_from_string(*o.mode);
  if (o.seed) cfg.seed = *o.seed;
  if (o.prune_empty) cfg.masks.prune_empty = true;
  if (o.strict_sibling) cfg.masks.literal_sibling = false;
  if (o.no_self_loops) cfg.masks.self_loops = false;
  if (o.output) cfg.output = o.output;
  return cfg;
}

std::string cmd_parse(const std::string& format, const std::string& path) {
  if (format != "conllu" && format != "ptb") throw UsageError("--format must be conllu or ptb");
  const std::string text = read_file(path);
  const auto trees = format == "conllu" ? parse_conllu(text) : parse_ptb(text);
  ordered_json arr = ordered_json::array();
  for (const auto& t : trees) {
    require_valid(t);
    arr.push_back(to_json(t));
  }
  return arr.dump(2) + "\n";
}

std::string cmd_masks(const RunConfig& cfg, const std::vector<std::string>& inputs, const std::string& format,
                      bool pair, std::ostream& err) {
  const auto input = load_input(inputs, format, pair);
  const MaskSet set = input.masks(cfg.masks);
  err << set.masks.size() << " masks\n";
  return to_json(set).dump() + "\n";
}

ModelCheckpoint model_for(const RunConfig& cfg, std::size_t n) {
  if (cfg.params) {
    std::ifstream in(*cfg.params, std::ios::binary);
    if (!in) throw UsageError(fmt::format("cannot open '{}'", *cfg.params));
    return read_checkpoint(in);
  }
  return ModelCheckpoint::init(cfg.dims, cfg.layers, std::max(cfg.max_len, n), cfg.seed, cfg.mode);
}

std::string cmd_attend(const RunConfig& cfg, const std::vector<std::string>& inputs, const std::string& format,
                       bool pair, const std::optional<std::string>& save_params) {
  const auto input = load_input(inputs, format, pair);
  const MaskSet set = input.masks(cfg.masks);
  if (set.masks.empty()) throw StructureError("no masks left after pruning");
  const std::size_t n = input.size();
  const ModelCheckpoint model = model_for(cfg, n);
  if (model.blocks.empty()) throw StructureError("checkpoint has no blocks");
  if (model.embeddings.rows() < n) {
    throw StructureError(fmt::format("input has {} tokens but the embedding table has {} rows", n,
                                     model.embeddings.rows()));
  }
  Tensor h(n, model.dims.d_model);
  for (std::size_t t = 0; t < n; ++t) {
    auto src = model.embeddings.row(t);
    std::copy(src.begin(), src.end(), h.row(t).begin());
  }
  BlockForward last;
  for (const auto& block : model.blocks) {
    last = block_forward(h, set, block, cfg.mode);
    h = last.output;
  }

  ordered_json dump;
  dump["tokens"] = input.forms();
  dump["subnetworks"] = ordered_json::array();
  const auto& c = last.cache;
  for (std::size_t j = 0; j < set.masks.size(); ++j) {
    // Head-averaged attention weights of the last block.
    Tensor avg(n, n);
    for (const auto& w : c.weights[j]) avg += w;
    avg *= 1.0 / static_cast<double>(c.weights[j].size());
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < n; ++i) rows.push_back(std::vector<double>(avg.row(i).begin(), avg.row(i).end()));
    ordered_json sub;
    sub["spec"] = to_json(set.masks[j].spec());
    sub["weights"] = std::move(rows);
    dump["subnetworks"].push_back(std::move(sub));
  }
  ordered_json topical = ordered_json::array();
  for (std::size_t t = 0; t < n; ++t) {
    auto r = c.topical_weights.row(t);
    topical.push_back(std::vector<double>(r.begin(), r.end()));
  }
  dump["topical_weights"] = std::move(topical);

  if (save_params) {
    std::ofstream f(*save_params, std::ios::binary);
    if (!f) throw UsageError(fmt::format("cannot write '{}'", *save_params));
    write_checkpoint(f, model);
  }
  return dump.dump() + "\n";
}

std::vector<Tensor> load_embeddings(const std::string& path) {
  const json j = parse_json_text(read_file(path), path);
  const json& list = j.is_object() && j.contains("sentences") ? j.at("sentences") : j;
  if (!list.is_array()) throw FormatError(fmt::format("{}: expected an array of matrices", path));
  std::vector<Tensor> out;
  try {
    for (const auto& m : list) {
      const auto rows = m.get<std::vector<std::vector<double>>>();
      const std::size_t cols = rows.empty() ? 0 : rows.front().size();
      Tensor t(rows.size(), cols);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw FormatError(fmt::format("{}: ragged embedding matrix", path));
        std::copy(rows[r].begin(), rows[r].end(), t.row(r).begin());
      }
      require_finite(t, "embeddings");
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path, e.what()));
  }
  return out;
}

std::string cmd_probe(const RunConfig& cfg, const std::string& format) {
  if (!cfg.embeddings || !cfg.trees) throw UsageError("probe needs --embeddings and --trees");
  const auto embeddings = load_embeddings(*cfg.embeddings);
  const auto trees = load_trees(*cfg.trees, format);
  if (embeddings.size() != trees.size()) {
    throw StructureError(fmt::format("{} embedding matrices for {} trees", embeddings.size(), trees.size()));
  }
  std::vector<ProbeSentence> sentences;
  for (std::size_t s = 0; s < trees.size(); ++s) sentences.push_back({embeddings[s], trees[s]});
  const auto n_train = static_cast<std::size_t>(cfg.probe_train_fraction * static_cast<double>(sentences.size()));
  if (n_train == 0 || n_train >= sentences.size()) {
    throw UsageError(fmt::format("train_fraction {} leaves an empty split of {} sentences", cfg.probe_train_fraction,
                                 sentences.size()));
  }
  std::span<const ProbeSentence> all(sentences);
  const auto probe = train_probe(all.first(n_train), cfg.probe);
  std::vector<std::string> ids;
  for (std::size_t s = n_train; s < sentences.size(); ++s) ids.push_back(std::to_string(s + 1));
  return to_tsv(evaluate_probe(probe, all.subspan(n_train), ids));
}

std::string cmd_toytrain(const RunConfig& cfg) {
  const ToyDataset data = make_dataset(cfg.toy_data);
  std::vector<ToyMetrics> metrics;
  for (MaskSource source : cfg.toy_modes) {
    ExperimentConfig exp = cfg.toy;
    exp.source = source;
    metrics.push_back(train_toy(exp, data));
  }
  return to_tsv(metrics);
}

std::string cmd_bench(const RunConfig& cfg, std::size_t n, double density, std::size_t repeat) {
  if (n == 0) throw UsageError("--n must be positive");
  if (!(density >= 0.0 && density <= 1.0)) throw UsageError("--density must lie in [0, 1]");
  Rng rng(cfg.seed);
  const std::size_t dh = cfg.dims.d_head;
  const Tensor q = Tensor::uniform(n, dh, 1.0, rng);
  const Tensor k = Tensor::uniform(n, dh, 1.0, rng);
  const Tensor v = Tensor::uniform(n, dh, 1.0, rng);
  std::vector<std::uint8_t> dense(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) dense[i * n + j] = (i == j || rng.uniform() < density) ? 1 : 0;
  const Mask mask(n, {MaskCategory::Full, std::nullopt, TreeKind::Dependency}, std::move(dense));

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  AttentionResult d;
  for (std::size_t r = 0; r < repeat; ++r) d = masked_attention(q, k, v, mask, MaskMode::Additive);
  auto t1 = clock::now();
  SparseAttentionResult s;
  for (std::size_t r = 0; r < repeat; ++r) s = sparse_masked_attention(q, k, v, mask);
  auto t2 = clock::now();

  if (s.visited_pairs != mask.one_count()) {
    throw StructureError(fmt::format("sparse kernel visited {} pairs for a mask with {} ones", s.visited_pairs,
                                     mask.one_count()));
  }
  if (max_abs_diff(d.output, s.output) > 1e-9) throw NumericalError("sparse and dense outputs disagree");
  auto ms = [&](auto a, auto b) {
    return std::chrono::duration<double, std::milli>(b - a).count() / static_cast<double>(repeat);
  };
  std::string out = "path\tn\tmask_ones\tvisited_pairs\twall_ms\n";
  out += fmt::format("dense\t{}\t{}\t{}\t{:.3f}\n", n, mask.one_count(), n * n, ms(t0, t1));
  out += fmt::format("sparse\t{}\t{}\t{}\t{:.3f}\n", n, mask.one_count(), s.visited_pairs, ms(t1, t2));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

RunConfig parse_run_config(const json& j) {
  check_keys(j,
             {"max_dist", "tree_kinds", "mode", "self_loops", "literal_sibling", "prune_empty", "seed", "seeds",
              "model", "probe", "toy", "input", "params", "embeddings", "trees", "output"},
             "");
  RunConfig c;
  read(j, "max_dist", c.masks.max_dist);
  if (j.contains("tree_kinds")) {
    std::vector<std::string> kinds;
    read(j, "tree_kinds", kinds);
    c.masks.tree_kinds = parse_kinds(kinds);
  }
  if (j.contains("mode")) {
    std::string mode;
    read(j, "mode", mode);
    c.mode = mask_mode_from_string(mode);
  }
  read(j, "self_loops", c.masks.self_loops);
  read(j, "literal_sibling", c.masks.literal_sibling);
  read(j, "prune_empty", c.masks.prune_empty);
  read(j, "seed", c.seed);
  read(j, "seeds", c.seeds);

  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"d_model", "heads", "d_head", "d_ff", "layers", "max_len"}, "model.");
    read(m, "d_model", c.dims.d_model);
    read(m, "heads", c.dims.heads);
    read(m, "d_head", c.dims.d_head);
    read(m, "d_ff", c.dims.d_ff);
    read(m, "layers", c.layers);
    read(m, "max_len", c.max_len);
  }
  c.dims.check();

  if (j.contains("probe")) {
    const json& p = j.at("probe");
    check_keys(p, {"rank", "learning_rate", "epochs", "batch_size", "seed", "train_fraction"}, "probe.");
    read(p, "rank", c.probe.rank);
    read(p, "learning_rate", c.probe.learning_rate);
    read(p, "epochs", c.probe.epochs);
    read(p, "batch_size", c.probe.batch_size);
    read(p, "seed", c.probe.seed);
    read(p, "train_fraction", c.probe_train_fraction);
  }

  c.toy.dims = c.dims;
  c.toy.layers = c.layers;
  c.toy.attention_mode = c.mode;
  c.toy.seeds = c.seeds;
  c.toy.masks.self_loops = c.masks.self_loops;
  c.toy.masks.literal_sibling = c.masks.literal_sibling;
  c.toy.masks.prune_empty = c.masks.prune_empty;
  if (j.contains("toy")) {
    const json& t = j.at("toy");
    check_keys(t,
               {"task", "k", "train", "dev", "test", "min_len", "max_len", "data_seed", "max_dist", "learning_rate",
                "epochs", "batch_size", "modes"},
               "toy.");
    if (t.contains("task")) {
      std::string task;
      read(t, "task", task);
      c.toy_data.task = toy_task_from_string(task);
    }
    read(t, "k", c.toy_data.k);
    read(t, "train", c.toy_data.train);
    read(t, "dev", c.toy_data.dev);
    read(t, "test", c.toy_data.test);
    read(t, "min_len", c.toy_data.min_len);
    read(t, "max_len", c.toy_data.max_len);
    read(t, "data_seed", c.toy_data.seed);
    read(t, "max_dist", c.toy.masks.max_dist);
    read(t, "learning_rate", c.toy.learning_rate);
    read(t, "epochs", c.toy.epochs);
    read(t, "batch_size", c.toy.batch_size);
    if (t.contains("modes")) {
      std::vector<std::string> modes;
      read(t, "modes", modes);
      c.toy_modes.clear();
      for (const auto& m : modes) c.toy_modes.push_back(mask_source_from_string(m));
    }
  }

  auto path = [&](const char* key, std::optional<std::string>& dst) {
    if (j.contains(key)) {
      std::string v;
      read(j, key, v);
      dst = v;
    }
  };
  path("input", c.input);
  path("params", c.params);
  path("embeddings", c.embeddings);
  path("trees", c.trees);
  path("output", c.output);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(parse_json_text(read_file(path), path));
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Syntax-tree masked attention toolkit"};
  app.require_subcommand(1);
  app.footer(kConfigHelp);

  std::string format;
  std::vector<std::string> inputs;
  bool pair = false;

  auto* parse = app.add_subcommand("parse", "Parse CoNLL-U or bracketed trees into canonical tree JSON");
  std::string parse_in;
  std::optional<std::string> parse_out;
  parse->add_option("--format", format, "conllu or ptb")->required();
  parse->add_option("input", parse_in, "Input file")->required();
  parse->add_option("--out", parse_out, "Write the result to this file instead of stdout");

  Overrides mask_o;
  auto* masks = app.add_subcommand("masks", "Emit the syntax mask set of one sentence (or a pair)");
  add_common(masks, mask_o);
  masks->add_option("--format", format, "Force input format (conllu, ptb, json)");
  masks->add_flag("--pair", pair, "Use the first two sentences as a sentence pair");
  masks->add_option("inputs", inputs, "Tree files, one per tree kind");

  Overrides attend_o;
  std::optional<std::string> params_path, save_params;
  auto* attend = app.add_subcommand("attend", "Run the syntax block and dump attention maps as JSON");
  add_common(attend, attend_o);
  attend->add_option("--format", format, "Force input format (conllu, ptb, json)");
  attend->add_flag("--pair", pair, "Use the first two sentences as a sentence pair");
  attend->add_option("--params", params_path, "Parameter checkpoint to load");
  attend->add_option("--save-params", save_params, "Write the parameters used to this checkpoint file");
  attend->add_option("inputs", inputs, "Tree files, one per tree kind");

  Overrides probe_o;
  std::optional<std::string> emb_path, trees_path;
  auto* probe = app.add_subcommand("probe", "Train a structural probe and report UUAS / Spearman");
  add_common(probe, probe_o);
  probe->add_option("--embeddings", emb_path, "JSON array of n x d embedding matrices");
  probe->add_option("--trees", trees_path, "Gold dependency trees (CoNLL-U or tree JSON)");
  probe->add_option("--format", format, "Force the tree file format");

  Overrides toy_o;
  auto* toy = app.add_subcommand("toytrain", "Run the synthetic syntax/random/full mask experiment");
  add_common(toy, toy_o);

  Overrides bench_o;
  std::size_t bench_n = 128, repeat = 1;
  double density = 0.05;
  auto* bench = app.add_subcommand("bench", "Compare dense and sparse masked attention");
  add_common(bench, bench_o);
  bench->add_option("--n", bench_n, "Token count");
  bench->add_option("--density", density, "Off-diagonal mask density in [0, 1]");
  bench->add_option("--repeat", repeat, "Timing repetitions")->check(CLI::PositiveNumber);

  std::vector<std::string> argv_store{"treeattn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
  }

  try {
    std::string result;
    std::optional<std::string> dest;
    if (*parse) {
      result = cmd_parse(format, parse_in);
      dest = parse_out;
    } else if (*masks) {
      auto cfg = resolve(mask_o);
      if (inputs.empty() && cfg.input) inputs.push_back(*cfg.input);
      result = cmd_masks(cfg, inputs, format, pair, err);
      dest = cfg.output;
    } else if (*attend) {
      auto cfg = resolve(attend_o);
      if (params_path) cfg.params = params_path;
      if (inputs.empty() && cfg.input) inputs.push_back(*cfg.input);
      result = cmd_attend(cfg, inputs, format, pair, save_params);
      dest = cfg.output;
    } else if (*probe) {
      auto cfg = resolve(probe_o);
      if (emb_path) cfg.embeddings = emb_path;
      if (trees_path) cfg.trees = trees_path;
      if (probe_o.seed) cfg.probe.seed = *probe_o.seed;
      result = cmd_probe(cfg, format);
      dest = cfg.output;
    } else if (*toy) {
      auto cfg = resolve(toy_o);
      result = cmd_toytrain(cfg);
      dest = cfg.output;
    } else if (*bench) {
      auto cfg = resolve(bench_o);
      result = cmd_bench(cfg, bench_n, density, repeat);
      dest = cfg.output;
    }
    emit(result, dest, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  }
}

}  // namespace treeattn
