#include "lgre_cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lgre/baseline.hpp"
#include "lgre/bench.hpp"
#include "lgre/checkpoint.hpp"
#include "lgre/errors.hpp"
#include "lgre/evaluate.hpp"
#include "lgre/synthetic.hpp"
#include "lgre/train.hpp"
#include "lgre/util.hpp"
#include "lgre_cli/manifest.hpp"

namespace lgre::cli {

namespace {

namespace fs = std::filesystem;

const std::vector<double> kDefaultAlphaGrid{1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 0.1};
const std::vector<std::string> kVariants{"full", "no_ru", "no_agb", "no_tl"};

/// Flag values for every TrainConfig key, applied after file and environment.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "flat key=value config file");
    const TrainConfig defaults;
    for (const std::string& key : TrainConfig::keys()) {
      const std::string current = defaults.get(key);
      if (current == "true" || current == "false") {
        options[key] = app->add_flag("--" + key + "{true}", values[key], "default " + current);
      } else {
        options[key] = app->add_option("--" + key, values[key], "default " + current);
      }
    }
  }

  /// defaults < base (config file or manifest) < LGRE_* environment < flags
  TrainConfig resolve(const TrainConfig& base = TrainConfig{}) const {
    TrainConfig c = base;
    if (!config_file.empty()) {
      if (!fs::exists(config_file)) throw IoError("config file '" + config_file + "' not found");
      c.apply_file(config_file);
    }
    c.apply_environment();
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) c.set(key, values.at(key));
    c.validate();
    return c;
  }
};

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void print_summary_table(std::ostream& out, const RankReport& report) {
  out << "split " << report.split << ", filter " << to_string(report.filter) << ", " << report.overall.count
      << " queries\n";
  out << std::left << std::setw(10) << "direction" << std::right << std::setw(8) << "count" << std::setw(9) << "MRR"
      << std::setw(9) << "H@1" << std::setw(9) << "H@3" << std::setw(9) << "H@10" << "\n";
  auto row = [&](const char* name, const MetricSummary& s) {
    out << std::left << std::setw(10) << name << std::right << std::setw(8) << s.count << std::setw(9) << fixed(s.mrr)
        << std::setw(9) << fixed(s.hits1) << std::setw(9) << fixed(s.hits3) << std::setw(9) << fixed(s.hits10)
        << "\n";
  };
  row("object", report.object);
  row("subject", report.subject);
  row("overall", report.overall);
}

struct TrainOutcome {
  TrainResult result;
  fs::path checkpoint;
};

/// Trains into run_dir: manifest first, then one log line per epoch, then the
/// best checkpoint. On divergence the last good parameters are saved before
/// the error propagates.
TrainOutcome train_into(const fs::path& run_dir, const TrainConfig& config, const fs::path& data_dir,
                        const Dataset& dataset, const std::string& command, std::ostream& out) {
  prepare_run_directory(run_dir);
  RunManifest manifest;
  manifest.command = command;
  manifest.config = config;
  manifest.dataset = fs::absolute(data_dir).lexically_normal();
  manifest.fingerprint = fingerprint_dataset(data_dir);
  manifest.artifacts = {{"log", "log.jsonl"}, {"checkpoint", "checkpoint"}};
  write_text_file(run_dir / "manifest.txt", manifest.to_text());

  std::ofstream log(run_dir / "log.jsonl");
  if (!log) throw IoError("cannot write '" + (run_dir / "log.jsonl").string() + "'");
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    log << epoch_json(r) << "\n";
    log.flush();
    out << "epoch " << r.epoch << " loss " << fixed(r.total, 6);
    if (r.val_mrr) out << " val_mrr " << fixed(*r.val_mrr);
    out << "\n";
  };

  TrainOutcome outcome;
  outcome.checkpoint = run_dir / "checkpoint";
  try {
    outcome.result = train(config, dataset, hooks);
  } catch (const TrainingDiverged& e) {
    save_checkpoint(outcome.checkpoint, config, e.last_good());
    throw;
  }
  save_checkpoint(outcome.checkpoint, config, outcome.result.best);
  return outcome;
}

/// A directory holding a checkpoint, either directly or as <run>/checkpoint.
struct CheckpointSource {
  fs::path checkpoint;
  std::optional<RunManifest> run;
};

CheckpointSource locate_checkpoint(const fs::path& path) {
  CheckpointSource src;
  if (fs::exists(path / "manifest.txt") && fs::exists(path / "checkpoint" / "manifest.txt")) {
    src.checkpoint = path / "checkpoint";
    src.run = RunManifest::read(path / "manifest.txt");
  } else {
    src.checkpoint = path;
  }
  return src;
}

fs::path resolve_data(const std::string& flag, const CheckpointSource& src) {
  if (!flag.empty()) return flag;
  if (src.run) return src.run->dataset;
  throw UsageError("--data is required when the checkpoint is not inside a run directory");
}

void write_or_print(const std::string& file, const std::string& content, std::ostream& out) {
  if (file.empty() || file == "-") {
    out << content;
  } else {
    write_text_file(file, content);
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  for (const std::string& part : split(text, ',')) {
    const std::string item = trim(part);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("alpha grid entry '" + item + "' is not a number");
    }
  }
  return grid;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  for (const std::string& part : split(text, ',')) {
    const std::string item = trim(part);
    if (item.empty()) continue;
    try {
      sizes.push_back(static_cast<std::size_t>(std::stoull(item)));
    } catch (const std::exception&) {
      throw UsageError("batch size '" + item + "' is not a positive integer");
    }
  }
  return sizes;
}

// -- commands ---------------------------------------------------------------

struct TrainArgs {
  ConfigFlags flags;
  std::string data;
  std::string out;
  std::string manifest;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig base;
  fs::path data = a.data;
  if (!a.manifest.empty()) {
    const RunManifest m = RunManifest::read(a.manifest);
    base = m.config;
    if (data.empty()) data = m.dataset;
    if (fingerprint_dataset(data) != m.fingerprint) {
      throw IntegrityError("dataset at '" + data.string() + "' does not match the manifest fingerprint " +
                           m.fingerprint.hash);
    }
  }
  if (data.empty()) throw UsageError("train needs --data or --manifest");
  const TrainConfig config = a.flags.resolve(base);
  const Dataset dataset = load_dataset(data, config.granularity);
  const TrainOutcome o = train_into(a.out, config, data, dataset, "train", out);
  out << "run directory " << a.out << "\n";
  if (o.result.best_val_mrr) {
    out << "best validation MRR " << fixed(*o.result.best_val_mrr) << " at epoch " << o.result.best_epoch << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string filter;
  std::string json;
  std::string ranks;
  std::size_t threads = 0;
  bool baseline = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const CheckpointSource src = locate_checkpoint(a.checkpoint);
  const Checkpoint ckpt = load_checkpoint(src.checkpoint);
  const fs::path data = resolve_data(a.data, src);
  const Dataset dataset = load_dataset(data, ckpt.config.granularity);
  const FilterIndex filters = build_filter_index(dataset);

  std::vector<FilterMode> modes;
  if (a.filter == "all") {
    modes = {FilterMode::raw, FilterMode::static_, FilterMode::time_aware};
  } else {
    modes = {a.filter.empty() ? ckpt.config.eval_filter : parse_filter_mode(a.filter)};
  }

  nlohmann::json reports = nlohmann::json::object();
  std::string ranks;
  for (FilterMode mode : modes) {
    EvalOptions opts{mode, a.threads > 0 ? a.threads : ckpt.config.eval_threads, ckpt.config.eval_batch};
    const RankReport report = a.baseline ? frequency_baseline(dataset, filters, a.split, opts)
                                         : evaluate(ckpt.params, dataset, filters, a.split,
                                                    ckpt.config.model_options(), opts);
    print_summary_table(out, report);
    reports[to_string(mode)] = nlohmann::json::parse(report_json(report));
    if (ranks.empty()) ranks = ranks_csv(report, dataset);
  }
  std::string json_path = a.json;
  if (json_path.empty() && src.run) json_path = (fs::path(a.checkpoint) / ("eval_" + a.split + ".json")).string();
  if (!json_path.empty()) {
    write_text_file(json_path, reports.dump(2) + "\n");
    out << "report written to " << json_path << "\n";
  }
  if (!a.ranks.empty()) write_text_file(a.ranks, ranks);
  return 0;
}

struct AblateArgs {
  ConfigFlags flags;
  std::string data;
  std::string out;
  std::string split = "test";
  std::vector<std::string> variants = kVariants;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  for (const std::string& v : a.variants)
    if (std::find(kVariants.begin(), kVariants.end(), v) == kVariants.end())
      throw UsageError("unknown ablation variant '" + v + "' (expected full, no_ru, no_agb or no_tl)");
  if (a.variants.size() < 2) throw UsageError("ablate needs at least two variants to compare");
  const TrainConfig base = a.flags.resolve();
  const Dataset dataset = load_dataset(a.data, base.granularity);
  const FilterIndex filters = build_filter_index(dataset);
  prepare_run_directory(a.out);

  struct Row {
    std::string variant;
    MetricSummary metrics;
  };
  std::vector<Row> rows;
  for (const std::string& variant : a.variants) {
    TrainConfig c = base;
    if (variant != "full") c.set(variant, "true");
    out << "== " << variant << "\n";
    try {
      const TrainOutcome o = train_into(fs::path(a.out) / variant, c, a.data, dataset, "ablate", out);
      const RankReport report = evaluate(o.result.best, dataset, filters, a.split, c.model_options(),
                                         EvalOptions{c.eval_filter, c.eval_threads, c.eval_batch});
      rows.push_back({variant, report.overall});
    } catch (const DivergenceError& e) {
      err << "variant " << variant << " failed: " << e.what() << "\n";
    }
  }
  if (rows.size() < 2) {
    throw DivergenceError("only " + std::to_string(rows.size()) + " ablation variant(s) completed; refusing to tabulate");
  }

  std::string csv = "variant,mrr,hits1,hits3,hits10\n";
  nlohmann::json j = nlohmann::json::array();
  out << "split " << a.split << ", filter " << to_string(base.eval_filter) << "\n";
  out << std::left << std::setw(8) << "variant" << std::right << std::setw(9) << "MRR" << std::setw(9) << "H@1"
      << std::setw(9) << "H@3" << "\n";
  for (const Row& r : rows) {
    out << std::left << std::setw(8) << r.variant << std::right << std::setw(9) << fixed(r.metrics.mrr)
        << std::setw(9) << fixed(r.metrics.hits1) << std::setw(9) << fixed(r.metrics.hits3) << "\n";
    csv += r.variant + "," + format_double(r.metrics.mrr) + "," + format_double(r.metrics.hits1) + "," +
           format_double(r.metrics.hits3) + "," + format_double(r.metrics.hits10) + "\n";
    j.push_back({{"variant", r.variant},
                 {"mrr", r.metrics.mrr},
                 {"hits1", r.metrics.hits1},
                 {"hits3", r.metrics.hits3},
                 {"hits10", r.metrics.hits10}});
  }
  write_text_file(fs::path(a.out) / "ablation.csv", csv);
  write_text_file(fs::path(a.out) / "ablation.json", j.dump(2) + "\n");
  return 0;
}

struct SweepArgs {
  ConfigFlags flags;
  std::string data;
  std::string out;
  std::optional<std::string> grid;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const std::vector<double> grid = a.grid ? parse_grid(*a.grid) : kDefaultAlphaGrid;
  if (grid.empty()) throw UsageError("alpha grid is empty");
  const TrainConfig base = a.flags.resolve();
  const Dataset dataset = load_dataset(a.data, base.granularity);
  if (dataset.valid.empty()) throw UsageError("sweep-alpha needs a non-empty validation split");
  const FilterIndex filters = build_filter_index(dataset);
  prepare_run_directory(a.out);

  std::vector<double> mrr;
  for (double alpha : grid) {
    TrainConfig c = base;
    c.alpha = alpha;
    c.validate();
    out << "== alpha " << format_double(alpha) << "\n";
    const TrainOutcome o =
        train_into(fs::path(a.out) / ("alpha_" + format_double(alpha)), c, a.data, dataset, "sweep-alpha", out);
    const RankReport report = evaluate(o.result.best, dataset, filters, "valid", c.model_options(),
                                       EvalOptions{c.eval_filter, c.eval_threads, c.eval_batch});
    mrr.push_back(report.overall.mrr);
  }
  const std::size_t best = static_cast<std::size_t>(std::max_element(mrr.begin(), mrr.end()) - mrr.begin());
  std::string csv = "alpha,val_mrr,best\n";
  out << std::left << std::setw(10) << "alpha" << std::right << std::setw(10) << "val_MRR" << "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << std::left << std::setw(10) << format_double(grid[i]) << std::right << std::setw(10) << fixed(mrr[i])
        << (i == best ? "  *" : "") << "\n";
    csv += format_double(grid[i]) + "," + format_double(mrr[i]) + "," + (i == best ? "1" : "0") + "\n";
  }
  write_text_file(fs::path(a.out) / "sweep.csv", csv);
  return 0;
}

struct SynthArgs {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec = read_synthetic_spec(a.spec);
  if (a.seed) spec.seed = *a.seed;
  const SyntheticDataset data = generate_synthetic(spec);
  prepare_run_directory(a.out);
  write_synthetic(data, a.out);
  out << "wrote " << data.train.size() << " train, " << data.valid.size() << " valid, " << data.test.size()
      << " test facts and " << data.rules.size() << " rules to " << a.out << "\n";
  return 0;
}

struct ExportArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test";
  std::string out;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const CheckpointSource src = locate_checkpoint(a.checkpoint);
  const Checkpoint ckpt = load_checkpoint(src.checkpoint);
  const Dataset dataset = load_dataset(resolve_data(a.data, src), ckpt.config.granularity);
  const auto rows = granularity_weights(ckpt.params, dataset, a.split, ckpt.config.model_options());
  write_or_print(a.out, weights_csv(rows, dataset), out);
  return 0;
}

struct BenchArgs {
  ConfigFlags flags;
  std::string spec;
  std::string batches = "64,128,256,512";
  std::size_t steps = 3;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  SyntheticSpec spec;
  if (!a.spec.empty()) {
    spec = read_synthetic_spec(a.spec);
  } else {
    spec.entities = 1000;
    spec.relations = 20;
    spec.days = 28;
    spec.facts = 8000;
    spec.rule_fraction = 0.0;
  }
  const TrainConfig config = a.flags.resolve();
  const Dataset dataset = to_dataset(generate_synthetic(spec));
  const std::vector<std::size_t> sizes = parse_sizes(a.batches);
  if (sizes.empty()) throw UsageError("no batch sizes given");
  out << bench_text(bench(config, dataset, sizes, a.steps));
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal knowledge graph completion with multi-granularity time encoding", "lgre"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model into a new run directory");
  train_args.flags.attach(train_cmd);
  train_cmd->add_option("--data", train_args.data, "dataset directory with train/valid/test.txt");
  train_cmd->add_option("--out", train_args.out, "run directory to create")->required();
  train_cmd->add_option("--manifest", train_args.manifest, "repeat the run described by a manifest");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint,--run", eval_args.checkpoint, "checkpoint or run directory")->required();
  eval_cmd->add_option("--data", eval_args.data, "dataset directory (defaults to the run's)");
  eval_cmd->add_option("--split", eval_args.split, "train, valid or test")->capture_default_str();
  eval_cmd->add_option("--filter", eval_args.filter, "raw, static, time_aware or all (defaults to eval_filter)");
  eval_cmd->add_option("--json", eval_args.json, "write the JSON report here");
  eval_cmd->add_option("--ranks", eval_args.ranks, "write per-query ranks as CSV");
  eval_cmd->add_option("--threads", eval_args.threads, "evaluation threads (defaults to eval_threads)");
  eval_cmd->add_flag("--baseline", eval_args.baseline, "score with the frequency baseline instead of the model");

  AblateArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "train and compare full, no_ru, no_agb and no_tl");
  ablate_args.flags.attach(ablate_cmd);
  ablate_cmd->add_option("--data", ablate_args.data, "dataset directory")->required();
  ablate_cmd->add_option("--out", ablate_args.out, "directory for the variant runs")->required();
  ablate_cmd->add_option("--split", ablate_args.split, "split to compare on")->capture_default_str();
  ablate_cmd->add_option("--variants", ablate_args.variants, "subset of full,no_ru,no_agb,no_tl")->delimiter(',');

  SweepArgs sweep_args;
  std::string grid_text;
  auto* sweep_cmd = app.add_subcommand("sweep-alpha", "train over a grid of temporal loss weights");
  sweep_args.flags.attach(sweep_cmd);
  sweep_cmd->add_option("--data", sweep_args.data, "dataset directory")->required();
  sweep_cmd->add_option("--out", sweep_args.out, "directory for the sweep runs")->required();
  auto* grid_opt = sweep_cmd->add_option("--grid", grid_text, "comma-separated alpha values");

  SynthArgs synth_args;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset with planted rules");
  synth_cmd->add_option("--spec", synth_args.spec, "synthetic spec file")->required();
  synth_cmd->add_option("--out", synth_args.out, "output directory")->required();
  auto* seed_opt = synth_cmd->add_option("--seed", synth_seed, "override the spec seed");

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export-weights", "write per-query granularity weights as CSV");
  export_cmd->add_option("--checkpoint,--run", export_args.checkpoint, "checkpoint or run directory")->required();
  export_cmd->add_option("--data", export_args.data, "dataset directory (defaults to the run's)");
  export_cmd->add_option("--split", export_args.split, "train, valid or test")->capture_default_str();
  export_cmd->add_option("--out", export_args.out, "CSV file (stdout when omitted)");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "time training steps across batch sizes");
  bench_args.flags.attach(bench_cmd);
  bench_cmd->add_option("--spec", bench_args.spec, "synthetic spec (defaults to 1000 entities, 8000 facts)");
  bench_cmd->add_option("--batches", bench_args.batches, "comma-separated batch sizes")->capture_default_str();
  bench_cmd->add_option("--steps", bench_args.steps, "timed steps per batch size")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    if (app.get_subcommands().empty()) err << app.help();
    return exit_code(ErrorKind::usage);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, out);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, out);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_args, out, err);
    if (sweep_cmd->parsed()) {
      if (grid_opt->count() > 0) sweep_args.grid = grid_text;
      return cmd_sweep(sweep_args, out);
    }
    if (synth_cmd->parsed()) {
      if (seed_opt->count() > 0) synth_args.seed = synth_seed;
      return cmd_synth(synth_args, out);
    }
    if (export_cmd->parsed()) return cmd_export(export_args, out);
    if (bench_cmd->parsed()) return cmd_bench(bench_args, out);
  } catch (const Error& e) {
    err << "lgre: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code(ErrorKind::usage);
}

}  // namespace lgre::cli
