// Command-line front end: generate, train, evaluate, rank, compare, ablate.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "floodaid/errors.hpp"
#include "floodaid/pipeline.hpp"
#include "floodaid/serialize.hpp"

namespace fs = std::filesystem;
using namespace floodaid;

namespace {

// Flags that map onto config keys; applied after the config file.
struct FlagSet {
  struct Entry {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
  };
  std::vector<std::unique_ptr<Entry>> entries;

  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto e = std::make_unique<Entry>();
    e->key = key;
    e->option = app->add_option(flag, e->value, help);
    entries.push_back(std::move(e));
  }

  bool given(const std::string& key) const {
    for (const auto& e : entries)
      if (e->key == key && e->option->count() > 0) return true;
    return false;
  }
};

struct Command {
  CLI::App* app = nullptr;
  FlagSet flags;
  std::string config_path;
  bool quiet = false;
  // Keys that satisfy the seed requirement of a randomized command.
  std::vector<std::string> seed_keys;
};

void add_shared(Command& cmd) {
  cmd.flags.add(cmd.app, "--seed", "seed", "Seed for every random stream");
  cmd.app->add_option("--config", cmd.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd.flags.add(cmd.app, "--out-dir", "out_dir", "Output directory");
  cmd.app->add_flag("--quiet", cmd.quiet, "Suppress the summary and warnings");
}

RunConfig resolve(const Command& cmd) {
  RunConfig config;
  std::set<std::string> keys;
  if (!cmd.config_path.empty()) {
    std::ifstream in(cmd.config_path);
    if (!in) throw UsageError("cannot open config file " + cmd.config_path);
    for (const auto& [k, v] : parse_key_values(in, cmd.config_path)) {
      apply_setting(config, k, v);
      keys.insert(k);
    }
  }
  for (const auto& e : cmd.flags.entries)
    if (e->option->count() > 0) {
      apply_setting(config, e->key, e->value);
      keys.insert(e->key);
    }
  if (!cmd.seed_keys.empty() &&
      std::none_of(cmd.seed_keys.begin(), cmd.seed_keys.end(), [&](const auto& k) { return keys.contains(k); })) {
    const auto& k = cmd.seed_keys.front();
    throw UsageError("this command is randomized: pass --" + k + " or set '" + k + "' in the config file");
  }
  if (cmd.quiet) config.quiet = true;
  config.validate();
  set_warnings_enabled(!config.quiet);
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw UsageError("cannot create " + config.out_dir.string() + ": " + ec.message());
  return config;
}

void say(const RunConfig& config, const std::string& line) {
  if (!config.quiet) std::cout << line << '\n';
}

std::string fixed(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

Json stamped(std::string_view kind, const RunConfig& config) {
  Json doc = json_document(kind);
  doc["seed"] = config.train.seed;
  doc["config_hash"] = config_hash(to_json(config));
  return doc;
}

Dataset require_data(const RunConfig& config) {
  if (!config.data) throw UsageError("a dataset is required (--data or 'data' in the config file)");
  return load_csv(*config.data);
}

// ---- generate ------------------------------------------------------------

int run_generate(const Command& cmd, const std::string& name) {
  const RunConfig config = resolve(cmd);
  SyntheticConfig sc = config.synthetic;
  sc.seed = config.train.seed;
  const auto result = generate_synthetic(sc);
  const fs::path csv = config.out_dir / (name + ".csv");
  const fs::path manifest = config.out_dir / (name + ".manifest.json");
  write_csv(result.dataset, csv);
  write_json(synthetic_manifest(sc, result, csv.filename().string()), manifest);
  const auto y = result.dataset.targets();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  say(config, "wrote " + std::to_string(result.dataset.size()) + " rows, " +
                  std::to_string(result.dataset.num_districts()) + " districts to " + csv.string() +
                  " (mean damage " + fixed(mean, 2) + " USD M, seed " + std::to_string(sc.seed) + ")");
  return 0;
}

// ---- train ---------------------------------------------------------------

int run_train(const Command& cmd, const std::string& variant_arg) {
  RunConfig config = resolve(cmd);
  const Dataset data = require_data(config);
  const std::uint64_t seed = config.train.seed;

  std::vector<Variant> variants;
  if (variant_arg == "both") {
    variants = {Variant::kBaseline, Variant::kFair};
  } else if (!variant_arg.empty()) {
    const auto v = parse_variant(variant_arg);
    if (!v) throw UsageError("--variant must be fair, baseline or both");
    variants = {*v};
  } else {
    variants = {config.train.variant};
  }
  for (auto v : variants) {
    if (v == Variant::kBaseline && cmd.flags.given("lambda")) {
      warn("lambda is ignored for the baseline variant");
    }
  }

  const Split split = stratified_split(data, config.train_fraction, seed);
  write_csv(split.train, config.out_dir / "train.csv");
  write_csv(split.test, config.out_dir / "test.csv");
  Json split_doc = stamped("split", config);
  split_doc["train_fraction"] = config.train_fraction;
  split_doc["train_ids"] = split.train.ids();
  split_doc["test_ids"] = split.test.ids();
  write_json(split_doc, config.out_dir / "split.json");

  std::string curve(kTrainingCurveHeader);
  for (auto v : variants) {
    TrainConfig tc = config.train;
    tc.variant = v;
    const std::string label(variant_label(v));
    auto result = train(split.train, tc);
    save_checkpoint(result.model, tc, result.training_ids, config.out_dir / (label + ".ckpt"));
    write_training_log_csv(result.log, config.out_dir / (label + "_log.csv"));
    Json log_doc = stamped("training_log", config);
    log_doc["variant"] = label;
    log_doc["lambda"] = v == Variant::kFair ? tc.lambda : 0.0;
    log_doc["log"] = to_json(result.log);
    write_json(log_doc, config.out_dir / (label + "_log.json"));
    append_training_curve(curve, result.log, label);
    const auto& last = result.log.epochs.back();
    say(config, label + ": " + std::to_string(result.log.parameter_count) + " parameters, " +
                    std::to_string(result.log.epochs.size()) + " epochs, " +
                    std::to_string(result.log.steps) + " steps, final task loss " + fixed(last.task_loss, 4) +
                    ", " + fixed(last.seconds, 2) + " s");
  }
  write_text(curve, config.out_dir / "training_curve.csv");
  return 0;
}

// ---- evaluate ------------------------------------------------------------

void check_labels(const Checkpoint& ck, const Dataset& data, const std::string& what) {
  const auto& known = ck.model.district_labels();
  const std::set<std::string> labels(known.begin(), known.end());
  for (const auto& d : data.district_labels()) {
    if (!labels.contains(d)) {
      throw DataError("district-label mismatch: dataset district '" + d + "' is not known to " + what);
    }
  }
}

Json leakage_json(const Checkpoint& ck, const Dataset& data, const std::string& what) {
  const std::set<std::string> trained(ck.training_ids.begin(), ck.training_ids.end());
  std::size_t overlap = 0;
  for (const auto& id : data.ids()) overlap += trained.contains(id) ? 1 : 0;
  if (overlap > 0) {
    warn(std::to_string(overlap) + " evaluation rows were used to train " + what +
         "; metrics are not held-out estimates");
  }
  return Json{{"flag", overlap > 0}, {"overlapping_rows", overlap}, {"rows", data.size()}};
}

int run_evaluate(const Command& cmd, const std::string& checkpoint, const std::string& baseline_path) {
  const RunConfig config = resolve(cmd);
  const Dataset data = require_data(config);
  Checkpoint ck = load_checkpoint(checkpoint);
  check_labels(ck, data, checkpoint);

  Json doc = stamped("evaluation", config);
  doc["seed"] = ck.config.seed;
  doc["checkpoint"] = checkpoint;
  doc["checkpoint_config_hash"] = ck.config_hash;
  doc["data"] = config.data->string();
  doc["variant"] = variant_label(ck.model.config().variant);
  doc["leakage"] = leakage_json(ck, data, checkpoint);
  const Evaluation ev = evaluate(ck.model, data);
  doc["performance"] = to_json(ev.performance);
  doc["fairness"] = to_json(ev.fairness);

  std::string districts(kDistrictHeader);
  append_district_rows(districts, ev.fairness, data, variant_label(ck.model.config().variant));

  if (!baseline_path.empty()) {
    Checkpoint base = load_checkpoint(baseline_path);
    check_labels(base, data, baseline_path);
    const Evaluation bev = evaluate(base.model, data);
    doc["baseline"] = {{"checkpoint", baseline_path},
                       {"checkpoint_config_hash", base.config_hash},
                       {"leakage", leakage_json(base, data, baseline_path)},
                       {"performance", to_json(bev.performance)},
                       {"fairness", to_json(bev.fairness)}};
    doc["comparison"] = comparison_json(ev, bev);
    append_district_rows(districts, bev.fairness, data, "reference");
    say(config, "SPD " + fixed(ev.fairness.spd) + " vs " + fixed(bev.fairness.spd) + " (" +
                    fixed(improvement_pct(ev.fairness.spd, bev.fairness.spd), 1) + "% lower), R2 " +
                    fixed(ev.performance.r2) + " vs " + fixed(bev.performance.r2));
  } else {
    say(config, "R2 " + fixed(ev.performance.r2) + ", MAE " + fixed(ev.performance.mae) + ", SPD " +
                    fixed(ev.fairness.spd) + ", regional gap " + fixed(ev.fairness.regional_gap));
  }
  write_json(doc, config.out_dir / "evaluation.json");
  write_text(districts, config.out_dir / "district_mae.csv");
  return 0;
}

// ---- rank / compare ------------------------------------------------------

int run_rank(const Command& cmd, const std::string& checkpoint, const std::string& context_path,
             const std::string& name) {
  const RunConfig config = resolve(cmd);
  const Dataset data = require_data(config);
  Checkpoint ck = load_checkpoint(checkpoint);
  check_labels(ck, data, checkpoint);
  std::optional<Dataset> context;
  if (!context_path.empty()) context = load_csv(context_path);
  const auto ranking = rank_dataset(ck.model, data, context ? &*context : nullptr);
  const fs::path csv = config.out_dir / (name + ".csv");
  write_ranking_csv(ranking, csv);
  Json doc = stamped("ranking", config);
  doc["seed"] = ck.config.seed;
  doc["checkpoint"] = checkpoint;
  doc["checkpoint_config_hash"] = ck.config_hash;
  doc["data"] = config.data->string();
  doc["vulnerability_context"] = context_path.empty() ? config.data->string() : context_path;
  doc["csv"] = csv.filename().string();
  doc["rows"] = ranking.size();
  write_json(doc, config.out_dir / (name + ".json"));
  say(config, "ranked " + std::to_string(ranking.size()) + " upazilas into " + csv.string());
  return 0;
}

std::string signed_fixed(const std::optional<double>& v) {
  if (!v) return "n/a";
  return (*v >= 0 ? "+" : "") + fixed(*v, 2);
}

int run_compare(const Command& cmd, const std::string& reference, const std::string& candidate) {
  const RunConfig config = resolve(cmd);
  const auto ref = load_ranking_csv(reference);
  const auto cand = load_ranking_csv(candidate);
  std::optional<std::map<std::string, double>> poverty;
  if (config.data) poverty = poverty_by_id(load_csv(*config.data));
  const auto report = compare_rankings(ref, cand, poverty ? &*poverty : nullptr);
  Json doc = stamped("rank_shift", config);
  doc["reference"] = reference;
  doc["candidate"] = candidate;
  doc["report"] = to_json(report);
  write_json(doc, config.out_dir / "rank_shift.json");
  say(config, fixed(report.pct_reranked, 1) + "% reranked (" + fixed(report.pct_reranked_3plus, 1) +
                  "% by 3+), Pearson " + fixed(report.score_correlation) + ", Spearman " +
                  fixed(report.rank_correlation) + ", Haor shift " + signed_fixed(report.mean_shift_haor) +
                  ", high-poverty shift " + signed_fixed(report.mean_shift_high_poverty) + ", top tier +" +
                  std::to_string(report.entered_top_tier) + "/-" + std::to_string(report.left_top_tier));
  return 0;
}

// ---- ablate --------------------------------------------------------------

int run_ablate(const Command& cmd) {
  const RunConfig config = resolve(cmd);
  const fs::path runs_path = config.out_dir / "ablation_runs.csv";
  std::vector<AblationRun> done;
  const auto result = run_ablation(config, [&](const AblationRun& run) {
    done.push_back(run);
    write_text(ablation_runs_csv(done), runs_path);
    if (!run.ok) warn("lambda " + format_double(run.lambda) + ", seed " + std::to_string(run.seed) +
                      " failed: " + run.error);
  });
  write_text(ablation_csv(result.rows), config.out_dir / "ablation.csv");
  write_text(ablation_curve_csv(result.rows), config.out_dir / "ablation_curve.csv");
  Json doc = stamped("ablation", config);
  doc["seeds"] = config.seeds;
  doc["lambdas"] = config.lambdas;
  doc.update(to_json(result));
  write_json(doc, config.out_dir / "ablation.json");
  say(config, "lambda      R2     MAE     SPD     RFG  runs");
  for (const auto& r : result.rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%6.2f  %6.3f  %6.3f  %6.3f  %6.3f  %4zu", r.lambda, r.r2, r.mae, r.spd,
                  r.regional_gap, r.runs);
    say(config, line);
  }
  for (const auto& run : result.runs) {
    if (!run.ok) return static_cast<int>(ExitCode::kNumeric);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware flood damage prediction and aid prioritization"};
  app.require_subcommand(1);

  Command gen{app.add_subcommand("generate", "Write a synthetic dataset and its manifest")};
  add_shared(gen);
  gen.seed_keys = {"seed"};
  std::string gen_name = "synthetic";
  gen.app->add_option("--name", gen_name, "Output file stem");
  gen.flags.add(gen.app, "--n-upazilas", "n_upazilas", "Row count");
  gen.flags.add(gen.app, "--n-districts", "n_districts", "District count");
  gen.flags.add(gen.app, "--haor-fraction", "haor_fraction", "Share of Haor rows");
  gen.flags.add(gen.app, "--bias-strength", "district_bias_strength", "Injected district offset scale, USD M");
  gen.flags.add(gen.app, "--noise-sd", "noise_sd", "Damage noise SD, USD M");

  Command tr{app.add_subcommand("train", "Train fair and/or baseline models")};
  add_shared(tr);
  tr.seed_keys = {"seed"};
  std::string variant;
  tr.flags.add(tr.app, "--data", "data", "Dataset CSV");
  tr.app->add_option("--variant", variant, "fair, baseline or both");
  tr.flags.add(tr.app, "--lambda", "lambda", "Adversarial weight");
  tr.flags.add(tr.app, "--epochs", "epochs", "Epoch count");
  tr.flags.add(tr.app, "--batch-size", "batch_size", "Batch size");
  tr.flags.add(tr.app, "--lr", "lr", "Learning rate");
  tr.flags.add(tr.app, "--train-fraction", "train_fraction", "Share of each district used for training");

  Command ev{app.add_subcommand("evaluate", "Performance and fairness reports for a checkpoint")};
  add_shared(ev);
  std::string checkpoint, baseline;
  ev.flags.add(ev.app, "--data", "data", "Dataset CSV");
  ev.app->add_option("--checkpoint", checkpoint, "Checkpoint manifest")->required();
  ev.app->add_option("--baseline", baseline, "Reference checkpoint for improvement percentages");

  Command rk{app.add_subcommand("rank", "Priority ranking CSV")};
  add_shared(rk);
  std::string rank_ckpt, context, rank_name = "ranking";
  rk.flags.add(rk.app, "--data", "data", "Dataset CSV to rank");
  rk.app->add_option("--checkpoint", rank_ckpt, "Checkpoint manifest")->required();
  rk.app->add_option("--context", context, "Dataset whose ranges normalize vulnerability");
  rk.app->add_option("--name", rank_name, "Output file stem");

  Command cmp{app.add_subcommand("compare", "Rank-shift report between two rankings")};
  add_shared(cmp);
  std::string reference, candidate;
  cmp.app->add_option("--reference", reference, "Reference ranking CSV")->required();
  cmp.app->add_option("--candidate", candidate, "Candidate ranking CSV")->required();
  cmp.flags.add(cmp.app, "--data", "data", "Dataset CSV supplying poverty rates");

  Command ab{app.add_subcommand("ablate", "Sweep lambda over seeds")};
  add_shared(ab);
  ab.seed_keys = {"seeds"};
  ab.flags.add(ab.app, "--data", "data", "Dataset CSV; synthetic per seed when absent");
  ab.flags.add(ab.app, "--lambdas", "lambdas", "Comma-separated lambda values");
  ab.flags.add(ab.app, "--seeds", "seeds", "Comma-separated seeds");
  ab.flags.add(ab.app, "--epochs", "epochs", "Epoch count");
  ab.flags.add(ab.app, "--jobs", "jobs", "Concurrent runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (gen.app->parsed()) return run_generate(gen, gen_name);
    if (tr.app->parsed()) return run_train(tr, variant);
    if (ev.app->parsed()) return run_evaluate(ev, checkpoint, baseline);
    if (rk.app->parsed()) return run_rank(rk, rank_ckpt, context, rank_name);
    if (cmp.app->parsed()) return run_compare(cmp, reference, candidate);
    if (ab.app->parsed()) return run_ablate(ab);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
  return static_cast<int>(ExitCode::kUsage);
}
