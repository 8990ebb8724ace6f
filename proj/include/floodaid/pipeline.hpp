#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "floodaid/dataset.hpp"
#include "floodaid/priority.hpp"
#include "floodaid/serialize.hpp"
#include "floodaid/synthetic.hpp"
#include "floodaid/trainer.hpp"

namespace floodaid {

// Everything a command needs. Built from defaults, then a key=value config
// file, then command-line flags, each layer overriding the previous one.
struct RunConfig {
  std::optional<std::filesystem::path> data;  // dataset CSV; synthetic when absent
  SyntheticConfig synthetic = default_synthetic_config();
  TrainConfig train{};
  double train_fraction = 0.8;
  std::filesystem::path out_dir = "out";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> lambdas{0.0, 0.5, 1.0, 2.0};
  std::size_t jobs = 1;  // concurrent ablation runs
  bool quiet = false;

  void validate() const;
};

// Config file grammar, one setting per line:
//   key = value      value runs to end of line, surrounding blanks trimmed
//   # comment        also allowed after a value
// Lists are comma separated. Unknown keys are usage errors.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in,
                                                                  std::string_view source);
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
// Keys accepted by apply_setting, in documentation order.
const std::vector<std::string>& config_keys();

Json to_json(const RunConfig& config);

// The dataset for one seed: the CSV when configured, else a synthetic draw
// with the given seed.
Dataset load_or_generate(const RunConfig& config, std::uint64_t seed);

// Predicts `data` and ranks it; vulnerability is normalized over `context`
// (defaults to `data` itself).
std::vector<PriorityEntry> rank_dataset(FairModel& model, const Dataset& data,
                                        const Dataset* context = nullptr);

std::map<std::string, double> poverty_by_id(const Dataset& data);

// Fair vs baseline metric table with improvement percentages.
Json comparison_json(const Evaluation& fair, const Evaluation& baseline);

struct ExperimentResult {
  std::uint64_t seed = 0;
  Dataset dataset;
  Split split;
  TrainResult baseline;
  TrainResult fair;
  Evaluation baseline_eval;  // on the test split
  Evaluation fair_eval;
  std::vector<PriorityEntry> baseline_ranking;  // test rows
  std::vector<PriorityEntry> fair_ranking;
  RankShiftReport rank_shift;  // baseline -> fair
};

// Generate or load, split, train both variants, evaluate and rank the test
// split. The fair model uses config.train.lambda.
ExperimentResult run_experiment(const RunConfig& config, std::uint64_t seed);

struct AblationRun {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  PerformanceReport performance;
  FairnessReport fairness;
};

// Means over the successful seeds of one lambda.
struct AblationRow {
  double lambda = 0.0;
  double r2 = 0.0;
  double mae = 0.0;
  double spd = 0.0;
  double regional_gap = 0.0;
  std::size_t runs = 0;
};

struct AblationResult {
  std::vector<AblationRun> runs;  // sorted by (lambda, seed)
  std::vector<AblationRow> rows;  // sorted by lambda
};

// Trains the fair variant for every (lambda, seed) pair and evaluates on the
// seed's test split. A failing run is recorded and the rest continue;
// `on_run` sees each finished run in (lambda, seed) order.
AblationResult run_ablation(const RunConfig& config,
                            const std::function<void(const AblationRun&)>& on_run = {});
std::vector<AblationRow> aggregate_ablation(const std::vector<AblationRun>& runs);

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string ablation_runs_csv(const std::vector<AblationRun>& runs);
// lambda,metric,value
std::string ablation_curve_csv(const std::vector<AblationRow>& rows);
Json to_json(const AblationResult& result);

}  // namespace floodaid
