#include "floodaid/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include "floodaid/errors.hpp"

namespace floodaid {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw UsageError("config: " + key + " = '" + value + "' is not " + expected);
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad_value(key, value, "a finite number");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "a non-negative integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

std::vector<std::size_t> to_widths(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(value)) out.push_back(to_uint(key, item));
  if (out.empty()) bad_value(key, value, "a width list");
  return out;
}

// Overriding the size of a synthetic draw drops the named default layout.
void clear_layout(SyntheticConfig& c) {
  c.district_names.clear();
  c.district_sizes.clear();
  c.district_haor.clear();
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"data", [](RunConfig& c, const std::string&, const std::string& v) {
         if (v.empty()) c.data.reset(); else c.data = v;
       }},
      {"out_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.seed = c.synthetic.seed = to_uint(k, v);
       }},
      {"seeds", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) c.seeds.push_back(to_uint(k, s));
       }},
      {"lambdas", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.lambdas.clear();
         for (const auto& s : split_list(v)) c.lambdas.push_back(to_double(k, s));
       }},
      {"jobs", [](RunConfig& c, const std::string& k, const std::string& v) { c.jobs = to_uint(k, v); }},
      {"train_fraction", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train_fraction = to_double(k, v);
       }},
      {"quiet", [](RunConfig& c, const std::string& k, const std::string& v) { c.quiet = to_bool(k, v); }},
      {"variant", [](RunConfig& c, const std::string& k, const std::string& v) {
         const auto parsed = parse_variant(v);
         if (!parsed) bad_value(k, v, "fair or baseline");
         c.train.variant = *parsed;
       }},
      {"epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.epochs = static_cast<int>(to_uint(k, v));
       }},
      {"batch_size", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.batch_size = to_uint(k, v);
       }},
      {"lr", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr = to_double(k, v); }},
      {"weight_decay", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.weight_decay = to_double(k, v);
       }},
      {"lambda", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.lambda = to_double(k, v);
       }},
      {"scheduler_factor", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.scheduler.factor = to_double(k, v);
       }},
      {"scheduler_patience", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.scheduler.patience = static_cast<int>(to_uint(k, v));
       }},
      {"scheduler_threshold", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.scheduler.threshold = to_double(k, v);
       }},
      {"scheduler_min_lr", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.scheduler.min_lr = to_double(k, v);
       }},
      {"target_scale", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.target_scale = to_double(k, v);
       }},
      {"init_output_bias", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.init_output_bias = to_bool(k, v);
       }},
      {"encoder_widths", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.model.encoder_widths = to_widths(k, v);
       }},
      {"task_hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.model.task_hidden = to_widths(k, v);
       }},
      {"adversary_hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.model.adversary_hidden = to_widths(k, v);
       }},
      {"dropout", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.model.dropout = to_double(k, v);
       }},
      {"bn_momentum", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.model.bn_momentum = to_double(k, v);
       }},
      {"bn_epsilon", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train.model.bn_epsilon = to_double(k, v);
       }},
      {"n_upazilas", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.n_upazilas = to_uint(k, v);
         clear_layout(c.synthetic);
       }},
      {"n_districts", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.n_districts = to_uint(k, v);
         clear_layout(c.synthetic);
       }},
      {"haor_fraction", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.haor_fraction = to_double(k, v);
         clear_layout(c.synthetic);
       }},
      {"district_bias_strength", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.district_bias_strength = to_double(k, v);
       }},
      {"noise_sd", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.noise_sd = to_double(k, v);
       }},
      {"district_signature", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.district_signature = to_double(k, v);
       }},
      {"beta0", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.beta0 = to_double(k, v);
       }},
      {"beta_vulnerability", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.beta_vulnerability = to_double(k, v);
       }},
      {"beta_exposure", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synthetic.beta_exposure = to_double(k, v);
       }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (seeds.empty()) throw UsageError("config: at least one seed is required");
  if (lambdas.empty()) throw UsageError("config: at least one lambda is required");
  for (double l : lambdas)
    if (l < 0.0) throw UsageError("config: lambda values must be non-negative");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw UsageError("config: train_fraction must be in (0, 1)");
  if (jobs == 0) throw UsageError("config: jobs must be at least 1");
  try {
    train.validate();
    synthetic.validate();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in, std::string_view source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw UsageError(std::string(source) + ": line " + std::to_string(n) + ": expected key = value");
    }
    std::string key = trim(std::string_view(text).substr(0, eq));
    if (key.empty()) throw UsageError(std::string(source) + ": line " + std::to_string(n) + ": empty key");
    out.emplace_back(std::move(key), trim(std::string_view(text).substr(eq + 1)));
  }
  return out;
}

void apply_setting(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& [name, set] : setters()) {
    if (name == key) {
      set(config, key, value);
      return;
    }
  }
  throw UsageError("config: unknown key '" + key + "'");
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  for (const auto& [k, v] : parse_key_values(in, path.string())) apply_setting(config, k, v);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, set] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

Json to_json(const RunConfig& c) {
  return Json{{"data", c.data ? Json(c.data->string()) : Json(nullptr)},
              {"synthetic", to_json(c.synthetic)},
              {"train", to_json(c.train)},
              {"train_fraction", c.train_fraction},
              {"seeds", c.seeds},
              {"lambdas", c.lambdas}};
}

Dataset load_or_generate(const RunConfig& config, std::uint64_t seed) {
  if (config.data) return load_csv(*config.data);
  SyntheticConfig sc = config.synthetic;
  sc.seed = seed;
  return generate_synthetic(sc).dataset;
}

std::vector<PriorityEntry> rank_dataset(FairModel& model, const Dataset& data, const Dataset* context) {
  const auto predictions = predict(model, data);
  const NormContext ctx = compute_norm_context(context ? context->records() : data.records());
  std::vector<double> vulnerability;
  vulnerability.reserve(data.size());
  for (const auto& r : data.records()) vulnerability.push_back(engineer_features(r, ctx).vulnerability_score);
  const auto units = unit_info(data);
  return priority_scores(units, predictions, vulnerability);
}

std::map<std::string, double> poverty_by_id(const Dataset& data) {
  std::map<std::string, double> out;
  for (const auto& r : data.records()) out[r.upazila_id] = r.poverty_rate;
  return out;
}

Json comparison_json(const Evaluation& fair, const Evaluation& baseline) {
  auto row = [](double f, double b) {
    Json j{{"fair", f}, {"baseline", b}};
    j["improvement_pct"] = b > 0.0 ? Json(improvement_pct(f, b)) : Json(nullptr);
    return j;
  };
  Json j = Json::object();
  j["mse"] = row(fair.performance.mse, baseline.performance.mse);
  j["mae"] = row(fair.performance.mae, baseline.performance.mae);
  j["rmse"] = row(fair.performance.rmse, baseline.performance.rmse);
  j["r2"] = {{"fair", fair.performance.r2},
             {"baseline", baseline.performance.r2},
             {"delta", fair.performance.r2 - baseline.performance.r2}};
  j["spd"] = row(fair.fairness.spd, baseline.fairness.spd);
  j["prediction_variance"] = row(fair.fairness.prediction_variance, baseline.fairness.prediction_variance);
  j["regional_gap"] = row(fair.fairness.regional_gap, baseline.fairness.regional_gap);
  j["equal_opportunity"] = row(fair.fairness.equal_opportunity, baseline.fairness.equal_opportunity);
  j["mae_std_across_districts"] =
      row(fair.fairness.mae_std_across_districts, baseline.fairness.mae_std_across_districts);
  return j;
}

ExperimentResult run_experiment(const RunConfig& config, std::uint64_t seed) {
  ExperimentResult r;
  r.seed = seed;
  r.dataset = load_or_generate(config, seed);
  r.split = stratified_split(r.dataset, config.train_fraction, seed);

  TrainConfig tc = config.train;
  tc.seed = seed;
  tc.variant = Variant::kBaseline;
  r.baseline = train(r.split.train, tc);
  tc.variant = Variant::kFair;
  r.fair = train(r.split.train, tc);

  r.baseline_eval = evaluate(r.baseline.model, r.split.test);
  r.fair_eval = evaluate(r.fair.model, r.split.test);
  r.baseline_ranking = rank_dataset(r.baseline.model, r.split.test, &r.dataset);
  r.fair_ranking = rank_dataset(r.fair.model, r.split.test, &r.dataset);
  const auto poverty = poverty_by_id(r.dataset);
  r.rank_shift = compare_rankings(r.baseline_ranking, r.fair_ranking, &poverty);
  return r;
}

namespace {

AblationRun ablation_run(const RunConfig& config, const Split& split, double lambda, std::uint64_t seed) {
  AblationRun run;
  run.lambda = lambda;
  run.seed = seed;
  try {
    TrainConfig tc = config.train;
    tc.seed = seed;
    tc.variant = Variant::kFair;
    tc.lambda = lambda;
    auto trained = train(split.train, tc);
    const auto ev = evaluate(trained.model, split.test);
    run.performance = ev.performance;
    run.fairness = ev.fairness;
    run.ok = true;
  } catch (const Error& e) {
    run.error = e.what();
  }
  return run;
}

}  // namespace

AblationResult run_ablation(const RunConfig& config, const std::function<void(const AblationRun&)>& on_run) {
  config.validate();
  auto lambdas = config.lambdas;
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

  std::map<std::uint64_t, Split> splits;
  for (auto seed : config.seeds) {
    if (!splits.contains(seed)) {
      splits.emplace(seed, stratified_split(load_or_generate(config, seed), config.train_fraction, seed));
    }
  }

  std::vector<std::pair<double, std::uint64_t>> tasks;
  for (double l : lambdas)
    for (const auto& [seed, split] : splits) tasks.emplace_back(l, seed);

  AblationResult result;
  for (std::size_t start = 0; start < tasks.size(); start += config.jobs) {
    const std::size_t end = std::min(tasks.size(), start + config.jobs);
    std::vector<std::future<AblationRun>> pending;
    for (std::size_t i = start; i < end; ++i) {
      const auto [l, seed] = tasks[i];
      const auto policy = config.jobs > 1 ? std::launch::async : std::launch::deferred;
      pending.push_back(std::async(policy, [&config, &splits, l, seed] {
        return ablation_run(config, splits.at(seed), l, seed);
      }));
    }
    for (auto& f : pending) {
      result.runs.push_back(f.get());
      if (on_run) on_run(result.runs.back());
    }
  }
  result.rows = aggregate_ablation(result.runs);
  return result;
}

std::vector<AblationRow> aggregate_ablation(const std::vector<AblationRun>& runs) {
  std::map<double, AblationRow> by_lambda;
  for (const auto& run : runs) {
    auto& row = by_lambda[run.lambda];
    row.lambda = run.lambda;
    if (!run.ok) continue;
    row.r2 += run.performance.r2;
    row.mae += run.performance.mae;
    row.spd += run.fairness.spd;
    row.regional_gap += run.fairness.regional_gap;
    ++row.runs;
  }
  std::vector<AblationRow> rows;
  for (auto& [l, row] : by_lambda) {
    if (row.runs > 0) {
      const double n = static_cast<double>(row.runs);
      row.r2 /= n;
      row.mae /= n;
      row.spd /= n;
      row.regional_gap /= n;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string csv = "lambda,r2,mae,spd,regional_gap,runs\n";
  for (const auto& r : rows) {
    csv += format_double(r.lambda) + "," + format_double(r.r2) + "," + format_double(r.mae) + "," +
           format_double(r.spd) + "," + format_double(r.regional_gap) + "," + std::to_string(r.runs) + "\n";
  }
  return csv;
}

std::string ablation_runs_csv(const std::vector<AblationRun>& runs) {
  std::string csv = "lambda,seed,ok,r2,mae,spd,regional_gap,error\n";
  for (const auto& r : runs) {
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    csv += format_double(r.lambda) + "," + std::to_string(r.seed) + "," + (r.ok ? "true" : "false") + "," +
           (r.ok ? format_double(r.performance.r2) : "") + "," + (r.ok ? format_double(r.performance.mae) : "") +
           "," + (r.ok ? format_double(r.fairness.spd) : "") + "," +
           (r.ok ? format_double(r.fairness.regional_gap) : "") + "," + error + "\n";
  }
  return csv;
}

std::string ablation_curve_csv(const std::vector<AblationRow>& rows) {
  std::string csv = "lambda,metric,value\n";
  for (const auto& r : rows) {
    const std::string l = format_double(r.lambda);
    csv += l + ",r2," + format_double(r.r2) + "\n";
    csv += l + ",mae," + format_double(r.mae) + "\n";
    csv += l + ",spd," + format_double(r.spd) + "\n";
    csv += l + ",regional_gap," + format_double(r.regional_gap) + "\n";
  }
  return csv;
}

Json to_json(const AblationResult& result) {
  Json rows = Json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"lambda", r.lambda},
                    {"r2", r.r2},
                    {"mae", r.mae},
                    {"spd", r.spd},
                    {"regional_gap", r.regional_gap},
                    {"runs", r.runs}});
  }
  Json runs = Json::array();
  for (const auto& r : result.runs) {
    Json j{{"lambda", r.lambda}, {"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      j["performance"] = to_json(r.performance);
      j["fairness"] = to_json(r.fairness);
    } else {
      j["error"] = r.error;
    }
    runs.push_back(j);
  }
  return Json{{"rows", rows}, {"runs", runs}};
}

}  // namespace floodaid
