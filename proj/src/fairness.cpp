#include "floodaid/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "floodaid/errors.hpp"

namespace floodaid {

namespace {

void require_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DataError(std::string(what) + ": input lengths differ");
  if (a == 0) throw DataError(std::string(what) + ": empty input");
}

double population_variance(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

double spread(std::span<const double> v, const char* what) {
  if (v.size() < 2) {
    warn(std::string(what) + ": only one group present, reporting 0");
    return 0.0;
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

}  // namespace

PerformanceReport performance_metrics(std::span<const double> actual,
                                      std::span<const double> predicted) {
  require_lengths(actual.size(), predicted.size(), "performance_metrics");
  const double n = static_cast<double>(actual.size());
  const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / n;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    ss_res += e * e;
    abs_sum += std::abs(e);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (ss_tot == 0.0) throw DataError("performance_metrics: actual values have zero variance, R^2 undefined");
  PerformanceReport r;
  r.mse = ss_res / n;
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(r.mse);
  r.r2 = 1.0 - ss_res / ss_tot;
  return r;
}

std::vector<double> group_means(std::span<const double> values, std::span<const int> groups) {
  require_lengths(values.size(), groups.size(), "group_means");
  const int k = *std::max_element(groups.begin(), groups.end()) + 1;
  std::vector<double> sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (groups[i] < 0) throw DataError("group_means: negative group id");
    sum[groups[i]] += values[i];
    ++count[groups[i]];
  }
  for (int g = 0; g < k; ++g) {
    if (count[g] == 0) throw DataError("group_means: group " + std::to_string(g) + " is empty");
    sum[g] /= static_cast<double>(count[g]);
  }
  return sum;
}

std::vector<double> group_mae(std::span<const double> actual, std::span<const double> predicted,
                              std::span<const int> groups) {
  require_lengths(actual.size(), predicted.size(), "group_mae");
  std::vector<double> abs_err(actual.size());
  for (std::size_t i = 0; i < actual.size(); ++i) abs_err[i] = std::abs(actual[i] - predicted[i]);
  return group_means(abs_err, groups);
}

double statistical_parity_difference(std::span<const double> predicted, std::span<const int> groups) {
  return spread(group_means(predicted, groups), "statistical_parity_difference");
}

double prediction_variance(std::span<const double> predicted, std::span<const int> groups) {
  const auto means = group_means(predicted, groups);
  if (means.size() < 2) warn("prediction_variance: only one group present");
  return population_variance(means);
}

double regional_fairness_gap(std::span<const double> actual, std::span<const double> predicted,
                             const std::vector<bool>& is_haor) {
  require_lengths(actual.size(), predicted.size(), "regional_fairness_gap");
  if (is_haor.size() != actual.size()) throw DataError("regional_fairness_gap: region flag count mismatch");
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const int r = is_haor[i] ? 0 : 1;
    sum[r] += std::abs(actual[i] - predicted[i]);
    ++count[r];
  }
  if (count[0] == 0 || count[1] == 0) {
    throw DataError("regional_fairness_gap: both haor and non_haor rows are required");
  }
  return std::abs(sum[0] / static_cast<double>(count[0]) - sum[1] / static_cast<double>(count[1]));
}

double equal_opportunity(std::span<const double> actual, std::span<const double> predicted,
                         std::span<const int> groups) {
  return spread(group_mae(actual, predicted, groups), "equal_opportunity");
}

double mae_std(std::span<const double> actual, std::span<const double> predicted,
               std::span<const int> groups) {
  return std::sqrt(population_variance(group_mae(actual, predicted, groups)));
}

FairnessReport fairness_report(std::span<const double> actual, std::span<const double> predicted,
                               std::span<const int> groups,
                               const std::vector<std::string>& group_labels,
                               const std::vector<bool>& is_haor) {
  const auto means = group_means(predicted, groups);
  const auto maes = group_mae(actual, predicted, groups);
  if (means.size() > group_labels.size()) throw DataError("fairness_report: missing group labels");

  FairnessReport r;
  r.spd = statistical_parity_difference(predicted, groups);
  r.prediction_variance = population_variance(means);
  r.regional_gap = regional_fairness_gap(actual, predicted, is_haor);
  r.equal_opportunity = equal_opportunity(actual, predicted, groups);
  r.mae_std_across_districts = std::sqrt(population_variance(maes));
  for (std::size_t g = 0; g < means.size(); ++g) {
    r.per_district_mean_prediction[group_labels[g]] = means[g];
    r.per_district_mae[group_labels[g]] = maes[g];
  }
  return r;
}

double improvement_pct(double fair_value, double baseline_value) {
  if (!(baseline_value > 0.0)) throw DataError("improvement_pct: baseline value must be positive");
  return 100.0 * (baseline_value - fair_value) / baseline_value;
}

}  // namespace floodaid
