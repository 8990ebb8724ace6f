#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace floodaid {

struct PerformanceReport {
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

struct FairnessReport {
  double spd = 0.0;
  double prediction_variance = 0.0;
  double regional_gap = 0.0;
  double equal_opportunity = 0.0;
  double mae_std_across_districts = 0.0;
  std::map<std::string, double> per_district_mae;
  std::map<std::string, double> per_district_mean_prediction;
};

// MSE/MAE/RMSE and R^2 = 1 - SS_res / SS_tot. Constant actuals are an error.
PerformanceReport performance_metrics(std::span<const double> actual,
                                      std::span<const double> predicted);

// Mean of `values` within each group id, in ascending id order. Groups are
// dense ids; an id in [0, max] with no members is an error.
std::vector<double> group_means(std::span<const double> values, std::span<const int> groups);
// Mean absolute error within each group, ascending id order.
std::vector<double> group_mae(std::span<const double> actual, std::span<const double> predicted,
                              std::span<const int> groups);

// Max minus min of the group-mean predictions. One group yields 0 and a warning.
double statistical_parity_difference(std::span<const double> predicted, std::span<const int> groups);
// Population variance of the group-mean predictions.
double prediction_variance(std::span<const double> predicted, std::span<const int> groups);
// |MAE(haor) - MAE(non-haor)|; both regions must be present.
double regional_fairness_gap(std::span<const double> actual, std::span<const double> predicted,
                             const std::vector<bool>& is_haor);
// Max minus min of the per-group MAE.
double equal_opportunity(std::span<const double> actual, std::span<const double> predicted,
                         std::span<const int> groups);
// Population SD of the per-group MAE.
double mae_std(std::span<const double> actual, std::span<const double> predicted,
               std::span<const int> groups);

FairnessReport fairness_report(std::span<const double> actual, std::span<const double> predicted,
                               std::span<const int> groups,
                               const std::vector<std::string>& group_labels,
                               const std::vector<bool>& is_haor);

// 100 * (baseline - fair) / baseline. Negative when the fair value is worse.
double improvement_pct(double fair_value, double baseline_value);

}  // namespace floodaid
