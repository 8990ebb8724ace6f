#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodaid/dataset.hpp"

namespace floodaid {

inline constexpr double kPriorityDamageWeight = 0.6;
inline constexpr double kPriorityVulnerabilityWeight = 0.4;
inline constexpr double kHighPovertyThreshold = 35.0;  // percent
inline constexpr double kTopTierFraction = 0.2;

struct UnitInfo {
  std::string upazila_id;
  std::string district;
  Region region = Region::kNonHaor;
};

struct PriorityEntry {
  std::string upazila_id;
  std::string district;
  Region region = Region::kNonHaor;
  double predicted_damage = 0.0;     // USD M
  double vulnerability_score = 0.0;  // [0, 1]
  double priority_score = 0.0;       // [0, 1]
  int rank = 0;                      // 1 = highest priority

  friend bool operator==(const PriorityEntry&, const PriorityEntry&) = default;
};

// (v - min) / (max - min); a constant input maps to all zeros.
std::vector<double> min_max_norm(std::span<const double> values);

// score = 0.6 * norm(prediction) + 0.4 * vulnerability. Returned in input
// order with ranks assigned by descending score; ties go to the higher
// vulnerability, then the lexically smaller id.
std::vector<PriorityEntry> priority_scores(std::span<const UnitInfo> units,
                                           std::span<const double> predictions,
                                           std::span<const double> vulnerabilities);

std::vector<UnitInfo> unit_info(const Dataset& data);

struct RankShiftReport {
  std::size_t n = 0;
  double pct_reranked = 0.0;           // |shift| >= 1
  double pct_reranked_3plus = 0.0;     // |shift| >= 3
  double score_correlation = 0.0;      // Pearson over priority scores
  double rank_correlation = 0.0;       // Spearman over priority scores
  double mean_shift = 0.0;             // positive = higher priority in the candidate
  std::optional<double> mean_shift_haor;
  std::optional<double> mean_shift_high_poverty;
  std::size_t top_tier_size = 0;
  std::size_t entered_top_tier = 0;
  std::size_t left_top_tier = 0;
};

// Compares two rankings of the same ids. `poverty_by_id`, when given,
// enables the high-poverty (> 35%) subgroup shift.
RankShiftReport compare_rankings(std::span<const PriorityEntry> reference,
                                 std::span<const PriorityEntry> candidate,
                                 const std::map<std::string, double>* poverty_by_id = nullptr);

double pearson_correlation(std::span<const double> a, std::span<const double> b);
// Pearson over average ranks (ties share the mean rank).
double spearman_correlation(std::span<const double> a, std::span<const double> b);
// 1-based average ranks, ascending.
std::vector<double> average_ranks(std::span<const double> values);

// Ranking CSV: upazila_id,district,region,predicted_damage,vulnerability_score,priority_score,rank
void write_ranking_csv(std::span<const PriorityEntry> entries, const std::filesystem::path& path);
std::vector<PriorityEntry> load_ranking_csv(const std::filesystem::path& path);

}  // namespace floodaid
