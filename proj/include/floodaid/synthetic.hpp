#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "floodaid/dataset.hpp"

namespace floodaid {

// Target moments and support of one generated column.
struct Marginal {
  double mean = 0.0;
  double sd = 1.0;
  double lo = 0.0;
  double hi = 1.0;
};

// Parent normal whose truncation to [lo, hi] has the target mean and SD.
struct TruncatedNormal {
  double mu = 0.0;
  double sigma = 1.0;
  double lo = 0.0;
  double hi = 1.0;
};

// Moments of N(mu, sigma^2) truncated to [lo, hi].
Marginal truncated_moments(const TruncatedNormal& t);
// Solves for the parent; throws DataError when the target is infeasible.
TruncatedNormal fit_truncated_normal(const Marginal& target);

// Default per-feature targets (kFeatureNames order). Poverty, density,
// agriculture, depth and duration follow the published survey table; the
// other six are invented, loosely scaled to national flood-report totals.
std::array<Marginal, kNumFeatures> default_feature_marginals();
inline constexpr Marginal kDamageTarget{8.14, 6.21, 0.72, 27.5};

struct SyntheticConfig {
  std::size_t n_upazilas = 87;
  std::size_t n_districts = 11;
  double haor_fraction = 0.55;
  std::array<Marginal, kNumFeatures> marginals = default_feature_marginals();
  Marginal damage_target = kDamageTarget;

  // Recorded-damage offset injected per district (USD M). Haor districts
  // are under-recorded, non-Haor over-recorded; offsets are centred so the
  // row-weighted mean offset is zero.
  double district_bias_strength = 4.5;
  double noise_sd = 1.5;  // USD M
  // Share of variance of the geography columns (dist_to_rivers, elevation)
  // that sits between districts. High values make district identity
  // recoverable from features.
  double district_signature = 0.95;

  // damage = beta0 + beta_vulnerability * (V - mean V) + beta_exposure * (E - mean E)
  //          + offset + noise, clipped at 0.
  // V is the vulnerability composite; E averages the min-max scaled flood
  // extent (depth x duration), roads, tubewells and health facility damage.
  // Both are centred on their dataset mean, so beta0 is the damage of an
  // average row before clipping. Defaults come from tools/calibrate_synthetic.
  double beta0 = 7.7;
  double beta_vulnerability = 32.0;
  double beta_exposure = 32.0;
  std::uint64_t seed = 0;

  // Optional explicit layout; when empty, rows are spread evenly.
  std::vector<std::string> district_names;
  std::vector<std::size_t> district_sizes;
  std::vector<bool> district_haor;

  void validate() const;
};

// The 87-row, 11-district layout: 48 Haor rows in 5 districts, 39 non-Haor
// rows in 6, sized so an 80/20 stratified split yields 70/17.
SyntheticConfig default_synthetic_config();

struct SyntheticDistrict {
  std::string name;
  std::size_t size = 0;
  bool haor = false;
  double offset = 0.0;  // injected recorded-damage bias, USD M
};

struct SyntheticResult {
  Dataset dataset;
  std::vector<SyntheticDistrict> districts;
  std::array<TruncatedNormal, kNumFeatures> feature_parents{};
  std::size_t clipped_rows = 0;  // rows clipped at 0
};

SyntheticResult generate_synthetic(const SyntheticConfig& config);

}  // namespace floodaid
