#include "floodaid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "floodaid/errors.hpp"
#include "floodaid/rng.hpp"

namespace floodaid {

namespace {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Inverse standard normal CDF by bisection.
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 64; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

constexpr std::size_t kDistToRivers = 6;
constexpr std::size_t kElevation = 7;
constexpr int kDecimals[kNumFeatures] = {1, 0, 1, 2, 2, 1, 2, 1, 1, 0, 0};

// Rejection sampling from the parent normal.
double draw_truncated(RngStream& rng, double mu, double sigma, double lo, double hi) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double v = rng.normal(mu, sigma);
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(mu, lo, hi);
}

// Quantile q of the parent normal truncated to [lo, hi].
double truncated_quantile(const TruncatedNormal& t, double q) {
  const double fa = normal_cdf((t.lo - t.mu) / t.sigma);
  const double fb = normal_cdf((t.hi - t.mu) / t.sigma);
  return std::clamp(t.mu + t.sigma * normal_quantile(fa + q * (fb - fa)), t.lo, t.hi);
}

// Latin hypercube column: one draw from each of n equal-probability strata,
// strata assigned to rows by a seeded permutation. Keeps the sample moments
// and extremes close to the target for every seed.
std::vector<double> stratified_column(RngStream& rng, const TruncatedNormal& t, std::size_t n) {
  const auto strata = rng.permutation(n);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = truncated_quantile(t, (static_cast<double>(strata[i]) + rng.uniform()) / static_cast<double>(n));
  }
  return out;
}

}  // namespace

Marginal truncated_moments(const TruncatedNormal& t) {
  const double a = (t.lo - t.mu) / t.sigma;
  const double b = (t.hi - t.mu) / t.sigma;
  const double z = normal_cdf(b) - normal_cdf(a);
  if (!(z > 0.0)) throw DataError("truncated_moments: support has zero probability mass");
  const double pa = normal_pdf(a);
  const double pb = normal_pdf(b);
  const double shift = (pa - pb) / z;
  const double var = t.sigma * t.sigma * (1.0 + (a * pa - b * pb) / z - shift * shift);
  return {t.mu + t.sigma * shift, std::sqrt(std::max(var, 0.0)), t.lo, t.hi};
}

TruncatedNormal fit_truncated_normal(const Marginal& target) {
  std::ostringstream where;
  where << "marginal (mean " << target.mean << ", sd " << target.sd << ", range [" << target.lo
        << ", " << target.hi << "])";
  if (!(target.lo < target.hi)) throw DataError("infeasible " + where.str() + ": empty range");
  if (!(target.mean > target.lo && target.mean < target.hi)) {
    throw DataError("infeasible " + where.str() + ": range excludes the mean");
  }
  if (!(target.sd > 0.0)) throw DataError("infeasible " + where.str() + ": sd must be positive");

  TruncatedNormal t{target.mean, target.sd, target.lo, target.hi};
  for (int it = 0; it < 500; ++it) {
    const Marginal m = truncated_moments(t);
    t.mu += target.mean - m.mean;
    t.sigma *= target.sd / m.sd;
    if (!std::isfinite(t.mu) || !std::isfinite(t.sigma) || t.sigma > 1e6 * (target.hi - target.lo)) {
      break;
    }
  }
  const Marginal m = truncated_moments(t);
  const double tol = 1e-3 * std::max(1.0, target.sd);
  if (!(std::abs(m.mean - target.mean) < tol && std::abs(m.sd - target.sd) < tol)) {
    throw DataError("infeasible " + where.str() + ": no truncated normal matches these moments");
  }
  return t;
}

std::array<Marginal, kNumFeatures> default_feature_marginals() {
  return {{
      {32.7, 5.8, 20.2, 45.3},     // poverty_rate
      {1044, 282, 657, 1734},      // pop_density
      {61.8, 6.9, 48.2, 75.8},     // agri_dependency
      {2.6, 0.7, 1.0, 5.0},        // housing_quality (invented)
      {3.18, 0.67, 2.16, 4.62},    // flood_depth
      {17.2, 3.9, 10.8, 26.4},     // flood_duration
      {4.5, 2.5, 0.2, 15.0},       // dist_to_rivers (invented)
      {8.0, 3.0, 1.0, 20.0},       // elevation (invented)
      {25.4, 12.0, 2.0, 70.0},     // roads_damaged (invented; ~2,209 km total)
      {497, 250, 20, 1500},        // tubewells_damaged (invented; ~43,259 total)
      {6.0, 3.5, 0.0, 20.0},       // health_facilities_affected (invented)
  }};
}

void SyntheticConfig::validate() const {
  auto bad = [](const std::string& what) { throw DataError("SyntheticConfig: " + what); };
  if (n_districts == 0) bad("n_districts must be positive");
  if (n_districts > n_upazilas) bad("n_districts exceeds n_upazilas");
  if (!(haor_fraction >= 0.0 && haor_fraction <= 1.0)) bad("haor_fraction outside [0, 1]");
  if (!(district_bias_strength >= 0.0)) bad("district_bias_strength must be non-negative");
  if (!(noise_sd >= 0.0)) bad("noise_sd must be non-negative");
  if (!(district_signature >= 0.0 && district_signature <= 1.0)) bad("district_signature outside [0, 1]");
  const bool explicit_layout =
      !district_names.empty() || !district_sizes.empty() || !district_haor.empty();
  if (explicit_layout) {
    if (district_names.size() != n_districts || district_sizes.size() != n_districts ||
        district_haor.size() != n_districts) {
      bad("explicit district layout must list names, sizes and region flags for every district");
    }
    if (std::accumulate(district_sizes.begin(), district_sizes.end(), std::size_t{0}) != n_upazilas) {
      bad("district sizes do not sum to n_upazilas");
    }
    for (auto s : district_sizes)
      if (s == 0) bad("empty district in explicit layout");
  }
  for (const auto& m : marginals) fit_truncated_normal(m);
}

SyntheticConfig default_synthetic_config() {
  SyntheticConfig c;
  c.district_names = {"sunamganj", "sylhet",    "netrokona",  "kishoreganj", "habiganj",  "moulvibazar",
                      "jamalpur",  "sherpur",   "mymensingh", "kurigram",    "gaibandha"};
  c.district_sizes = {12, 12, 10, 8, 6, 10, 9, 5, 5, 5, 5};
  c.district_haor = {true, true, true, true, true, false, false, false, false, false, false};
  return c;
}

namespace {

std::vector<SyntheticDistrict> layout_districts(const SyntheticConfig& c) {
  std::vector<SyntheticDistrict> out(c.n_districts);
  if (!c.district_names.empty()) {
    for (std::size_t k = 0; k < c.n_districts; ++k) {
      out[k] = {c.district_names[k], c.district_sizes[k], c.district_haor[k], 0.0};
    }
    return out;
  }
  const std::size_t n = c.n_upazilas;
  const std::size_t k_total = c.n_districts;
  std::size_t n_haor = static_cast<std::size_t>(std::llround(c.haor_fraction * static_cast<double>(n)));
  std::size_t k_haor =
      static_cast<std::size_t>(std::llround(c.haor_fraction * static_cast<double>(k_total)));
  if (n_haor > 0 && k_haor == 0) k_haor = 1;
  if (n_haor < n && k_haor == k_total) k_haor = k_total - 1;
  if (n_haor == 0) k_haor = 0;
  if (n_haor == n) k_haor = k_total;
  // Each district needs at least one row.
  n_haor = std::clamp(n_haor, k_haor, n - (k_total - k_haor));

  auto spread = [](std::size_t rows, std::size_t groups, std::size_t g) {
    return rows / groups + (g < rows % groups ? 1 : 0);
  };
  for (std::size_t k = 0; k < k_total; ++k) {
    const bool haor = k < k_haor;
    char name[32];
    std::snprintf(name, sizeof(name), "district_%02zu", k + 1);
    out[k].name = name;
    out[k].haor = haor;
    out[k].size = haor ? spread(n_haor, k_haor, k) : spread(n - n_haor, k_total - k_haor, k - k_haor);
  }
  return out;
}

// Haor districts first, then non-Haor, each in layout order.
std::vector<std::size_t> slot_order(const std::vector<SyntheticDistrict>& districts) {
  std::vector<std::size_t> slot;
  for (std::size_t k = 0; k < districts.size(); ++k)
    if (districts[k].haor) slot.push_back(k);
  for (std::size_t k = 0; k < districts.size(); ++k)
    if (!districts[k].haor) slot.push_back(k);
  return slot;
}

double centre_quantile(std::size_t position, std::size_t count) {
  return normal_quantile((static_cast<double>(position) + 0.5) / static_cast<double>(count));
}

// Unscaled offsets run from -1 to -0.5 across Haor districts and from +1 to
// +0.5 across non-Haor districts, in slot order, so Haor districts are
// under-recorded. The row-weighted mean is removed before scaling by
// `strength`.
void assign_offsets(std::vector<SyntheticDistrict>& districts, double strength) {
  std::size_t count[2] = {0, 0};
  for (const auto& d : districts) ++count[d.haor ? 0 : 1];
  std::size_t seen[2] = {0, 0};
  for (const std::size_t k : slot_order(districts)) {
    auto& d = districts[k];
    const int region = d.haor ? 0 : 1;
    const double step = count[region] > 1 ? 0.5 / static_cast<double>(count[region] - 1) : 0.0;
    const double magnitude = 1.0 - step * static_cast<double>(seen[region]++);
    d.offset = d.haor ? -magnitude : magnitude;
  }
  double weighted = 0.0;
  double rows = 0.0;
  for (const auto& d : districts) {
    weighted += d.offset * static_cast<double>(d.size);
    rows += static_cast<double>(d.size);
  }
  for (auto& d : districts) d.offset = strength * (d.offset - weighted / rows);
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  SyntheticResult result;
  result.districts = layout_districts(config);
  assign_offsets(result.districts, config.district_bias_strength);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    result.feature_parents[f] = fit_truncated_normal(config.marginals[f]);
  }

  RngStream rng(config.seed, streams::kSynthetic);

  // District-level centres for the geography columns, in standard units.
  // Both take evenly spaced normal quantiles with Haor districts on the low
  // side; elevation follows slot order, distance to rivers a seeded shuffle
  // within each region, so the pair identifies the district.
  const std::size_t k_total = result.districts.size();
  const auto slot = slot_order(result.districts);
  auto shuffled = slot;
  const auto haor_end = std::stable_partition(shuffled.begin(), shuffled.end(),
                                              [&](std::size_t k) { return result.districts[k].haor; });
  rng.shuffle(shuffled.begin(), haor_end);
  rng.shuffle(haor_end, shuffled.end());
  std::vector<std::array<double, 2>> centres(k_total);
  for (std::size_t pos = 0; pos < k_total; ++pos) {
    centres[shuffled[pos]][0] = centre_quantile(pos, k_total);
    centres[slot[pos]][1] = centre_quantile(pos, k_total);
  }

  // Non-geography columns are stratified over the whole dataset, so they
  // carry no district signal.
  std::array<std::vector<double>, kNumFeatures> columns;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (f != kDistToRivers && f != kElevation) {
      columns[f] = stratified_column(rng, result.feature_parents[f], config.n_upazilas);
    }
  }

  const double between = std::sqrt(config.district_signature);
  const double within = std::sqrt(1.0 - config.district_signature);
  std::vector<UpazilaRecord> records;
  records.reserve(config.n_upazilas);
  for (std::size_t k = 0; k < k_total; ++k) {
    const auto& d = result.districts[k];
    for (std::size_t u = 0; u < d.size; ++u) {
      UpazilaRecord r;
      char id[16];
      std::snprintf(id, sizeof(id), "-%02zu", u + 1);
      r.upazila_id = d.name + id;
      r.district = d.name;
      r.region = d.haor ? Region::kHaor : Region::kNonHaor;
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const auto& p = result.feature_parents[f];
        double v = 0.0;
        if (f == kDistToRivers || f == kElevation) {
          const double centre =
              std::clamp(p.mu + p.sigma * between * centres[k][f == kDistToRivers ? 0 : 1], p.lo, p.hi);
          v = draw_truncated(rng, centre, std::max(p.sigma * within, 1e-9), p.lo, p.hi);
        } else {
          v = columns[f][records.size()];
        }
        r.set_feature(f, std::clamp(round_to(v, kDecimals[f]), p.lo, p.hi));
      }
      records.push_back(std::move(r));
    }
  }

  // Structural damage equation over the dataset-wide normalization context.
  const NormContext ctx = compute_norm_context(records);
  auto scaled = [](double v, const NormContext::Range& r) {
    return r.max > r.min ? (v - r.min) / (r.max - r.min) : 0.0;
  };
  std::vector<double> vulnerability(records.size());
  std::vector<double> exposure(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    vulnerability[i] = engineer_features(r, ctx).vulnerability_score;
    exposure[i] = (scaled(r.flood_depth * r.flood_duration, ctx.flood_extent) + scaled(r.roads_damaged, ctx.roads) +
                   scaled(r.tubewells_damaged, ctx.tubewells) +
                   scaled(r.health_facilities_affected, ctx.health_facilities)) /
                  4.0;
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const double mean_v = mean(vulnerability);
  const double mean_e = mean(exposure);
  for (std::size_t i = 0, k = 0, left = result.districts[0].size; i < records.size(); ++i) {
    while (left == 0) left = result.districts[++k].size;
    --left;
    const double noise = config.noise_sd > 0.0 ? rng.normal(0.0, config.noise_sd) : 0.0;
    const double damage = config.beta0 + config.beta_vulnerability * (vulnerability[i] - mean_v) +
                          config.beta_exposure * (exposure[i] - mean_e) + result.districts[k].offset + noise;
    if (damage < 0.0) ++result.clipped_rows;
    records[i].damage_usd_m = round_to(std::max(damage, 0.0), 3);
  }

  std::vector<std::string> labels;
  for (const auto& d : result.districts) labels.push_back(d.name);
  result.dataset = Dataset(std::move(records), std::move(labels));
  return result;
}

}  // namespace floodaid
