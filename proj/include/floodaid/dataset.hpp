#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "floodaid/matrix.hpp"

namespace floodaid {

enum class Region { kHaor, kNonHaor };

std::string_view region_label(Region r);            // "haor" / "non_haor"
std::optional<Region> parse_region(std::string_view s);

inline constexpr std::size_t kNumFeatures = 11;

// Model input features, in the column order used by every feature matrix.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "poverty_rate",  "pop_density",    "agri_dependency", "housing_quality",
    "flood_depth",   "flood_duration", "dist_to_rivers",  "elevation",
    "roads_damaged", "tubewells_damaged", "health_facilities_affected"};

// CSV header: id, protected attributes, the 11 features, then the target.
inline constexpr std::array<std::string_view, 15> kCsvColumns = {
    "upazila_id",     "district",       "region",          "poverty_rate",
    "pop_density",    "agri_dependency", "housing_quality", "flood_depth",
    "flood_duration", "dist_to_rivers", "elevation",       "roads_damaged",
    "tubewells_damaged", "health_facilities_affected", "damage_usd_m"};

struct UpazilaRecord {
  std::string upazila_id;
  std::string district;
  Region region = Region::kNonHaor;
  double poverty_rate = 0.0;      // %
  double pop_density = 0.0;       // persons / km^2
  double agri_dependency = 0.0;   // %
  double housing_quality = 1.0;   // index in [1, 5]
  double flood_depth = 0.0;       // m
  double flood_duration = 0.0;    // days
  double dist_to_rivers = 0.0;    // km
  double elevation = 0.0;         // m
  double roads_damaged = 0.0;     // km
  double tubewells_damaged = 0.0;
  double health_facilities_affected = 0.0;
  double damage_usd_m = 0.0;      // target

  std::array<double, kNumFeatures> features() const;
  void set_feature(std::size_t index, double value);

  friend bool operator==(const UpazilaRecord&, const UpazilaRecord&) = default;
};

// Returns the offending column and a description, or nothing if valid.
struct FieldViolation {
  std::string column;
  std::string message;
};
std::optional<FieldViolation> check_record(const UpazilaRecord& r);

// Per-feature z-score parameters (population SD; constant columns get SD 1).
struct StandardizationParams {
  std::vector<double> mean;
  std::vector<double> sd;

  friend bool operator==(const StandardizationParams&, const StandardizationParams&) = default;
};

class Dataset {
 public:
  Dataset() = default;
  // District labels are taken in first-appearance order.
  explicit Dataset(std::vector<UpazilaRecord> records);
  // Uses the given label order; every label must occur in `records` and
  // every record's district must be listed.
  Dataset(std::vector<UpazilaRecord> records, std::vector<std::string> district_labels);

  const std::vector<UpazilaRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::vector<std::string>& district_labels() const { return district_labels_; }
  std::size_t num_districts() const { return district_labels_.size(); }
  std::optional<int> district_index(std::string_view label) const;

  // Per-row district index into district_labels().
  std::vector<int> district_indices() const;
  std::vector<bool> haor_flags() const;
  Matrix feature_matrix() const;
  std::vector<double> targets() const;
  std::vector<std::string> ids() const;

  // Rows by index; keeps this dataset's label order for the districts present.
  Dataset subset(std::span<const std::size_t> rows) const;

  const std::optional<StandardizationParams>& standardization() const { return standardization_; }
  void set_standardization(StandardizationParams params) { standardization_ = std::move(params); }

 private:
  void validate() const;

  std::vector<UpazilaRecord> records_;
  std::vector<std::string> district_labels_;
  std::optional<StandardizationParams> standardization_;
};

// CSV I/O. Errors carry the 1-based line number and the column name.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(std::istream& in, std::string_view source = "<stream>");
void write_csv(const Dataset& data, const std::filesystem::path& path);
void write_csv(const Dataset& data, std::ostream& out);

// Shortest text that parses back to the same double.
std::string format_double(double v);

// Min/max of each composite component over a reference set of records.
struct NormContext {
  struct Range {
    double min = 0.0;
    double max = 0.0;
  };
  Range poverty, agriculture, housing, flood_extent;  // flood_extent = depth * duration
  Range roads, tubewells, health_facilities;
};

NormContext compute_norm_context(std::span<const UpazilaRecord> records);

struct DerivedMetrics {
  double vulnerability_score = 0.0;  // [0, 1]
  double infra_damage_index = 0.0;   // [0, 1]
};

// Composite weights. The infrastructure index's embankment slot is filled by
// health_facilities_affected, which the schema carries instead.
inline constexpr double kVulnPovertyWeight = 0.30;
inline constexpr double kVulnAgricultureWeight = 0.25;
inline constexpr double kVulnHousingWeight = 0.25;
inline constexpr double kVulnFloodExtentWeight = 0.20;
inline constexpr double kInfraRoadsWeight = 0.40;
inline constexpr double kInfraTubewellsWeight = 0.35;
inline constexpr double kInfraEmbankmentSlotWeight = 0.25;
inline constexpr std::string_view kEmbankmentSubstitute = "health_facilities_affected";

// Components are min-max scaled over `ctx` (clamped to [0,1]); housing is
// inverted so poorer housing raises vulnerability. A component whose range
// is degenerate contributes 0.
DerivedMetrics engineer_features(const UpazilaRecord& record, const NormContext& ctx);

// engineer_features for every row, normalized over the dataset itself.
std::vector<DerivedMetrics> derived_metrics(const Dataset& data);

StandardizationParams fit_standardization(const Dataset& train);
StandardizationParams fit_standardization(const Matrix& features);
Matrix standardize(const Matrix& features, const StandardizationParams& params);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // indices into the source dataset
  std::vector<std::size_t> test_rows;
};

// Per district: max(1, round((1 - train_fraction) * size)) rows go to test,
// chosen by a seeded shuffle. Both halves keep source row order.
Split stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed);

}  // namespace floodaid
