#include "floodaid/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "floodaid/errors.hpp"
#include "floodaid/rng.hpp"

namespace floodaid {

std::string_view region_label(Region r) { return r == Region::kHaor ? "haor" : "non_haor"; }

std::optional<Region> parse_region(std::string_view s) {
  if (s == "haor") return Region::kHaor;
  if (s == "non_haor") return Region::kNonHaor;
  return std::nullopt;
}

std::array<double, kNumFeatures> UpazilaRecord::features() const {
  return {poverty_rate,   pop_density,    agri_dependency, housing_quality,
          flood_depth,    flood_duration, dist_to_rivers,  elevation,
          roads_damaged,  tubewells_damaged, health_facilities_affected};
}

void UpazilaRecord::set_feature(std::size_t index, double value) {
  double* fields[kNumFeatures] = {&poverty_rate,   &pop_density,    &agri_dependency,
                                  &housing_quality, &flood_depth,   &flood_duration,
                                  &dist_to_rivers, &elevation,      &roads_damaged,
                                  &tubewells_damaged, &health_facilities_affected};
  if (index >= kNumFeatures) throw DataError("set_feature: index out of range");
  *fields[index] = value;
}

std::optional<FieldViolation> check_record(const UpazilaRecord& r) {
  if (r.upazila_id.empty()) return FieldViolation{"upazila_id", "empty identifier"};
  if (r.district.empty()) return FieldViolation{"district", "empty district label"};

  const auto feats = r.features();
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!std::isfinite(feats[i])) {
      return FieldViolation{std::string(kFeatureNames[i]), "value is not finite"};
    }
  }
  if (!std::isfinite(r.damage_usd_m)) return FieldViolation{"damage_usd_m", "value is not finite"};

  auto out_of = [](double v, double lo, double hi) { return v < lo || v > hi; };
  auto describe = [](double v, const char* bound) {
    std::ostringstream msg;
    msg << "value " << format_double(v) << " outside " << bound;
    return msg.str();
  };
  if (out_of(r.poverty_rate, 0, 100)) return FieldViolation{"poverty_rate", describe(r.poverty_rate, "[0, 100]")};
  if (out_of(r.agri_dependency, 0, 100))
    return FieldViolation{"agri_dependency", describe(r.agri_dependency, "[0, 100]")};
  if (out_of(r.housing_quality, 1, 5))
    return FieldViolation{"housing_quality", describe(r.housing_quality, "[1, 5]")};
  if (!(r.pop_density > 0)) return FieldViolation{"pop_density", describe(r.pop_density, "(0, inf)")};

  const std::pair<const char*, double> non_negative[] = {
      {"flood_depth", r.flood_depth},
      {"flood_duration", r.flood_duration},
      {"dist_to_rivers", r.dist_to_rivers},
      {"roads_damaged", r.roads_damaged},
      {"tubewells_damaged", r.tubewells_damaged},
      {"health_facilities_affected", r.health_facilities_affected},
      {"damage_usd_m", r.damage_usd_m}};
  for (const auto& [name, v] : non_negative) {
    if (v < 0) return FieldViolation{name, describe(v, "[0, inf)")};
  }
  return std::nullopt;
}

Dataset::Dataset(std::vector<UpazilaRecord> records) : records_(std::move(records)) {
  for (const auto& r : records_) {
    if (std::find(district_labels_.begin(), district_labels_.end(), r.district) ==
        district_labels_.end()) {
      district_labels_.push_back(r.district);
    }
  }
  validate();
}

Dataset::Dataset(std::vector<UpazilaRecord> records, std::vector<std::string> district_labels)
    : records_(std::move(records)), district_labels_(std::move(district_labels)) {
  validate();
}

void Dataset::validate() const {
  std::map<std::string, Region> region_of;
  std::map<std::string, std::size_t> count;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (auto v = check_record(r)) {
      throw DataError("record " + std::to_string(i) + " (" + r.upazila_id + "), column " +
                      v->column + ": " + v->message);
    }
    if (!district_index(r.district)) {
      throw DataError("record " + std::to_string(i) + ", column district: unknown label '" +
                      r.district + "'");
    }
    auto [it, inserted] = region_of.emplace(r.district, r.region);
    if (!inserted && it->second != r.region) {
      throw DataError("record " + std::to_string(i) + ", column region: district '" + r.district +
                      "' is listed under both regions");
    }
    ++count[r.district];
  }
  for (const auto& label : district_labels_) {
    if (count[label] == 0) throw DataError("district label '" + label + "' has no records");
  }
  if (count.size() != district_labels_.size()) throw DataError("duplicate district labels");
}

std::optional<int> Dataset::district_index(std::string_view label) const {
  for (std::size_t k = 0; k < district_labels_.size(); ++k) {
    if (district_labels_[k] == label) return static_cast<int>(k);
  }
  return std::nullopt;
}

std::vector<int> Dataset::district_indices() const {
  std::vector<int> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(*district_index(r.district));
  return out;
}

std::vector<bool> Dataset::haor_flags() const {
  std::vector<bool> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.region == Region::kHaor);
  return out;
}

Matrix Dataset::feature_matrix() const {
  Matrix m(records_.size(), kNumFeatures);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto f = records_[i].features();
    std::copy(f.begin(), f.end(), m.row(i).begin());
  }
  return m;
}

std::vector<double> Dataset::targets() const {
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.damage_usd_m);
  return out;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.upazila_id);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<UpazilaRecord> picked;
  picked.reserve(rows.size());
  for (std::size_t i : rows) {
    if (i >= records_.size()) throw DataError("Dataset::subset: row index out of range");
    picked.push_back(records_[i]);
  }
  std::vector<std::string> labels;
  for (const auto& label : district_labels_) {
    if (std::any_of(picked.begin(), picked.end(),
                    [&](const UpazilaRecord& r) { return r.district == label; })) {
      labels.push_back(label);
    }
  }
  Dataset out(std::move(picked), std::move(labels));
  out.standardization_ = standardization_;
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::string_view trim_line_end(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.remove_suffix(1);
  return s;
}

std::string where(std::string_view source, std::size_t line, std::string_view column) {
  std::ostringstream msg;
  msg << source << ": line " << line << ", column " << column << ": ";
  return msg.str();
}

double parse_number(std::string_view cell, std::string_view source, std::size_t line,
                    std::string_view column) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw DataError(where(source, line, column) + "non-numeric value '" + std::string(cell) + "'");
  }
  return v;
}

void check_header(std::string_view header, std::string_view source) {
  const auto cells = split_commas(header);
  for (const auto& col : kCsvColumns) {
    if (std::find(cells.begin(), cells.end(), col) == cells.end()) {
      throw DataError(std::string(source) + ": missing column '" + std::string(col) + "'");
    }
  }
  if (cells.size() != kCsvColumns.size()) {
    throw DataError(std::string(source) + ": header has " + std::to_string(cells.size()) +
                    " columns, expected " + std::to_string(kCsvColumns.size()));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i] != kCsvColumns[i]) {
      throw DataError(std::string(source) + ": column " + std::to_string(i + 1) + " is '" +
                      std::string(cells[i]) + "', expected '" + std::string(kCsvColumns[i]) + "'");
    }
  }
}

}  // namespace

Dataset parse_csv(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string(source) + ": empty file (no header)");
  std::string_view header = trim_line_end(line);
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  check_header(header, source);

  std::vector<UpazilaRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim_line_end(line);
    if (text.empty()) continue;
    const auto cells = split_commas(text);
    if (cells.size() != kCsvColumns.size()) {
      throw DataError(where(source, line_no, "*") + "expected " +
                      std::to_string(kCsvColumns.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    UpazilaRecord r;
    r.upazila_id = std::string(cells[0]);
    r.district = std::string(cells[1]);
    const auto region = parse_region(cells[2]);
    if (!region) {
      throw DataError(where(source, line_no, "region") + "unknown region label '" +
                      std::string(cells[2]) + "' (expected haor or non_haor)");
    }
    r.region = *region;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      r.set_feature(f, parse_number(cells[3 + f], source, line_no, kCsvColumns[3 + f]));
    }
    r.damage_usd_m = parse_number(cells[14], source, line_no, "damage_usd_m");
    if (auto v = check_record(r)) {
      throw DataError(where(source, line_no, v->column) + v->message);
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError(std::string(source) + ": dataset is empty (header only)");
  return Dataset(std::move(records));
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_csv(in, path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw DataError("format_double: conversion failed");
  return std::string(buf, ptr);
}

void write_csv(const Dataset& data, std::ostream& out) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    out << (i ? "," : "") << kCsvColumns[i];
  }
  out << '\n';
  for (const auto& r : data.records()) {
    out << r.upazila_id << ',' << r.district << ',' << region_label(r.region);
    for (double f : r.features()) out << ',' << format_double(f);
    out << ',' << format_double(r.damage_usd_m) << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  write_csv(data, out);
  if (!out) throw UsageError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Derived metrics

NormContext compute_norm_context(std::span<const UpazilaRecord> records) {
  if (records.empty()) throw DataError("compute_norm_context: no records");
  auto init = [](double v) { return NormContext::Range{v, v}; };
  auto grow = [](NormContext::Range& r, double v) {
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  };
  const auto& first = records.front();
  NormContext ctx{init(first.poverty_rate),
                  init(first.agri_dependency),
                  init(first.housing_quality),
                  init(first.flood_depth * first.flood_duration),
                  init(first.roads_damaged),
                  init(first.tubewells_damaged),
                  init(first.health_facilities_affected)};
  for (const auto& r : records) {
    grow(ctx.poverty, r.poverty_rate);
    grow(ctx.agriculture, r.agri_dependency);
    grow(ctx.housing, r.housing_quality);
    grow(ctx.flood_extent, r.flood_depth * r.flood_duration);
    grow(ctx.roads, r.roads_damaged);
    grow(ctx.tubewells, r.tubewells_damaged);
    grow(ctx.health_facilities, r.health_facilities_affected);
  }
  return ctx;
}

namespace {

double scaled(double v, const NormContext::Range& r) {
  if (!(r.max > r.min)) return 0.0;
  return std::clamp((v - r.min) / (r.max - r.min), 0.0, 1.0);
}

}  // namespace

DerivedMetrics engineer_features(const UpazilaRecord& record, const NormContext& ctx) {
  const double poverty = scaled(record.poverty_rate, ctx.poverty);
  const double agriculture = scaled(record.agri_dependency, ctx.agriculture);
  const double housing =
      ctx.housing.max > ctx.housing.min ? 1.0 - scaled(record.housing_quality, ctx.housing) : 0.0;
  const double extent = scaled(record.flood_depth * record.flood_duration, ctx.flood_extent);

  DerivedMetrics out;
  out.vulnerability_score = kVulnPovertyWeight * poverty + kVulnAgricultureWeight * agriculture +
                            kVulnHousingWeight * housing + kVulnFloodExtentWeight * extent;
  out.infra_damage_index = kInfraRoadsWeight * scaled(record.roads_damaged, ctx.roads) +
                           kInfraTubewellsWeight * scaled(record.tubewells_damaged, ctx.tubewells) +
                           kInfraEmbankmentSlotWeight *
                               scaled(record.health_facilities_affected, ctx.health_facilities);
  out.vulnerability_score = std::clamp(out.vulnerability_score, 0.0, 1.0);
  out.infra_damage_index = std::clamp(out.infra_damage_index, 0.0, 1.0);
  return out;
}

std::vector<DerivedMetrics> derived_metrics(const Dataset& data) {
  const auto ctx = compute_norm_context(data.records());
  std::vector<DerivedMetrics> out;
  out.reserve(data.size());
  for (const auto& r : data.records()) out.push_back(engineer_features(r, ctx));
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

StandardizationParams fit_standardization(const Matrix& features) {
  if (features.rows() == 0) throw DataError("fit_standardization: empty training set");
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  StandardizationParams p{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) p.mean[j] += features(i, j);
  for (double& m : p.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = features(i, j) - p.mean[j];
      p.sd[j] += diff * diff;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(p.sd[j] / static_cast<double>(n));
    // Constant (or numerically constant) columns map to all zeros.
    p.sd[j] = sd > 1e-12 * std::max(1.0, std::abs(p.mean[j])) ? sd : 1.0;
  }
  return p;
}

StandardizationParams fit_standardization(const Dataset& train) {
  return fit_standardization(train.feature_matrix());
}

Matrix standardize(const Matrix& features, const StandardizationParams& params) {
  if (features.cols() != params.mean.size() || params.sd.size() != params.mean.size()) {
    throw DataError("standardize: feature count does not match the fitted parameters");
  }
  Matrix out = features;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = (r[j] - params.mean[j]) / params.sd[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split

Split stratified_split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DataError("stratified_split: train_fraction must lie in (0, 1)");
  }
  const auto groups = data.district_indices();
  std::vector<std::vector<std::size_t>> members(data.num_districts());
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);

  RngStream rng(seed, streams::kSplit);
  std::vector<bool> is_test(data.size(), false);
  for (std::size_t k = 0; k < members.size(); ++k) {
    auto& rows = members[k];
    if (rows.size() < 2) {
      throw DataError("stratified_split: district '" + data.district_labels()[k] +
                      "' has fewer than 2 records");
    }
    const double want = std::round((1.0 - train_fraction) * static_cast<double>(rows.size()));
    const auto n_test =
        std::clamp<std::size_t>(static_cast<std::size_t>(want), 1, rows.size() - 1);
    rng.shuffle(rows.begin(), rows.end());
    for (std::size_t j = 0; j < n_test; ++j) is_test[rows[j]] = true;
  }

  Split out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (is_test[i] ? out.test_rows : out.train_rows).push_back(i);
  }
  out.train = data.subset(out.train_rows);
  out.test = data.subset(out.test_rows);
  return out;
}

}  // namespace floodaid
