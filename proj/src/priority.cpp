#include "floodaid/priority.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "floodaid/errors.hpp"

namespace floodaid {

std::vector<double> min_max_norm(std::span<const double> values) {
  if (values.empty()) throw DataError("min_max_norm: empty input");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> out(values.size(), 0.0);
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - min) / range;
  return out;
}

std::vector<PriorityEntry> priority_scores(std::span<const UnitInfo> units,
                                           std::span<const double> predictions,
                                           std::span<const double> vulnerabilities) {
  if (units.size() != predictions.size() || units.size() != vulnerabilities.size()) {
    throw DataError("priority_scores: input lengths differ");
  }
  const auto norm = min_max_norm(predictions);
  std::vector<PriorityEntry> out(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    const double v = vulnerabilities[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw DataError("priority_scores: vulnerability for '" + units[i].upazila_id +
                      "' is outside [0, 1]");
    }
    out[i] = {units[i].upazila_id, units[i].district, units[i].region, predictions[i], v,
              kPriorityDamageWeight * norm[i] + kPriorityVulnerabilityWeight * v, 0};
  }
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = out[a];
    const auto& y = out[b];
    if (x.priority_score != y.priority_score) return x.priority_score > y.priority_score;
    if (x.vulnerability_score != y.vulnerability_score)
      return x.vulnerability_score > y.vulnerability_score;
    return x.upazila_id < y.upazila_id;
  });
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]].rank = static_cast<int>(r + 1);
  return out;
}

std::vector<UnitInfo> unit_info(const Dataset& data) {
  std::vector<UnitInfo> out;
  out.reserve(data.size());
  for (const auto& r : data.records()) out.push_back({r.upazila_id, r.district, r.region});
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw DataError("pearson_correlation: need two equal-length inputs with at least 2 values");
  }
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) {
    warn("pearson_correlation: constant input, correlation undefined");
    return std::nan("");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson_correlation(ra, rb);
}

RankShiftReport compare_rankings(std::span<const PriorityEntry> reference,
                                 std::span<const PriorityEntry> candidate,
                                 const std::map<std::string, double>* poverty_by_id) {
  if (reference.size() != candidate.size()) {
    throw DataError("compare_rankings: rankings cover different numbers of units");
  }
  std::unordered_map<std::string, const PriorityEntry*> cand_by_id;
  for (const auto& e : candidate) {
    if (!cand_by_id.emplace(e.upazila_id, &e).second) {
      throw DataError("compare_rankings: duplicate id '" + e.upazila_id + "' in candidate");
    }
  }
  std::set<std::string> seen;
  for (const auto& e : reference) {
    if (!cand_by_id.count(e.upazila_id)) {
      throw DataError("compare_rankings: id '" + e.upazila_id + "' missing from candidate");
    }
    if (!seen.insert(e.upazila_id).second) {
      throw DataError("compare_rankings: duplicate id '" + e.upazila_id + "' in reference");
    }
  }

  RankShiftReport r;
  r.n = reference.size();
  if (r.n == 0) throw DataError("compare_rankings: empty rankings");
  r.top_tier_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(kTopTierFraction * static_cast<double>(r.n) - 1e-9)));
  const int tier = static_cast<int>(r.top_tier_size);

  std::vector<double> ref_scores, cand_scores;
  std::size_t moved = 0, moved3 = 0;
  double shift_sum = 0.0, haor_sum = 0.0, poor_sum = 0.0;
  std::size_t haor_n = 0, poor_n = 0;
  for (const auto& ref : reference) {
    const auto& cand = *cand_by_id.at(ref.upazila_id);
    ref_scores.push_back(ref.priority_score);
    cand_scores.push_back(cand.priority_score);
    const int shift = ref.rank - cand.rank;
    if (shift != 0) ++moved;
    if (std::abs(shift) >= 3) ++moved3;
    shift_sum += shift;
    if (ref.region == Region::kHaor) {
      haor_sum += shift;
      ++haor_n;
    }
    if (poverty_by_id) {
      const auto it = poverty_by_id->find(ref.upazila_id);
      if (it != poverty_by_id->end() && it->second > kHighPovertyThreshold) {
        poor_sum += shift;
        ++poor_n;
      }
    }
    const bool was_top = ref.rank <= tier;
    const bool is_top = cand.rank <= tier;
    if (!was_top && is_top) ++r.entered_top_tier;
    if (was_top && !is_top) ++r.left_top_tier;
  }
  const double n = static_cast<double>(r.n);
  r.pct_reranked = 100.0 * static_cast<double>(moved) / n;
  r.pct_reranked_3plus = 100.0 * static_cast<double>(moved3) / n;
  r.mean_shift = shift_sum / n;
  if (haor_n) r.mean_shift_haor = haor_sum / static_cast<double>(haor_n);
  if (poor_n) r.mean_shift_high_poverty = poor_sum / static_cast<double>(poor_n);
  if (r.n >= 2) {
    r.score_correlation = pearson_correlation(ref_scores, cand_scores);
    r.rank_correlation = spearman_correlation(ref_scores, cand_scores);
  } else {
    r.score_correlation = r.rank_correlation = std::nan("");
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kRankingHeader =
    "upazila_id,district,region,predicted_damage,vulnerability_score,priority_score,rank";
}

void write_ranking_csv(std::span<const PriorityEntry> entries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << kRankingHeader << '\n';
  for (const auto& e : entries) {
    out << e.upazila_id << ',' << e.district << ',' << region_label(e.region) << ','
        << format_double(e.predicted_damage) << ',' << format_double(e.vulnerability_score) << ','
        << format_double(e.priority_score) << ',' << e.rank << '\n';
  }
}

std::vector<PriorityEntry> load_ranking_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ranking '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty ranking file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRankingHeader) throw DataError(path.string() + ": unexpected ranking header");
  std::vector<PriorityEntry> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": expected 7 cells");
    }
    PriorityEntry e;
    e.upazila_id = cells[0];
    e.district = cells[1];
    const auto region = parse_region(cells[2]);
    if (!region) throw DataError(path.string() + ": line " + std::to_string(line_no) + ", column region: bad label");
    e.region = *region;
    try {
      std::size_t used = 0;
      e.predicted_damage = std::stod(cells[3]);
      e.vulnerability_score = std::stod(cells[4]);
      e.priority_score = std::stod(cells[5]);
      e.rank = std::stoi(cells[6], &used);
      if (used != cells[6].size()) throw std::invalid_argument("rank");
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": non-numeric cell");
    }
    out.push_back(std::move(e));
  }
  std::vector<int> ranks;
  for (const auto& e : out) ranks.push_back(e.rank);
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != static_cast<int>(i + 1)) {
      throw DataError(path.string() + ": ranks are not a permutation of 1..N");
    }
  }
  return out;
}

}  // namespace floodaid
