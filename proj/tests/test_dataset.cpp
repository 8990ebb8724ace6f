#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>

#include "floodaid/errors.hpp"
#include "floodaid/synthetic.hpp"
#include "test_util.hpp"

using namespace floodaid;
using floodaid::test::make_record;

namespace {

const std::string kHeader =
    "upazila_id,district,region,poverty_rate,pop_density,agri_dependency,housing_quality,flood_depth,"
    "flood_duration,dist_to_rivers,elevation,roads_damaged,tubewells_damaged,health_facilities_affected,"
    "damage_usd_m\n";

std::string error_of(const std::string& csv) {
  std::istringstream in(csv);
  try {
    parse_csv(in, "t.csv");
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

Dataset synthetic(std::uint64_t seed) {
  auto c = default_synthetic_config();
  c.seed = seed;
  return generate_synthetic(c).dataset;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// p-value of a one-way ANOVA of `values` grouped by `groups`.
double anova_p(const std::vector<double>& values, const std::vector<int>& groups, int k) {
  std::vector<double> sum(k, 0.0);
  std::vector<int> count(k, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum[groups[i]] += values[i];
    ++count[groups[i]];
  }
  const double grand = mean_of(values);
  double between = 0.0, within = 0.0;
  for (int g = 0; g < k; ++g) between += count[g] * std::pow(sum[g] / count[g] - grand, 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    within += std::pow(values[i] - sum[groups[i]] / count[groups[i]], 2);
  }
  const double df1 = k - 1;
  const double df2 = static_cast<double>(values.size()) - k;
  const double f = (between / df1) / (within / df2);
  return boost::math::cdf(boost::math::complement(boost::math::fisher_f(df1, df2), f));
}

}  // namespace

TEST_CASE("csv round trip is field identical") {
  const Dataset d = synthetic(4);
  std::ostringstream first;
  write_csv(d, first);
  std::istringstream in(first.str());
  const Dataset back = parse_csv(in);
  CHECK(back.records() == d.records());
  CHECK(back.district_labels() == d.district_labels());
  std::ostringstream second;
  write_csv(back, second);
  CHECK(second.str() == first.str());

  const auto dir = floodaid::test::scratch_dir("dataset");
  write_csv(d, dir / "d.csv");
  const Dataset loaded = load_csv(dir / "d.csv");
  CHECK(loaded.size() == 87);
  CHECK(loaded.num_districts() == 11);
}

TEST_CASE("format_double is the shortest round-tripping text") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(8.0) == "8");
  for (double v : {1.0 / 3.0, 1e-300, 12345.678901234, -0.0625}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("csv validation errors name the line and column") {
  const std::string row = "u1,d1,haor,40,900,60,2.5,1.5,12,4,8,30,200,3,7.5\n";
  CHECK(error_of(kHeader + row).empty());

  std::string bad = row;
  bad.replace(bad.find(",40,"), 4, ",150,");
  const auto range = error_of(kHeader + row + bad);
  CHECK(range.find("line 3") != std::string::npos);
  CHECK(range.find("poverty_rate") != std::string::npos);

  const auto empty = error_of(kHeader);
  CHECK(empty.find("empty") != std::string::npos);

  std::string text = row;
  text.replace(text.find(",900,"), 5, ",abc,");
  const auto numeric = error_of(kHeader + text);
  CHECK(numeric.find("pop_density") != std::string::npos);
  CHECK(numeric.find("line 2") != std::string::npos);

  std::string region = row;
  region.replace(region.find("haor"), 4, "coast");
  CHECK(error_of(kHeader + region).find("region") != std::string::npos);

  std::string header = kHeader;
  header.replace(header.find("elevation"), 9, "altitude");
  CHECK(error_of(header + row).find("elevation") != std::string::npos);

  std::string housing = row;
  housing.replace(housing.find(",2.5,"), 5, ",7,");
  CHECK(error_of(kHeader + housing).find("housing_quality") != std::string::npos);

  // A district must keep one region.
  const std::string other = "u2,d1,non_haor,40,900,60,2.5,1.5,12,4,8,30,200,3,7.5\n";
  CHECK(error_of(kHeader + row + other).find("region") != std::string::npos);

  CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), DataError);
}

TEST_CASE("district labels follow first appearance") {
  const Dataset d({make_record("a", "zeta", Region::kHaor, 30, 1), make_record("b", "alpha", Region::kNonHaor, 30, 1),
                   make_record("c", "zeta", Region::kHaor, 30, 1)});
  CHECK(d.district_labels() == std::vector<std::string>{"zeta", "alpha"});
  CHECK(d.district_indices() == std::vector<int>{0, 1, 0});
  CHECK(d.haor_flags() == std::vector<bool>{true, false, true});
  CHECK(d.feature_matrix().cols() == kNumFeatures);
}

TEST_CASE("vulnerability composite") {
  NormContext ctx;
  ctx.poverty = {0, 100};
  ctx.agriculture = {0, 100};
  ctx.housing = {1, 5};
  ctx.flood_extent = {0, 40};
  ctx.roads = {0, 100};
  ctx.tubewells = {0, 1000};
  ctx.health_facilities = {0, 10};

  auto r = make_record("a", "d", Region::kHaor, 50, 1);
  r.agri_dependency = 50;
  r.housing_quality = 3;
  r.flood_depth = 2;
  r.flood_duration = 10;
  CHECK(engineer_features(r, ctx).vulnerability_score == doctest::Approx(0.5).epsilon(1e-15));

  auto top = r;
  top.poverty_rate = 100;
  top.agri_dependency = 100;
  top.housing_quality = 1;
  top.flood_depth = 4;
  top.flood_duration = 10;
  top.roads_damaged = 100;
  top.tubewells_damaged = 1000;
  top.health_facilities_affected = 10;
  CHECK(engineer_features(top, ctx).vulnerability_score == doctest::Approx(1.0));
  CHECK(engineer_features(top, ctx).infra_damage_index == doctest::Approx(1.0));

  auto bottom = r;
  bottom.poverty_rate = 0;
  bottom.agri_dependency = 0;
  bottom.housing_quality = 5;
  bottom.flood_depth = 0;
  bottom.roads_damaged = 0;
  bottom.tubewells_damaged = 0;
  bottom.health_facilities_affected = 0;
  CHECK(engineer_features(bottom, ctx).vulnerability_score == 0.0);
  CHECK(engineer_features(bottom, ctx).infra_damage_index == 0.0);

  // The substituted slot carries the embankment weight.
  auto health = bottom;
  health.health_facilities_affected = 10;
  CHECK(engineer_features(health, ctx).infra_damage_index == doctest::Approx(0.25));

  // Degenerate component contributes nothing.
  NormContext flat = ctx;
  flat.poverty = {30, 30};
  auto p = bottom;
  p.poverty_rate = 30;
  CHECK(engineer_features(p, flat).vulnerability_score == 0.0);
}

TEST_CASE("vulnerability is bounded and monotone in poverty") {
  const Dataset d = synthetic(1);
  const auto ctx = compute_norm_context(d.records());
  for (const auto& r : d.records()) {
    const auto m = engineer_features(r, ctx);
    CHECK(m.vulnerability_score >= 0.0);
    CHECK(m.vulnerability_score <= 1.0);
    CHECK(m.infra_damage_index >= 0.0);
    CHECK(m.infra_damage_index <= 1.0);
    auto richer = r;
    double previous = -1.0;
    for (double p = 0; p <= 100; p += 5) {
      richer.poverty_rate = p;
      const double v = engineer_features(richer, ctx).vulnerability_score;
      CHECK(v >= previous);
      previous = v;
    }
  }
}

TEST_CASE("standardization") {
  Matrix x{{2, 5}, {4, 5}};
  const auto p = fit_standardization(x);
  CHECK(p.mean == std::vector<double>{3, 5});
  CHECK(p.sd == std::vector<double>{1, 1});
  const Matrix z = standardize(x, p);
  CHECK(z == Matrix{{-1, 0}, {1, 0}});

  const Matrix c{{5}, {5}, {5}};
  const auto pc = fit_standardization(c);
  CHECK(pc.sd[0] == 1.0);
  const Matrix zc = standardize(c, pc);
  for (double v : zc.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(fit_standardization(Matrix(0, 3)), DataError);

  const Dataset d = synthetic(2);
  const Matrix f = d.feature_matrix();
  const Matrix s = standardize(f, fit_standardization(d));
  for (std::size_t j = 0; j < s.cols(); ++j) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) mean += s(i, j);
    mean /= static_cast<double>(s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i) sq += std::pow(s(i, j) - mean, 2);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(sq / static_cast<double>(s.rows())) - 1.0) < 1e-9);
  }
}

TEST_CASE("stratified split") {
  const Dataset d = synthetic(0);
  const auto s = stratified_split(d, 0.8, 7);
  CHECK(s.train.size() == 70);
  CHECK(s.test.size() == 17);

  std::set<std::size_t> all(s.train_rows.begin(), s.train_rows.end());
  for (auto r : s.test_rows) CHECK(all.insert(r).second);
  CHECK(all.size() == d.size());

  std::map<std::string, int> size, test;
  for (const auto& r : d.records()) ++size[r.district];
  for (const auto& r : s.test.records()) ++test[r.district];
  for (const auto& [k, n] : size) {
    CHECK(test[k] == std::max<long>(1, std::lround(0.2 * n)));
  }

  const auto again = stratified_split(d, 0.8, 7);
  CHECK(again.test_rows == s.test_rows);
  CHECK(stratified_split(d, 0.8, 8).test_rows != s.test_rows);

  std::vector<UpazilaRecord> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(make_record("u" + std::to_string(i), "one", Region::kHaor, 30, 1));
  const auto t = stratified_split(Dataset(ten), 0.8, 0);
  CHECK(t.train.size() == 8);
  CHECK(t.test.size() == 2);

  const Dataset lonely({make_record("a", "x", Region::kHaor, 30, 1), make_record("b", "x", Region::kHaor, 30, 1),
                        make_record("c", "y", Region::kNonHaor, 30, 1)});
  CHECK_THROWS_AS(stratified_split(lonely, 0.8, 0), DataError);
}

TEST_CASE("truncated normal moment matching") {
  const Marginal target{32.7, 5.8, 20.2, 45.3};
  const auto parent = fit_truncated_normal(target);
  const auto m = truncated_moments(parent);
  CHECK(m.mean == doctest::Approx(target.mean).epsilon(1e-6));
  CHECK(m.sd == doctest::Approx(target.sd).epsilon(1e-6));
  CHECK_THROWS_AS(fit_truncated_normal(Marginal{50, 5, 0, 10}), DataError);
}

TEST_CASE("synthetic defaults") {
  auto c = default_synthetic_config();
  const auto r = generate_synthetic(c);
  CHECK(r.dataset.size() == 87);
  CHECK(r.dataset.num_districts() == 11);
  const auto haor = r.dataset.haor_flags();
  const double frac = static_cast<double>(std::count(haor.begin(), haor.end(), true)) / 87.0;
  CHECK(std::abs(frac - 0.55) <= 1.0 / 87.0);

  for (const auto& rec : r.dataset.records()) {
    CHECK_FALSE(check_record(rec).has_value());
    CHECK(rec.damage_usd_m >= 0.0);
  }

  // Bit-reproducible per seed.
  std::ostringstream a, b;
  write_csv(generate_synthetic(c).dataset, a);
  write_csv(r.dataset, b);
  CHECK(a.str() == b.str());
  c.seed = 1;
  std::ostringstream other;
  write_csv(generate_synthetic(c).dataset, other);
  CHECK(other.str() != a.str());

  // Injected offsets: Haor districts under-recorded, row-weighted mean zero.
  double weighted = 0.0;
  for (const auto& d : r.districts) {
    CHECK((d.haor ? d.offset < 0.0 : d.offset > 0.0));
    weighted += d.offset * static_cast<double>(d.size);
  }
  CHECK(std::abs(weighted) < 1e-9);
}

TEST_CASE("synthetic damage mean lands within 15% of the target for every seed") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const double m = mean_of(synthetic(seed).targets());
    INFO("seed " << seed << " mean " << m);
    CHECK(m >= 6.92);
    CHECK(m <= 9.36);
  }
}

TEST_CASE("custom layouts") {
  SyntheticConfig c;
  c.n_upazilas = 20;
  c.n_districts = 4;
  const auto r = generate_synthetic(c);
  CHECK(r.dataset.size() == 20);
  CHECK(r.dataset.num_districts() == 4);

  SyntheticConfig bad;
  bad.n_upazilas = 3;
  bad.n_districts = 5;
  CHECK_THROWS_AS(generate_synthetic(bad), DataError);
  SyntheticConfig frac;
  frac.haor_fraction = 1.5;
  CHECK_THROWS_AS(generate_synthetic(frac), DataError);
  SyntheticConfig infeasible = default_synthetic_config();
  infeasible.marginals[0] = Marginal{120, 5, 0, 100};
  CHECK_THROWS_AS(generate_synthetic(infeasible), DataError);
}

TEST_CASE("no injected bias leaves district damage means indistinguishable") {
  int significant = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = default_synthetic_config();
    c.seed = seed;
    c.district_bias_strength = 0.0;
    const auto d = generate_synthetic(c).dataset;
    const double p = anova_p(d.targets(), d.district_indices(), static_cast<int>(d.num_districts()));
    MESSAGE("seed " << seed << " anova p " << p);
    if (p < 0.01) ++significant;
  }
  CHECK(significant == 0);

  // The default bias is detectable by the same test.
  const auto biased = synthetic(0);
  CHECK(anova_p(biased.targets(), biased.district_indices(), 11) < 0.01);
}
