#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "floodaid/errors.hpp"
#include "floodaid/fairness.hpp"
#include "floodaid/rng.hpp"
#include "metric_oracles.hpp"

using namespace floodaid;


TEST_CASE("performance metrics") {
  const std::vector<double> a{1, 2, 3};
  const auto r = performance_metrics(a, std::vector<double>{1, 2, 4});
  CHECK(r.mse == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.mae == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.r2 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.rmse * r.rmse == doctest::Approx(r.mse).epsilon(1e-12));

  const auto perfect = performance_metrics(a, a);
  CHECK(perfect.mse == 0.0);
  CHECK(perfect.r2 == 1.0);
  CHECK(performance_metrics(a, std::vector<double>{2, 2, 2}).r2 == 0.0);

  CHECK_THROWS_AS(performance_metrics(std::vector<double>{}, std::vector<double>{}), DataError);
  CHECK_THROWS_AS(performance_metrics(std::vector<double>{2, 2}, std::vector<double>{1, 3}), DataError);
  CHECK_THROWS_AS(performance_metrics(a, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("statistical parity and prediction variance") {
  const std::vector<double> p{1, 3, 5, 2};
  const std::vector<int> g{0, 0, 1, 2};
  CHECK(statistical_parity_difference(p, g) == 3.0);
  CHECK(prediction_variance(p, g) == doctest::Approx(2.0).epsilon(1e-15));

  const std::vector<double> equal{2, 4, 3, 3};
  const std::vector<int> g2{0, 0, 1, 1};
  CHECK(statistical_parity_difference(equal, g2) == 0.0);
  CHECK(prediction_variance(equal, g2) == 0.0);

  // Relabeling groups.
  CHECK(statistical_parity_difference(p, std::vector<int>{2, 2, 0, 1}) == 3.0);

  set_warnings_enabled(false);
  CHECK(statistical_parity_difference(p, std::vector<int>{0, 0, 0, 0}) == 0.0);
  set_warnings_enabled(true);
  CHECK_THROWS_AS(statistical_parity_difference(p, std::vector<int>{0, 0, 2, 2}), DataError);
}

TEST_CASE("regional fairness gap") {
  const std::vector<double> a{0, 0, 0};
  CHECK(regional_fairness_gap(a, std::vector<double>{1, -3, 2}, {true, true, false}) == 0.0);
  CHECK(regional_fairness_gap(a, std::vector<double>{1, 5, 1}, {true, true, false}) == 2.0);
  const std::vector<double> same{2.89, 2.89};
  CHECK(regional_fairness_gap(std::vector<double>{0, 0}, same, {true, false}) == 0.0);
  CHECK_THROWS_AS(regional_fairness_gap(a, a, {true, true, true}), DataError);
}

TEST_CASE("equal opportunity") {
  // One row per district with the listed MAEs.
  const std::vector<double> a{0, 0, 0};
  const std::vector<double> p{2.73, 2.91, 2.85};
  CHECK(equal_opportunity(a, p, std::vector<int>{0, 1, 2}) == doctest::Approx(0.18).epsilon(1e-12));
  const std::vector<double> shifted{3, 4, 5, 6};
  CHECK(equal_opportunity(std::vector<double>{1, 2, 3, 4}, shifted, std::vector<int>{0, 0, 1, 1}) == 0.0);
  set_warnings_enabled(false);
  CHECK(equal_opportunity(a, p, std::vector<int>{0, 0, 0}) == 0.0);
  set_warnings_enabled(true);
}

TEST_CASE("improvement percentages") {
  CHECK(std::abs(improvement_pct(3.82, 6.54) - 41.6) <= 0.05);
  CHECK(std::abs(improvement_pct(0.67, 1.18) - 43.2) <= 0.05);
  CHECK(improvement_pct(2.0, 2.0) == 0.0);
  CHECK(improvement_pct(3.0, 2.0) < 0.0);
  CHECK_THROWS_AS(improvement_pct(1.0, 0.0), DataError);
}

TEST_CASE("metrics equal brute-force oracles on small fixtures") {
  RngStream rng(31, "fixtures");
  for (int t = 0; t < 500; ++t) {
    const oracle::Fixture f = oracle::random_fixture(rng);
    INFO("fixture " << t);
    CHECK(statistical_parity_difference(f.predicted, f.groups) == oracle::spd(f.predicted, f.groups));
    CHECK(equal_opportunity(f.actual, f.predicted, f.groups) == oracle::eo(f.actual, f.predicted, f.groups));
    CHECK(regional_fairness_gap(f.actual, f.predicted, f.haor) == oracle::gap(f.actual, f.predicted, f.haor));
    CHECK(prediction_variance(f.predicted, f.groups) ==
          doctest::Approx(oracle::variance(f.predicted, f.groups)).epsilon(1e-14));
    const auto lib = performance_metrics(f.actual, f.predicted);
    const auto ora = oracle::performance(f.actual, f.predicted);
    CHECK(lib.mse == ora.mse);
    CHECK(lib.mae == ora.mae);
    CHECK(lib.rmse == ora.rmse);
    CHECK(lib.r2 == doctest::Approx(ora.r2).epsilon(1e-14));
  }
}

TEST_CASE("invariances") {
  RngStream rng(32, "invariance");
  for (int t = 0; t < 200; ++t) {
    oracle::Fixture f = oracle::random_fixture(rng);
    const double spd = statistical_parity_difference(f.predicted, f.groups);
    const double eo = equal_opportunity(f.actual, f.predicted, f.groups);
    const double gap = regional_fairness_gap(f.actual, f.predicted, f.haor);
    const double sd = mae_std(f.actual, f.predicted, f.groups);
    const double var = prediction_variance(f.predicted, f.groups);
    for (double v : {spd, eo, gap, sd, var}) CHECK(v >= 0.0);

    // Group relabeling.
    const int k = oracle::group_count(f.groups);
    std::vector<int> relabeled;
    for (int g : f.groups) relabeled.push_back(k - 1 - g);
    CHECK(statistical_parity_difference(f.predicted, relabeled) == spd);
    CHECK(equal_opportunity(f.actual, f.predicted, relabeled) == eo);
    CHECK(mae_std(f.actual, f.predicted, relabeled) == doctest::Approx(sd).epsilon(1e-14));

    // Row reversal.
    oracle::Fixture r = f;
    std::reverse(r.actual.begin(), r.actual.end());
    std::reverse(r.predicted.begin(), r.predicted.end());
    std::reverse(r.groups.begin(), r.groups.end());
    std::reverse(r.haor.begin(), r.haor.end());
    CHECK(statistical_parity_difference(r.predicted, r.groups) == spd);
    CHECK(equal_opportunity(r.actual, r.predicted, r.groups) == eo);
    CHECK(regional_fairness_gap(r.actual, r.predicted, r.haor) == gap);
    CHECK(mae_std(r.actual, r.predicted, r.groups) == doctest::Approx(sd).epsilon(1e-14));

    // Shifting every prediction leaves parity metrics alone up to rounding
    // of the group means.
    std::vector<double> shifted = f.predicted;
    for (double& v : shifted) v += 4.0;
    CHECK(statistical_parity_difference(shifted, f.groups) == doctest::Approx(spd).epsilon(1e-12));
    CHECK(prediction_variance(shifted, f.groups) == doctest::Approx(var).epsilon(1e-12));
  }

  // The regional gap depends on actuals, so a shift can change it.
  const std::vector<double> a{0, 0, 0};
  const std::vector<double> p{-1, -1, 3};
  const std::vector<double> q{1, 1, 5};
  CHECK(regional_fairness_gap(a, p, {true, true, false}) != regional_fairness_gap(a, q, {true, true, false}));
}

TEST_CASE("fairness report tables") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> p{1.5, 2, 2, 4};
  const auto r = fairness_report(a, p, std::vector<int>{0, 0, 1, 1}, {"x", "y"}, {true, true, false, false});
  CHECK(r.per_district_mae.at("x") == 0.25);
  CHECK(r.per_district_mae.at("y") == 0.5);
  CHECK(r.per_district_mean_prediction.at("x") == 1.75);
  CHECK(r.per_district_mean_prediction.at("y") == 3.0);
  CHECK(r.spd == 1.25);
  CHECK(r.regional_gap == 0.25);
  CHECK(r.equal_opportunity == 0.25);
  CHECK(r.mae_std_across_districts == 0.125);
}
