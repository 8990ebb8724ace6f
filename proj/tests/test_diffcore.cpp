#include <doctest.h>

#include <cmath>
#include <limits>

#include "floodaid/errors.hpp"
#include "floodaid/gradcheck.hpp"
#include "floodaid/layers.hpp"
#include "floodaid/losses.hpp"
#include "floodaid/optim.hpp"
#include "gradient_cases.hpp"

using namespace floodaid;
using namespace floodaid::test;


TEST_CASE("dense forward matches hand products") {
  DenseLayer layer("d", 2, 2);
  layer.weight().value = Matrix{{1, 0}, {0, 2}};
  layer.bias().value = Matrix{{1, 1}};
  CHECK(layer.forward(Matrix{{1, 2}}) == Matrix{{2, 5}});

  layer.weight().value = Matrix{{1, 0}, {0, 1}};
  layer.bias().value = Matrix{{0, 0}};
  const Matrix x{{0.5, -3.0}, {7.0, 2.0}};
  CHECK(layer.forward(x) == x);

  layer.bias().value = Matrix{{4, -1}};
  CHECK(layer.forward(Matrix(3, 2, 0.0)) == Matrix{{4, -1}, {4, -1}, {4, -1}});
}

TEST_CASE("dense backward edge cases") {
  DenseLayer fresh("d", 2, 2);
  CHECK_THROWS_AS(fresh.backward(Matrix(1, 2)), DataError);

  DenseLayer layer("d", 2, 2);
  layer.weight().value = Matrix{{1, 0}, {0, 1}};
  layer.forward(Matrix{{3, 4}});
  const Matrix g{{0.25, -2.0}};
  CHECK(layer.backward(g) == g);
  CHECK(layer.backward(Matrix(1, 2, 0.0)) == Matrix(1, 2, 0.0));
  CHECK(layer.weight().grad == Matrix(2, 2, 0.0));
  CHECK(layer.bias().grad == Matrix(1, 2, 0.0));

  CHECK_THROWS_AS(layer.forward(Matrix(1, 3)), DataError);
}

TEST_CASE("random 3x2 dense layer matches finite differences within 1e-6") {
  RngStream rng(11, "dense");
  const auto report = check_dense(rng, 4, 3, 2);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("batchnorm forward") {
  BatchNormLayer bn("bn", 1);
  const Matrix y = bn.forward(Matrix{{-1}, {1}}, Mode::kTrain);
  const double f = 1.0 / std::sqrt(1.0 + 1e-5);
  CHECK(y(0, 0) == doctest::Approx(-f).epsilon(1e-15));
  CHECK(y(1, 0) == doctest::Approx(f).epsilon(1e-15));
  CHECK(bn.running_mean()[0] == doctest::Approx(0.0));
  // Running variance uses the unbiased batch estimate (2 here).
  CHECK(bn.running_var()[0] == doctest::Approx(0.9 + 0.1 * 2.0));

  BatchNormLayer flat("bn", 2);
  const Matrix z = flat.forward(Matrix{{3, -2}, {3, -2}, {3, -2}}, Mode::kTrain);
  for (double v : z.values()) CHECK(v == 0.0);

  BatchNormLayer inf("bn", 2);
  inf.running_mean() = {0.5, -1.5};
  inf.running_var() = {1.0, 1.0};
  const Matrix w = inf.forward(Matrix{{0.5, -1.5}}, Mode::kInference);
  for (double v : w.values()) CHECK(std::abs(v) < 1e-12);

  BatchNormLayer single("bn", 1);
  CHECK_THROWS_AS(single.forward(Matrix{{1.0}}, Mode::kTrain), DataError);
}

TEST_CASE("dropout is identity at inference and unbiased in training") {
  RngStream rng(3, "dropout");
  DropoutLayer layer(0.3);
  const Matrix x{{1.0, -2.0, 3.5}};
  CHECK(layer.forward(x, Mode::kInference, rng) == x);

  // 1e5 masks over a single unit.
  const Matrix one{{1.0}};
  const double keep_scale = 1.0 / 0.7;
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = layer.forward(one, Mode::kTrain, rng)(0, 0);
    REQUIRE((v == 0.0 || v == keep_scale));
    sum += v;
  }
  CHECK(std::abs(sum / n - 1.0) < 0.01);

  layer.forward(Matrix(2, 3, 1.0), Mode::kTrain, rng);
  for (double m : layer.mask().values()) CHECK((m == 0.0 || m == keep_scale));
}

TEST_CASE("frozen dropout reuses its mask") {
  RngStream rng(9, "dropout");
  DropoutLayer layer(0.5);
  const Matrix x(4, 8, 1.0);
  const Matrix first = layer.forward(x, Mode::kTrain, rng);
  layer.freeze_mask(true);
  CHECK(layer.forward(x, Mode::kTrain, rng) == first);
  layer.freeze_mask(false);
  bool changed = false;
  for (int i = 0; i < 5 && !changed; ++i) changed = !(layer.forward(x, Mode::kTrain, rng) == first);
  CHECK(changed);
}

TEST_CASE("activations") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-700.0) > 0.0);
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(sigmoid(0.0) == 0.5);

  ReluLayer relu;
  CHECK(relu.forward(Matrix{{-1.0, 2.0}}) == Matrix{{0.0, 2.0}});
  CHECK(relu.backward(Matrix{{5.0, 5.0}}) == Matrix{{0.0, 5.0}});
}

TEST_CASE("gradient reversal") {
  CHECK(grl_backward(Matrix{{1, -3}}, 2.0) == Matrix{{-2, 6}});
  const Matrix g{{0.5, -1.25, 3.0}, {7.0, 0.0, -0.125}};
  CHECK(grl_backward(g, 1.0) == -1.0 * g);
  const Matrix zero = grl_backward(g, 0.0);
  for (double v : zero.values()) CHECK(v == 0.0);
  for (double lambda : {0.0, 0.5, 1.0, 2.0}) {
    const Matrix back = grl_backward(grl_forward(g), lambda);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back.values()[i] == -lambda * g.values()[i]);
  }
}

TEST_CASE("mse loss") {
  const auto a = mse_loss(Matrix{{3.0}}, Matrix{{1.0}});
  CHECK(a.loss == 4.0);
  CHECK(a.grad == Matrix{{4.0}});
  CHECK(mse_loss(Matrix{{1.5}, {2.0}}, Matrix{{1.5}, {2.0}}).loss == 0.0);
  CHECK_THROWS_AS(mse_loss(Matrix{{1.0}}, Matrix{{1.0}, {2.0}}), DataError);

  RngStream rng(5, "mse");
  const auto report = check_mse(rng, 6);
  CHECK(report.max_rel_error < 1e-8);
}

TEST_CASE("cross entropy loss") {
  const std::vector<int> labels{0, 4, 10};
  const auto u = cross_entropy_loss(Matrix(3, 11, 0.7), labels);
  CHECK(u.loss == doctest::Approx(std::log(11.0)).epsilon(1e-14));

  Matrix sat(1, 3, 0.0);
  sat(0, 1) = 1000.0;
  const std::vector<int> one{1};
  CHECK(cross_entropy_loss(sat, one).loss == doctest::Approx(0.0));
  CHECK(std::isfinite(cross_entropy_loss(sat, std::vector<int>{0}).loss));

  CHECK_THROWS_AS(cross_entropy_loss(Matrix(1, 3), std::vector<int>{3}), DataError);

  RngStream rng(6, "ce");
  CHECK(check_cross_entropy(rng, 4, 3).max_rel_error < 1e-6);

  const Matrix p = softmax(random_matrix(rng, 5, 7, 4.0));
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double v : p.row(r)) s += v;
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  for (int i = 0; i < 20; ++i) {
    const std::vector<int> l{static_cast<int>(i % 4), static_cast<int>((i + 1) % 4)};
    CHECK(cross_entropy_loss(random_matrix(rng, 2, 4, 5.0), l).loss >= 0.0);
  }
}

TEST_CASE("randomized gradient oracle over every layer kind") {
  const SuiteResult r = gradient_suite();
  for (const auto& f : r.failures) FAIL_CHECK("gradient mismatch in " << f);
  CHECK(r.cases >= 100);
  MESSAGE("gradient cases: " << r.cases << ", worst relative error " << r.worst);
}

TEST_CASE("linear model under mse is exact to rounding") {
  RngStream rng(77, "linear");
  DenseLayer layer("lin", 4, 1);
  layer.weight().value = random_matrix(rng, 4, 1);
  const Matrix x = random_matrix(rng, 6, 4);
  const Matrix y = random_matrix(rng, 6, 1);
  layer.backward(mse_loss(layer.forward(x), y).grad);
  const Matrix gw = layer.weight().grad;
  const Matrix gb = layer.bias().grad;
  const GradientProbe probes[] = {probe("w", layer.weight().value, gw), probe("b", layer.bias().value, gb)};
  const auto report = finite_diff_check([&] { return mse_loss(layer.forward(x), y).loss; }, probes);
  CHECK(report.max_rel_error < 1e-9);
}

TEST_CASE("gradient check catches a sign flip") {
  RngStream rng(8, "flip");
  DenseLayer layer("d", 3, 2);
  layer.weight().value = random_matrix(rng, 3, 2);
  const Matrix x = random_matrix(rng, 4, 3);
  const Matrix r = random_matrix(rng, 4, 2);
  layer.forward(x);
  layer.backward(r);
  const Matrix flipped = -1.0 * layer.weight().grad;
  const GradientProbe probes[] = {probe("w", layer.weight().value, flipped)};
  const auto report = finite_diff_check([&] { return dot(layer.forward(x), r); }, probes);
  CHECK_FALSE(report.passed);
  CHECK(report.max_rel_error > 1.0);
}

TEST_CASE("gradient check rejects a non-deterministic loss") {
  RngStream rng(1, "noise");
  Matrix w(1, 1, 1.0);
  const Matrix g(1, 1, 1.0);
  const GradientProbe probes[] = {probe("w", w, g)};
  CHECK_THROWS_AS(finite_diff_check([&] { return w(0, 0) + rng.uniform(); }, probes), NumericError);
}

TEST_CASE("adam") {
  Parameter p{"p", Matrix{{1.0, -2.0}}, Matrix{{0.0, 0.0}}};
  Adam still({&p}, AdamOptions{});
  still.step();
  CHECK(p.value == Matrix{{1.0, -2.0}});

  Parameter q{"q", Matrix{{0.5}}, Matrix{{1.0}}};
  Adam one({&q}, AdamOptions{});
  one.step();
  CHECK(q.value(0, 0) - 0.5 == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(one.step_count() == 1);

  // Convex quadratic f(w) = sum (w - 3)^2.
  Parameter w{"w", Matrix{{0.0, 10.0}}, Matrix(1, 2)};
  Adam opt({&w}, AdamOptions{.lr = 0.1});
  const auto f = [&] { return std::pow(w.value(0, 0) - 3, 2) + std::pow(w.value(0, 1) - 3, 2); };
  const double before = f();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) w.grad(0, j) = 2.0 * (w.value(0, j) - 3.0);
    opt.step();
  }
  CHECK(f() < before);

  // Coupled weight decay acts through the gradient.
  Parameter d{"d", Matrix{{2.0}}, Matrix{{0.0}}};
  Adam decay({&d}, AdamOptions{.weight_decay = 0.5});
  decay.step();
  CHECK(d.value(0, 0) == doctest::Approx(2.0 - 0.001).epsilon(1e-9));
}

TEST_CASE("plateau scheduler") {
  PlateauScheduler improving(1.0);
  for (int i = 0; i < 50; ++i) CHECK(improving.step(100.0 - i) == 1.0);

  PlateauScheduler flat(1.0);
  for (int i = 0; i < 11; ++i) flat.step(5.0);
  CHECK(flat.lr() == 0.5);

  PlateauScheduler floor(1.0, PlateauOptions{.min_lr = 0.25});
  double previous = floor.lr();
  for (int i = 0; i < 33; ++i) {
    const double lr = floor.step(5.0);
    CHECK(lr <= previous);
    previous = lr;
  }
  CHECK(floor.lr() == 0.25);

  // Improvements below the relative threshold count as bad steps.
  PlateauScheduler tiny(1.0);
  double v = 1.0;
  for (int i = 0; i < 11; ++i) tiny.step(v -= 1e-6);
  CHECK(tiny.lr() == 0.5);
}
