// Grid search for the damage equation coefficients: picks beta (shared by
// the vulnerability and exposure terms) and beta0 so the generated damage
// mean and SD, averaged over seeds, land closest to the target table.

#include <cmath>
#include <cstdio>
#include <limits>

#include <CLI11.hpp>

#include "floodaid/errors.hpp"
#include "floodaid/synthetic.hpp"

using namespace floodaid;

namespace {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double clipped = 0.0;
};

Moments damage_moments(SyntheticConfig config, int seeds) {
  Moments m;
  for (int s = 0; s < seeds; ++s) {
    config.seed = static_cast<std::uint64_t>(s);
    const auto result = generate_synthetic(config);
    const auto y = result.dataset.targets();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    m.mean += mean / seeds;
    m.sd += std::sqrt(var / static_cast<double>(y.size())) / seeds;
    m.clipped += static_cast<double>(result.clipped_rows) / seeds;
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrate the synthetic damage equation"};
  SyntheticConfig config = default_synthetic_config();
  int seeds = 20;
  double beta_lo = 20.0, beta_hi = 40.0, beta_step = 1.0;
  double beta0_lo = 4.0, beta0_hi = 10.0, beta0_step = 0.1;
  app.add_option("--bias-strength", config.district_bias_strength, "District offset scale, USD M");
  app.add_option("--noise-sd", config.noise_sd, "Damage noise SD, USD M");
  app.add_option("--signature", config.district_signature, "Between-district share of geography variance");
  app.add_option("--seeds", seeds, "Seeds averaged per grid point")->check(CLI::PositiveNumber);
  app.add_option("--beta-lo", beta_lo);
  app.add_option("--beta-hi", beta_hi);
  app.add_option("--beta-step", beta_step)->check(CLI::PositiveNumber);
  app.add_option("--beta0-lo", beta0_lo);
  app.add_option("--beta0-hi", beta0_hi);
  app.add_option("--beta0-step", beta0_step)->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  set_warnings_enabled(false);

  const auto target = config.damage_target;
  double best_err = std::numeric_limits<double>::infinity();
  SyntheticConfig best = config;
  Moments best_m;
  try {
    for (double b = beta_lo; b <= beta_hi + 1e-9; b += beta_step) {
      for (double b0 = beta0_lo; b0 <= beta0_hi + 1e-9; b0 += beta0_step) {
        SyntheticConfig c = config;
        c.beta_vulnerability = c.beta_exposure = b;
        c.beta0 = b0;
        const Moments m = damage_moments(c, seeds);
        const double err = std::hypot((m.mean - target.mean) / target.mean, (m.sd - target.sd) / target.sd);
        if (err < best_err) {
          best_err = err;
          best = c;
          best_m = m;
        }
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  }
  std::printf("beta_vulnerability = beta_exposure = %g, beta0 = %g\n", best.beta_vulnerability, best.beta0);
  std::printf("damage mean %.3f (target %.2f), sd %.3f (target %.2f), clipped rows %.1f\n", best_m.mean,
              target.mean, best_m.sd, target.sd, best_m.clipped);
  return 0;
}
