#include "floodaid/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "floodaid/errors.hpp"
#include "floodaid/rng.hpp"

namespace floodaid {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  std::span<const GradientProbe> probes,
                                  const GradCheckOptions& options) {
  const double base_a = loss();
  const double base_b = loss();
  if (!(base_a == base_b)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "finite_diff_check: forward is not deterministic (" << base_a << " vs " << base_b
        << "); freeze dropout masks and batch statistics first";
    throw NumericError(msg.str());
  }

  RngStream sampler(options.seed, "gradcheck");
  GradCheckReport report;
  for (const GradientProbe& probe : probes) {
    if (probe.values.size() != probe.analytic.size()) {
      throw DataError("finite_diff_check: analytic gradient size mismatch for " + probe.name);
    }
    std::vector<std::size_t> entries(probe.values.size());
    std::iota(entries.begin(), entries.end(), std::size_t{0});
    if (options.max_entries_per_probe != 0 && entries.size() > options.max_entries_per_probe) {
      sampler.shuffle(entries.begin(), entries.end());
      entries.resize(options.max_entries_per_probe);
      std::sort(entries.begin(), entries.end());
    }

    ProbeResult result{probe.name, entries.size(), 0.0, 0};
    for (std::size_t idx : entries) {
      double& p = probe.values[idx];
      const double saved = p;
      const double h = options.step * std::max(1.0, std::abs(saved));
      p = saved + h;
      const double up = loss();
      p = saved - h;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(probe.analytic[idx], numeric, options.abs_floor);
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_index = idx;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, result.max_rel_error);
    report.probes.push_back(std::move(result));
  }
  report.passed = report.max_rel_error <= options.tolerance;
  return report;
}

}  // namespace floodaid
