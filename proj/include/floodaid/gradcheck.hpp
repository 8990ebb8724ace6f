#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace floodaid {

// One parameter tensor to probe: the live values (perturbed in place and
// restored) and the analytic gradient computed beforehand.
struct GradientProbe {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckOptions {
  double step = 1e-5;         // h = step * max(1, |param|)
  double tolerance = 1e-4;    // max relative error allowed
  double abs_floor = 1e-7;    // denominator floor for near-zero gradients
  std::size_t max_entries_per_probe = 0;  // 0 = check every entry
  std::uint64_t seed = 0;     // entry sampling when capped
};

struct ProbeResult {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<ProbeResult> probes;
  double max_rel_error = 0.0;
  bool passed = true;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

// Central differences of `loss` against the supplied analytic gradients.
// `loss` must be deterministic; two calls at the unperturbed point that
// disagree raise NumericError.
GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  std::span<const GradientProbe> probes,
                                  const GradCheckOptions& options = {});

}  // namespace floodaid
