#include "cpflow/clock.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cpflow/errors.hpp"

namespace cpflow {

std::size_t Clock::count(double t) const {
  auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  return static_cast<std::size_t>(it - jump_times.begin());
}

std::size_t required_iterations(double eps, double t, int n_slack) {
  if (eps <= 0.0) throw std::invalid_argument("required_iterations: eps > 0 required");
  if (n_slack < 0) throw std::invalid_argument("required_iterations: n_slack >= 0 required");
  const double base = std::ceil((std::numbers::e - 1.0) * t / eps);
  return static_cast<std::size_t>(base) + static_cast<std::size_t>(n_slack);
}

Clock build_clock(double eps, double t_max, RngStream& stream) {
  if (eps <= 0.0) throw std::invalid_argument("build_clock: eps > 0 required");
  if (t_max < 0.0) throw std::invalid_argument("build_clock: t_max >= 0 required");
  Clock clock;
  clock.eps = eps;
  if (t_max == 0.0) return clock;
  // Budget with slack 40: overshoot probability ~ e^{-40}, negligible against
  // any replica count used here.
  const std::size_t budget = required_iterations(eps, t_max, 40);
  double s = 0.0;
  for (std::size_t n = 0; n < budget; ++n) {
    s += eps * stream.next_exponential();
    clock.jump_times.push_back(s);
    if (s > t_max) return clock;
  }
  throw truncation_error("build_clock: event budget exhausted before t_max");
}

}  // namespace cpflow
