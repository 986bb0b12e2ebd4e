#ifndef CPFLOW_CLOCK_HPP
#define CPFLOW_CLOCK_HPP

#include <cstddef>
#include <vector>

#include "cpflow/rng.hpp"

namespace cpflow {

// Event times of a Poisson process with intensity 1/eps: S_n = eps * sum of
// n unit exponentials. Strictly increasing; count(t) is right-continuous.
struct Clock {
  double eps = 0.0;
  std::vector<double> jump_times;

  // N_t = #{n : S_n <= t}.
  std::size_t count(double t) const;
};

// Generates jump times until the first one exceeds t_max (that overshoot time
// is kept so count(t_max) is recoverable without ambiguity). Throws
// truncation_error if the event budget from required_iterations is exhausted.
Clock build_clock(double eps, double t_max, RngStream& stream);

// Event budget ceil((e-1) t / eps) + n_slack; exceeding it has probability
// at most e^{-n_slack}.
std::size_t required_iterations(double eps, double t, int n_slack);

}  // namespace cpflow

#endif
