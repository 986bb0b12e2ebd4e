#ifndef CPFLOW_ERRORS_HPP
#define CPFLOW_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpflow {

// A path left the finite range (overflow/NaN) at the given event index.
class divergence_error : public std::runtime_error {
public:
  divergence_error(std::size_t event_index, const std::string& what)
      : std::runtime_error(what), event_index_(event_index) {}
  std::size_t event_index() const { return event_index_; }

private:
  std::size_t event_index_;
};

// The event budget from required_iterations() was exhausted before t_max.
class truncation_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An iterative solver (Picard sweep, mollifier cascade) failed to contract.
class non_convergence_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace cpflow

#endif
