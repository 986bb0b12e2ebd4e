#ifndef CPFLOW_JUMP_LAW_HPP
#define CPFLOW_JUMP_LAW_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "cpflow/rng.hpp"

namespace cpflow {

// Discrete symmetric jump law on the integer lattice (or on the axis atoms
// for alpha = 2). Atoms are stored explicitly together with an alias table,
// so sampling is O(1) and generator sums are exact finite sums.
class JumpLaw {
public:
  enum class Kind { AxisUniform, LatticeStable, Table };

  struct Atom {
    std::array<int, 3> z;  // lattice coordinates, first `dim` entries used
    double prob;           // sampling probability (atoms sum to 1 exactly)
  };

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }

  // Analytic normalizing constant c0 (LatticeStable only; 1 otherwise).
  double normalizer() const { return c0_; }
  double cutoff() const { return cutoff_; }

  const std::vector<Atom>& atoms() const { return atoms_; }

  // Draws one jump; writes `dim` coordinates.
  std::array<int, 3> sample(RngStream& stream) const;

  // Exact lattice tail sum sum_{|j| >= k} |j|^{-d-alpha} scaled by c0,
  // i.e. P(|xi| >= k) under the un-truncated law. 1-D only.
  double tail_probability(int k) const;

  // Second moment sum |z|^2 p(z) over stored atoms.
  double second_moment() const;

  std::optional<std::pair<double, double>> declared_rates;  // (beta0, beta1)

  static JumpLaw axis_uniform(int dim);
  static JumpLaw lattice_stable(double alpha, int dim, double cutoff);
  static JumpLaw table(std::vector<Atom> atoms);

private:
  JumpLaw() = default;
  void build_alias_table();

  Kind kind_ = Kind::AxisUniform;
  int dim_ = 1;
  double alpha_ = 2.0;
  double c0_ = 1.0;
  double cutoff_ = 0.0;
  std::vector<Atom> atoms_;
  std::vector<double> alias_prob_;
  std::vector<std::uint32_t> alias_idx_;
};

// alpha = 2 gives the axis-uniform law {+-e_i : 1/(2d)}; alpha < 2 gives the
// lattice-stable law p(z) = c0 |z|^{-d-alpha} truncated at `cutoff`, with the
// normalizer corrected by the analytic tail integral. Throws
// std::invalid_argument on bad parameters, std::runtime_error (with the
// achieved bound) when the cutoff cannot reach the accuracy target.
JumpLaw build_jump_law(double alpha, int dim, std::optional<double> cutoff = std::nullopt);

// sum_{|j| >= k, j in Z \ {0}} |j|^{-1-alpha}: partial sum plus integral tail.
double lattice_tail_sum_1d(double alpha, int k);

}  // namespace cpflow

#endif
