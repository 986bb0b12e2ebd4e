#include "cpflow/jump_law.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cpflow {

namespace {

// Surface area of the unit sphere in R^d (d = 1 counts the two half-lines).
double sphere_surface(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw std::invalid_argument("jump law: dim must be 1, 2 or 3");
  }
}

}  // namespace

double lattice_tail_sum_1d(double alpha, int k) {
  if (k < 1) throw std::invalid_argument("lattice_tail_sum_1d: k >= 1 required");
  // Sum both signs: 2 * sum_{j >= k} j^{-1-alpha}. Midpoint integral tail keeps
  // the truncation error O(K^{-alpha-2}).
  const int big = std::max(k, 1000000);
  double s = 0.0;
  for (int j = big; j >= k; --j) s += std::pow(static_cast<double>(j), -1.0 - alpha);
  s += std::pow(big + 0.5, -alpha) / alpha;
  return 2.0 * s;
}

JumpLaw JumpLaw::axis_uniform(int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("axis_uniform: dim must be 1..3");
  JumpLaw law;
  law.kind_ = Kind::AxisUniform;
  law.dim_ = dim;
  law.alpha_ = 2.0;
  law.c0_ = 1.0;
  const double p = 1.0 / (2.0 * dim);
  for (int i = 0; i < dim; ++i) {
    Atom plus{{0, 0, 0}, p}, minus{{0, 0, 0}, p};
    plus.z[i] = 1;
    minus.z[i] = -1;
    law.atoms_.push_back(plus);
    law.atoms_.push_back(minus);
  }
  law.build_alias_table();
  return law;
}

JumpLaw JumpLaw::lattice_stable(double alpha, int dim, double cutoff) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("lattice_stable: alpha in (0,2)");
  if (dim < 1 || dim > 3) throw std::invalid_argument("lattice_stable: dim must be 1..3");
  if (cutoff < 1.0) throw std::invalid_argument("lattice_stable: cutoff >= 1 required");

  JumpLaw law;
  law.kind_ = Kind::LatticeStable;
  law.dim_ = dim;
  law.alpha_ = alpha;
  law.cutoff_ = cutoff;

  const double expo = -(dim + alpha);
  double partial = 0.0;
  if (dim == 1) {
    const int radius = static_cast<int>(cutoff);
    law.atoms_.reserve(2 * static_cast<std::size_t>(radius));
    // Small-to-large accumulation of the sum for accuracy.
    for (int k = radius; k >= 1; --k) partial += std::pow(static_cast<double>(k), expo);
    partial *= 2.0;
    for (int k = 1; k <= radius; ++k) {
      const double m = std::pow(static_cast<double>(k), expo);
      law.atoms_.push_back(Atom{{k, 0, 0}, m});
      law.atoms_.push_back(Atom{{-k, 0, 0}, m});
    }
  } else {
    const int box = static_cast<int>(std::floor(cutoff));
    const double r2 = cutoff * cutoff;
    const int zmax = dim == 3 ? box : 0;
    for (int x = -box; x <= box; ++x)
      for (int y = -box; y <= box; ++y)
        for (int z = -zmax; z <= zmax; ++z) {
          const double n2 = double(x) * x + double(y) * y + double(z) * z;
          if (n2 == 0.0 || n2 > r2) continue;
          const double m = std::pow(n2, 0.5 * expo);
          law.atoms_.push_back(Atom{{x, y, z}, m});
          partial += m;
        }
  }

  // Tail of the normalizing sum beyond the cutoff, via the radial integral.
  const double surf = sphere_surface(dim);
  const double tail = surf * std::pow(cutoff + 0.5, -alpha) / alpha;
  const double total = partial + tail;
  // Midpoint-rule bound on the integral-vs-sum discrepancy; exact shell counts
  // beyond the cutoff are infeasible for d > 1, so the bound is looser there.
  const double err_bound =
      surf * (1.0 + alpha) * std::pow(cutoff + 0.5, -alpha - 1.0) / (dim == 1 ? 24.0 : 1.0);
  const double rel_err = err_bound / total;
  const double target = dim == 1 ? 1e-10 : 1e-6;
  if (rel_err > target) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "lattice_stable: cutoff too small, achieved normalization bound %.3e > target %.1e",
                  rel_err, target);
    throw std::runtime_error(msg);
  }
  law.c0_ = 1.0 / total;

  // Sampling probabilities are renormalized over the retained atoms; the tail
  // mass lives only in the normalizer.
  for (auto& a : law.atoms_) a.prob /= partial;
  law.build_alias_table();
  return law;
}

JumpLaw JumpLaw::table(std::vector<Atom> atoms) {
  if (atoms.empty()) throw std::invalid_argument("table law: no atoms");
  JumpLaw law;
  law.kind_ = Kind::Table;
  law.dim_ = 1;
  for (const auto& a : atoms)
    for (int i = 0; i < 3; ++i)
      if (a.z[i] != 0) law.dim_ = std::max(law.dim_, i + 1);
  double total = 0.0;
  for (const auto& a : atoms) {
    if (a.prob < 0.0) throw std::invalid_argument("table law: negative probability");
    total += a.prob;
  }
  for (const auto& a : atoms) {
    bool mirrored = false;
    for (const auto& b : atoms)
      if (b.z[0] == -a.z[0] && b.z[1] == -a.z[1] && b.z[2] == -a.z[2] &&
          std::abs(b.prob - a.prob) <= 1e-15 * total) {
        mirrored = true;
        break;
      }
    if (!mirrored) throw std::invalid_argument("table law: not symmetric");
  }
  for (auto& a : atoms) a.prob /= total;
  law.atoms_ = std::move(atoms);
  law.build_alias_table();
  return law;
}

void JumpLaw::build_alias_table() {
  // Walker alias table.
  const std::size_t n = atoms_.size();
  alias_prob_.assign(n, 0.0);
  alias_idx_.assign(n, 0);
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = atoms_[i].prob * n;
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i)
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    const auto l = large.back();
    small.pop_back();
    large.pop_back();
    alias_prob_[s] = scaled[s];
    alias_idx_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  for (auto i : large) alias_prob_[i] = 1.0;
  for (auto i : small) alias_prob_[i] = 1.0;
}

std::array<int, 3> JumpLaw::sample(RngStream& stream) const {
  const std::size_t n = atoms_.size();
  const auto r = stream.next_u64();
  auto idx = static_cast<std::size_t>((static_cast<unsigned __int128>(r) * n) >> 64);
  if (stream.next_uniform() >= alias_prob_[idx]) idx = alias_idx_[idx];
  return atoms_[idx].z;
}

double JumpLaw::tail_probability(int k) const {
  if (kind_ != Kind::LatticeStable || dim_ != 1)
    throw std::logic_error("tail_probability: 1-D lattice-stable law only");
  return c0_ * lattice_tail_sum_1d(alpha_, k);
}

double JumpLaw::second_moment() const {
  double s = 0.0;
  for (const auto& a : atoms_) {
    const double n2 =
        double(a.z[0]) * a.z[0] + double(a.z[1]) * a.z[1] + double(a.z[2]) * a.z[2];
    s += n2 * a.prob;
  }
  return s;
}

JumpLaw build_jump_law(double alpha, int dim, std::optional<double> cutoff) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("build_jump_law: alpha in (0,2]");
  if (alpha == 2.0) return JumpLaw::axis_uniform(dim);
  const double r = cutoff.value_or(std::pow(1e6, 1.0 / dim));
  return JumpLaw::lattice_stable(alpha, dim, r);
}

}  // namespace cpflow
