#include "cpflow/scenarios.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cpflow {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t hash_of(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Vec v1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

// deterministic sample points for residual checks
RngStream residual_stream(const std::string& name) {
  std::vector<StreamLabel> labels{{StreamLabel::kPurpose, hash_of(name)}};
  return RngStream(1234u, labels);
}

// central finite difference of the closed-form path vs. the drift, skipping
// the h-neighbourhood of kinks via the supplied snap function
double ode_residual(const ScenarioSpec& spec, double t_max,
                    const std::function<double(double)>& snap) {
  RngStream rng = residual_stream(spec.name);
  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    double t = rng.next_uniform() * t_max;
    const double x0 = 0.25 + 1.5 * rng.next_uniform();
    if (snap) t = snap(t);
    const double x = spec.exact_path(t, x0);
    const double fd = (spec.exact_path(t + h, x0) - spec.exact_path(t - h, x0)) / (2.0 * h);
    const double b = spec.coeffs->drift(t, v1(x))[0];
    worst = std::max(worst, std::abs(fd - b));
  }
  return worst;
}

CoefficientSet drift_only_1d(std::function<double(double, double)> b) {
  CoefficientSet c;
  c.dim = 1;
  c.drift = [b = std::move(b)](double t, const Vec& x) { return v1(b(t, x[0])); };
  return c;
}

ScenarioSpec make_oscillatory() {
  ScenarioSpec s;
  s.name = "oscillatory";
  s.summary = "square-wave drift f(t); tests the event-average isometry";
  s.coeffs = drift_only_1d([](double t, double) { return oscillatory_f(t); });
  s.f_square_integral = 1e4;
  s.b_sup = 100.0;
  s.T = 1.0;
  s.x0 = 0.0;
  s.default_eps = {1e-4};
  s.default_replicas = 2000;
  s.exact_path = [](double t, double) {
    // integral of the +-100 square wave with period 1/100
    const double period = 0.01;
    double ph = t - std::floor(t / period) * period;
    return ph <= 0.005 ? 100.0 * ph : 100.0 * (period - ph);
  };
  return s;
}

ScenarioSpec make_lipschitz_1d() {
  ScenarioSpec s;
  s.name = "lipschitz_1d";
  s.summary = "smooth bounded drift b = sin x + cos t";
  s.coeffs = drift_only_1d([](double t, double x) { return std::sin(x) + std::cos(t); });
  s.kappa = 1.0;
  s.b_sup = 2.0;
  s.T = 1.0;
  s.x0 = 1.0;
  for (int k = 6; k <= 14; ++k) s.default_eps.push_back(std::pow(2.0, -k));
  s.default_replicas = 500;
  s.rate_lo = 0.4;
  s.rate_hi = 0.6;
  return s;
}

ScenarioSpec make_linear_ou() {
  ScenarioSpec s;
  s.name = "linear_ou";
  s.summary = "b = -x with axis noise; exact moments at every eps";
  CoefficientSet c = drift_only_1d([](double, double x) { return -x; });
  c.diffusion = [](double, const Vec&, const Vec& z) { return z; };
  c.drift_grad = [](double, const Vec& x) { return Mat::Constant(x.size(), x.size(), -1.0); };
  s.coeffs = c;
  s.law = JumpLaw::axis_uniform(1);
  s.kappa = 1.0;
  s.T = 1.0;
  s.x0 = 1.0;
  s.default_eps = {0.1, 0.05, 0.025, 0.0125};
  s.default_replicas = 100000;
  s.rate_lo = 0.85;
  s.rate_hi = 1.15;
  s.exact_path = [](double t, double x0) { return x0 * std::exp(-t); };
  return s;
}

ScenarioSpec make_double_well() {
  ScenarioSpec s;
  s.name = "double_well";
  s.summary = "superlinear drift x - x^3 with taming, axis noise";
  s.qualitative = true;
  CoefficientSet c = drift_only_1d([](double, double x) { return x - x * x * x; });
  c.diffusion = [](double, const Vec&, const Vec& z) { return z; };
  c.m = 3.0;
  c.taming_enabled = true;
  s.coeffs = c;
  s.law = JumpLaw::axis_uniform(1);
  s.T = 50.0;
  s.x0 = 0.0;
  s.default_eps = {1e-2};
  s.default_replicas = 16;
  return s;
}

ScenarioSpec make_stable_drift() {
  ScenarioSpec s;
  s.name = "stable_drift";
  s.summary = "Lipschitz drift with additive alpha = 1.5 lattice-stable noise";
  CoefficientSet c = drift_only_1d([](double, double x) { return -0.1 * std::sin(x); });
  c.diffusion = [](double, const Vec&, const Vec& z) { return z; };
  c.alpha = 1.5;
  s.coeffs = c;
  s.law = build_jump_law(1.5, 1);
  s.kappa = 0.1;
  s.b_sup = 0.1;
  s.T = 1.0;
  s.x0 = 0.0;
  s.default_eps = {1e-2, 1e-3};
  s.default_replicas = 20000;
  return s;
}

ScenarioSpec make_filippov_sign() {
  ScenarioSpec s;
  s.name = "filippov_sign";
  s.summary = "discontinuous one-sided-Lipschitz drift b = -sign(x)";
  s.coeffs = drift_only_1d([](double, double x) { return x > 0 ? -1.0 : (x < 0 ? 1.0 : 0.0); });
  s.kappa = 0.0;  // one-sided
  s.b_sup = 1.0;
  s.T = 2.0;
  s.x0 = 1.0;
  for (int k = 6; k <= 12; ++k) s.default_eps.push_back(std::pow(2.0, -k));
  s.default_replicas = 500;
  s.rate_lo = 0.35;
  s.rate_hi = 0.65;
  s.exact_path = [](double t, double x0) {
    const double sign = x0 > 0 ? 1.0 : (x0 < 0 ? -1.0 : 0.0);
    return sign * std::max(std::abs(x0) - t, 0.0);
  };
  return s;
}

ScenarioSpec make_vortex_sobolev() {
  ScenarioSpec s;
  s.name = "vortex_sobolev";
  s.summary = "planar vortex drift, Holder at the origin; qualitative demo";
  s.qualitative = true;
  CoefficientSet c;
  c.dim = 2;
  c.drift = [](double, const Vec& x) {
    Vec b(2);
    const double r = x.norm();
    if (r == 0.0) {
      b.setZero();
      return b;
    }
    const double scale = std::exp(-0.5 * r * r) / std::sqrt(r);
    b[0] = -x[1] * scale;
    b[1] = x[0] * scale;
    return b;
  };
  s.coeffs = c;
  s.T = 1.0;
  s.x0 = 1.0;  // start at (1, 0)
  for (int k = 6; k <= 10; ++k) s.default_eps.push_back(std::pow(2.0, -k));
  s.default_replicas = 200;
  return s;
}

KernelSet drift_only_kernel(std::function<double(double, double)> b2,
                            std::function<std::vector<double>(const std::vector<double>&)> reduce,
                            std::function<double(double, const std::vector<double>&)> apply) {
  KernelSet k;
  k.b = [b2 = std::move(b2)](double, double x, double y) { return b2(x, y); };
  k.reduce = [reduce = std::move(reduce)](double, const std::vector<double>& support) {
    return reduce(support);
  };
  k.apply = [apply = std::move(apply)](double, double x, const std::vector<double>& ctx) {
    return apply(x, ctx);
  };
  return k;
}

std::vector<double> cos_sin_means(const std::vector<double>& ys) {
  double c = 0.0, s = 0.0;
  for (double y : ys) {
    c += std::cos(y);
    s += std::sin(y);
  }
  const double n = double(ys.size());
  return {c / n, s / n};
}

ScenarioSpec make_mckean_mean_revert() {
  ScenarioSpec s;
  s.name = "mckean_mean_revert";
  s.summary = "pairwise kernel b(x,y) = -(x - y); mean-reverting particles";
  s.kernel = drift_only_kernel(
      [](double x, double y) { return -(x - y); },
      [](const std::vector<double>& ys) {
        double m = 0.0;
        for (double y : ys) m += y;
        return std::vector<double>{m / double(ys.size())};
      },
      [](double x, const std::vector<double>& ctx) { return -(x - ctx[0]); });
  s.kernel->kappa = 1.0;
  s.kappa = 1.0;
  s.T = 1.0;
  s.default_n = {8, 16, 32, 64, 128};
  s.default_replicas = 64;
  s.init_sampler = standard_normal;
  return s;
}

ScenarioSpec make_mckean_sin() {
  ScenarioSpec s;
  s.name = "mckean_sin";
  s.summary = "bounded Lipschitz kernel b(x,y) = sin(x - y)";
  s.kernel = drift_only_kernel(
      [](double x, double y) { return std::sin(x - y); }, cos_sin_means,
      [](double x, const std::vector<double>& ctx) {
        return std::sin(x) * ctx[0] - std::cos(x) * ctx[1];
      });
  s.kernel->kappa = 1.0;
  s.kappa = 1.0;
  s.b_sup = 1.0;
  s.T = 1.0;
  s.default_n = {8, 16, 32, 64, 128, 256};
  s.default_replicas = 64;
  s.rate_lo = -1.25;
  s.rate_hi = -0.75;
  s.init_sampler = standard_normal;
  return s;
}

ScenarioSpec make_mckean_w1() {
  ScenarioSpec s;
  s.name = "mckean_w1";
  s.summary = "bounded Lipschitz kernel cos(x+y)/2 with additive axis noise";
  s.qualitative = true;
  s.kernel = drift_only_kernel(
      [](double x, double y) { return 0.5 * std::cos(x + y); }, cos_sin_means,
      [](double x, const std::vector<double>& ctx) {
        return 0.5 * (std::cos(x) * ctx[0] - std::sin(x) * ctx[1]);
      });
  s.kernel->sigma = [](double, double, double z) { return z; };
  s.kernel->kappa = 0.5;
  s.kappa = 0.5;
  s.b_sup = 0.5;
  s.law = JumpLaw::axis_uniform(1);
  s.T = 1.0;
  s.default_n = {8, 16, 32, 64, 128};
  s.default_replicas = 64;
  s.init_sampler = standard_normal;
  return s;
}

ScenarioSpec make_taylor_green() {
  ScenarioSpec s;
  s.name = "taylor_green";
  s.summary = "single-mode vorticity -2 cos x1 cos x2; convection vanishes";
  s.w0 = [](double x1, double x2) { return -2.0 * std::cos(x1) * std::cos(x2); };
  s.nu = 0.1;
  s.grid = 32;
  s.T = 0.5;
  s.default_eps = {0.02, 0.01, 0.005};
  s.default_replicas = 2000;
  s.exact_vorticity = [](double s_, double x1, double x2) {
    return std::exp(-2.0 * 0.1 * (0.5 - s_)) * (-2.0) * std::cos(x1) * std::cos(x2);
  };
  s.exact_velocity = [](double s_, double x1, double x2) {
    const double decay = std::exp(-2.0 * 0.1 * (0.5 - s_));
    return std::array<double, 2>{decay * std::cos(x1) * std::sin(x2),
                                 -decay * std::sin(x1) * std::cos(x2)};
  };
  return s;
}

void attach_residuals(std::map<std::string, ScenarioSpec>& reg) {
  {
    ScenarioSpec& s = reg.at("oscillatory");
    s.residual_check = [&s]() {
      // kinks every 1/200; nudge sample points away from them
      auto snap = [](double t) {
        const double cell = 0.005;
        const double d = std::abs(t / cell - std::round(t / cell)) * cell;
        return d < 1e-5 ? t + 1e-4 : t;
      };
      return ode_residual(s, 0.98, snap);
    };
  }
  {
    ScenarioSpec& s = reg.at("linear_ou");
    s.residual_check = [&s]() { return ode_residual(s, s.T, nullptr); };
  }
  {
    ScenarioSpec& s = reg.at("filippov_sign");
    s.residual_check = [&s]() {
      RngStream rng = residual_stream(s.name);
      const double h = 1e-6;
      double worst = 0.0;
      for (int k = 0; k < 100; ++k) {
        double t = rng.next_uniform() * s.T;
        const double x0 = 0.25 + 1.5 * rng.next_uniform();
        if (std::abs(t - x0) < 1e-5) t += 1e-4;  // kink where the path hits 0
        const double x = s.exact_path(t, x0);
        const double fd = (s.exact_path(t + h, x0) - s.exact_path(t - h, x0)) / (2.0 * h);
        const double b = x == 0.0 ? 0.0 : s.coeffs->drift(t, v1(x))[0];
        worst = std::max(worst, std::abs(fd - b));
      }
      return worst;
    };
  }
  {
    ScenarioSpec& s = reg.at("taylor_green");
    s.residual_check = [&s]() {
      // d_s by finite difference; space derivatives of the single mode exact
      RngStream rng = residual_stream(s.name);
      const double h = 1e-6;
      double worst = 0.0;
      for (int k = 0; k < 100; ++k) {
        const double t = rng.next_uniform() * s.T;
        const double x1 = (rng.next_uniform() - 0.5) * 2.0 * kPi;
        const double x2 = (rng.next_uniform() - 0.5) * 2.0 * kPi;
        const double ds =
            (s.exact_vorticity(t + h, x1, x2) - s.exact_vorticity(t - h, x1, x2)) / (2.0 * h);
        const double w = s.exact_vorticity(t, x1, x2);
        const double lap = -2.0 * w;  // both modes have |k|^2 = 2
        const auto u = s.exact_velocity(t, x1, x2);
        const double decay = std::exp(-2.0 * s.nu * (s.T - t));
        const double g1 = decay * 2.0 * std::sin(x1) * std::cos(x2);
        const double g2 = decay * 2.0 * std::cos(x1) * std::sin(x2);
        worst = std::max(worst, std::abs(ds + s.nu * lap + u[0] * g1 + u[1] * g2));
      }
      return worst;
    };
  }
}

std::map<std::string, ScenarioSpec> build_registry() {
  std::map<std::string, ScenarioSpec> reg;
  for (ScenarioSpec s :
       {make_oscillatory(), make_lipschitz_1d(), make_linear_ou(), make_double_well(),
        make_stable_drift(), make_filippov_sign(), make_vortex_sobolev(),
        make_mckean_mean_revert(), make_mckean_sin(), make_mckean_w1(), make_taylor_green()}) {
    std::ostringstream tag;
    tag << s.name << "|T=" << s.T << "|x0=" << s.x0 << "|kappa=" << s.kappa << "|nu=" << s.nu;
    s.hash = hash_of(tag.str());
    reg.emplace(s.name, std::move(s));
  }
  attach_residuals(reg);
  return reg;
}

const std::map<std::string, ScenarioSpec>& registry() {
  static const std::map<std::string, ScenarioSpec> reg = build_registry();
  return reg;
}

}  // namespace

double oscillatory_f(double s) {
  const long k = long(std::floor(200.0 * s));
  return (1.0 - 2.0 * double(k & 1)) * 100.0;
}

double standard_normal(RngStream& stream) {
  const double u1 = stream.next_uniform();
  const double u2 = stream.next_uniform();
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(2.0 * kPi * u2);
}

const ScenarioSpec& get_scenario(const std::string& name) {
  const auto& reg = registry();
  const auto it = reg.find(name);
  if (it == reg.end()) {
    std::ostringstream msg;
    msg << "unknown scenario '" << name << "'; registered:";
    for (const auto& [key, value] : reg) msg << " " << key;
    throw std::invalid_argument(msg.str());
  }
  return it->second;
}

std::vector<std::string> scenario_names() {
  std::vector<std::string> names;
  for (const auto& [key, value] : registry()) names.push_back(key);
  return names;
}

}  // namespace cpflow
