#include "expcap/orlicz.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

#include "expcap/errors.hpp"

namespace expcap {

namespace {

constexpr double kExpLimit = 700.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double s) { return s < 0 ? -1.0 : 1.0; }

double exp_P(double t) {
  double a = std::abs(t);
  if (a > kExpLimit) throw Overflow("P argument beyond representable range");
  if (a < 1e-3) return a * a * (0.5 + a * (1.0 / 6 + a * (1.0 / 24 + a / 120)));
  return std::expm1(a) - a;
}

double exp_Pstar(double t) {
  double a = std::abs(t);
  if (a < 1e-3) return a * a * (0.5 + a * (-1.0 / 6 + a * (1.0 / 12 + a * (-1.0 / 20 + a / 30))));
  return (a + 1.0) * std::log1p(a) - a;
}

double exp_p(double s) {
  double a = std::abs(s);
  if (a > kExpLimit) throw Overflow("p argument beyond representable range");
  return sgn(s) * std::expm1(a);
}

double exp_pbar(double s) { return sgn(s) * std::log1p(std::abs(s)); }

}  // namespace

NFunction exponential_pair() {
  NFunction nf;
  nf.eval_P = exp_P;
  nf.eval_Pstar = exp_Pstar;
  nf.density_p = exp_p;
  nf.density_pbar = exp_pbar;
  nf.satisfies_delta2_P = false;
  nf.satisfies_delta2_Pstar = true;
  nf.name = "exponential";
  return nf;
}

NFunction quadratic_pair() {
  NFunction nf;
  nf.eval_P = [](double t) { return 0.5 * t * t; };
  nf.eval_Pstar = nf.eval_P;
  nf.density_p = [](double t) { return t; };
  nf.density_pbar = nf.density_p;
  nf.satisfies_delta2_P = true;
  nf.satisfies_delta2_Pstar = true;
  nf.name = "quadratic";
  return nf;
}

NFunction generic_nfunction(std::string name, std::function<double(double)> P,
                            std::function<double(double)> p, std::function<double(double)> Pstar,
                            std::function<double(double)> pbar) {
  NFunction nf;
  nf.name = std::move(name);
  nf.eval_P = [P](double t) { return P(std::abs(t)); };
  nf.density_p = [p](double t) { return sgn(t) * p(std::abs(t)); };

  // upper end of the search interval: p(X) > y
  auto reach = [p](double y) {
    double X = 1.0;
    for (int i = 0; i < 2000 && p(X) <= y; ++i) X *= 2.0;
    return X;
  };

  if (pbar) {
    nf.density_pbar = [pbar](double t) { return sgn(t) * pbar(std::abs(t)); };
  } else {
    nf.density_pbar = [p, reach](double t) {
      double y = std::abs(t);
      if (y == 0.0) return 0.0;
      double lo = 0.0, hi = reach(y);
      for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (p(mid) < y ? lo : hi) = mid;
      }
      return sgn(t) * 0.5 * (lo + hi);
    };
  }

  if (Pstar) {
    nf.eval_Pstar = [Pstar](double t) { return Pstar(std::abs(t)); };
  } else {
    nf.eval_Pstar = [P, reach](double t) {
      double y = std::abs(t);
      if (y == 0.0) return 0.0;
      // golden-section maximization of x*y - P(x) on [0, X]
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double a = 0.0, b = reach(y);
      auto obj = [&](double x) { return x * y - P(x); };
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = obj(c), fd = obj(d);
      for (int i = 0; i < 300 && b - a > 1e-15 * (1.0 + b); ++i) {
        if (fc > fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - g * (b - a);
          fc = obj(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + g * (b - a);
          fd = obj(d);
        }
      }
      return std::max(0.0, obj(0.5 * (a + b)));
    };
  }
  return nf;
}

double young_gap(const NFunction& nf, double x, double y) { return nf.eval_P(x) + nf.eval_Pstar(y) - x * y; }

double young_gap(double x, double y) { return exp_P(x) + exp_Pstar(y) - x * y; }

double q_function(double r) {
  double a = std::abs(r);
  return (a + 0.5) * std::log1p(2.0 * a) - a;
}

Sandwich pstar_sandwich(double a) {
  double t = std::abs(a) * std::log1p(std::abs(a));
  return {0.5 * t, exp_Pstar(a), t};
}

namespace {

void check_sizes(const Field& f, const Field& w) {
  if (f.size() != w.size()) throw GridMismatch("field and weight sizes differ");
}

// sum N(f/k) w; overflow is reported as +inf when `capped`
double modular(const Field& f, const Field& w, const NFunction& nf, Side side, double k, bool capped) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (f[i] == 0.0 || w[i] == 0.0) continue;
    try {
      s += nf.N(side, f[i] / k) * w[i];
    } catch (const Overflow&) {
      if (capped) return kInf;
      throw;
    }
  }
  return s;
}

// shrinks a bracket [lo, hi] of the monotone g in log k; g may be infinite near one end
template <class G>
std::pair<double, double> refine_bracket(G g, double lo, double hi, double rel) {
  double glo = g(lo), ghi = g(hi);
  while (!(std::isfinite(glo) && std::isfinite(ghi)) && hi / lo - 1.0 > rel) {
    double mid = std::sqrt(lo * hi), gm = g(mid);
    if ((gm > 0) == (glo > 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
  }
  if (hi / lo - 1.0 <= rel || glo == 0.0 || ghi == 0.0) return {lo, hi};
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve([&](double u) { return g(std::exp(u)); }, std::log(lo), std::log(hi),
                                             glo, ghi, [rel](double a, double b) { return std::abs(b - a) <= rel; },
                                             iters);
  return {std::exp(r.first), std::exp(r.second)};
}

}  // namespace

double luxemburg_norm(const Field& f, const Field& w, const NFunction& nf, Side side) {
  check_sizes(f, w);
  const double fmax = f.cwiseAbs().maxCoeff();
  if (f.size() == 0 || fmax == 0.0) return 0.0;
  if (!std::isfinite(fmax)) throw Overflow("non-finite field entry");
  double hi = fmax * std::max(1.0, w.sum());
  double phi_hi = modular(f, w, nf, side, hi, false);
  if (!std::isfinite(phi_hi)) throw Overflow("modular non-finite at the upper bracket");
  for (int i = 0; i < 4000 && phi_hi > 1.0; ++i) {
    hi *= 2.0;
    phi_hi = modular(f, w, nf, side, hi, false);
  }
  double lo = hi * std::ldexp(1.0, -60);
  for (int i = 0; i < 4000 && modular(f, w, nf, side, lo, true) < 1.0; ++i) lo *= 0.5;
  auto [a, b] = refine_bracket([&](double k) { return modular(f, w, nf, side, k, true) - 1.0; }, lo, hi, 1e-13);
  return 0.5 * (a + b);
}

Field luxemburg_subgradient(const Field& f, const Field& w, const NFunction& nf, Side side) {
  const double k = luxemburg_norm(f, w, nf, side);
  if (k == 0.0) throw ZeroField("subgradient of the norm at the zero field is the unit ball");
  Field g(f.size());
  double D = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    double d = nf.density(side, f[i] / k);
    g[i] = w[i] * d;
    D += f[i] * d * w[i];
  }
  D /= k;
  return g / D;
}

OrliczValue orlicz_norm(const Field& f, const Field& w, const NFunction& nf, Side side) {
  check_sizes(f, w);
  OrliczValue out;
  out.gradient = Field::Zero(f.size());
  if (f.size() == 0 || f.cwiseAbs().maxCoeff() == 0.0) return out;
  // k solves sum Nc(n(k f)) w = 1
  auto psi = [&](double k) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (f[i] == 0.0 || w[i] == 0.0) continue;
      try {
        s += nf.complement(side, nf.density(side, k * f[i])) * w[i];
      } catch (const Overflow&) {
        return kInf;
      }
      if (!std::isfinite(s)) return kInf;
    }
    return s;
  };
  double lo = 1.0, hi = 1.0;
  if (psi(1.0) < 1.0) {
    for (int i = 0; i < 4000 && psi(hi) < 1.0; ++i) hi *= 2.0;
    lo = hi * 0.5;
  } else {
    for (int i = 0; i < 4000 && psi(lo) >= 1.0; ++i) lo *= 0.5;
    hi = lo * 2.0;
  }
  // the lower end keeps psi <= 1, so every N(k f) stays finite
  const double k = refine_bracket([&](double t) { return psi(t) - 1.0; }, lo, hi, 1e-13).first;
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (w[i] == 0.0) continue;
    s += nf.N(side, k * f[i]) * w[i];
    out.gradient[i] = w[i] * nf.density(side, k * f[i]);
  }
  out.k = k;
  out.value = (1.0 + s) / k;
  return out;
}

double luxemburg_norm(const WeightedField& f, const Grid& grid, const NFunction& nf, Side side) {
  if (f.values.size() != grid.num_interior()) throw GridMismatch("field size does not match grid");
  return luxemburg_norm(f.values, grid.weights(f.kind), nf, side);
}

Field luxemburg_subgradient(const WeightedField& f, const Grid& grid, const NFunction& nf, Side side) {
  if (f.values.size() != grid.num_interior()) throw GridMismatch("field size does not match grid");
  return luxemburg_subgradient(f.values, grid.weights(f.kind), nf, side);
}

OrliczValue orlicz_norm(const WeightedField& f, const Grid& grid, const NFunction& nf, Side side) {
  if (f.values.size() != grid.num_interior()) throw GridMismatch("field size does not match grid");
  return orlicz_norm(f.values, grid.weights(f.kind), nf, side);
}

HolderPair holder_young_pairing(const WeightedField& f, const WeightedField& g, const Grid& grid,
                                const NFunction& nf) {
  if (f.values.size() != grid.num_interior() || g.values.size() != grid.num_interior() || f.kind != g.kind)
    throw GridMismatch("pairing needs both fields on the same grid and weight");
  Field w = grid.weights(f.kind);
  double lhs = std::abs(f.values.cwiseProduct(g.values).dot(w));
  double rhs = luxemburg_norm(f.values, w, nf, Side::P) * orlicz_norm(g.values, w, nf, Side::Pstar).value;
  return {lhs, rhs};
}

}  // namespace expcap
