#pragma once
#include <functional>
#include <string>

#include "expcap/grid.hpp"

namespace expcap {

enum class Side { P, Pstar };

/// Complementary pair of N-functions with their densities.
struct NFunction {
  std::function<double(double)> eval_P;
  std::function<double(double)> eval_Pstar;
  std::function<double(double)> density_p;
  std::function<double(double)> density_pbar;
  bool satisfies_delta2_P = false;
  bool satisfies_delta2_Pstar = false;
  std::string name;

  double N(Side s, double t) const { return s == Side::P ? eval_P(t) : eval_Pstar(t); }
  double density(Side s, double t) const { return s == Side::P ? density_p(t) : density_pbar(t); }
  double complement(Side s, double t) const { return s == Side::P ? eval_Pstar(t) : eval_P(t); }
};

NFunction exponential_pair();
NFunction quadratic_pair();

// P* and pbar are produced by a numeric Legendre transform unless supplied.
NFunction generic_nfunction(std::string name, std::function<double(double)> P,
                            std::function<double(double)> p,
                            std::function<double(double)> Pstar = {},
                            std::function<double(double)> pbar = {});

constexpr double kQConstant = 3.0;

double young_gap(double x, double y);
double young_gap(const NFunction& nf, double x, double y);
double q_function(double r);

struct Sandwich {
  double lo, mid, hi;
};
Sandwich pstar_sandwich(double a);

double luxemburg_norm(const Field& f, const Field& w, const NFunction& nf, Side side);
Field luxemburg_subgradient(const Field& f, const Field& w, const NFunction& nf, Side side);

struct OrliczValue {
  double value = 0.0;
  double k = 0.0;
  Field gradient;
};

// Amemiya form inf_k (1 + sum N(k f) w) / k; gradient is w * n(k f) at the optimal k.
OrliczValue orlicz_norm(const Field& f, const Field& w, const NFunction& nf, Side side);

double luxemburg_norm(const WeightedField& f, const Grid& grid, const NFunction& nf, Side side);
Field luxemburg_subgradient(const WeightedField& f, const Grid& grid, const NFunction& nf, Side side);
OrliczValue orlicz_norm(const WeightedField& f, const Grid& grid, const NFunction& nf, Side side);

struct HolderPair {
  double lhs, rhs;
};
// lhs = |sum f g w|, rhs = Luxemburg(f, P) * Orlicz(g, P*)
HolderPair holder_young_pairing(const WeightedField& f, const WeightedField& g, const Grid& grid,
                                const NFunction& nf);

}  // namespace expcap
