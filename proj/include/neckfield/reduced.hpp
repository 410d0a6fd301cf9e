#pragma once

#include <vector>

// One-dimensional model of the potential across the gap: the vertical
// average of the field satisfies, to leading order, the radial equation
//   L h = h'' + ((n-2)/r + 2r/(eps + r^2)) h'
//            - (k(k+n-3)/r^2 + (2/gamma)/(eps + r^2)) h = 0
// on (0, 1], whose normalized solution h (h -> 0 at 0, h(1) = 1) carries the
// gap blow-up rate. The exponent alpha below is the power governing h near
// the outer edge and the gradient growth eps^{(alpha-1)/2}.

namespace neckfield::reduced {

// alpha solving alpha^2 + (n-1) alpha - (k(k+n-3) + 2/gamma) = 0, positive
// root. Defined for n in [2,8]; n = 2 admits only the odd mode k = 1.
double mode_exponent(int n, double gamma, int k);

// Base exponent with curvature scale mu: mode k = 1 of the normalized
// problem with gamma replaced by mu*gamma.
double blowup_exponent(int n, double gamma, double mu);

// gamma -> infinity limit of the base exponent.
double limit_exponent(int n);

// Constant c (with a 1.01 safety factor) for which
// r^alpha - (c sqrt(eps))^alpha, truncated at zero, is a subsolution of L.
// Requires gamma > 1 (the blow-up regime of the normalized problem).
double subsolution_constant(int n, double gamma);

struct SubsolutionBound {
  double c = 0.0;
  double r_eval = 0.0;  // 2 c sqrt(eps)
  double floor = 0.0;   // (2^alpha - 1) c^alpha eps^{alpha/2}
};

SubsolutionBound subsolution_bound(int n, double gamma, double eps);

struct RadialProfile {
  std::vector<double> r;      // strictly increasing, in (0, 1]
  std::vector<double> value;
};

// Geometric master grid, ascending, last point exactly 1.
struct GridParams {
  double r_min = 1e-6;
  double points_per_decade = 640.0;
};

std::vector<double> graded_grid(const GridParams& gp);

struct HParams {
  int n = 2;
  double gamma = 2.0;
  double eps = 1e-3;
  GridParams grid;
  double cutoff_base = 2.0;   // inner cutoffs a = base^{-m}
  double converge_tol = 1e-8;
  double compare_from = 1e-3; // convergence measured on [compare_from, 1]
};

struct HSolution {
  RadialProfile h;
  double alpha = 0.0;
  double last_cutoff = 0.0;
  int cutoffs_used = 0;
  double tail_delta = 0.0;    // final successive-extrapolant gap
};

// Shooting-free construction: solve the two-point problem h(a) = a,
// h(1) = 1 on a/grid for a shrinking sequence of inner cutoffs and take the
// pointwise Aitken limit. Conservative (flux) discretization, so the
// discrete comparison principle holds and the solution is monotone.
HSolution solve_h(const HParams& hp);

// Direct 3-point nonuniform discretization of L applied to a profile;
// returns residuals at the interior nodes. Deliberately a different scheme
// from the conservative one inside solve_h, so it is an independent check.
RadialProfile apply_L(const RadialProfile& p, int n, double gamma, double eps,
                      int k = 1);

struct LowerBoundCheck {
  bool ok = false;
  double worst_margin = 0.0;  // min over grid of h - (r^alpha - (c√eps)^alpha)+
  double worst_r = 0.0;
  double value_at_2c = 0.0;   // h interpolated at r = 2 c sqrt(eps)
};

// Verifies h(r) > (r^alpha - (c sqrt(eps))^alpha)+ at every grid point and
// h(2 c sqrt(eps)) > (2^alpha - 1) c^alpha eps^{alpha/2}.
LowerBoundCheck h_lower_bound_check(const RadialProfile& h, double alpha,
                                    const SubsolutionBound& b);

}  // namespace neckfield::reduced
