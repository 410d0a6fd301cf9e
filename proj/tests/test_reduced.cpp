#include "neckfield/reduced.hpp"

#include "doctest.h"

#include <cmath>
#include <vector>

#include "neckfield/errors.hpp"

using namespace neckfield;

namespace {

// Align two profiles that live on suffixes of the same master grid and
// return the max absolute value difference on r >= from.
double aligned_max_diff(const reduced::RadialProfile& a,
                        const reduced::RadialProfile& b, double from) {
  double mx = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < a.r.size(); ++i) {
    if (a.r[i] < from) continue;
    while (j < b.r.size() && b.r[j] < a.r[i]) ++j;
    if (j == b.r.size()) break;
    if (b.r[j] == a.r[i])
      mx = std::max(mx, std::abs(a.value[i] - b.value[j]));
  }
  return mx;
}

}  // namespace

TEST_CASE("exponent closed forms and frozen values") {
  // Positive root of a^2 + a - (2/gamma) at n=2, gamma=2: (sqrt(5)-1)/2.
  CHECK(reduced::blowup_exponent(2, 2.0, 1.0) ==
        doctest::Approx(0.6180339887498949).epsilon(1e-14));
  // Neutral scale gamma = 1/mu forces alpha = 1 for every dimension.
  for (int n = 2; n <= 8; ++n) {
    for (double mu : {0.5, 1.0, 2.0}) {
      CHECK(std::abs(reduced::blowup_exponent(n, 1.0 / mu, mu) - 1.0) <=
            1e-12);
    }
  }
  CHECK(reduced::limit_exponent(3) ==
        doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));

  // alpha < 1 exactly when gamma exceeds 1/mu.
  CHECK(reduced::blowup_exponent(2, 2.0, 1.0) < 1.0);
  CHECK(reduced::blowup_exponent(2, 0.5, 1.0) > 1.0);
  CHECK(reduced::blowup_exponent(4, 3.0, 0.5) < 1.0);

  CHECK_THROWS_AS(reduced::blowup_exponent(2, -1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(reduced::blowup_exponent(1, 2.0, 1.0), ValidationError);
  CHECK_THROWS_AS(reduced::blowup_exponent(9, 2.0, 1.0), ValidationError);
}

TEST_CASE("mode exponents: k = 1 identity, growth, frozen large-gamma value") {
  // The first mode is the base exponent of the normalized problem.
  for (int n = 2; n <= 8; ++n)
    for (double gamma : {0.5, 1.0, 2.0, 10.0})
      CHECK(reduced::mode_exponent(n, gamma, 1) ==
            doctest::Approx(reduced::blowup_exponent(n, gamma, 1.0))
                .epsilon(1e-14));

  // Strictly increasing in k; below k for gamma > 1.
  for (int k = 1; k <= 6; ++k) {
    CHECK(reduced::mode_exponent(3, 2.0, k) <
          reduced::mode_exponent(3, 2.0, k + 1));
    CHECK(reduced::mode_exponent(3, 2.0, k) < static_cast<double>(k));
  }
  CHECK(reduced::mode_exponent(3, 2.0, 5) < 5.0);

  // Large-gamma second mode at n=3: the angular eigenvalue k(k+n-3) = 4
  // puts the limit at sqrt(5)-1.
  CHECK(reduced::mode_exponent(3, 1e12, 2) ==
        doctest::Approx(std::sqrt(5.0) - 1.0).epsilon(1e-9));

  // Planar case admits only the odd mode.
  CHECK_THROWS_AS(reduced::mode_exponent(2, 2.0, 2), ValidationError);
  CHECK_THROWS_AS(reduced::mode_exponent(3, 2.0, 0), ValidationError);
}

TEST_CASE("exponents satisfy their quadratic to 1e-12 across a lattice") {
  for (int n : {2, 3, 4, 6, 8}) {
    for (double gamma : {0.1, 0.5, 1.0, 1.5, 2.0, 5.0, 50.0}) {
      for (double mu : {0.25, 1.0, 4.0}) {
        const double a = reduced::blowup_exponent(n, gamma, mu);
        const double residual =
            a * a + (n - 1.0) * a - (n - 2.0 + 2.0 / (mu * gamma));
        CHECK(std::abs(residual) <= 1e-12);
      }
      for (int k = 1; k <= (n == 2 ? 1 : 4); ++k) {
        const double ak = reduced::mode_exponent(n, gamma, k);
        const double residual = ak * ak + (n - 1.0) * ak -
                                (k * (k + n - 3.0) + 2.0 / gamma);
        CHECK(std::abs(residual) <= 1e-12);
      }
    }
  }
}

TEST_CASE("monotonicity of the base exponent in gamma and mu") {
  for (int n : {2, 3, 5}) {
    double prev = reduced::blowup_exponent(n, 0.25, 1.0);
    for (double gamma : {0.5, 1.0, 2.0, 4.0, 8.0, 64.0}) {
      const double a = reduced::blowup_exponent(n, gamma, 1.0);
      CHECK(a < prev);  // strictly decreasing in gamma
      prev = a;
    }
    // The large-gamma limit is approached from above, monotonically.
    CHECK(prev > reduced::limit_exponent(n));
  }
}

TEST_CASE("subsolution constant: frozen value and small-margin limit") {
  CHECK(reduced::subsolution_constant(2, 2.0) ==
        doctest::Approx(0.4907269544742122).epsilon(1e-12));
  // As gamma drops to 1 the inequality margin 2 alpha - 2/gamma vanishes.
  CHECK(reduced::subsolution_constant(2, 1.0 + 1e-9) < 1e-4);
  CHECK_THROWS_AS(reduced::subsolution_constant(2, 1.0), ValidationError);
  CHECK_THROWS_AS(reduced::subsolution_constant(2, 0.5), ValidationError);
}

TEST_CASE("graded grid: ascending, spans the decades, ends exactly at 1") {
  reduced::GridParams gp;
  const std::vector<double> g = reduced::graded_grid(gp);
  REQUIRE(g.size() > 100);
  CHECK(g.front() <= 1.1e-6);
  CHECK(g.back() == 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

TEST_CASE("apply_L: exact identity on h = r at gamma = 1") {
  reduced::GridParams gp;
  reduced::RadialProfile p;
  p.r = reduced::graded_grid(gp);
  p.value = p.r;
  const reduced::RadialProfile res = reduced::apply_L(p, 2, 1.0, 1e-3);
  double mx = 0.0, mx_mid = 0.0;
  for (std::size_t i = 0; i < res.r.size(); ++i) {
    mx = std::max(mx, std::abs(res.value[i]));
    if (res.r[i] >= 1e-2) mx_mid = std::max(mx_mid, std::abs(res.value[i]));
  }
  // The cancellation floor of the 3-point stencil grows toward the finest
  // nodes; away from them the identity is clean.
  CHECK(mx <= 1e-4);
  CHECK(mx_mid <= 1e-8);

  // Linearity: the zero profile maps to zero residual.
  reduced::RadialProfile z = p;
  for (auto& v : z.value) v = 0.0;
  const reduced::RadialProfile rz = reduced::apply_L(z, 2, 1.0, 1e-3);
  for (double v : rz.value) CHECK(v == 0.0);
}

TEST_CASE("apply_L on r^alpha matches the closed-form defect") {
  const double gamma = 2.0, eps = 1e-3;
  const double a = reduced::blowup_exponent(2, gamma, 1.0);
  reduced::GridParams gp;
  reduced::RadialProfile p;
  p.r = reduced::graded_grid(gp);
  p.value.reserve(p.r.size());
  for (double r : p.r) p.value.push_back(std::pow(r, a));
  const reduced::RadialProfile res = reduced::apply_L(p, 2, gamma, eps);
  for (std::size_t i = 0; i < res.r.size(); ++i) {
    const double r = res.r[i];
    const double want =
        -2.0 * eps * (a - 1.0 / gamma) * std::pow(r, a - 2.0) / (eps + r * r);
    CHECK(res.value[i] ==
          doctest::Approx(want).epsilon(0.02));  // discretization order
    CHECK(res.value[i] < 0.0);  // r^alpha is a strict supersolution
  }
}

TEST_CASE("solve_h: brackets, monotonicity, boundary data") {
  reduced::HParams hp;
  hp.n = 2;
  hp.gamma = 2.0;
  hp.eps = 1e-3;
  const reduced::HSolution sol = reduced::solve_h(hp);
  REQUIRE(sol.h.r.size() == sol.h.value.size());
  REQUIRE(sol.h.r.size() > 100);
  CHECK(sol.h.value.back() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sol.alpha == doctest::Approx(0.6180339887498949).epsilon(1e-14));
  CHECK(sol.tail_delta < hp.converge_tol);

  for (std::size_t i = 0; i < sol.h.r.size(); ++i) {
    const double r = sol.h.r[i];
    if (i + 1 < sol.h.r.size()) {
      CHECK(sol.h.value[i + 1] > sol.h.value[i]);  // strictly increasing
      CHECK(sol.h.value[i] < std::pow(r, sol.alpha));
      CHECK(sol.h.value[i] > r);
    }
  }
}

TEST_CASE("solve_h: two cutoff families agree to 1e-6") {
  reduced::HParams hp;
  hp.gamma = 2.0;
  hp.eps = 1e-3;
  const reduced::HSolution s2 = reduced::solve_h(hp);
  hp.cutoff_base = 3.0;
  const reduced::HSolution s3 = reduced::solve_h(hp);
  CHECK(aligned_max_diff(s2.h, s3.h, 1e-3) <= 1e-6);
}

TEST_CASE("solve_h residual decays at second order under grid refinement") {
  reduced::HParams hp;
  hp.gamma = 2.0;
  hp.eps = 1e-3;
  double mx[2];
  for (int lev = 0; lev < 2; ++lev) {
    hp.grid.points_per_decade = lev == 0 ? 320.0 : 640.0;
    const reduced::HSolution s = reduced::solve_h(hp);
    const reduced::RadialProfile res =
        reduced::apply_L(s.h, hp.n, hp.gamma, hp.eps);
    double m = 0.0;
    for (std::size_t i = 0; i < res.r.size(); ++i)
      if (res.r[i] >= 1e-2 && res.r[i] <= 0.5)
        m = std::max(m, std::abs(res.value[i]));
    mx[lev] = m;
  }
  const double order = std::log2(mx[0] / mx[1]);
  CHECK(order >= 1.7);
  CHECK(order <= 2.3);
}

TEST_CASE("subsolution bound holds for the computed profile") {
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    reduced::HParams hp;
    hp.gamma = 2.0;
    hp.eps = eps;
    const reduced::HSolution s = reduced::solve_h(hp);
    const reduced::SubsolutionBound b =
        reduced::subsolution_bound(2, hp.gamma, eps);
    CHECK(b.r_eval == doctest::Approx(2.0 * b.c * std::sqrt(eps)));
    const reduced::LowerBoundCheck chk =
        reduced::h_lower_bound_check(s.h, s.alpha, b);
    INFO("eps ", eps, " worst margin ", chk.worst_margin, " at r ",
         chk.worst_r);
    CHECK(chk.ok);
    CHECK(chk.worst_margin > 0.0);
    CHECK(chk.value_at_2c > b.floor);
  }
}
