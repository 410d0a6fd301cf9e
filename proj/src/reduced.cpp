#include "neckfield/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "neckfield/errors.hpp"

namespace neckfield::reduced {

namespace {

void check_mode_domain(int n, double gamma, int k) {
  if (n < 2 || n > 8)
    throw ValidationError("dimension n must lie in [2, 8]");
  if (!(gamma > 0.0))
    throw ValidationError("gamma must be positive");
  if (k < 1)
    throw ValidationError("mode index k must be at least 1");
  if (n == 2 && k != 1)
    throw ValidationError("for n = 2 only the odd mode k = 1 is defined");
}

double eigen_term(int n, int k) {
  return static_cast<double>(k) * static_cast<double>(k + n - 3);
}

}  // namespace

double mode_exponent(int n, double gamma, int k) {
  check_mode_domain(n, gamma, k);
  const double b = n - 1.0;
  const double disc = b * b + 4.0 * (eigen_term(n, k) + 2.0 / gamma);
  return 0.5 * (-b + std::sqrt(disc));
}

double blowup_exponent(int n, double gamma, double mu) {
  if (!(mu > 0.0)) throw ValidationError("curvature scale mu must be positive");
  return mode_exponent(n, mu * gamma, 1);
}

double limit_exponent(int n) {
  if (n < 2 || n > 8)
    throw ValidationError("dimension n must lie in [2, 8]");
  const double b = n - 1.0;
  return 0.5 * (-b + std::sqrt(b * b + 4.0 * (n - 2.0)));
}

double subsolution_constant(int n, double gamma) {
  if (!(gamma > 1.0))
    throw ValidationError(
        "subsolution constant is defined for gamma > 1 (normalized blow-up "
        "regime)");
  const double alpha = mode_exponent(n, gamma, 1);
  const double num = 2.0 * alpha - 2.0 / gamma;
  const double den = n - 2.0 + 2.0 / gamma;
  // gamma > 1 implies alpha > 1/gamma, so the radicand is positive.
  return 1.01 * std::sqrt(num / den);
}

SubsolutionBound subsolution_bound(int n, double gamma, double eps) {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  const double alpha = mode_exponent(n, gamma, 1);
  SubsolutionBound b;
  b.c = subsolution_constant(n, gamma);
  b.r_eval = 2.0 * b.c * std::sqrt(eps);
  b.floor = (std::pow(2.0, alpha) - 1.0) * std::pow(b.c, alpha) *
            std::pow(eps, 0.5 * alpha);
  return b;
}

std::vector<double> graded_grid(const GridParams& gp) {
  if (!(gp.r_min > 0.0 && gp.r_min < 1.0))
    throw ValidationError("grid r_min must lie in (0, 1)");
  if (!(gp.points_per_decade >= 4.0))
    throw ValidationError("grid needs at least 4 points per decade");
  const int m = static_cast<int>(
      std::lround(gp.points_per_decade * std::log10(1.0 / gp.r_min)));
  std::vector<double> r(m + 1);
  for (int i = 0; i <= m; ++i)
    r[m - i] = std::pow(10.0, -static_cast<double>(i) / gp.points_per_decade);
  r.front() = gp.r_min;
  r.back() = 1.0;
  return r;
}

namespace {

double coeff_p(int n, double eps, double r) {
  return std::pow(r, n - 2.0) * (eps + r * r);
}

double coeff_q(int n, double gamma, double eps, double r, int k) {
  return eigen_term(n, k) / (r * r) + 2.0 / (gamma * (eps + r * r));
}

// Two-point problem h(grid.front()) = lo_value, h(1) = 1 for the
// conservative form (p h')' - p q h = 0 on the given ascending grid.
std::vector<double> solve_two_point(const std::vector<double>& grid, int n,
                                    double gamma, double eps, double lo_value) {
  const int m = static_cast<int>(grid.size());
  if (m < 3) throw NumericalError("cutoff grid has too few points");

  std::vector<double> sub(m, 0.0), diag(m, 1.0), sup(m, 0.0), rhs(m, 0.0);
  rhs.front() = lo_value;
  rhs.back() = 1.0;
  for (int i = 1; i + 1 < m; ++i) {
    const double hl = grid[i] - grid[i - 1];
    const double hr = grid[i + 1] - grid[i];
    const double hc = 0.5 * (hl + hr);
    const double pl = coeff_p(n, eps, 0.5 * (grid[i - 1] + grid[i]));
    const double pr = coeff_p(n, eps, 0.5 * (grid[i] + grid[i + 1]));
    sub[i] = pl / (hl * hc);
    sup[i] = pr / (hr * hc);
    diag[i] = -(sub[i] + sup[i]) -
              coeff_p(n, eps, grid[i]) * coeff_q(n, gamma, eps, grid[i], 1);
  }

  // Thomas sweep; the matrix is an M-matrix (no pivoting needed).
  std::vector<double> cp(m, 0.0), dp(m, 0.0);
  cp[0] = 0.0;
  dp[0] = rhs[0];
  for (int i = 1; i < m; ++i) {
    const double denom = diag[i] - sub[i] * cp[i - 1];
    if (denom == 0.0)
      throw NumericalError("singular tridiagonal system in the gap profile solve");
    cp[i] = sup[i] / denom;
    dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / denom;
  }
  std::vector<double> h(m);
  h[m - 1] = dp[m - 1];
  for (int i = m - 2; i >= 0; --i) h[i] = dp[i] - cp[i] * h[i + 1];
  return h;
}

}  // namespace

HSolution solve_h(const HParams& hp) {
  check_mode_domain(hp.n, hp.gamma, 1);
  if (!(hp.eps > 0.0)) throw ValidationError("eps must be positive");
  if (!(hp.cutoff_base > 1.0))
    throw ValidationError("cutoff_base must exceed 1");

  const std::vector<double> master = graded_grid(hp.grid);
  const double r_floor = master.front();

  // h evaluated on master indices, one entry per cutoff.
  struct Pass {
    double a = 0.0;
    int first_master = 0;               // first master index used
    std::vector<double> on_master;      // values at master[first_master..]
  };
  std::vector<Pass> passes;

  auto run_cutoff = [&](double a) {
    Pass ps;
    ps.a = a;
    int first = 0;
    while (first < static_cast<int>(master.size()) && master[first] <= a)
      ++first;
    if (first + 2 >= static_cast<int>(master.size()))
      throw NumericalError("cutoff too close to the outer edge");
    // Avoid a sliver first cell.
    if (first + 1 < static_cast<int>(master.size()) &&
        master[first] - a < 0.25 * (master[first + 1] - master[first]))
      ++first;
    ps.first_master = first;
    std::vector<double> grid;
    grid.reserve(master.size() - first + 1);
    grid.push_back(a);
    grid.insert(grid.end(), master.begin() + first, master.end());
    std::vector<double> h = solve_two_point(grid, hp.n, hp.gamma, hp.eps, a);
    ps.on_master.assign(h.begin() + 1, h.end());
    return ps;
  };

  // The cutoff error at a fixed radius r >> a expands in powers of the
  // cutoff a. Its leading term is the inner defect a - h(a) = O(a) carried
  // by the singular mode ~ r^{-(n-2)}, which gives a^{n-1}; for n >= 3 the
  // next correction is two powers up (the coefficient series is even in a),
  // while n = 2 also has an O(a^2) term. With a = base^{-m} those modes
  // shrink by exact known ratios per step, so two Richardson levels with
  // matching weights remove them.
  auto richardson = [&](const Pass& pa, const Pass& pb, double weight,
                        int& first_out) {
    const int first = std::max(pa.first_master, pb.first_master);
    first_out = first;
    const int count = static_cast<int>(master.size()) - first;
    Pass out;
    out.first_master = first;
    out.on_master.resize(count);
    for (int i = 0; i < count; ++i) {
      const double va = pa.on_master[first - pa.first_master + i];
      const double vb = pb.on_master[first - pb.first_master + i];
      out.on_master[i] = (weight * vb - va) / (weight - 1.0);
    }
    return out;
  };

  const int m_max = static_cast<int>(
      std::floor(std::log(1.0 / (2.0 * r_floor)) / std::log(hp.cutoff_base)));

  const int e1 = hp.n == 2 ? 1 : hp.n - 1;
  const int e2 = hp.n == 2 ? 2 : hp.n + 1;
  const double b1 = std::pow(hp.cutoff_base, e1);
  const double b2 = std::pow(hp.cutoff_base, e2);

  std::vector<Pass> level1;
  std::vector<Pass> level2;
  HSolution sol;
  sol.alpha = mode_exponent(hp.n, hp.gamma, 1);

  for (int m = 3; m <= m_max; ++m) {
    const double a = std::pow(hp.cutoff_base, -static_cast<double>(m));
    passes.push_back(run_cutoff(a));
    if (passes.size() < 2) continue;

    int first = 0;
    level1.push_back(richardson(passes[passes.size() - 2],
                                passes[passes.size() - 1], b1, first));
    if (level1.size() < 2) continue;
    level2.push_back(richardson(level1[level1.size() - 2],
                                level1[level1.size() - 1], b2, first));
    if (level2.size() < 2) continue;

    const Pass& cur = level2[level2.size() - 1];
    const Pass& old = level2[level2.size() - 2];
    const int cfirst = std::max(cur.first_master, old.first_master);
    double delta = 0.0;
    for (int i = cfirst; i < static_cast<int>(master.size()); ++i) {
      if (master[i] < hp.compare_from) continue;
      delta = std::max(delta,
                       std::abs(cur.on_master[i - cur.first_master] -
                                old.on_master[i - old.first_master]));
    }
    sol.tail_delta = delta;
    if (delta < hp.converge_tol) {
      sol.h.r.assign(master.begin() + cur.first_master, master.end());
      sol.h.value = cur.on_master;
      sol.last_cutoff = a;
      sol.cutoffs_used = m - 2;
      return sol;
    }
  }

  std::ostringstream os;
  os << "gap profile did not stabilize: inner cutoff reached "
     << std::pow(hp.cutoff_base, -static_cast<double>(m_max))
     << " with successive change " << sol.tail_delta << " (tol "
     << hp.converge_tol << ")";
  throw NumericalError(os.str());
}

RadialProfile apply_L(const RadialProfile& p, int n, double gamma, double eps,
                      int k) {
  check_mode_domain(n, gamma, k);
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  const int m = static_cast<int>(p.r.size());
  if (m < 3 || p.value.size() != p.r.size())
    throw ValidationError("profile needs matching r/value arrays with >= 3 points");
  for (int i = 1; i < m; ++i)
    if (!(p.r[i] > p.r[i - 1]))
      throw ValidationError("profile abscissae must be strictly increasing");

  RadialProfile res;
  res.r.assign(p.r.begin() + 1, p.r.end() - 1);
  res.value.resize(m - 2);
  for (int i = 1; i + 1 < m; ++i) {
    const double hl = p.r[i] - p.r[i - 1];
    const double hr = p.r[i + 1] - p.r[i];
    const double denom = hl * hr * (hl + hr);
    const double d2 =
        2.0 * (hl * p.value[i + 1] - (hl + hr) * p.value[i] + hr * p.value[i - 1]) /
        denom;
    const double d1 = (hl * hl * p.value[i + 1] +
                       (hr * hr - hl * hl) * p.value[i] -
                       hr * hr * p.value[i - 1]) /
                      denom;
    const double r = p.r[i];
    const double P = (n - 2.0) / r + 2.0 * r / (eps + r * r);
    const double Q = coeff_q(n, gamma, eps, r, k);
    res.value[i - 1] = d2 + P * d1 - Q * p.value[i];
  }
  return res;
}

LowerBoundCheck h_lower_bound_check(const RadialProfile& h, double alpha,
                                    const SubsolutionBound& b) {
  if (h.r.empty() || h.r.size() != h.value.size())
    throw ValidationError("profile needs matching nonempty r/value arrays");
  LowerBoundCheck out;
  out.worst_margin = std::numeric_limits<double>::infinity();
  // r_eval = 2 c sqrt(eps), so the truncation radius c sqrt(eps) is half it.
  const double ceps_alpha = std::pow(0.5 * b.r_eval, alpha);
  for (std::size_t i = 0; i < h.r.size(); ++i) {
    const double lower = std::max(0.0, std::pow(h.r[i], alpha) - ceps_alpha);
    const double margin = h.value[i] - lower;
    if (margin < out.worst_margin) {
      out.worst_margin = margin;
      out.worst_r = h.r[i];
    }
  }
  // Interpolate h at r_eval = 2 c sqrt(eps). Below the grid the lower bound
  // region is trivial, so clamp to the first node.
  const double re = b.r_eval;
  if (re <= h.r.front()) {
    out.value_at_2c = h.value.front();
  } else if (re >= h.r.back()) {
    out.value_at_2c = h.value.back();
  } else {
    const auto it = std::lower_bound(h.r.begin(), h.r.end(), re);
    const std::size_t j = static_cast<std::size_t>(it - h.r.begin());
    const double t = (re - h.r[j - 1]) / (h.r[j] - h.r[j - 1]);
    out.value_at_2c = (1.0 - t) * h.value[j - 1] + t * h.value[j];
  }
  out.ok = out.worst_margin > 0.0 && out.value_at_2c > b.floor;
  return out;
}

}  // namespace neckfield::reduced
