#include "neckfield/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include "neckfield/errors.hpp"

namespace neckfield::lab {

namespace {

// Point locator over the triangulation: per-triangle bounding boxes for the
// cheap reject, exact barycentric test for the accept. The profile fibers
// stay strictly inside the gap, so a small negative tolerance only has to
// absorb roundoff, not geometric mismatch.
class FieldProbe {
 public:
  explicit FieldProbe(const meshing::Mesh& mesh) : mesh_(mesh) {
    const std::size_t nt = mesh.triangles.size();
    lo_x_.resize(nt);
    lo_y_.resize(nt);
    hi_x_.resize(nt);
    hi_y_.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& tri = mesh.triangles[t];
      const geom::Vec2 a = mesh.vertices[tri[0]];
      const geom::Vec2 b = mesh.vertices[tri[1]];
      const geom::Vec2 c = mesh.vertices[tri[2]];
      lo_x_[t] = std::min({a.x, b.x, c.x});
      hi_x_[t] = std::max({a.x, b.x, c.x});
      lo_y_[t] = std::min({a.y, b.y, c.y});
      hi_y_[t] = std::max({a.y, b.y, c.y});
    }
  }

  // P1 interpolation of the nodal field at p.
  double evaluate(const std::vector<double>& u, geom::Vec2 p) const {
    constexpr double kBaryTol = -1e-10;
    const double pad = 1e-12 * (1.0 + std::abs(p.x) + std::abs(p.y));
    for (std::size_t t = 0; t < lo_x_.size(); ++t) {
      if (p.x < lo_x_[t] - pad || p.x > hi_x_[t] + pad) continue;
      if (p.y < lo_y_[t] - pad || p.y > hi_y_[t] + pad) continue;
      const auto& tri = mesh_.triangles[t];
      const geom::Vec2 a = mesh_.vertices[tri[0]];
      const geom::Vec2 b = mesh_.vertices[tri[1]];
      const geom::Vec2 c = mesh_.vertices[tri[2]];
      const double d =
          (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
      if (d <= 0.0) continue;
      const double la =
          ((b.x - p.x) * (c.y - p.y) - (b.y - p.y) * (c.x - p.x)) / d;
      const double lb =
          ((c.x - p.x) * (a.y - p.y) - (c.y - p.y) * (a.x - p.x)) / d;
      const double lc = 1.0 - la - lb;
      if (la < kBaryTol || lb < kBaryTol || lc < kBaryTol) continue;
      return la * u[tri[0]] + lb * u[tri[1]] + lc * u[tri[2]];
    }
    std::ostringstream msg;
    msg << "fiber sample (" << p.x << ", " << p.y
        << ") lies in no mesh triangle";
    throw NumericalError(msg.str());
  }

 private:
  const meshing::Mesh& mesh_;
  std::vector<double> lo_x_, lo_y_, hi_x_, hi_y_;
};

// Piecewise-linear evaluation of a radial profile; below the first node the
// curve is closed with the limit value 0 at r = 0.
double interp_profile(const reduced::RadialProfile& h, double r) {
  if (h.r.empty()) throw ValidationError("reduced profile is empty");
  if (r > h.r.back()) {
    std::ostringstream msg;
    msg << "reduced profile ends at r = " << h.r.back()
        << ", cannot evaluate at r = " << r;
    throw ValidationError(msg.str());
  }
  if (r <= h.r.front()) {
    return h.r.front() > 0.0 ? h.value.front() * (r / h.r.front())
                             : h.value.front();
  }
  const auto it = std::lower_bound(h.r.begin(), h.r.end(), r);
  const std::size_t j = static_cast<std::size_t>(it - h.r.begin());
  const double r0 = h.r[j - 1], r1 = h.r[j];
  const double w = (r - r0) / (r1 - r0);
  return (1.0 - w) * h.value[j - 1] + w * h.value[j];
}

struct LogFitInput {
  double eps = 0.0;
  double value = 0.0;
};

// OLS of log(value) on log(eps). Callers have already validated the point
// count and the decade span; with >= 5 points the largest eps is dropped as
// pre-asymptotic.
SlopeFit ols_log_slope(std::vector<LogFitInput> pts) {
  std::sort(pts.begin(), pts.end(),
            [](const LogFitInput& a, const LogFitInput& b) {
              return a.eps < b.eps;
            });
  SlopeFit fit;
  if (pts.size() >= 5) {
    pts.pop_back();
    fit.dropped_largest = true;
  }
  const std::size_t n = pts.size();
  fit.points = n;
  double sx = 0.0, sy = 0.0;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pts[i].value > 0.0)) {
      std::ostringstream msg;
      msg << "gradient value " << pts[i].value << " at eps " << pts[i].eps
          << " is not positive; the log-log fit is undefined";
      throw ValidationError(msg.str());
    }
    x[i] = std::log(pts[i].eps);
    y[i] = std::log(pts[i].value);
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.std_error =
      n > 2 ? std::sqrt(ss_res / (static_cast<double>(n - 2) * sxx)) : 0.0;
  return fit;
}

// Shared precondition of the slope fits: >= 4 eps values covering >= 1.5
// decades before any exclusion.
void check_slope_span(const std::vector<LogFitInput>& pts) {
  if (pts.size() < 4) {
    std::ostringstream msg;
    msg << "blow-up slope fit needs at least 4 eps values, got "
        << pts.size();
    throw ValidationError(msg.str());
  }
  double lo = pts[0].eps, hi = pts[0].eps;
  for (const auto& p : pts) {
    if (!(p.eps > 0.0)) throw ValidationError("eps values must be positive");
    lo = std::min(lo, p.eps);
    hi = std::max(hi, p.eps);
  }
  const double decades = std::log10(hi / lo);
  if (decades < 1.5) {
    std::ostringstream msg;
    msg << "insufficient span: eps values cover " << decades
        << " decades, the slope fit needs at least 1.5";
    throw ValidationError(msg.str());
  }
}

double wall_ms(std::chrono::steady_clock::time_point t0,
               std::chrono::steady_clock::time_point t1) {
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void require_finite_record(const SweepRecord& r) {
  const double fields[] = {r.alpha,  r.grad_max_neck, r.grad_x,
                           r.grad_y, r.u1,            r.u2,
                           r.flux1,  r.flux2,         r.energy,
                           r.grad_max_half, r.grad_max_twice};
  for (const double v : fields) {
    if (!std::isfinite(v)) {
      throw NumericalError("cell produced a non-finite diagnostic");
    }
  }
}

}  // namespace

std::vector<ProfileSample> vertical_profile(const fem::FieldSolution& sol,
                                            const fem::RobinSystem& sys,
                                            const std::vector<double>& abscissae,
                                            int samples_per_fiber) {
  const geom::Geometry& g = sys.mesh.geometry;
  if (samples_per_fiber < 16) {
    throw ValidationError(
        "vertical profile needs at least 16 samples per fiber");
  }
  if (sol.u.size() != sys.mesh.vertices.size()) {
    throw ValidationError("solution and mesh sizes disagree");
  }
  const double half_chart = 0.5 * g.chart_radius;
  for (const double r : abscissae) {
    if (!(std::abs(r) < half_chart)) {
      std::ostringstream msg;
      msg << "fiber abscissa " << r << " leaves the open chart half |x1| < "
          << half_chart;
      throw ValidationError(msg.str());
    }
  }
  const FieldProbe probe(sys.mesh);
  std::vector<ProfileSample> out;
  out.reserve(abscissae.size());
  for (const double r : abscissae) {
    const double lo = geom::boundary_lower(g, r);
    const double hi = geom::boundary_upper(g, r);
    const double step = (hi - lo) / samples_per_fiber;
    double acc = 0.0;
    for (int j = 0; j < samples_per_fiber; ++j) {
      acc += probe.evaluate(sol.u, {r, lo + (j + 0.5) * step});
    }
    out.push_back({r, acc / samples_per_fiber});
  }
  return out;
}

std::vector<ProfileSample> odd_mode(const std::vector<ProfileSample>& profile) {
  struct Pair {
    bool has_plus = false, has_minus = false;
    double plus = 0.0, minus = 0.0;
  };
  std::map<double, Pair> pairs;
  for (const auto& s : profile) {
    if (s.r == 0.0) continue;  // its own mirror; the odd part vanishes
    Pair& p = pairs[std::abs(s.r)];
    bool& seen = s.r > 0.0 ? p.has_plus : p.has_minus;
    if (seen) {
      std::ostringstream msg;
      msg << "duplicate profile abscissa " << s.r;
      throw ValidationError(msg.str());
    }
    seen = true;
    (s.r > 0.0 ? p.plus : p.minus) = s.mean;
  }
  std::vector<ProfileSample> out;
  out.reserve(pairs.size());
  for (const auto& [r, p] : pairs) {
    if (!p.has_plus || !p.has_minus) {
      std::ostringstream msg;
      msg << "abscissa " << (p.has_plus ? r : -r)
          << " lacks its mirror; the odd mode needs exact +-r pairs";
      throw ValidationError(msg.str());
    }
    out.push_back({r, 0.5 * (p.plus - p.minus)});
  }
  return out;
}

ProfileFit fit_profile_to_h(const std::vector<ProfileSample>& odd,
                            const reduced::RadialProfile& h, double r_lo,
                            double r_hi) {
  if (!(r_lo > 0.0) || !(r_hi > r_lo)) {
    throw ValidationError("profile fit range must satisfy 0 < r_lo < r_hi");
  }
  if (h.r.size() != h.value.size()) {
    throw ValidationError("reduced profile grid and values disagree");
  }
  double svh = 0.0, shh = 0.0, svv = 0.0;
  std::vector<double> vs, hs;
  for (const auto& s : odd) {
    if (s.r < r_lo || s.r > r_hi) continue;
    const double hv = interp_profile(h, s.r);
    vs.push_back(s.mean);
    hs.push_back(hv);
    svh += s.mean * hv;
    shh += hv * hv;
    svv += s.mean * s.mean;
  }
  if (vs.empty()) {
    std::ostringstream msg;
    msg << "no profile abscissa falls in the fit range [" << r_lo << ", "
        << r_hi << "]";
    throw ValidationError(msg.str());
  }
  if (shh == 0.0) {
    throw NumericalError("reduced profile vanishes on the fit range");
  }
  ProfileFit fit;
  fit.points = vs.size();
  fit.c1 = svh / shh;
  double ss = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const double r = vs[i] - fit.c1 * hs[i];
    ss += r * r;
  }
  fit.residual = svv > 0.0 ? std::sqrt(ss / svv) : 0.0;
  return fit;
}

SlopeFit fit_blowup_slope(const std::vector<SweepRecord>& records) {
  if (records.empty()) {
    throw ValidationError("slope fit needs records");
  }
  std::vector<LogFitInput> pts;
  pts.reserve(records.size());
  for (const auto& r : records) {
    if (r.gamma != records.front().gamma) {
      std::ostringstream msg;
      msg << "slope fit mixes gamma values " << records.front().gamma
          << " and " << r.gamma;
      throw ValidationError(msg.str());
    }
    pts.push_back({r.eps, r.grad_max_neck});
  }
  check_slope_span(pts);
  return ols_log_slope(std::move(pts));
}

SweepResult run_sweep(const ExperimentConfig& config) {
  if (config.gamma_values.empty() || config.eps_values.empty()) {
    throw ValidationError("sweep needs non-empty gamma and eps lists");
  }
  for (const double gamma : config.gamma_values) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      std::ostringstream msg;
      msg << "gamma " << gamma << " must be positive";
      throw ValidationError(msg.str());
    }
  }
  const geom::Geometry& base = config.geometry;
  for (const double eps : config.eps_values) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
      std::ostringstream msg;
      msg << "eps " << eps << " must be positive";
      throw ValidationError(msg.str());
    }
    if (config.window_c * std::sqrt(eps) > base.chart_radius) {
      std::ostringstream msg;
      msg << "neck window c * sqrt(eps) = " << config.window_c * std::sqrt(eps)
          << " leaves the chart at eps " << eps;
      throw ValidationError(msg.str());
    }
  }
  if (!(config.window_c > 0.0)) {
    throw ValidationError("analysis window_c must be positive");
  }
  if (!(config.fit_min_scale > 0.0) || !(config.fit_max_scale > 0.0) ||
      !(config.fit_max_scale < 0.5)) {
    throw ValidationError(
        "profile fit scales must satisfy fit_min_scale > 0 and "
        "0 < fit_max_scale < 0.5");
  }

  std::vector<double> gammas = config.gamma_values;
  std::sort(gammas.begin(), gammas.end());
  gammas.erase(std::unique(gammas.begin(), gammas.end()), gammas.end());
  std::vector<double> epses = config.eps_values;
  std::sort(epses.begin(), epses.end(), std::greater<>());
  epses.erase(std::unique(epses.begin(), epses.end()), epses.end());

  // One mesh per eps, built up front and shared read-only by the cells.
  const std::size_t ne = epses.size(), ng = gammas.size();
  std::vector<meshing::Mesh> meshes(ne);
  std::vector<bool> mesh_ok(ne, false);
  std::vector<std::string> mesh_error(ne);
  for (std::size_t ie = 0; ie < ne; ++ie) {
    geom::Geometry g = base;
    g.eps = epses[ie];
    try {
      meshes[ie] = meshing::generate_mesh(g, config.mesh);
      mesh_ok[ie] = true;
    } catch (const std::exception& e) {
      mesh_error[ie] = e.what();
    }
  }

  struct CellOutcome {
    bool ok = false;
    SweepRecord rec;
    bool has_curve = false;
    ProfileCurve curve;
    std::string error;
  };
  const std::size_t cells = ng * ne;
  std::vector<CellOutcome> outcomes(cells);

  const auto run_cell = [&](std::size_t idx) {
    CellOutcome& out = outcomes[idx];
    const std::size_t ig = idx / ne, ie = idx % ne;
    const double gamma = gammas[ig], eps = epses[ie];
    if (!mesh_ok[ie]) {
      out.error = mesh_error[ie];
      return;
    }
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const fem::RobinSystem sys = fem::assemble(meshes[ie], gamma);
      const fem::FieldSolution sol = fem::solve(sys, config.phi, config.solver);
      const auto t1 = std::chrono::steady_clock::now();

      const geom::Geometry& g = sys.mesh.geometry;
      const double mu = g.mu();
      SweepRecord r;
      r.eps = eps;
      r.gamma = gamma;
      r.alpha = reduced::blowup_exponent(2, gamma, mu);
      const double w = config.window_c * std::sqrt(eps);
      const auto clamped = [&](double half) {
        return std::min(half, g.chart_radius);
      };
      const fem::GradientExtremum peak =
          fem::max_gradient(sol, sys, {0.0, w});
      r.grad_max_neck = peak.value;
      r.grad_x = peak.location.x;
      r.grad_y = peak.location.y;
      r.grad_max_half = fem::max_gradient(sol, sys, {0.0, 0.5 * w}).value;
      r.grad_max_twice =
          fem::max_gradient(sol, sys, {0.0, clamped(2.0 * w)}).value;
      r.u1 = sol.inclusion_potential[0];
      r.u2 = sol.inclusion_potential[1];
      r.flux1 = sol.flux[0];
      r.flux2 = sol.flux[1];
      r.energy = sol.energy;
      r.dofs = sys.mesh.vertices.size() - sys.outer_vertices.size();
      r.iterations = sol.iterations;
      r.runtime_ms = wall_ms(t0, t1);
      require_finite_record(r);

      // Odd-profile fit against the reduced curve. In the scaled abscissa
      // s = sqrt(mu) r the gap is eps + s^2 and the coupling is mu * gamma,
      // so the curve lives on s in (0, 1]; the fit range is clamped to it.
      const double r_lo = config.fit_min_scale * std::sqrt(eps);
      const double r_hi = std::min(config.fit_max_scale * g.chart_radius,
                                   1.0 / std::sqrt(mu));
      if (r_lo < r_hi) {
        try {
          reduced::HParams hp;
          hp.n = 2;
          hp.gamma = mu * gamma;
          hp.eps = eps;
          const reduced::HSolution hsol = reduced::solve_h(hp);
          reduced::RadialProfile hphys = hsol.h;
          const double scale = 1.0 / std::sqrt(mu);
          for (double& s : hphys.r) s *= scale;

          constexpr int kFitPoints = 64;
          std::vector<double> absc;
          absc.reserve(2 * kFitPoints);
          for (int i = 0; i < kFitPoints; ++i) {
            const double t = static_cast<double>(i) / (kFitPoints - 1);
            const double ri = r_lo * std::pow(r_hi / r_lo, t);
            absc.push_back(ri);
            absc.push_back(-ri);
          }
          const std::vector<ProfileSample> vbar =
              vertical_profile(sol, sys, absc);
          const std::vector<ProfileSample> v = odd_mode(vbar);
          const ProfileFit fit = fit_profile_to_h(v, hphys, r_lo, r_hi);
          r.profile_c1 = fit.c1;
          r.profile_residual = fit.residual;
          out.curve.gamma = gamma;
          out.curve.eps = eps;
          out.curve.c1 = fit.c1;
          out.curve.residual = fit.residual;
          out.curve.odd = v;
          out.curve.model.reserve(v.size());
          for (const auto& s : v) {
            out.curve.model.push_back({s.r, interp_profile(hphys, s.r)});
          }
          out.has_curve = true;
        } catch (const std::exception& e) {
          out.error = std::string("profile fit: ") + e.what();
        }
      }
      out.rec = r;
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells; i = next.fetch_add(1)) {
      run_cell(i);
    }
  };
  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t nthreads =
      std::min<std::size_t>(cells, hw > 0 ? hw : 1);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepResult result;
  for (std::size_t idx = 0; idx < cells; ++idx) {
    const CellOutcome& out = outcomes[idx];
    const std::size_t ig = idx / ne, ie = idx % ne;
    if (out.ok) {
      result.records.push_back(out.rec);
      if (out.has_curve) result.profiles.push_back(out.curve);
    }
    if (!out.error.empty()) {
      result.failures.push_back({epses[ie], gammas[ig], out.error});
    }
  }
  if (result.records.empty()) {
    std::ostringstream msg;
    msg << "every sweep cell failed (" << cells << " of " << cells << ")";
    if (!result.failures.empty()) {
      msg << "; first failure: " << result.failures.front().message;
    }
    throw NumericalError(msg.str());
  }
  return result;
}

ReportBundle analyze(const SweepResult& sweep) {
  ReportBundle bundle;
  bundle.record_count = sweep.records.size();
  bundle.failure_count = sweep.failures.size();

  std::size_t begin = 0;
  while (begin < sweep.records.size()) {
    std::size_t end = begin;
    while (end < sweep.records.size() &&
           sweep.records[end].gamma == sweep.records[begin].gamma) {
      ++end;
    }
    const std::vector<SweepRecord> group(sweep.records.begin() + begin,
                                         sweep.records.begin() + end);
    GammaReport report;
    report.gamma = group.front().gamma;
    report.alpha = group.front().alpha;
    report.predicted_slope = 0.5 * (report.alpha - 1.0);
    report.blowup_regime = report.alpha < 1.0;

    try {
      report.fit = fit_blowup_slope(group);
      report.slope_available = true;
    } catch (const ValidationError&) {
      report.slope_available = false;
    }
    if (report.slope_available) {
      try {
        std::vector<LogFitInput> half, twice;
        for (const auto& r : group) {
          half.push_back({r.eps, r.grad_max_half});
          twice.push_back({r.eps, r.grad_max_twice});
        }
        report.slope_half = ols_log_slope(std::move(half)).slope;
        report.slope_twice = ols_log_slope(std::move(twice)).slope;
        report.window_drift =
            std::max(std::abs(report.slope_half - report.fit.slope),
                     std::abs(report.slope_twice - report.fit.slope));
        report.window_stable = report.window_drift < 0.03;
      } catch (const ValidationError&) {
        report.window_stable = false;
      }
    }

    if (group.size() >= 2) {
      report.dichotomy_applicable = true;
      // Records are sorted by eps descending within the group.
      if (report.blowup_regime) {
        report.dichotomy_ratio =
            group.back().grad_max_neck / group.front().grad_max_neck;
        report.dichotomy_pass = report.dichotomy_ratio >= 3.0;
      } else {
        // The bounded bound is per eps decade: the gradient may still drift
        // slowly with eps, so the ratio is taken over the trailing decade
        // (the asymptotic end of the sweep).
        const double eps_cut = 10.0 * group.back().eps * (1.0 + 1e-9);
        double lo = group.back().grad_max_neck;
        double hi = lo;
        for (const auto& r : group) {
          if (r.eps > eps_cut) continue;
          lo = std::min(lo, r.grad_max_neck);
          hi = std::max(hi, r.grad_max_neck);
        }
        report.dichotomy_ratio = lo > 0.0 ? hi / lo : 0.0;
        report.dichotomy_pass = lo > 0.0 && report.dichotomy_ratio <= 2.0;
      }
    }

    for (auto it = group.rbegin(); it != group.rend(); ++it) {
      if (it->profile_residual >= 0.0) {
        report.profile_available = true;
        report.profile_eps = it->eps;
        report.profile_c1 = it->profile_c1;
        report.profile_residual = it->profile_residual;
        break;
      }
    }

    bundle.per_gamma.push_back(report);
    begin = end;
  }

  double envelope = 0.0;
  bool finite = !sweep.records.empty();
  for (const auto& r : sweep.records) {
    const double scaled = r.grad_max_neck * std::sqrt(r.eps);
    if (!std::isfinite(scaled)) {
      finite = false;
      continue;
    }
    envelope = std::max(envelope, scaled);
  }
  bundle.envelope_constant = envelope;
  if (finite && envelope > 0.0) {
    double worst = 0.0;
    for (const auto& r : sweep.records) {
      worst = std::max(worst, r.grad_max_neck * std::sqrt(r.eps) / envelope);
    }
    bundle.envelope_worst = worst;
    bundle.envelope_pass = worst <= 1.5;
  }
  return bundle;
}

}  // namespace neckfield::lab
