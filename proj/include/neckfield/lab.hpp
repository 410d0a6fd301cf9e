#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "neckfield/config.hpp"
#include "neckfield/fem.hpp"
#include "neckfield/reduced.hpp"

// Experiment orchestration: run the (eps, gamma) lattice of field problems,
// extract the gap profile, fit the blow-up slope, and summarize the
// bounded/blow-up dichotomy. File emission lives in report.hpp.

namespace neckfield::lab {

// One sweep cell. The first block mirrors the sweep.csv columns in order;
// the second block holds diagnostics that stay out of the CSV.
struct SweepRecord {
  double eps = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;          // blow-up exponent at this coupling
  double grad_max_neck = 0.0;  // max |grad u|, window half-width c * sqrt(eps)
  double grad_x = 0.0;         // centroid attaining the maximum
  double grad_y = 0.0;
  double u1 = 0.0;             // inclusion potentials
  double u2 = 0.0;
  double flux1 = 0.0;          // net inclusion fluxes, zero up to solver tolerance
  double flux2 = 0.0;
  double energy = 0.0;
  std::size_t dofs = 0;        // free vertices (container boundary eliminated)
  int iterations = 0;          // 0 on the direct path
  double runtime_ms = 0.0;     // assemble + solve wall time; varies run to run

  double grad_max_half = 0.0;   // window half-width halved (sensitivity probe)
  double grad_max_twice = 0.0;  // and doubled, clamped to the chart
  double profile_c1 = 0.0;      // odd-profile amplitude against the reduced model
  double profile_residual = -1.0;  // relative misfit; -1 when the fit was skipped
};

struct SweepFailure {
  double eps = 0.0;
  double gamma = 0.0;
  std::string message;
};

// Gap-fiber average at abscissa r: the field sampled on the vertical
// segment between the two disk boundaries over r, midpoint rule.
struct ProfileSample {
  double r = 0.0;
  double mean = 0.0;
};

// Odd gap profile of one cell and the reduced-model curve it was fitted
// against, kept for plotting. model holds h at the same abscissae with
// unit amplitude; the fitted overlay is c1 * model.
struct ProfileCurve {
  double gamma = 0.0;
  double eps = 0.0;
  double c1 = 0.0;
  double residual = 0.0;
  std::vector<ProfileSample> odd;
  std::vector<ProfileSample> model;
};

struct SweepResult {
  std::vector<SweepRecord> records;    // gamma ascending, then eps descending
  std::vector<SweepFailure> failures;  // same ordering
  std::vector<ProfileCurve> profiles;  // cells where the profile fit ran
};

// Runs every (eps, gamma) cell: mesh, assemble, solve, diagnostics. Meshes
// are built once per eps and shared across gamma values; cells solve
// concurrently. A failing cell is recorded in failures without aborting
// the sweep; a sweep where every cell failed throws NumericalError.
// Duplicate list entries are collapsed so cells are unique pairs.
SweepResult run_sweep(const ExperimentConfig& config);

// Fiber averages at the given abscissae. Throws ValidationError when some
// |r| >= chart_radius / 2 and NumericalError when a quadrature point cannot
// be located in the mesh.
std::vector<ProfileSample> vertical_profile(const fem::FieldSolution& sol,
                                            const fem::RobinSystem& sys,
                                            const std::vector<double>& abscissae,
                                            int samples_per_fiber = 16);

// V(r) = (vbar(r) - vbar(-r)) / 2 over the positive abscissae, ascending.
// Abscissae must come in exact +-r pairs; r = 0 entries drop out (their odd
// part vanishes identically). Unmatched abscissae throw ValidationError.
std::vector<ProfileSample> odd_mode(const std::vector<ProfileSample>& profile);

struct ProfileFit {
  double c1 = 0.0;
  double residual = 0.0;  // ||V - c1 h|| / ||V||, 0 when ||V|| = 0
  std::size_t points = 0;
};

// Least-squares amplitude of the odd profile against the reduced curve h
// (piecewise-linear in r) over abscissae in [r_lo, r_hi]. Throws
// ValidationError when no abscissa falls in the range and NumericalError
// when h vanishes identically there.
ProfileFit fit_profile_to_h(const std::vector<ProfileSample>& odd,
                            const reduced::RadialProfile& h, double r_lo,
                            double r_hi);

struct SlopeFit {
  double slope = 0.0;
  double std_error = 0.0;
  std::size_t points = 0;        // points entering the regression
  bool dropped_largest = false;  // largest eps excluded as pre-asymptotic
};

// Ordinary least squares of log(grad_max_neck) against log(eps) over
// records sharing one gamma. Requires >= 4 eps values spanning >= 1.5
// decades (ValidationError otherwise); with >= 5 values the largest eps is
// excluded.
SlopeFit fit_blowup_slope(const std::vector<SweepRecord>& records);

// Per-gamma roll-up of the sweep. The regime split keys off the exponent:
// alpha < 1 is the blow-up regime (gamma > 1/mu), alpha >= 1 the bounded
// one.
struct GammaReport {
  double gamma = 0.0;
  double alpha = 0.0;
  double predicted_slope = 0.0;  // (alpha - 1) / 2
  bool blowup_regime = false;

  bool slope_available = false;  // enough eps points and span
  SlopeFit fit;                  // reference window
  double slope_half = 0.0;       // refit against the halved window
  double slope_twice = 0.0;      // and the doubled one
  double window_drift = 0.0;     // max deviation from the reference slope
  bool window_stable = false;    // drift < 0.03

  bool dichotomy_applicable = false;  // needs >= 2 eps values
  // Bounded regime: max/min of grad_max_neck over the trailing eps decade,
  // passing at <= 2. Blow-up regime: grad at the smallest eps over grad at
  // the largest, passing at >= 3.
  double dichotomy_ratio = 0.0;
  bool dichotomy_pass = false;

  bool profile_available = false;  // smallest-eps cell carried the fit
  double profile_eps = 0.0;
  double profile_c1 = 0.0;
  double profile_residual = 0.0;
};

struct ReportBundle {
  std::vector<GammaReport> per_gamma;  // gamma ascending
  // Envelope grad <= envelope_constant * eps^{-1/2}, calibrated as the
  // supremum of grad * sqrt(eps) over the sweep; worst_ratio is the largest
  // grad relative to that envelope and the check allows an extra factor 1.5
  // against records added later.
  double envelope_constant = 0.0;
  double envelope_worst = 0.0;
  bool envelope_pass = false;
  std::size_t record_count = 0;
  std::size_t failure_count = 0;
};

ReportBundle analyze(const SweepResult& sweep);

}  // namespace neckfield::lab
