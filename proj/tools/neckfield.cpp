#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "neckfield/config.hpp"
#include "neckfield/errors.hpp"
#include "neckfield/lab.hpp"
#include "neckfield/mesh.hpp"
#include "neckfield/reduced.hpp"
#include "neckfield/report.hpp"

namespace {

using namespace neckfield;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void require_single_cell(const lab::ExperimentConfig& cfg, const char* verb) {
  if (cfg.gamma_values.size() != 1 || cfg.eps_values.size() != 1) {
    std::ostringstream msg;
    msg << verb << " needs exactly one gamma and one eps in the config, got "
        << cfg.gamma_values.size() << " gamma and " << cfg.eps_values.size()
        << " eps values";
    throw ValidationError(msg.str());
  }
}

void print_record(const lab::SweepRecord& r) {
  std::cout << "eps = " << fmt(r.eps) << "\n"
            << "gamma = " << fmt(r.gamma) << "\n"
            << "alpha = " << fmt(r.alpha) << "\n"
            << "grad_max_neck = " << fmt(r.grad_max_neck) << "\n"
            << "grad_x = " << fmt(r.grad_x) << "\n"
            << "grad_y = " << fmt(r.grad_y) << "\n"
            << "U1 = " << fmt(r.u1) << "\n"
            << "U2 = " << fmt(r.u2) << "\n"
            << "flux1 = " << fmt(r.flux1) << "\n"
            << "flux2 = " << fmt(r.flux2) << "\n"
            << "energy = " << fmt(r.energy) << "\n"
            << "dofs = " << r.dofs << "\n"
            << "iterations = " << r.iterations << "\n"
            << "runtime_ms = " << fmt(r.runtime_ms) << "\n";
  if (r.profile_residual >= 0.0) {
    std::cout << "profile_c1 = " << fmt(r.profile_c1) << "\n"
              << "profile_residual = " << fmt(r.profile_residual) << "\n";
  }
}

void print_summary(const lab::SweepResult& sweep,
                   const lab::ReportBundle& bundle,
                   const std::string& directory) {
  std::cout << "records = " << bundle.record_count
            << ", failures = " << bundle.failure_count << "\n";
  for (const auto& g : bundle.per_gamma) {
    std::cout << "gamma " << g.gamma << ": alpha " << g.alpha << ", "
              << (g.blowup_regime ? "blow-up" : "bounded") << " regime";
    if (g.slope_available) {
      std::cout << ", slope " << g.fit.slope << " +- " << g.fit.std_error
                << " (predicted " << g.predicted_slope << ")"
                << ", window drift " << g.window_drift
                << (g.window_stable ? " (stable)" : " (UNSTABLE)");
    }
    if (g.dichotomy_applicable) {
      std::cout << ", dichotomy ratio " << g.dichotomy_ratio
                << (g.dichotomy_pass ? " (pass)" : " (FAIL)");
    }
    if (g.profile_available) {
      std::cout << ", profile C1 " << g.profile_c1 << " residual "
                << g.profile_residual << " at eps " << g.profile_eps;
    }
    std::cout << "\n";
  }
  std::cout << "envelope: grad_max_neck <= 1.5 * " << bundle.envelope_constant
            << " * eps^-1/2, worst ratio " << bundle.envelope_worst
            << (bundle.envelope_pass ? " (pass)" : " (FAIL)") << "\n";
  for (const auto& f : sweep.failures) {
    std::cerr << "cell eps = " << f.eps << ", gamma = " << f.gamma
              << " failed: " << f.message << "\n";
  }
  std::cout << "wrote " << directory
            << "/{sweep.csv, summary.json, blowup.svg, profile.svg}\n";
}

void cmd_solve(const std::string& config_path) {
  lab::ExperimentConfig cfg = lab::parse_config(read_file(config_path));
  require_single_cell(cfg, "solve");
  const lab::SweepResult result = lab::run_sweep(cfg);
  print_record(result.records.front());
}

void cmd_sweep(const std::string& config_path, const std::string& out_dir) {
  lab::ExperimentConfig cfg = lab::parse_config(read_file(config_path));
  if (!out_dir.empty()) cfg.output_directory = out_dir;
  const lab::SweepResult result = lab::run_sweep(cfg);
  const lab::ReportBundle bundle = lab::analyze(result);
  lab::emit_report(result, bundle, cfg.output_directory);
  print_summary(result, bundle, cfg.output_directory);
}

void cmd_ode(int n, double gamma, double eps) {
  reduced::HParams hp;
  hp.n = n;
  hp.gamma = gamma;
  hp.eps = eps;
  const reduced::HSolution sol = reduced::solve_h(hp);
  const bool has_bound = gamma > 1.0;
  reduced::SubsolutionBound bound;
  if (has_bound) bound = reduced::subsolution_bound(n, gamma, eps);
  std::cout << "r,h,subsolution,supersolution,lower_bound\n";
  for (std::size_t i = 0; i < sol.h.r.size(); ++i) {
    const double r = sol.h.r[i];
    const double super = std::pow(r, sol.alpha);
    double lower = 0.0;
    if (has_bound) {
      lower = std::max(0.0, super - std::pow(bound.c * std::sqrt(eps),
                                             sol.alpha));
    }
    std::cout << fmt(r) << ',' << fmt(sol.h.value[i]) << ',' << fmt(r) << ','
              << fmt(super) << ',' << fmt(lower) << "\n";
  }
}

void cmd_alpha(const std::vector<int>& ns, const std::vector<double>& gammas,
               double mu) {
  std::printf("%-4s %-12s %-8s %-20s %-20s %-20s\n", "n", "gamma", "mu",
              "alpha_1", "alpha_2", "alpha_3");
  for (const int n : ns) {
    for (const double gamma : gammas) {
      std::printf("%-4d %-12g %-8g %-20.15f", n, gamma, mu,
                  reduced::blowup_exponent(n, gamma, mu));
      for (int k = 2; k <= 3; ++k) {
        if (n == 2) {
          std::printf(" %-20s", "-");
        } else {
          std::printf(" %-20.15f", reduced::mode_exponent(n, mu * gamma, k));
        }
      }
      std::printf("\n");
    }
  }
}

void cmd_mesh_dump(const std::string& config_path) {
  lab::ExperimentConfig cfg = lab::parse_config(read_file(config_path));
  if (cfg.eps_values.size() != 1) {
    std::ostringstream msg;
    msg << "mesh dump needs exactly one eps in the config, got "
        << cfg.eps_values.size();
    throw ValidationError(msg.str());
  }
  geom::Geometry g = cfg.geometry;
  g.eps = cfg.eps_values.front();
  const meshing::Mesh mesh = meshing::generate_mesh(g, cfg.mesh);
  meshing::dump_mesh(std::cout, mesh);
}

void cmd_report(const std::string& csv_path, const std::string& out_dir) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + csv_path);
  lab::SweepResult result;
  result.records = lab::load_records(in);
  if (result.records.empty()) {
    throw ValidationError(csv_path + " holds no records");
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const lab::SweepRecord& a, const lab::SweepRecord& b) {
              if (a.gamma != b.gamma) return a.gamma < b.gamma;
              return a.eps > b.eps;
            });
  const lab::ReportBundle bundle = lab::analyze(result);
  lab::emit_report(result, bundle, out_dir);
  print_summary(result, bundle, out_dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Field concentration between two nearly touching disks with "
      "imperfectly bonded interfaces"};
  app.require_subcommand(1);

  std::string config_path, out_dir, report_dir = "out", csv_path;
  int ode_n = 2;
  double ode_gamma = 2.0, ode_eps = 1e-3, alpha_mu = 1.0;
  std::vector<int> alpha_ns{2, 3, 4};
  std::vector<double> alpha_gammas;

  CLI::App* solve = app.add_subcommand(
      "solve", "solve one (eps, gamma) cell and print its diagnostics");
  solve->add_option("config", config_path, "experiment config file")
      ->required();
  solve->callback([&] { cmd_solve(config_path); });

  CLI::App* sweep = app.add_subcommand(
      "sweep", "run the (eps, gamma) lattice and emit the report files");
  sweep->add_option("config", config_path, "experiment config file")
      ->required();
  sweep->add_option("--out", out_dir,
                    "output directory (overrides the config)");
  sweep->callback([&] { cmd_sweep(config_path, out_dir); });

  CLI::App* ode = app.add_subcommand(
      "ode", "solve the reduced gap equation and print r, h, bounds as CSV");
  ode->add_option("--n", ode_n, "dimension, 2 to 8")->capture_default_str();
  ode->add_option("--gamma", ode_gamma, "normalized coupling")
      ->capture_default_str();
  ode->add_option("--eps", ode_eps, "gap width")->capture_default_str();
  ode->callback([&] { cmd_ode(ode_n, ode_gamma, ode_eps); });

  CLI::App* alpha = app.add_subcommand(
      "alpha", "print blow-up and mode exponents over a parameter grid");
  alpha->add_option("--n", alpha_ns, "dimension list")
      ->capture_default_str();
  alpha->add_option("--gamma", alpha_gammas, "coupling list")->required();
  alpha->add_option("--mu", alpha_mu, "curvature scale")
      ->capture_default_str();
  alpha->callback([&] { cmd_alpha(alpha_ns, alpha_gammas, alpha_mu); });

  CLI::App* mesh = app.add_subcommand("mesh", "mesh utilities");
  mesh->require_subcommand(1);
  CLI::App* dump = mesh->add_subcommand(
      "dump", "generate the mesh for the config and print its dump format");
  dump->add_option("config", config_path, "experiment config file")
      ->required();
  dump->callback([&] { cmd_mesh_dump(config_path); });

  CLI::App* report = app.add_subcommand(
      "report", "rebuild analysis and report files from a sweep.csv");
  report->add_option("records", csv_path, "sweep.csv produced by a sweep")
      ->required();
  report->add_option("--out", report_dir, "output directory")
      ->capture_default_str();
  report->callback([&] { cmd_report(csv_path, report_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
