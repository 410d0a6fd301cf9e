#include "neckfield/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>

#include "neckfield/errors.hpp"

namespace neckfield::lab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool parse_double(const std::string& s, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size() && std::isfinite(out);
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty() || s[0] == '-') return false;
  std::size_t used = 0;
  try {
    out = std::stoull(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

bool parse_int(const std::string& s, int& out) {
  std::size_t used = 0;
  try {
    out = std::stoi(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

bool parse_list(const std::string& s, std::vector<double>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    const std::string piece = trim(s.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    double v = 0.0;
    if (!parse_double(piece, v)) return false;
    out.push_back(v);
    if (comma == std::string::npos) return true;
    start = comma + 1;
  }
}

struct Violation {
  int line = 0;  // 0 for cross-field checks
  std::string message;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<Violation> bad;
  std::set<std::string> seen;
  bool gamma_given = false, eps_given = false;
  bool gamma_broken = false, eps_broken = false;

  const std::set<std::string> sections = {"geometry", "physics", "mesh",
                                          "solver",   "analysis", "output"};
  std::string section;
  bool section_known = false;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        std::ostringstream msg;
        msg << "malformed section header '" << s << "'";
        bad.push_back({line, msg.str()});
        section_known = false;
        continue;
      }
      section = trim(s.substr(1, s.size() - 2));
      section_known = sections.count(section) > 0;
      if (!section_known) {
        bad.push_back({line, "unknown section [" + section + "]"});
      }
      continue;
    }

    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      bad.push_back({line, "expected key = value, got '" + s + "'"});
      continue;
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (!section_known) continue;  // the section header was already reported
    if (!seen.insert(section + "." + key).second) {
      bad.push_back({line, "duplicate key '" + key + "' in [" + section + "]"});
      continue;
    }

    const auto number = [&](double& slot) {
      if (!parse_double(value, slot)) {
        bad.push_back({line, "key '" + key + "' has a malformed number '" +
                                 value + "'"});
      }
    };
    bool known_key = true;
    if (section == "geometry") {
      if (key == "radius") number(cfg.geometry.radius);
      else if (key == "outer_radius") number(cfg.geometry.outer_radius);
      else if (key == "chart_radius") number(cfg.geometry.chart_radius);
      else known_key = false;
    } else if (section == "physics") {
      if (key == "gamma") {
        gamma_given = true;
        if (!parse_list(value, cfg.gamma_values)) {
          bad.push_back({line, "gamma list '" + value + "' is malformed"});
          gamma_broken = true;
        }
      } else if (key == "eps") {
        eps_given = true;
        if (!parse_list(value, cfg.eps_values)) {
          bad.push_back({line, "eps list '" + value + "' is malformed"});
          eps_broken = true;
        }
      } else if (key == "phi") {
        try {
          cfg.phi = fem::phi_from_spec(value);
        } catch (const ValidationError& e) {
          bad.push_back({line, e.what()});
        }
      } else known_key = false;
    } else if (section == "mesh") {
      if (key == "theta") number(cfg.mesh.sizing.theta);
      else if (key == "h_min") number(cfg.mesh.sizing.h_min);
      else if (key == "h_max") number(cfg.mesh.sizing.h_max);
      else if (key == "angle_floor") number(cfg.mesh.angle_floor_deg);
      else if (key == "vertex_cap") {
        std::uint64_t cap = 0;
        if (!parse_u64(value, cap)) {
          bad.push_back({line, "vertex_cap '" + value +
                                   "' is not a nonnegative integer"});
        } else {
          cfg.mesh.vertex_cap = static_cast<std::size_t>(cap);
        }
      } else known_key = false;
    } else if (section == "solver") {
      if (key == "rtol") number(cfg.solver.rtol);
      else if (key == "max_iterations") {
        if (!parse_int(value, cfg.solver.max_iterations)) {
          bad.push_back({line, "max_iterations '" + value +
                                   "' is not an integer"});
        }
      } else known_key = false;
    } else if (section == "analysis") {
      if (key == "window_c") number(cfg.window_c);
      else if (key == "fit_min_scale") number(cfg.fit_min_scale);
      else if (key == "fit_max_scale") number(cfg.fit_max_scale);
      else known_key = false;
    } else if (section == "output") {
      if (key == "directory") {
        if (value.empty()) {
          bad.push_back({line, "output directory must not be empty"});
        } else {
          cfg.output_directory = value;
        }
      } else if (key == "seed") {
        if (!parse_u64(value, cfg.seed)) {
          bad.push_back({line, "seed '" + value +
                                   "' is not a nonnegative integer"});
        }
      } else known_key = false;
    }
    if (!known_key) {
      bad.push_back({line, "unknown key '" + key + "' in [" + section + "]"});
    }
  }

  // Cross-field constraints, reported together with the line-level findings.
  const auto check = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back({0, msg});
  };
  const auto& g = cfg.geometry;
  check(g.radius > 0.0, "disk radius must be positive");
  check(g.chart_radius > 0.0, "chart_radius must be positive");
  check(!(g.radius > 0.0 && g.chart_radius > 0.0) ||
            g.chart_radius < g.radius,
        "chart_radius must be smaller than the disk radius");
  if (!gamma_given && !gamma_broken) {
    bad.push_back({0, "[physics] gamma list is required"});
  }
  if (!eps_given && !eps_broken) {
    bad.push_back({0, "[physics] eps list is required"});
  }
  if (gamma_given && !gamma_broken) {
    check(!cfg.gamma_values.empty(), "gamma list must not be empty");
    for (const double gamma : cfg.gamma_values) {
      if (!(gamma > 0.0)) {
        std::ostringstream msg;
        msg << "gamma " << gamma << " must be positive";
        bad.push_back({0, msg.str()});
      }
    }
  }
  if (eps_given && !eps_broken) {
    check(!cfg.eps_values.empty(), "eps list must not be empty");
    double eps_max = 0.0;
    for (const double eps : cfg.eps_values) {
      if (!(eps > 0.0)) {
        std::ostringstream msg;
        msg << "eps " << eps << " must be positive";
        bad.push_back({0, msg.str()});
        continue;
      }
      eps_max = std::max(eps_max, eps);
      if (g.chart_radius > 0.0 && !(eps < 0.25 * g.chart_radius)) {
        std::ostringstream msg;
        msg << "eps " << eps << " violates eps < chart_radius / 4 = "
            << 0.25 * g.chart_radius;
        bad.push_back({0, msg.str()});
      } else if (cfg.window_c > 0.0 &&
                 cfg.window_c * std::sqrt(eps) > g.chart_radius) {
        std::ostringstream msg;
        msg << "neck window c * sqrt(eps) = " << cfg.window_c * std::sqrt(eps)
            << " leaves the chart at eps " << eps;
        bad.push_back({0, msg.str()});
      }
    }
    if (eps_max > 0.0 && g.radius > 0.0) {
      check(g.outer_radius > 2.0 * g.radius + eps_max,
            "outer_radius must enclose both disks with clearance");
    }
  }
  const auto& s = cfg.mesh.sizing;
  check(s.theta > 0.0 && s.theta <= 1.0, "sizing theta must lie in (0, 1]");
  check(s.h_min > 0.0, "sizing h_min must be positive");
  check(!(s.h_min > 0.0) || s.h_min <= s.h_max,
        "sizing must satisfy h_min <= h_max");
  check(cfg.mesh.angle_floor_deg > 0.0 && cfg.mesh.angle_floor_deg <= 30.0,
        "mesh angle floor must lie in (0, 30] degrees");
  check(cfg.mesh.vertex_cap >= 64, "mesh vertex cap must be at least 64");
  check(cfg.solver.rtol > 0.0, "solver rtol must be positive");
  check(cfg.solver.max_iterations > 0, "solver max_iterations must be positive");
  check(cfg.window_c > 0.0, "analysis window_c must be positive");
  check(cfg.fit_min_scale > 0.0, "analysis fit_min_scale must be positive");
  check(cfg.fit_max_scale > 0.0 && cfg.fit_max_scale < 0.5,
        "analysis fit_max_scale must lie in (0, 0.5): the profile chart "
        "covers |x1| < chart_radius / 2");

  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "configuration invalid (" << bad.size() << " problem"
        << (bad.size() == 1 ? "" : "s") << "):";
    for (const auto& v : bad) {
      msg << "\n  ";
      if (v.line > 0) msg << "line " << v.line << ": ";
      msg << v.message;
    }
    throw ValidationError(msg.str());
  }
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[geometry]\n";
  out << "radius = " << format_double(cfg.geometry.radius) << "\n";
  out << "outer_radius = " << format_double(cfg.geometry.outer_radius) << "\n";
  out << "chart_radius = " << format_double(cfg.geometry.chart_radius) << "\n";
  out << "\n[physics]\n";
  out << "gamma = " << format_list(cfg.gamma_values) << "\n";
  out << "eps = " << format_list(cfg.eps_values) << "\n";
  out << "phi = " << fem::phi_spec(cfg.phi) << "\n";
  out << "\n[mesh]\n";
  out << "theta = " << format_double(cfg.mesh.sizing.theta) << "\n";
  out << "h_min = " << format_double(cfg.mesh.sizing.h_min) << "\n";
  out << "h_max = " << format_double(cfg.mesh.sizing.h_max) << "\n";
  out << "angle_floor = " << format_double(cfg.mesh.angle_floor_deg) << "\n";
  out << "vertex_cap = " << cfg.mesh.vertex_cap << "\n";
  out << "\n[solver]\n";
  out << "rtol = " << format_double(cfg.solver.rtol) << "\n";
  out << "max_iterations = " << cfg.solver.max_iterations << "\n";
  out << "\n[analysis]\n";
  out << "window_c = " << format_double(cfg.window_c) << "\n";
  out << "fit_min_scale = " << format_double(cfg.fit_min_scale) << "\n";
  out << "fit_max_scale = " << format_double(cfg.fit_max_scale) << "\n";
  out << "\n[output]\n";
  out << "directory = " << cfg.output_directory << "\n";
  out << "seed = " << cfg.seed << "\n";
  return out.str();
}

}  // namespace neckfield::lab
