#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "neckfield/fem.hpp"
#include "neckfield/geometry.hpp"
#include "neckfield/mesh.hpp"

// Experiment configuration: an INI-style text format with [section] headers
// and key = value lines. Lists are comma-separated. Unknown sections or keys
// are errors; parsing collects every violation before failing so a bad file
// is diagnosed in one pass.

namespace neckfield::lab {

struct ExperimentConfig {
  geom::Geometry geometry;  // eps is swept; the list below overrides it
  std::vector<double> gamma_values;
  std::vector<double> eps_values;
  fem::Phi phi = fem::phi_x1();
  meshing::MeshParams mesh;
  fem::SolverParams solver;

  // Analysis: the neck window half-width is window_c * sqrt(eps); profile
  // fits run on [fit_min_scale * sqrt(eps), fit_max_scale * chart_radius].
  double window_c = 1.0;
  double fit_min_scale = 2.0;
  double fit_max_scale = 0.25;

  std::string output_directory = "out";
  std::uint64_t seed = 0;
};

// Throws ValidationError listing every violation, one per line, each with
// the offending line number where applicable.
ExperimentConfig parse_config(const std::string& text);

// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace neckfield::lab
