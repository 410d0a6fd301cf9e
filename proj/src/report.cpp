#include "neckfield/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"
#include "neckfield/errors.hpp"

namespace neckfield::lab {

const char* const kSweepCsvHeader =
    "eps,gamma,alpha,grad_max_neck,grad_x,grad_y,U1,U2,flux1,flux2,energy,"
    "dofs,iterations,runtime_ms";

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Plot coordinate: 6 digits keeps the SVG readable and is far below a
// pixel at the 800x600 canvas.
std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.flush();
  if (!out) {
    throw ValidationError("cannot write " + path.string());
  }
}

std::string csv_text(const std::vector<SweepRecord>& records) {
  std::ostringstream out;
  out << kSweepCsvHeader << "\n";
  for (const auto& r : records) {
    out << fmt(r.eps) << ',' << fmt(r.gamma) << ',' << fmt(r.alpha) << ','
        << fmt(r.grad_max_neck) << ',' << fmt(r.grad_x) << ','
        << fmt(r.grad_y) << ',' << fmt(r.u1) << ',' << fmt(r.u2) << ','
        << fmt(r.flux1) << ',' << fmt(r.flux2) << ',' << fmt(r.energy) << ','
        << r.dofs << ',' << r.iterations << ',' << fmt(r.runtime_ms) << "\n";
  }
  return out.str();
}

std::string summary_text(const SweepResult& sweep, const ReportBundle& bundle) {
  nlohmann::ordered_json j;
  j["records"] = bundle.record_count;
  j["failures"] = bundle.failure_count;
  j["envelope"] = {{"constant", bundle.envelope_constant},
                   {"worst_ratio", bundle.envelope_worst},
                   {"pass", bundle.envelope_pass}};
  j["gammas"] = nlohmann::ordered_json::array();
  for (const auto& g : bundle.per_gamma) {
    nlohmann::ordered_json item;
    item["gamma"] = g.gamma;
    item["alpha"] = g.alpha;
    item["predicted_slope"] = g.predicted_slope;
    item["regime"] = g.blowup_regime ? "blowup" : "bounded";
    if (g.slope_available) {
      item["slope"] = {{"value", g.fit.slope},
                       {"std_error", g.fit.std_error},
                       {"points", g.fit.points},
                       {"dropped_largest", g.fit.dropped_largest}};
      item["window"] = {{"half", g.slope_half},
                        {"twice", g.slope_twice},
                        {"drift", g.window_drift},
                        {"stable", g.window_stable}};
    } else {
      item["slope"] = nullptr;
      item["window"] = nullptr;
    }
    if (g.dichotomy_applicable) {
      item["dichotomy"] = {{"ratio", g.dichotomy_ratio},
                           {"pass", g.dichotomy_pass}};
    } else {
      item["dichotomy"] = nullptr;
    }
    if (g.profile_available) {
      item["profile"] = {{"eps", g.profile_eps},
                         {"c1", g.profile_c1},
                         {"residual", g.profile_residual}};
    } else {
      item["profile"] = nullptr;
    }
    j["gammas"].push_back(item);
  }
  j["failure_list"] = nlohmann::ordered_json::array();
  for (const auto& f : sweep.failures) {
    j["failure_list"].push_back(
        {{"eps", f.eps}, {"gamma", f.gamma}, {"message", f.message}});
  }
  return j.dump(2) + "\n";
}

// Shared scaffolding for the two log-log plots.
struct Canvas {
  static constexpr double kWidth = 800.0, kHeight = 600.0;
  static constexpr double kLeft = 70.0, kRight = 770.0;
  static constexpr double kTop = 40.0, kBottom = 540.0;
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

  void fit(const std::vector<std::pair<double, double>>& pts) {
    if (pts.empty()) return;
    x_min = x_max = pts.front().first;
    y_min = y_max = pts.front().second;
    for (const auto& [x, y] : pts) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
    if (x_max - x_min < 1e-9) { x_min -= 0.5; x_max += 0.5; }
    if (y_max - y_min < 1e-9) { y_min -= 0.5; y_max += 0.5; }
    const double px = 0.05 * (x_max - x_min), py = 0.05 * (y_max - y_min);
    x_min -= px; x_max += px; y_min -= py; y_max += py;
  }
  double sx(double x) const {
    return kLeft + (x - x_min) / (x_max - x_min) * (kRight - kLeft);
  }
  double sy(double y) const {
    return kBottom - (y - y_min) / (y_max - y_min) * (kBottom - kTop);
  }
};

const char* series_color(std::size_t i) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
  return kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
}

void svg_open(std::ostringstream& out, const std::string& title,
              const std::string& x_label, const std::string& y_label) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 600\" "
         "width=\"800\" height=\"600\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" "
         "fill=\"#ffffff\"/>\n"
      << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">" << title << "</text>\n"
      << "<rect x=\"" << Canvas::kLeft << "\" y=\"" << Canvas::kTop
      << "\" width=\"" << Canvas::kRight - Canvas::kLeft << "\" height=\""
      << Canvas::kBottom - Canvas::kTop
      << "\" fill=\"none\" stroke=\"#333333\"/>\n"
      << "<text x=\"420\" y=\"580\" text-anchor=\"middle\" font-size=\"13\" "
         "font-family=\"sans-serif\">" << x_label << "</text>\n"
      << "<text x=\"18\" y=\"290\" text-anchor=\"middle\" font-size=\"13\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 18 290)\">"
      << y_label << "</text>\n";
}

void svg_ticks(std::ostringstream& out, const Canvas& cv) {
  for (int i = 0; i <= 4; ++i) {
    const double fx = cv.x_min + i * (cv.x_max - cv.x_min) / 4.0;
    const double fy = cv.y_min + i * (cv.y_max - cv.y_min) / 4.0;
    out << "<line x1=\"" << fmt_coord(cv.sx(fx)) << "\" y1=\""
        << Canvas::kBottom << "\" x2=\"" << fmt_coord(cv.sx(fx)) << "\" y2=\""
        << Canvas::kBottom + 5 << "\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << fmt_coord(cv.sx(fx)) << "\" y=\""
        << Canvas::kBottom + 20
        << "\" text-anchor=\"middle\" font-size=\"11\" "
           "font-family=\"sans-serif\">" << fmt_coord(fx) << "</text>\n"
        << "<line x1=\"" << Canvas::kLeft - 5 << "\" y1=\""
        << fmt_coord(cv.sy(fy)) << "\" x2=\"" << Canvas::kLeft << "\" y2=\""
        << fmt_coord(cv.sy(fy)) << "\" stroke=\"#333333\"/>\n"
        << "<text x=\"" << Canvas::kLeft - 8 << "\" y=\""
        << fmt_coord(cv.sy(fy) + 4)
        << "\" text-anchor=\"end\" font-size=\"11\" "
           "font-family=\"sans-serif\">" << fmt_coord(fy) << "</text>\n";
  }
}

void svg_polyline(std::ostringstream& out, const Canvas& cv,
                  const std::vector<std::pair<double, double>>& pts,
                  const char* color, const char* dash) {
  out << "<polyline fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\"";
  if (dash) out << " stroke-dasharray=\"" << dash << "\"";
  out << " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) out << ' ';
    out << fmt_coord(cv.sx(pts[i].first)) << ','
        << fmt_coord(cv.sy(pts[i].second));
  }
  out << "\"/>\n";
}

std::string blowup_svg(const SweepResult& sweep, const ReportBundle& bundle) {
  // One series per gamma: log10 grad_max_neck against log10 eps.
  std::map<double, std::vector<std::pair<double, double>>> series;
  std::vector<std::pair<double, double>> all;
  for (const auto& r : sweep.records) {
    if (!(r.eps > 0.0) || !(r.grad_max_neck > 0.0)) continue;
    const std::pair<double, double> p{std::log10(r.eps),
                                      std::log10(r.grad_max_neck)};
    series[r.gamma].push_back(p);
    all.push_back(p);
  }
  std::ostringstream out;
  svg_open(out, "neck gradient maximum against gap width", "log10 eps",
           "log10 grad_max_neck");
  if (all.empty()) {
    out << "<text x=\"400\" y=\"300\" text-anchor=\"middle\" "
           "font-size=\"14\" font-family=\"sans-serif\">no positive data"
           "</text>\n</svg>\n";
    return out.str();
  }
  Canvas cv;
  cv.fit(all);
  svg_ticks(out, cv);
  std::size_t idx = 0;
  double legend_y = Canvas::kTop + 18.0;
  for (auto& [gamma, pts] : series) {
    std::sort(pts.begin(), pts.end());
    const char* color = series_color(idx);
    svg_polyline(out, cv, pts, color, nullptr);
    for (const auto& [x, y] : pts) {
      out << "<circle cx=\"" << fmt_coord(cv.sx(x)) << "\" cy=\""
          << fmt_coord(cv.sy(y)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    // The OLS line passes through the centroid of the fitted points.
    const GammaReport* rep = nullptr;
    for (const auto& g : bundle.per_gamma) {
      if (g.gamma == gamma && g.slope_available) rep = &g;
    }
    if (rep != nullptr && pts.size() >= 2) {
      std::vector<std::pair<double, double>> used = pts;
      if (rep->fit.dropped_largest && used.size() > rep->fit.points) {
        used.pop_back();
      }
      double mx = 0.0, my = 0.0;
      for (const auto& [x, y] : used) { mx += x; my += y; }
      mx /= used.size();
      my /= used.size();
      const double x0 = used.front().first, x1 = used.back().first;
      out << "<line x1=\"" << fmt_coord(cv.sx(x0)) << "\" y1=\""
          << fmt_coord(cv.sy(my + rep->fit.slope * (x0 - mx))) << "\" x2=\""
          << fmt_coord(cv.sx(x1)) << "\" y2=\""
          << fmt_coord(cv.sy(my + rep->fit.slope * (x1 - mx)))
          << "\" stroke=\"" << color
          << "\" stroke-width=\"1\" stroke-dasharray=\"6 3\"/>\n";
    }
    out << "<text x=\"" << Canvas::kRight - 8 << "\" y=\""
        << fmt_coord(legend_y) << "\" text-anchor=\"end\" font-size=\"12\" "
        << "font-family=\"sans-serif\" fill=\"" << color << "\">gamma = "
        << fmt_coord(gamma);
    if (rep != nullptr) {
      out << ", slope " << fmt_coord(rep->fit.slope) << " (predicted "
          << fmt_coord(rep->predicted_slope) << ")";
    }
    out << "</text>\n";
    legend_y += 16.0;
    ++idx;
  }
  out << "</svg>\n";
  return out.str();
}

std::string profile_svg(const SweepResult& sweep) {
  // Smallest-eps curve per gamma; profiles arrive sorted eps descending, so
  // the last one per gamma wins.
  std::map<double, const ProfileCurve*> chosen;
  for (const auto& c : sweep.profiles) chosen[c.gamma] = &c;

  std::vector<std::pair<double, double>> all;
  for (const auto& [gamma, curve] : chosen) {
    for (const auto& s : curve->odd) {
      if (s.r > 0.0 && s.mean > 0.0) {
        all.emplace_back(std::log10(s.r), std::log10(s.mean));
      }
    }
    for (const auto& s : curve->model) {
      const double v = curve->c1 * s.mean;
      if (s.r > 0.0 && v > 0.0) {
        all.emplace_back(std::log10(s.r), std::log10(v));
      }
    }
  }
  std::ostringstream out;
  svg_open(out, "odd gap profile against the fitted reduced curve",
           "log10 r", "log10 V");
  if (all.empty()) {
    out << "<text x=\"400\" y=\"300\" text-anchor=\"middle\" "
           "font-size=\"14\" font-family=\"sans-serif\">no profile data"
           "</text>\n</svg>\n";
    return out.str();
  }
  Canvas cv;
  cv.fit(all);
  svg_ticks(out, cv);
  std::size_t idx = 0;
  double legend_y = Canvas::kTop + 18.0;
  for (const auto& [gamma, curve] : chosen) {
    const char* color = series_color(idx);
    std::vector<std::pair<double, double>> v_pts, m_pts;
    for (const auto& s : curve->odd) {
      if (s.r > 0.0 && s.mean > 0.0) {
        v_pts.emplace_back(std::log10(s.r), std::log10(s.mean));
      }
    }
    for (const auto& s : curve->model) {
      const double v = curve->c1 * s.mean;
      if (s.r > 0.0 && v > 0.0) {
        m_pts.emplace_back(std::log10(s.r), std::log10(v));
      }
    }
    std::sort(v_pts.begin(), v_pts.end());
    std::sort(m_pts.begin(), m_pts.end());
    svg_polyline(out, cv, v_pts, color, nullptr);
    svg_polyline(out, cv, m_pts, color, "5 4");
    out << "<text x=\"" << Canvas::kRight - 8 << "\" y=\""
        << fmt_coord(legend_y) << "\" text-anchor=\"end\" font-size=\"12\" "
        << "font-family=\"sans-serif\" fill=\"" << color << "\">gamma = "
        << fmt_coord(gamma) << ", eps = " << fmt_coord(curve->eps)
        << ", C1 = " << fmt_coord(curve->c1) << ", residual "
        << fmt_coord(curve->residual) << "</text>\n";
    legend_y += 16.0;
    ++idx;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace

void emit_report(const SweepResult& sweep, const ReportBundle& bundle,
                 const std::string& directory) {
  namespace fs = std::filesystem;
  const fs::path dir(directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ValidationError("cannot create output directory " + directory +
                          ": " + ec.message());
  }
  write_text_file(dir / "sweep.csv", csv_text(sweep.records));
  write_text_file(dir / "summary.json", summary_text(sweep, bundle));
  write_text_file(dir / "blowup.svg", blowup_svg(sweep, bundle));
  write_text_file(dir / "profile.svg", profile_svg(sweep));
}

std::vector<SweepRecord> load_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("line 1: missing CSV header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSweepCsvHeader) {
    throw ValidationError("line 1: header does not match '" +
                          std::string(kSweepCsvHeader) + "'");
  }
  std::vector<SweepRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 14) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected 14 fields, got "
          << fields.size();
      throw ValidationError(msg.str());
    }
    const auto number = [&](int col) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[col], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != fields[col].size() || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "line " << line_no << ": field " << col + 1 << " ('"
            << fields[col] << "') is not a finite number";
        throw ValidationError(msg.str());
      }
      return v;
    };
    SweepRecord r;
    r.eps = number(0);
    r.gamma = number(1);
    r.alpha = number(2);
    r.grad_max_neck = number(3);
    r.grad_x = number(4);
    r.grad_y = number(5);
    r.u1 = number(6);
    r.u2 = number(7);
    r.flux1 = number(8);
    r.flux2 = number(9);
    r.energy = number(10);
    const double dofs = number(11);
    const double iters = number(12);
    if (dofs < 0.0 || dofs != std::floor(dofs) || iters < 0.0 ||
        iters != std::floor(iters)) {
      std::ostringstream msg;
      msg << "line " << line_no
          << ": dofs and iterations must be nonnegative integers";
      throw ValidationError(msg.str());
    }
    r.dofs = static_cast<std::size_t>(dofs);
    r.iterations = static_cast<int>(iters);
    r.runtime_ms = number(13);
    if (!(r.eps > 0.0) || !(r.gamma > 0.0)) {
      std::ostringstream msg;
      msg << "line " << line_no << ": eps and gamma must be positive";
      throw ValidationError(msg.str());
    }
    records.push_back(r);
  }
  return records;
}

}  // namespace neckfield::lab
