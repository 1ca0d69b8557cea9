#pragma once

#include <algorithm>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fsd/core/angle.hpp"
#include "fsd/harness/run_log.hpp"
#include "fsd/io/csv.hpp"

namespace fsd::harness {

struct PlotFiles {
  std::filesystem::path trajectory_csv;
  std::filesystem::path map_csv;
  std::filesystem::path nees_csv;
  std::filesystem::path rejections_csv;
  std::filesystem::path trajectory_svg;
};

// Axis-aligned box in SVG coordinates (world y negated so north points up).
struct SvgBox {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, -y);
    max_y = std::max(max_y, -y);
  }
  bool empty() const { return !(min_x <= max_x); }
};

namespace detail {

inline std::vector<Vec2> cones_of(const Json& data) {
  std::vector<Vec2> out;
  for (const auto& c : data.at("cones")) out.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
  return out;
}

inline std::string svg_polyline(const std::vector<Vec2>& pts, const char* stroke, double width) {
  std::string s = "<polyline fill=\"none\" stroke=\"";
  s += stroke;
  s += "\" stroke-width=\"" + io::format_double(width) + "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += io::format_double(pts[i].x()) + ',' + io::format_double(-pts[i].y());
  }
  return s + "\"/>\n";
}

inline std::string svg_dots(const std::vector<Vec2>& pts, const char* fill, double radius) {
  std::string s;
  for (const Vec2& p : pts) {
    s += "<circle cx=\"" + io::format_double(p.x()) + "\" cy=\"" + io::format_double(-p.y()) + "\" r=\"" +
         io::format_double(radius) + "\" fill=\"" + fill + "\"/>\n";
  }
  return s;
}

}  // namespace detail

// Writes plot-ready CSVs and an SVG of trajectory and map into out_dir.
inline PlotFiles emit_plots(const RunLog& log, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw std::runtime_error("cannot write " + out_dir.string());
  }
  PlotFiles files{out_dir / "trajectory.csv", out_dir / "map.csv", out_dir / "nees.csv", out_dir / "rejections.csv",
                  out_dir / "trajectory.svg"};

  std::map<double, Json> truth;
  std::vector<Vec2> true_cones, map_cones;
  for (const LogEvent& e : log.events()) {
    if (e.ch == "truth") truth[e.t] = e.data.at("x");
    else if (e.ch == "track") true_cones = detail::cones_of(e.data);
    else if (e.ch == "map") map_cones = detail::cones_of(e.data);
  }

  auto traj = io::open_output(files.trajectory_csv.string());
  auto nees = io::open_output(files.nees_csv.string());
  auto rej = io::open_output(files.rejections_csv.string());
  traj << "t,x,y,psi,true_x,true_y,true_psi,phase\n";
  nees << "t,nees\n";
  rej << "t,sensor,d2,accepted,status\n";

  std::vector<Vec2> est_path, true_path;
  std::map<std::string, std::string> status;
  for (const LogEvent& e : log.events()) {
    if (e.ch == "estimate") {
      const ekf::StateVec x = state_from_json(e.data.at("x"));
      est_path.emplace_back(x[ekf::kPx], x[ekf::kPy]);
      traj << io::format_double(e.t) << ',' << io::format_double(x[ekf::kPx]) << ',' << io::format_double(x[ekf::kPy])
           << ',' << io::format_double(x[ekf::kPsi]) << ',';
      const auto it = truth.find(e.t);
      if (it != truth.end()) {
        const ekf::StateVec xt = state_from_json(it->second);
        true_path.emplace_back(xt[ekf::kPx], xt[ekf::kPy]);
        traj << io::format_double(xt[ekf::kPx]) << ',' << io::format_double(xt[ekf::kPy]) << ','
             << io::format_double(xt[ekf::kPsi]);
        if (e.data.contains("P")) {
          ekf::StateVec err = x - xt;
          err[ekf::kPsi] = wrap_angle(err[ekf::kPsi]);
          Eigen::LDLT<Cov6> ldlt(cov6_from_json(e.data.at("P")));
          if (ldlt.info() == Eigen::Success) {
            nees << io::format_double(e.t) << ',' << io::format_double(err.dot(ldlt.solve(err))) << '\n';
          }
        }
      } else {
        traj << ",,";
      }
      traj << ',' << e.data.value("phase", std::string()) << '\n';
    } else if (e.ch == "health") {
      status[e.data.at("sensor").get<std::string>()] = e.data.at("status").get<std::string>();
    } else if (e.ch == "meas") {
      const auto sensor = e.data.at("sensor").get<std::string>();
      const auto it = status.find(sensor);
      rej << io::format_double(e.t) << ',' << sensor << ',' << io::format_double(e.data.at("d2").get<double>()) << ','
          << (e.data.at("accepted").get<bool>() ? 1 : 0) << ',' << (it == status.end() ? "healthy" : it->second)
          << '\n';
    }
  }

  auto map = io::open_output(files.map_csv.string());
  map << "kind,x,y\n";
  for (const Vec2& c : true_cones) map << "true," << io::format_double(c.x()) << ',' << io::format_double(c.y()) << '\n';
  for (const Vec2& c : map_cones) map << "map," << io::format_double(c.x()) << ',' << io::format_double(c.y()) << '\n';

  SvgBox box;
  for (const auto* set : {&true_cones, &map_cones, &est_path, &true_path}) {
    for (const Vec2& p : *set) box.add(p.x(), p.y());
  }
  auto svg = io::open_output(files.trajectory_svg.string());
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (box.empty()) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1 1\"></svg>\n";
  } else {
    const double margin = 2.0;
    const double w = box.max_x - box.min_x + 2 * margin;
    const double h = box.max_y - box.min_y + 2 * margin;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << io::format_double(box.min_x - margin) << ' '
        << io::format_double(box.min_y - margin) << ' ' << io::format_double(w) << ' ' << io::format_double(h)
        << "\">\n";
    svg << detail::svg_dots(true_cones, "orange", 0.3);
    svg << detail::svg_dots(map_cones, "blue", 0.15);
    svg << detail::svg_polyline(true_path, "black", 0.1);
    svg << detail::svg_polyline(est_path, "red", 0.1);
    svg << "</svg>\n";
  }
  for (auto* os : {&traj, &nees, &rej, &map, &svg}) {
    os->flush();
    if (!*os) throw std::runtime_error("cannot write " + out_dir.string());
  }
  return files;
}

}  // namespace fsd::harness
