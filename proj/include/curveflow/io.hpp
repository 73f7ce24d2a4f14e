#pragma once

// Configuration documents, CSV persistence and SVG rendering.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "curveflow/analysis.hpp"
#include "curveflow/curve_geometry.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/flow_solver.hpp"

namespace curveflow {

enum class Mode { simulate, table, homotopy, verify, analyze };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::simulate: return "simulate";
    case Mode::table: return "table";
    case Mode::homotopy: return "homotopy";
    case Mode::verify: return "verify";
    case Mode::analyze: return "analyze";
  }
  return "unknown";
}

inline std::optional<Mode> mode_from_string(const std::string& s) {
  for (Mode m : {Mode::simulate, Mode::table, Mode::homotopy, Mode::verify, Mode::analyze}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

/// A curve given either analytically or as a sampled rho file.
struct CurveSource {
  int winding = 1;
  std::optional<TrigSupportSpec> support;
  std::string rho_file;

  bool operator==(const CurveSource&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::string metrics = "metrics.csv";
  bool svg = true;
  int svg_size = 400;
  std::string svg_stroke = "#1f3f8f";
  double svg_stroke_width = 1.5;

  bool operator==(const OutputConfig&) const = default;
};

/// One row of a geometric-quantity table. t may be +inf (the limit row).
struct TableRow {
  double t = 0.0;
  double length_ratio = 0.0;  ///< L / (2 pi m)
  double rho_min = 0.0;
  double rho_max = 0.0;
  double energy = 0.0;

  bool operator==(const TableRow&) const = default;
};

struct TableConfig {
  std::vector<double> times;  ///< empty: use solver.snapshot_times
  double tolerance = 0.005;
  std::vector<TableRow> reference;

  bool operator==(const TableConfig&) const = default;
};

struct SimulationConfig {
  Mode mode = Mode::simulate;
  int n = 512;
  CurveSource initial;
  CurveSource target;
  SolverConfig solver;
  OutputConfig outputs;
  TableConfig table;
  std::string base_dir;  ///< resolves relative rho_file paths; not serialized

  bool operator==(const SimulationConfig& o) const {
    return mode == o.mode && n == o.n && initial == o.initial && target == o.target &&
           solver == o.solver && outputs == o.outputs && table == o.table;
  }
};

// --- CSV ---------------------------------------------------------------------

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  return out;
}

/// Reads named numeric columns from a CSV file with a header row.
inline std::vector<std::vector<double>> read_csv_columns(const std::filesystem::path& path,
                                                         const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  std::vector<std::size_t> index;
  for (const auto& name : names) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError(path.string() + ": missing column '" + name + "'");
    index.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::vector<double>> columns(names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (index[c] >= cells.size()) {
        throw ValidationError(path.string() + ": row " + std::to_string(row) + " is short");
      }
      try {
        columns[c].push_back(std::stod(cells[index[c]]));
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ": row " + std::to_string(row) + ": bad number '" +
                              cells[index[c]] + "'");
      }
    }
  }
  return columns;
}

/// Snapshot CSV: theta,rho,p,x,y at full precision. p is gauged against the
/// reference support and (x, y) = p' T - p N.
inline void write_snapshot_csv(const std::filesystem::path& path, const RadiusProfile& rho,
                               const std::optional<SupportProfile>& reference,
                               double closure_tolerance = kDefaultClosureTolerance) {
  const auto p = support_from_radius(rho, reference, closure_tolerance);
  const auto curve = curve_from_support(p);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "theta,rho,p,x,y\n";
  const auto& g = rho.grid();
  for (std::size_t j = 0; j < g.size(); ++j) {
    out << format_number(g.node(j)) << ',' << format_number(rho[j]) << ',' << format_number(p[j])
        << ',' << format_number(curve[j].x) << ',' << format_number(curve[j].y) << '\n';
  }
}

inline RadiusProfile read_radius_csv(const std::filesystem::path& path,
                                     const TangentAngleGrid& grid) {
  auto cols = read_csv_columns(path, {"rho"});
  if (cols[0].size() != grid.size()) {
    throw ValidationError(path.string() + ": expected " + std::to_string(grid.n()) +
                          " rho samples, found " + std::to_string(cols[0].size()));
  }
  return RadiusProfile(grid, std::move(cols[0]));
}

inline constexpr const char* kMetricsHeader =
    "t,f,energy,length,rho_min,rho_max,harnack_ratio,closure_defect,sup_u,sup_u_theta";

inline void write_metrics_csv(const std::filesystem::path& path,
                              std::span<const StepDiagnostics> diagnostics) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& d : diagnostics) {
    out << format_number(d.t) << ',' << format_number(d.f_value) << ',' << format_number(d.energy)
        << ',' << format_number(d.length) << ',' << format_number(d.rho_min) << ','
        << format_number(d.rho_max) << ',' << format_number(d.harnack_ratio) << ','
        << format_number(d.closure_defect) << ',' << format_number(d.sup_u) << ','
        << format_number(d.sup_u_theta) << '\n';
  }
}

// --- convergence report --------------------------------------------------------

inline std::string report_key_values(const ConvergenceReport& r) {
  std::ostringstream out;
  out << "c0_predicted = " << format_number(r.c0_predicted) << '\n'
      << "c0_observed = " << format_number(r.c0_observed) << '\n'
      << "sup_distance_to_limit = " << format_number(r.sup_distance_to_limit) << '\n'
      << "decay_slope_fit = " << format_number(r.decay_slope_fit) << '\n'
      << "decay_fit_truncated = " << (r.decay_fit_truncated ? "true" : "false") << '\n'
      << "f_terminal = " << format_number(r.f_terminal) << '\n'
      << "energy_drift = " << format_number(r.energy_drift) << '\n'
      << "harnack_bound = " << format_number(r.harnack_bound) << '\n'
      << "bounds_violations = " << r.bounds_violations.size() << '\n';
  for (const auto& v : r.bounds_violations) {
    out << "violation = " << v.bound << " t=" << format_number(v.t)
        << " margin=" << format_number(v.margin) << '\n';
  }
  return out.str();
}

inline std::string report_csv(const ConvergenceReport& r) {
  std::ostringstream out;
  out << "c0_predicted,c0_observed,sup_distance_to_limit,decay_slope_fit,f_terminal,"
         "energy_drift,harnack_bound,bounds_violations\n"
      << format_number(r.c0_predicted) << ',' << format_number(r.c0_observed) << ','
      << format_number(r.sup_distance_to_limit) << ',' << format_number(r.decay_slope_fit) << ','
      << format_number(r.f_terminal) << ',' << format_number(r.energy_drift) << ','
      << format_number(r.harnack_bound) << ',' << r.bounds_violations.size() << '\n';
  return out.str();
}

// --- SVG ---------------------------------------------------------------------

struct SvgStyle {
  int width = 400;
  int height = 400;
  std::string stroke = "#1f3f8f";
  double stroke_width = 1.5;
  std::string background = "#ffffff";
  std::string title;
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Closed path through the curve points, scaled uniformly to fill 95% of the
/// canvas and centred. The y axis points up.
inline std::string render_svg(std::span<const Point2> points, const SvgStyle& style = {}) {
  if (points.empty()) throw ValidationError("render_svg: empty curve");
  double xmin = points[0].x, xmax = points[0].x, ymin = points[0].y, ymax = points[0].y;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double w = style.width, h = style.height;
  const double inf = std::numeric_limits<double>::infinity();
  const double sx = xmax > xmin ? w / (xmax - xmin) : inf;
  const double sy = ymax > ymin ? h / (ymax - ymin) : inf;
  const double scale = std::isinf(std::min(sx, sy)) ? 1.0 : 0.95 * std::min(sx, sy);
  const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);

  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\""
      << style.height << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
  if (!style.title.empty()) out << "  <title>" << xml_escape(style.title) << "</title>\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"" << xml_escape(style.background)
      << "\"/>\n";
  out << "  <path fill=\"none\" stroke=\"" << xml_escape(style.stroke) << "\" stroke-width=\""
      << style.stroke_width << "\" stroke-linejoin=\"round\" d=\"";
  for (std::size_t j = 0; j < points.size(); ++j) {
    const double x = 0.5 * w + scale * (points[j].x - cx);
    const double y = 0.5 * h - scale * (points[j].y - cy);
    out << (j == 0 ? "M" : " L") << x << ' ' << y;
  }
  out << " Z\"/>\n</svg>\n";
  return out.str();
}

inline std::string render_svg(const PlaneCurve& curve, const SvgStyle& style = {}) {
  return render_svg(curve.points(), style);
}

// --- configuration -------------------------------------------------------------

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  throw ValidationError("config: " + path + ": " + what);
}

inline const json* find(const json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double get_number(const json& v, const std::string& path) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  }
  if (!v.is_number()) config_error(path, "expected a number");
  return v.get<double>();
}

inline int get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) config_error(path, "expected an integer");
  return v.get<int>();
}

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) config_error(path + "." + it.key(), "unknown key");
  }
}

inline std::vector<double> get_number_list(const json& v, const std::string& path) {
  if (!v.is_array()) config_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline CurveSource parse_curve(const json& v, const std::string& path) {
  check_keys(v, path, {"winding", "support", "rho_file"});
  CurveSource c;
  const json* w = find(v, "winding");
  if (!w) config_error(path + ".winding", "required");
  c.winding = get_int(*w, path + ".winding");
  if (c.winding < 1) config_error(path + ".winding", "must be >= 1");
  const json* s = find(v, "support");
  const json* f = find(v, "rho_file");
  if ((s == nullptr) == (f == nullptr)) {
    config_error(path, "exactly one of 'support' or 'rho_file' is required");
  }
  if (f) {
    if (!f->is_string()) config_error(path + ".rho_file", "expected a string");
    c.rho_file = f->get<std::string>();
    return c;
  }
  const std::string sp = path + ".support";
  check_keys(*s, sp, {"constant", "harmonics"});
  TrigSupportSpec spec;
  const json* k = find(*s, "constant");
  if (!k) config_error(sp + ".constant", "required");
  spec.constant = get_number(*k, sp + ".constant");
  if (const json* hs = find(*s, "harmonics")) {
    if (!hs->is_array()) config_error(sp + ".harmonics", "expected an array");
    for (std::size_t i = 0; i < hs->size(); ++i) {
      const std::string hp = sp + ".harmonics[" + std::to_string(i) + "]";
      const json& h = (*hs)[i];
      check_keys(h, hp, {"k", "a", "b"});
      TrigHarmonic th;
      const json* hk = find(h, "k");
      if (!hk) config_error(hp + ".k", "required");
      th.k = get_int(*hk, hp + ".k");
      if (th.k < 1) config_error(hp + ".k", "must be >= 1");
      if (const json* a = find(h, "a")) th.a = get_number(*a, hp + ".a");
      if (const json* b = find(h, "b")) th.b = get_number(*b, hp + ".b");
      spec.harmonics.push_back(th);
    }
  }
  c.support = spec;
  return c;
}

inline json curve_to_json(const CurveSource& c) {
  json out;
  out["winding"] = c.winding;
  if (c.support) {
    json hs = json::array();
    for (const auto& h : c.support->harmonics) hs.push_back({{"k", h.k}, {"a", h.a}, {"b", h.b}});
    out["support"] = {{"constant", c.support->constant}, {"harmonics", hs}};
  } else {
    out["rho_file"] = c.rho_file;
  }
  return out;
}

inline json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return v;
}

}  // namespace detail

/// Resolves a curve source to sampled profiles on the shared grid.
struct ResolvedCurve {
  RadiusProfile rho;
  std::optional<SupportProfile> support;
};

inline ResolvedCurve resolve_curve(const CurveSource& c, int n, const std::string& base_dir,
                                   const char* which) {
  try {
    TangentAngleGrid grid(c.winding, n);
    if (c.support) {
      auto p = eval_trig_support(*c.support, grid);
      auto rho = radius_from_support(p);
      return {std::move(rho), std::move(p)};
    }
    std::filesystem::path path(c.rho_file);
    if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
    return {read_radius_csv(path, grid), std::nullopt};
  } catch (const NotLocallyConvexError& e) {
    throw NotLocallyConvexError(std::string("config: ") + which + ": " + e.what(),
                                e.min_radius());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config: ") + which + ": " + e.what());
  }
}

/// Checks everything that does not require running the flow: schema-level
/// ranges, matching windings, convexity and resolution of both curves.
inline void validate_config(const SimulationConfig& c) {
  if (c.n < 16 || c.n % 2 != 0) detail::config_error("grid.n", "must be even and >= 16");
  if (c.initial.winding != c.target.winding) {
    throw ValidationError("config: initial_curve.winding (" + std::to_string(c.initial.winding) +
                          ") and target_curve.winding (" + std::to_string(c.target.winding) +
                          ") differ; both curves must have the same winding number");
  }
  (void)resolve_curve(c.initial, c.n, c.base_dir, "initial_curve");
  (void)resolve_curve(c.target, c.n, c.base_dir, "target_curve");
  try {
    c.solver.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.mode == Mode::simulate && c.solver.snapshot_times.empty()) {
    detail::config_error("solver.snapshot_times", "must be nonempty in simulate mode");
  }
  if (c.outputs.dir.empty()) detail::config_error("outputs.dir", "must be nonempty");
  if (c.outputs.svg_size < 16) detail::config_error("outputs.svg_size", "must be >= 16");
  if (!(c.table.tolerance > 0.0)) detail::config_error("table.tolerance", "must be positive");
  for (double t : c.table.times) {
    if (!(t >= 0.0) || t > c.solver.t_end) detail::config_error("table.times", "must lie in [0, t_end]");
  }
}

inline SimulationConfig parse_config(const std::string& text, const std::string& base_dir = "") {
  using detail::config_error;
  using detail::find;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config: not valid JSON: ") + e.what());
  }
  detail::check_keys(doc, "<root>",
                     {"mode", "grid", "initial_curve", "target_curve", "solver", "outputs", "table",
                      "debug"});
  SimulationConfig c;
  c.base_dir = base_dir;

  if (const auto* m = find(doc, "mode")) {
    if (!m->is_string()) config_error("mode", "expected a string");
    auto mode = mode_from_string(m->get<std::string>());
    if (!mode) config_error("mode", "unknown mode '" + m->get<std::string>() + "'");
    c.mode = *mode;
  }
  if (const auto* g = find(doc, "grid")) {
    detail::check_keys(*g, "grid", {"n"});
    if (const auto* n = find(*g, "n")) c.n = detail::get_int(*n, "grid.n");
  }
  const auto* ic = find(doc, "initial_curve");
  if (!ic) config_error("initial_curve", "required");
  c.initial = detail::parse_curve(*ic, "initial_curve");
  const auto* tc = find(doc, "target_curve");
  if (!tc) config_error("target_curve", "required");
  c.target = detail::parse_curve(*tc, "target_curve");

  if (const auto* s = find(doc, "solver")) {
    detail::check_keys(*s, "solver",
                       {"dt", "t_end", "scheme", "snapshot_times", "energy_drift_abort",
                        "positivity_floor", "closure_tolerance"});
    auto& sc = c.solver;
    if (const auto* v = find(*s, "dt")) sc.dt = detail::get_number(*v, "solver.dt");
    if (const auto* v = find(*s, "t_end")) sc.t_end = detail::get_number(*v, "solver.t_end");
    if (const auto* v = find(*s, "scheme")) {
      if (!v->is_string()) config_error("solver.scheme", "expected a string");
      auto scheme = scheme_from_string(v->get<std::string>());
      if (!scheme) config_error("solver.scheme", "unknown scheme '" + v->get<std::string>() + "'");
      sc.scheme = *scheme;
    }
    if (const auto* v = find(*s, "snapshot_times")) {
      sc.snapshot_times = detail::get_number_list(*v, "solver.snapshot_times");
    }
    if (const auto* v = find(*s, "energy_drift_abort")) {
      sc.energy_drift_abort = detail::get_number(*v, "solver.energy_drift_abort");
    }
    if (const auto* v = find(*s, "positivity_floor")) {
      sc.positivity_floor = detail::get_number(*v, "solver.positivity_floor");
    }
    if (const auto* v = find(*s, "closure_tolerance")) {
      sc.closure_tolerance = detail::get_number(*v, "solver.closure_tolerance");
    }
  }
  if (const auto* o = find(doc, "outputs")) {
    detail::check_keys(*o, "outputs",
                       {"dir", "metrics", "svg", "svg_size", "svg_stroke", "svg_stroke_width"});
    auto& oc = c.outputs;
    auto get_string = [&](const char* key, std::string& dst) {
      if (const auto* v = find(*o, key)) {
        if (!v->is_string()) config_error(std::string("outputs.") + key, "expected a string");
        dst = v->get<std::string>();
      }
    };
    get_string("dir", oc.dir);
    get_string("metrics", oc.metrics);
    get_string("svg_stroke", oc.svg_stroke);
    if (const auto* v = find(*o, "svg")) {
      if (!v->is_boolean()) config_error("outputs.svg", "expected true or false");
      oc.svg = v->get<bool>();
    }
    if (const auto* v = find(*o, "svg_size")) oc.svg_size = detail::get_int(*v, "outputs.svg_size");
    if (const auto* v = find(*o, "svg_stroke_width")) {
      oc.svg_stroke_width = detail::get_number(*v, "outputs.svg_stroke_width");
    }
  }
  if (const auto* t = find(doc, "table")) {
    detail::check_keys(*t, "table", {"times", "tolerance", "reference"});
    if (const auto* v = find(*t, "times")) c.table.times = detail::get_number_list(*v, "table.times");
    if (const auto* v = find(*t, "tolerance")) {
      c.table.tolerance = detail::get_number(*v, "table.tolerance");
    }
    if (const auto* v = find(*t, "reference")) {
      if (!v->is_array()) config_error("table.reference", "expected an array");
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string rp = "table.reference[" + std::to_string(i) + "]";
        const auto& r = (*v)[i];
        detail::check_keys(r, rp, {"t", "length_ratio", "rho_min", "rho_max", "energy"});
        TableRow row;
        auto field = [&](const char* key) {
          const auto* x = find(r, key);
          if (!x) config_error(rp + "." + key, "required");
          return detail::get_number(*x, rp + "." + key);
        };
        row.t = field("t");
        row.length_ratio = field("length_ratio");
        row.rho_min = field("rho_min");
        row.rho_max = field("rho_max");
        row.energy = field("energy");
        c.table.reference.push_back(row);
      }
    }
  }
  if (const auto* d = find(doc, "debug")) {
    detail::check_keys(*d, "debug", {"flip_nonlocal_sign"});
    if (const auto* v = find(*d, "flip_nonlocal_sign")) {
      if (!v->is_boolean()) config_error("debug.flip_nonlocal_sign", "expected true or false");
      c.solver.flip_nonlocal_sign = v->get<bool>();
    }
  }
  validate_config(c);
  return c;
}

inline SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path().string());
}

inline std::string serialize_config(const SimulationConfig& c) {
  using nlohmann::json;
  json doc;
  doc["mode"] = to_string(c.mode);
  doc["grid"] = {{"n", c.n}};
  doc["initial_curve"] = detail::curve_to_json(c.initial);
  doc["target_curve"] = detail::curve_to_json(c.target);
  doc["solver"] = {{"dt", c.solver.dt},
                   {"t_end", c.solver.t_end},
                   {"scheme", to_string(c.solver.scheme)},
                   {"snapshot_times", c.solver.snapshot_times},
                   {"energy_drift_abort", c.solver.energy_drift_abort},
                   {"positivity_floor", c.solver.positivity_floor},
                   {"closure_tolerance", c.solver.closure_tolerance}};
  doc["outputs"] = {{"dir", c.outputs.dir},
                    {"metrics", c.outputs.metrics},
                    {"svg", c.outputs.svg},
                    {"svg_size", c.outputs.svg_size},
                    {"svg_stroke", c.outputs.svg_stroke},
                    {"svg_stroke_width", c.outputs.svg_stroke_width}};
  json ref = json::array();
  for (const auto& r : c.table.reference) {
    ref.push_back({{"t", detail::number_to_json(r.t)},
                   {"length_ratio", r.length_ratio},
                   {"rho_min", r.rho_min},
                   {"rho_max", r.rho_max},
                   {"energy", r.energy}});
  }
  doc["table"] = {{"times", c.table.times}, {"tolerance", c.table.tolerance}, {"reference", ref}};
  doc["debug"] = {{"flip_nonlocal_sign", c.solver.flip_nonlocal_sign}};
  return doc.dump(2) + "\n";
}

/// Command-line overrides; t_end drops snapshot and table times beyond it.
struct ConfigOverrides {
  std::optional<std::string> out_dir;
  std::optional<double> tolerance;
  std::optional<double> dt;
  std::optional<int> n;
  std::optional<double> t_end;
};

inline void apply_overrides(SimulationConfig& c, const ConfigOverrides& o) {
  if (o.out_dir) c.outputs.dir = *o.out_dir;
  if (o.tolerance) c.table.tolerance = *o.tolerance;
  if (o.dt) c.solver.dt = *o.dt;
  if (o.n) c.n = *o.n;
  if (o.t_end) {
    c.solver.t_end = *o.t_end;
    auto beyond = [&](double t) { return t > *o.t_end; };
    std::erase_if(c.solver.snapshot_times, beyond);
    std::erase_if(c.table.times, beyond);
  }
  validate_config(c);
}

}  // namespace curveflow
