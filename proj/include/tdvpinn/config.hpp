#pragma once

// Run configuration shared by the command-line tool and the test programs:
// a flat key = value file, flag overrides, and a stable hash of the resolved values.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/network.hpp"
#include "tdvpinn/optimizer.hpp"
#include "tdvpinn/problems.hpp"
#include "tdvpinn/testspace.hpp"
#include "tdvpinn/training.hpp"

namespace tdvpinn {

inline constexpr const char* kVersion = "0.1.0";

/// Zero values (and a negative iteration count) mean "use the problem's default".
struct RunConfig {
  std::string problem = "toy";
  std::uint64_t seed = 0;
  std::uint64_t quadrature_seed = 1;
  int hidden_layers = 5;
  int hidden_width = 32;
  long iterations = -1;
  std::string schedule;
  double lr0 = 0.0;
  double decay_rate = 0.9;
  double decay_steps = 1000.0;
  int n_time = 0;
  int n_test = 0;
  int n_int = 0;
  std::string basis;
  bool fixed_quadrature = false;
  bool lagged_coefficients = false;
  std::string properties;      // CSV path; empty selects the synthetic placeholder
  std::string boundary;        // CSV path; empty selects the synthetic placeholder
  double length = 0.0;         // characteristic length d (m)
  double t_end = 0.0;          // dimensionless horizon for the freezing problem
  double boundary_tau = 0.0;   // synthetic boundary time constant in units of t0
  std::string boundary_shape;  // synthetic boundary: "smooth" (default) or "exponential"
  std::string out_dir = "out";
  long checkpoint_every = 1000;
  long residual_every = 0;
  std::vector<int> snapshot_steps;
  int oracle_cells = 0;
  int oracle_steps = 0;

  bool is_toy() const { return problem == "toy"; }
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "': expected a boolean, got '" + v + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof()) throw ConfigError("'" + key + "': bad number '" + v + "'");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& key, std::string v) {
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<int> out;
  for (const auto& cell : split_csv(v)) {
    if (!cell.empty()) out.push_back(parse_number<int>(key, cell));
  }
  return out;
}

inline std::string unquote(std::string v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

}  // namespace detail

/// Applies one key; keys use the long flag spelling with '-' or '_'.
inline void apply_setting(RunConfig& c, std::string key, const std::string& raw) {
  for (auto& ch : key) {
    if (ch == '-') ch = '_';
  }
  const std::string v = detail::unquote(detail::trim(raw));
  using detail::parse_number;
  if (key == "problem") c.problem = v;
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
  else if (key == "quadrature_seed") c.quadrature_seed = parse_number<std::uint64_t>(key, v);
  else if (key == "hidden_layers") c.hidden_layers = parse_number<int>(key, v);
  else if (key == "hidden_width") c.hidden_width = parse_number<int>(key, v);
  else if (key == "iterations") {
    c.iterations = static_cast<long>(parse_number<double>(key, v));
    if (c.iterations < 0) throw ConfigError("iterations must be non-negative");
  }
  else if (key == "schedule") c.schedule = v;
  else if (key == "lr" || key == "lr0") c.lr0 = parse_number<double>(key, v);
  else if (key == "decay_rate") c.decay_rate = parse_number<double>(key, v);
  else if (key == "decay_steps") c.decay_steps = parse_number<double>(key, v);
  else if (key == "n_time") c.n_time = parse_number<int>(key, v);
  else if (key == "n_test") c.n_test = parse_number<int>(key, v);
  else if (key == "n_int") c.n_int = parse_number<int>(key, v);
  else if (key == "basis") c.basis = v;
  else if (key == "fixed_quadrature") c.fixed_quadrature = detail::parse_bool(key, v);
  else if (key == "lagged_coefficients") c.lagged_coefficients = detail::parse_bool(key, v);
  else if (key == "properties") c.properties = v;
  else if (key == "boundary") c.boundary = v;
  else if (key == "length") c.length = parse_number<double>(key, v);
  else if (key == "t_end") c.t_end = parse_number<double>(key, v);
  else if (key == "boundary_tau") c.boundary_tau = parse_number<double>(key, v);
  else if (key == "boundary_shape") c.boundary_shape = v;
  else if (key == "out_dir") c.out_dir = v;
  else if (key == "checkpoint_every") c.checkpoint_every = parse_number<long>(key, v);
  else if (key == "residual_every") c.residual_every = parse_number<long>(key, v);
  else if (key == "snapshot_steps") c.snapshot_steps = detail::parse_int_list(key, v);
  else if (key == "oracle_cells") c.oracle_cells = parse_number<int>(key, v);
  else if (key == "oracle_steps") c.oracle_steps = parse_number<int>(key, v);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Reads `key = value` lines; '#' starts a comment, [section] headers are ignored.
inline void load_config_file(const std::string& path, RunConfig& c) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    apply_setting(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

/// Directory for relative data paths: TDVPINN_DATA_DIR when set.
inline std::string resolve_data_path(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* dir = std::getenv("TDVPINN_DATA_DIR");
  if (!dir || !*dir) return path;
  std::ifstream probe(path);
  if (probe) return path;
  return std::string(dir) + "/" + path;
}

/// Fills every zero/empty field with the problem's default.
inline RunConfig resolve_defaults(RunConfig c) {
  if (c.problem != "toy" && c.problem != "coffee") throw ConfigError("problem must be 'toy' or 'coffee'");
  const bool toy = c.is_toy();
  const CoffeeSettings coffee;
  if (c.iterations < 0) c.iterations = toy ? 20000 : 100000;
  if (c.schedule.empty()) c.schedule = toy ? "exponential" : "cosine";
  if (c.lr0 == 0.0) c.lr0 = toy ? 1e-2 : 1e-3;
  if (c.n_time == 0) c.n_time = 128;
  if (c.n_test == 0) c.n_test = toy ? 20 : coffee.n_test;
  if (c.n_int == 0) c.n_int = toy ? 128 : coffee.n_int;
  if (c.basis.empty()) c.basis = toy ? "h10" : to_string(coffee.basis);
  if (c.length == 0.0) c.length = coffee.d;
  if (c.t_end == 0.0) c.t_end = toy ? 1.0 : coffee.t_end;
  if (c.boundary_tau == 0.0) c.boundary_tau = coffee.boundary_tau;
  if (c.boundary_shape.empty()) c.boundary_shape = "smooth";
  if (c.snapshot_steps.empty()) c.snapshot_steps = {1, c.n_time / 4, c.n_time / 2, c.n_time};
  if (c.oracle_cells == 0) c.oracle_cells = toy ? 512 : 256;
  if (c.oracle_steps == 0) c.oracle_steps = toy ? 512 : c.n_time;
  if (c.iterations < 0 || c.hidden_layers < 1 || c.hidden_width < 1 || c.n_time < 1 || c.n_test < 1 || c.n_int < 2) {
    throw ConfigError("counts must be positive");
  }
  if (c.checkpoint_every < 0 || c.residual_every < 0) throw ConfigError("cadences must be non-negative");
  for (int s : c.snapshot_steps) {
    if (s < 1 || s > c.n_time) throw ConfigError("snapshot step " + std::to_string(s) + " outside 1..N_time");
  }
  basis_kind_from_string(c.basis);
  boundary_shape_from_string(c.boundary_shape);
  schedule_kind_from_string(c.schedule);
  return c;
}

/// Canonical text of a resolved configuration; output paths and cadences are excluded
/// so that they do not change the hash of otherwise identical runs.
inline std::string canonical(const RunConfig& c) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << "problem=" << c.problem << "\nseed=" << c.seed << "\nquadrature_seed=" << c.quadrature_seed
    << "\nhidden_layers=" << c.hidden_layers << "\nhidden_width=" << c.hidden_width << "\niterations=" << c.iterations
    << "\nschedule=" << c.schedule << "\nlr0=" << c.lr0 << "\ndecay_rate=" << c.decay_rate
    << "\ndecay_steps=" << c.decay_steps << "\nn_time=" << c.n_time << "\nn_test=" << c.n_test << "\nn_int=" << c.n_int
    << "\nbasis=" << c.basis << "\nfixed_quadrature=" << c.fixed_quadrature
    << "\nlagged_coefficients=" << c.lagged_coefficients;
  if (!c.is_toy()) {
    o << "\nproperties=" << c.properties << "\nboundary=" << c.boundary << "\nlength=" << c.length
      << "\nt_end=" << c.t_end << "\nboundary_tau=" << c.boundary_tau
      << "\nboundary_shape=" << c.boundary_shape;
  }
  o << '\n';
  return o.str();
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical(c));
  return o.str();
}

/// First line of every output file.
inline std::string header_comment(const RunConfig& c) {
  return std::string("# tdvpinn ") + kVersion + " config=" + config_hash(c);
}

inline ProblemSpec build_problem(const RunConfig& c) {
  if (c.is_toy()) {
    ProblemSpec p = make_toy_problem(c.n_time, c.n_test, c.n_int);
    p.basis = basis_kind_from_string(c.basis);
    return p;
  }
  CoffeeSettings s;
  s.d = c.length;
  s.t_end = c.t_end;
  s.boundary_tau = c.boundary_tau;
  s.n_time = c.n_time;
  s.n_test = c.n_test;
  s.n_int = c.n_int;
  s.basis = basis_kind_from_string(c.basis);
  const PropertyTable table =
      c.properties.empty() ? synthetic_property_table() : load_property_table(resolve_data_path(c.properties));
  if (!table.covers(-30.0, 25.0)) throw IngestionError("property table must cover [-30, 25] C");
  const auto scaling = Nondimensionalization::from_table(table, s.T_initial, s.d);
  const BoundarySeries series =
      c.boundary.empty()
          ? synthetic_boundary_series(scaling.to_seconds(s.t_end), scaling.to_seconds(s.boundary_tau), s.T_initial,
                                      -25.0, boundary_shape_from_string(c.boundary_shape))
          : load_boundary_series(resolve_data_path(c.boundary));
  return make_coffee_problem(table, series, s);
}

inline TrainOptions train_options(const RunConfig& c) {
  TrainOptions o;
  o.init_seed = c.seed;
  o.quadrature_seed = c.quadrature_seed;
  o.widths = standard_widths(c.n_time, c.hidden_layers, c.hidden_width);
  o.iterations = c.iterations;
  o.schedule.kind = schedule_kind_from_string(c.schedule);
  o.schedule.lr0 = c.lr0;
  o.schedule.rate = c.decay_rate;
  o.schedule.decay_steps = c.decay_steps;
  o.schedule.total_steps = static_cast<double>(std::max(c.iterations, 1L));
  o.fixed_quadrature = c.fixed_quadrature;
  o.lagged_coefficients = c.lagged_coefficients;
  o.checkpoint_every = c.checkpoint_every;
  return o;
}

}  // namespace tdvpinn
