#pragma once

// Problem definitions: the linear benchmark with a closed-form solution and the
// nondimensionalized freezing problem driven by property tables and boundary data.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/network.hpp"
#include "tdvpinn/testspace.hpp"

namespace tdvpinn {

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Outside the knot range the end values are held constant.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw ValidationError("monotone cubic needs >= 2 matching knots");
    for (std::size_t i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) throw ValidationError("monotone cubic knots must increase strictly");
    }
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    slope_.assign(n, 0.0);
    if (n == 2) {
      slope_[0] = slope_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) continue;
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      slope_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    slope_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slope_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  double operator()(double t) const { return eval(t).first; }
  double derivative(double t) const { return eval(t).second; }

  std::pair<double, double> eval(double t) const {
    if (t <= x_.front()) return {y_.front(), 0.0};
    if (t >= x_.back()) return {y_.back(), 0.0};
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const auto i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double value = h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    const double deriv = (d00 * y_[i] + d01 * y_[i + 1]) / h + d10 * slope_[i] + d11 * slope_[i + 1];
    return {value, deriv};
  }

  const std::vector<double>& knots() const noexcept { return x_; }
  const std::vector<double>& values() const noexcept { return y_; }

 private:
  // three-point end formula, limited so the end interval stays monotone
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3.0 * d0)) d = 3.0 * d0;
    return d;
  }

  std::vector<double> x_, y_, slope_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

/// Numeric CSV with a required header; '#' lines and blank lines are skipped.
inline std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                         const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  std::string line;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cells = split_csv(t);
    if (!have_header) {
      if (cells != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw IngestionError("'" + path + "': expected header '" + want + "'");
      }
      have_header = true;
      continue;
    }
    if (cells.size() != header.size()) {
      throw IngestionError("'" + path + "' line " + std::to_string(line_no) + ": wrong column count");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw IngestionError("'" + path + "' line " + std::to_string(line_no) + ": bad number '" + c + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (!have_header) throw IngestionError("'" + path + "': missing header");
  return rows;
}

inline double logistic(double t, double lo, double hi, double center, double width) {
  return lo + (hi - lo) / (1.0 + std::exp(-(t - center) / width));
}

}  // namespace detail

/// Thermophysical properties against temperature in degrees Celsius.
struct PropertyTable {
  std::vector<double> T, rho, cp, k;
  MonotoneCubic rho_of, cp_of, k_of;
  std::string label;

  static PropertyTable from_columns(std::vector<double> T, std::vector<double> rho, std::vector<double> cp,
                                    std::vector<double> k, std::string label) {
    const std::size_t n = T.size();
    if (n < 4) throw ValidationError("property table needs at least 4 rows");
    if (rho.size() != n || cp.size() != n || k.size() != n) {
      throw ValidationError("property table columns differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && !(T[i] > T[i - 1])) {
        throw ValidationError("property table temperatures must be strictly increasing (row " +
                              std::to_string(i + 1) + ")");
      }
      if (!(rho[i] > 0.0 && cp[i] > 0.0 && k[i] > 0.0)) {
        throw ValidationError("property table has a non-positive value at T = " + std::to_string(T[i]));
      }
    }
    PropertyTable table;
    table.rho_of = MonotoneCubic(T, rho);
    table.cp_of = MonotoneCubic(T, cp);
    table.k_of = MonotoneCubic(T, k);
    table.T = std::move(T);
    table.rho = std::move(rho);
    table.cp = std::move(cp);
    table.k = std::move(k);
    table.label = std::move(label);
    return table;
  }

  bool covers(double lo, double hi) const { return T.front() <= lo && T.back() >= hi; }
};

inline PropertyTable load_property_table(const std::string& path) {
  const auto rows = detail::read_numeric_csv(path, {"T", "rho", "cp", "k"});
  std::vector<double> T, rho, cp, k;
  for (const auto& r : rows) {
    T.push_back(r[0]);
    rho.push_back(r[1]);
    cp.push_back(r[2]);
    k.push_back(r[3]);
  }
  return PropertyTable::from_columns(std::move(T), std::move(rho), std::move(cp), std::move(k), path);
}

inline void write_property_table(const PropertyTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  out << "T,rho,cp,k\n";
  for (std::size_t i = 0; i < table.T.size(); ++i) {
    out << table.T[i] << ',' << table.rho[i] << ',' << table.cp[i] << ',' << table.k[i] << '\n';
  }
}

/// Temperature-independent properties; reduces the freezing problem to the linear heat equation.
inline PropertyTable constant_property_table(double rho = 1000.0, double cp = 4000.0, double k = 0.5) {
  std::vector<double> T{-40.0, -10.0, 10.0, 40.0};
  return PropertyTable::from_columns(T, std::vector<double>(4, rho), std::vector<double>(4, cp),
                                     std::vector<double>(4, k), "constant");
}

/// Knobs of the placeholder material. These are not measurements of any real extract.
struct SyntheticMaterial {
  double freeze_center = -3.0;     // C
  double c_liquid = 3400.0;        // J/(kg C)
  double c_frozen = 2000.0;
  double latent = 230e3;           // J/kg, released below 0 C
  double latent_sigma = 1.5;       // C
  double latent_cutoff = 0.5;      // C, logistic switch-off of the release above 0 C
  double rho_liquid = 1100.0;      // kg/m^3
  double rho_frozen = 1000.0;
  double k_liquid = 0.5;           // W/(m C)
  double k_frozen = 2.0;
  double k_center = -15.0;         // C; ice fraction keeps growing well below the onset
  double k_width = 5.0;
};

/// PLACEHOLDER material data. Density and conductivity switch sigmoidally across
/// freezing; c_p is the secant capacity H(T)/T of an enthalpy whose derivative
/// carries a Gaussian latent-heat peak that only acts below 0 C. Using the secant
/// keeps the energy C(u)u monotone in u, so the release shows up as a plateau.
inline PropertyTable synthetic_property_table(const SyntheticMaterial& m = {}) {
  const auto apparent = [&](double t) {
    const double base = detail::logistic(t, m.c_frozen, m.c_liquid, m.freeze_center, 1.5);
    const double peak = m.latent * std::exp(-0.5 * std::pow((t - m.freeze_center) / m.latent_sigma, 2)) /
                        (m.latent_sigma * std::sqrt(2.0 * std::numbers::pi));
    return base + peak / (1.0 + std::exp(t / m.latent_cutoff));
  };
  // H(T) = int_0^T c_app by composite Simpson
  const auto enthalpy = [&](double t) {
    const int n = 4000;
    const double h = t / n;
    double s = apparent(0.0) + apparent(t);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * apparent(i * h);
    return s * h / 3.0;
  };
  std::vector<double> T, rho, cp, k;
  for (int i = 0; i <= 110; ++i) {
    const double t = -30.0 + 0.5 * i;
    T.push_back(t);
    rho.push_back(detail::logistic(t, m.rho_frozen, m.rho_liquid, m.freeze_center, 1.5));
    cp.push_back(std::abs(t) < 1e-12 ? apparent(0.0) : enthalpy(t) / t);
    k.push_back(detail::logistic(t, m.k_frozen, m.k_liquid, m.k_center, m.k_width));
  }
  return PropertyTable::from_columns(std::move(T), std::move(rho), std::move(cp), std::move(k),
                                     "synthetic placeholder");
}

/// Boundary temperatures (C) against time (s).
struct BoundarySeries {
  std::vector<double> t, left, right;
  std::string label;

  void validate() const {
    if (t.size() < 2 || left.size() != t.size() || right.size() != t.size()) {
      throw IngestionError("boundary series needs >= 2 rows of t,T_left,T_right");
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (!(t[i] > t[i - 1])) throw IngestionError("boundary series times must increase strictly");
    }
  }

  bool covers(double t0, double t1) const { return t.front() <= t0 && t.back() >= t1; }

  std::pair<double, double> at(double time) const {
    if (time < t.front() || time > t.back()) {
      throw IngestionError("boundary series does not cover t = " + std::to_string(time));
    }
    auto it = std::upper_bound(t.begin(), t.end(), time);
    if (it == t.end()) return {left.back(), right.back()};
    const auto i = static_cast<std::size_t>(it - t.begin()) - 1;
    const double w = (time - t[i]) / (t[i + 1] - t[i]);
    return {left[i] + w * (left[i + 1] - left[i]), right[i] + w * (right[i + 1] - right[i])};
  }
};

inline BoundarySeries load_boundary_series(const std::string& path) {
  const auto rows = detail::read_numeric_csv(path, {"t", "T_left", "T_right"});
  BoundarySeries s;
  for (const auto& r : rows) {
    s.t.push_back(r[0]);
    s.left.push_back(r[1]);
    s.right.push_back(r[2]);
  }
  s.label = path;
  s.validate();
  return s;
}

inline void write_boundary_series(const BoundarySeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  out << "t,T_left,T_right\n";
  for (std::size_t i = 0; i < s.t.size(); ++i) out << s.t[i] << ',' << s.left[i] << ',' << s.right[i] << '\n';
}

enum class BoundaryShape {
  exponential,         // T_f + (T_0 - T_f) e^{-t/tau}
  smooth_exponential,  // T_f + (T_0 - T_f) (1 + t/tau) e^{-t/tau}; starts with zero slope
};

inline BoundaryShape boundary_shape_from_string(const std::string& s) {
  if (s == "smooth") return BoundaryShape::smooth_exponential;
  if (s == "exponential") return BoundaryShape::exponential;
  throw ConfigError("boundary shape must be 'smooth' or 'exponential', got '" + s + "'");
}

/// PLACEHOLDER boundary data: exponential approach from T_start to T_freezer with time constant tau (s).
inline BoundarySeries synthetic_boundary_series(double horizon_s, double tau_s, double T_start = 20.0,
                                                double T_freezer = -25.0,
                                                BoundaryShape shape = BoundaryShape::smooth_exponential,
                                                int samples = 1001) {
  if (!(horizon_s > 0.0) || !(tau_s > 0.0) || samples < 2) {
    throw ConfigError("synthetic boundary series needs positive horizon and time constant");
  }
  BoundarySeries s;
  for (int i = 0; i < samples; ++i) {
    const double time = horizon_s * i / (samples - 1);
    const double r = time / tau_s;
    const double T = T_freezer + (T_start - T_freezer) * (shape == BoundaryShape::smooth_exponential ? 1.0 + r : 1.0) * std::exp(-r);
    s.t.push_back(time);
    s.left.push_back(T);
    s.right.push_back(T);
  }
  s.label = "synthetic placeholder";
  return s;
}

/// u = T / T_ref, x = s / d, tau = t / t0 with t0 = d^2 rho_ref cp_ref / k_ref.
struct Nondimensionalization {
  double T_ref = 20.0;
  double d = 0.1;
  double rho_ref = 1.0, cp_ref = 1.0, k_ref = 1.0;

  double t0() const { return d * d * rho_ref * cp_ref / k_ref; }
  double to_u(double T) const { return T / T_ref; }
  double to_T(double u) const { return u * T_ref; }
  double to_tau(double seconds) const { return seconds / t0(); }
  double to_seconds(double tau) const { return tau * t0(); }
  double to_x(double s) const { return s / d; }

  static Nondimensionalization from_table(const PropertyTable& table, double T_ref, double d) {
    if (!(d > 0.0)) throw ConfigError("characteristic length d must be positive");
    if (T_ref == 0.0) throw ConfigError("reference temperature must be nonzero");
    return {T_ref, d, table.rho_of(T_ref), table.cp_of(T_ref), table.k_of(T_ref)};
  }
};

/// Dimensionless C(u), K(u) with derivatives, and bounds over the admissible state range.
struct CoefficientField {
  std::function<double(double)> C, dC, K, dK;
  bool constant = false;
  double c_min = 1.0, c_max = 1.0, k_min = 1.0, k_max = 1.0;

  static CoefficientField unit() {
    CoefficientField f;
    f.C = f.K = [](double) { return 1.0; };
    f.dC = f.dK = [](double) { return 0.0; };
    f.constant = true;
    return f;
  }

  void compute_bounds(double u_lo, double u_hi, int samples = 4001) {
    c_min = k_min = std::numeric_limits<double>::infinity();
    c_max = k_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
      const double u = u_lo + (u_hi - u_lo) * i / (samples - 1);
      c_min = std::min(c_min, C(u));
      c_max = std::max(c_max, C(u));
      k_min = std::min(k_min, K(u));
      k_max = std::max(k_max, K(u));
    }
  }
};

struct ProblemSpec {
  std::string name;
  double a = 0.0, b = 1.0;
  double t_end = 1.0;
  int n_time = 128;
  CoefficientField coeffs = CoefficientField::unit();
  std::function<double(double, double)> source = [](double, double) { return 0.0; };
  std::function<double(double)> initial = [](double) { return 0.0; };
  std::function<double(double)> initial_dx = [](double) { return 0.0; };
  std::function<double(double)> boundary_left = [](double) { return 0.0; };
  std::function<double(double)> boundary_right = [](double) { return 0.0; };
  BasisKind basis = BasisKind::h10_sine;
  int n_test = 20;
  int n_int = 128;
  std::function<double(double, double)> exact;     // empty when no closed form exists
  std::function<double(double, double)> exact_dx;
  std::optional<Nondimensionalization> scaling;

  double dt() const { return t_end / n_time; }
  double time(int n) const { return n * dt(); }
  bool has_exact() const { return static_cast<bool>(exact); }

  void validate() const {
    if (!(b > a)) throw ConfigError("domain must satisfy b > a");
    if (n_time <= 0 || n_test <= 0 || n_int < 2) throw ConfigError("counts must be positive (N_int >= 2)");
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  }
};

/// Linear benchmark on (0, pi): u*(x,t) = e^{-t} sin(x) cos(x/2).
inline ProblemSpec make_toy_problem(int n_time = 128, int n_test = 20, int n_int = 128) {
  ProblemSpec p;
  p.name = "toy";
  p.a = 0.0;
  p.b = std::numbers::pi;
  p.t_end = 1.0;
  p.n_time = n_time;
  p.n_test = n_test;
  p.n_int = n_int;
  p.basis = BasisKind::h10_sine;
  p.exact = [](double x, double t) { return std::exp(-t) * std::sin(x) * std::cos(0.5 * x); };
  p.exact_dx = [](double x, double t) {
    return std::exp(-t) * (std::cos(x) * std::cos(0.5 * x) - 0.5 * std::sin(x) * std::sin(0.5 * x));
  };
  p.source = [](double x, double t) {
    return std::exp(-t) * (0.25 * std::sin(x) * std::cos(0.5 * x) + std::cos(x) * std::sin(0.5 * x));
  };
  p.initial = [](double x) { return std::sin(x) * std::cos(0.5 * x); };
  p.initial_dx = [](double x) { return std::cos(x) * std::cos(0.5 * x) - 0.5 * std::sin(x) * std::sin(0.5 * x); };
  p.validate();
  return p;
}

struct CoffeeSettings {
  double d = 0.1;                 // characteristic length (m); config value, not a physical claim
  double t_end = 0.3;             // dimensionless horizon
  double T_initial = 20.0;        // also the reference temperature
  double boundary_tau = 0.04;     // synthetic boundary time constant, in units of t0
  int n_time = 128;
  int n_test = 64;
  int n_int = 256;
  BasisKind basis = BasisKind::h10_sine;
};

/// Dimensionless freezing problem on (0,1) with u_I = 1 and boundary data T_b / T_initial.
inline ProblemSpec make_coffee_problem(const PropertyTable& table, const BoundarySeries& series,
                                       const CoffeeSettings& settings) {
  const auto scaling = Nondimensionalization::from_table(table, settings.T_initial, settings.d);
  series.validate();
  const double horizon_s = scaling.to_seconds(settings.t_end);
  if (!series.covers(0.0, horizon_s * (1.0 - 1e-12))) {
    throw IngestionError("boundary series covers [" + std::to_string(series.t.front()) + ", " +
                         std::to_string(series.t.back()) + "] s but the run needs [0, " +
                         std::to_string(horizon_s) + "] s");
  }

  ProblemSpec p;
  p.name = "coffee";
  p.a = 0.0;
  p.b = 1.0;
  p.t_end = settings.t_end;
  p.n_time = settings.n_time;
  p.n_test = settings.n_test;
  p.n_int = settings.n_int;
  p.basis = settings.basis;
  p.scaling = scaling;
  p.initial = [](double) { return 1.0; };
  p.initial_dx = [](double) { return 0.0; };
  const double T_ref = scaling.T_ref;
  const auto boundary = [series, scaling, horizon_s](double tau) {
    return series.at(std::min(scaling.to_seconds(tau), std::max(horizon_s, series.t.front())));
  };
  p.boundary_left = [boundary, T_ref](double tau) { return boundary(tau).first / T_ref; };
  p.boundary_right = [boundary, T_ref](double tau) { return boundary(tau).second / T_ref; };

  const double rc_ref = scaling.rho_ref * scaling.cp_ref;
  CoefficientField f;
  f.C = [table, T_ref, rc_ref](double u) {
    const double T = u * T_ref;
    return table.rho_of(T) * table.cp_of(T) / rc_ref;
  };
  f.dC = [table, T_ref, rc_ref](double u) {
    const double T = u * T_ref;
    const auto [r, dr] = table.rho_of.eval(T);
    const auto [c, dc] = table.cp_of.eval(T);
    return T_ref * (dr * c + r * dc) / rc_ref;
  };
  const double k_ref = scaling.k_ref;
  f.K = [table, T_ref, k_ref](double u) { return table.k_of(u * T_ref) / k_ref; };
  f.dK = [table, T_ref, k_ref](double u) { return T_ref * table.k_of.derivative(u * T_ref) / k_ref; };
  f.constant = std::all_of(table.rho.begin(), table.rho.end(), [&](double v) { return v == table.rho[0]; }) &&
               std::all_of(table.cp.begin(), table.cp.end(), [&](double v) { return v == table.cp[0]; }) &&
               std::all_of(table.k.begin(), table.k.end(), [&](double v) { return v == table.k[0]; });
  f.compute_bounds(table.T.front() / T_ref, table.T.back() / T_ref);
  p.coeffs = std::move(f);
  p.validate();
  return p;
}

/// Synthetic placeholder table and boundary series sized to the requested horizon.
inline ProblemSpec make_default_coffee_problem(const CoffeeSettings& settings = {}) {
  const PropertyTable table = synthetic_property_table();
  const auto scaling = Nondimensionalization::from_table(table, settings.T_initial, settings.d);
  const BoundarySeries series = synthetic_boundary_series(scaling.to_seconds(settings.t_end),
                                                          scaling.to_seconds(settings.boundary_tau),
                                                          settings.T_initial);
  return make_coffee_problem(table, series, settings);
}

/// Same data with C = K = 1: the linear control.
inline ProblemSpec linear_control(const ProblemSpec& p) {
  ProblemSpec q = p;
  q.name = p.name + "-linear";
  q.coeffs = CoefficientField::unit();
  return q;
}

inline BCEnforcer make_bc(const ProblemSpec& p) {
  BCEnforcer bc{p.a, p.b, {}, {}};
  for (int n = 1; n <= p.n_time; ++n) {
    bc.left.push_back(p.boundary_left(p.time(n)));
    bc.right.push_back(p.boundary_right(p.time(n)));
  }
  return bc;
}

}  // namespace tdvpinn
