#pragma once

// Fully connected tanh network x -> (u^1(x), ..., u^N(x)) with Dirichlet data
// imposed through a cutoff and a linear lift. The spatial derivative is pushed
// forward through the layers together with the values.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdvpinn/autodiff.hpp"
#include "tdvpinn/errors.hpp"
#include "tdvpinn/random.hpp"

namespace tdvpinn {

struct MLPState {
  std::vector<int> widths;            // widths.front() == 1, widths.back() == N_time
  std::vector<Eigen::MatrixXd> W;     // W[j]: widths[j+1] x widths[j]
  std::vector<Eigen::VectorXd> b;

  std::size_t n_layers() const noexcept { return W.size(); }
  int out_dim() const { return widths.back(); }

  std::size_t n_params() const {
    std::size_t n = 0;
    for (std::size_t j = 0; j < W.size(); ++j) n += static_cast<std::size_t>(W[j].size() + b[j].size());
    return n;
  }
};

inline void check_widths(const std::vector<int>& widths) {
  if (widths.size() < 2) throw ConfigError("network needs at least an input and an output width");
  if (widths.front() != 1) throw ConfigError("network input width must be 1");
  for (int w : widths) {
    if (w <= 0) throw ConfigError("network widths must be positive");
  }
}

/// Glorot-uniform weights, zero biases; entries drawn layer by layer in row-major order.
inline MLPState init_mlp(std::uint64_t seed, const std::vector<int>& widths) {
  check_widths(widths);
  Rng rng(seed);
  MLPState state;
  state.widths = widths;
  for (std::size_t j = 0; j + 1 < widths.size(); ++j) {
    const int fan_in = widths[j];
    const int fan_out = widths[j + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    state.W.push_back(std::move(w));
    state.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return state;
}

inline std::vector<int> standard_widths(int n_time, int hidden_layers = 5, int hidden_width = 32) {
  std::vector<int> widths{1};
  for (int i = 0; i < hidden_layers; ++i) widths.push_back(hidden_width);
  widths.push_back(n_time);
  return widths;
}

/// Parameters in layer order: W (row-major) then b.
inline Eigen::VectorXd flatten(const MLPState& state) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(state.n_params()));
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < state.n_layers(); ++j) {
    const auto& w = state.W[j];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) theta[pos++] = w(r, c);
    }
    theta.segment(pos, state.b[j].size()) = state.b[j];
    pos += state.b[j].size();
  }
  return theta;
}

inline void unflatten(const Eigen::VectorXd& theta, MLPState& state) {
  if (static_cast<std::size_t>(theta.size()) != state.n_params()) {
    throw StructuralError("parameter vector length does not match network shape");
  }
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < state.n_layers(); ++j) {
    auto& w = state.W[j];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = theta[pos++];
    }
    state.b[j] = theta.segment(pos, state.b[j].size());
    pos += state.b[j].size();
  }
}

/// u^n(x) = chi(x) * uhat^n(x) + g(x, n) with chi = (x-a)(b-x) and g linear in x.
struct BCEnforcer {
  double a = 0.0;
  double b = 1.0;
  std::vector<double> left;   // boundary value at t^n, n = 1..N (index n-1)
  std::vector<double> right;

  static BCEnforcer homogeneous(double a, double b, int n_time) {
    return {a, b, std::vector<double>(static_cast<std::size_t>(n_time), 0.0),
            std::vector<double>(static_cast<std::size_t>(n_time), 0.0)};
  }

  double cutoff(double x) const noexcept { return (x - a) * (b - x); }
  double cutoff_derivative(double x) const noexcept { return (b - x) - (x - a); }

  double lift(double x, std::size_t n) const {
    const double len = b - a;
    return left[n] * (b - x) / len + right[n] * (x - a) / len;
  }
  double lift_derivative(std::size_t n) const { return (right[n] - left[n]) / (b - a); }
};

/// Values and spatial derivatives of every output at one point, for any scalar type.
/// `theta` is the flat parameter vector in the layout of flatten().
template <class S>
std::pair<std::vector<S>, std::vector<S>> forward_with_derivative(const std::vector<int>& widths,
                                                                  const std::vector<S>& theta,
                                                                  const BCEnforcer& bc, const S& x) {
  std::vector<S> z{x};
  std::vector<S> dz{lift(1.0, x)};
  std::size_t pos = 0;
  const std::size_t n_layers = widths.size() - 1;
  for (std::size_t j = 0; j < n_layers; ++j) {
    const auto fan_in = static_cast<std::size_t>(widths[j]);
    const auto fan_out = static_cast<std::size_t>(widths[j + 1]);
    std::vector<S> a(fan_out), da(fan_out);
    for (std::size_t r = 0; r < fan_out; ++r) {
      S acc = theta[pos + r * fan_in] * z[0];
      S dacc = theta[pos + r * fan_in] * dz[0];
      for (std::size_t c = 1; c < fan_in; ++c) {
        acc = acc + theta[pos + r * fan_in + c] * z[c];
        dacc = dacc + theta[pos + r * fan_in + c] * dz[c];
      }
      a[r] = acc;
      da[r] = dacc;
    }
    pos += fan_in * fan_out;
    for (std::size_t r = 0; r < fan_out; ++r) a[r] = a[r] + theta[pos + r];
    pos += fan_out;
    if (j + 1 < n_layers) {
      for (std::size_t r = 0; r < fan_out; ++r) {
        using std::tanh;
        a[r] = tanh(a[r]);
        da[r] = (1.0 - a[r] * a[r]) * da[r];
      }
    }
    z = std::move(a);
    dz = std::move(da);
  }
  if (pos != theta.size()) throw StructuralError("parameter vector length does not match widths");

  const double xv = value_of(x);
  const double chi = bc.cutoff(xv);
  const double dchi = bc.cutoff_derivative(xv);
  std::vector<S> u(z.size()), du(z.size());
  for (std::size_t n = 0; n < z.size(); ++n) {
    u[n] = chi * z[n] + bc.lift(xv, n);
    du[n] = dchi * z[n] + chi * dz[n] + bc.lift_derivative(n);
  }
  return {std::move(u), std::move(du)};
}

/// Convenience overload for plain doubles.
inline std::pair<std::vector<double>, std::vector<double>> forward_with_derivative(
    const MLPState& state, const BCEnforcer& bc, double x) {
  const Eigen::VectorXd theta = flatten(state);
  return forward_with_derivative<double>(state.widths,
                                         std::vector<double>(theta.data(), theta.data() + theta.size()),
                                         bc, x);
}

/// Whole-batch forward pass over a row of points, keeping what the backward pass needs.
struct BatchForward {
  std::vector<Eigen::MatrixXd> z;   // z[0] = x (1 x P), z[j] post-activation of layer j
  std::vector<Eigen::MatrixXd> dz;  // spatial derivatives of z[j]
  std::vector<Eigen::MatrixXd> da;  // spatial derivatives of the pre-activations behind z[j]
  Eigen::RowVectorXd chi, dchi;
  Eigen::MatrixXd U;                // N_time x P
  Eigen::MatrixXd DU;
};

inline BatchForward forward_batch(const MLPState& state, const BCEnforcer& bc,
                                  const std::vector<double>& points) {
  const auto P = static_cast<Eigen::Index>(points.size());
  BatchForward f;
  Eigen::RowVectorXd x = Eigen::Map<const Eigen::RowVectorXd>(points.data(), P);
  f.z.push_back(x);
  f.dz.push_back(Eigen::MatrixXd::Ones(1, P));
  f.da.emplace_back();
  const std::size_t L = state.n_layers();
  Eigen::MatrixXd uhat, duhat;
  for (std::size_t j = 0; j < L; ++j) {
    Eigen::MatrixXd a = state.W[j] * f.z.back();
    a.colwise() += state.b[j];
    Eigen::MatrixXd da = state.W[j] * f.dz.back();
    if (j + 1 < L) {
      Eigen::MatrixXd zj = a.array().tanh().matrix();
      Eigen::MatrixXd dzj = ((1.0 - zj.array().square()) * da.array()).matrix();
      f.z.push_back(std::move(zj));
      f.dz.push_back(std::move(dzj));
      f.da.push_back(std::move(da));
    } else {
      uhat = std::move(a);
      duhat = std::move(da);
    }
  }
  f.chi.resize(P);
  f.dchi.resize(P);
  for (Eigen::Index i = 0; i < P; ++i) {
    f.chi[i] = bc.cutoff(x[i]);
    f.dchi[i] = bc.cutoff_derivative(x[i]);
  }
  const Eigen::Index N = uhat.rows();
  f.U = (uhat.array().rowwise() * f.chi.array()).matrix();
  f.DU = (uhat.array().rowwise() * f.dchi.array() + duhat.array().rowwise() * f.chi.array()).matrix();
  for (Eigen::Index n = 0; n < N; ++n) {
    const auto nn = static_cast<std::size_t>(n);
    for (Eigen::Index i = 0; i < P; ++i) f.U(n, i) += bc.lift(x[i], nn);
    f.DU.row(n).array() += bc.lift_derivative(nn);
  }
  return f;
}

/// Gradient with respect to the flat parameters, given adjoints of U and DU.
inline Eigen::VectorXd backward_batch(const MLPState& state, const BatchForward& f,
                                      const Eigen::MatrixXd& GU, const Eigen::MatrixXd& GDU) {
  const std::size_t L = state.n_layers();
  std::vector<Eigen::MatrixXd> gW(L);
  std::vector<Eigen::VectorXd> gb(L);

  // output layer (identity activation) under the cutoff
  Eigen::MatrixXd Ga = (GU.array().rowwise() * f.chi.array() + GDU.array().rowwise() * f.dchi.array()).matrix();
  Eigen::MatrixXd Gda = (GDU.array().rowwise() * f.chi.array()).matrix();
  for (std::size_t j = L; j-- > 0;) {
    const Eigen::MatrixXd& zin = f.z[j];
    const Eigen::MatrixXd& dzin = f.dz[j];
    gW[j] = Ga * zin.transpose() + Gda * dzin.transpose();
    gb[j] = Ga.rowwise().sum();
    if (j == 0) break;
    Eigen::MatrixXd Gz = state.W[j].transpose() * Ga;
    Eigen::MatrixXd Gdz = state.W[j].transpose() * Gda;
    // zin = tanh(a), dzin = s * da with s = 1 - zin^2
    const Eigen::ArrayXXd s = 1.0 - zin.array().square();
    Gz.array() += Gdz.array() * f.da[j].array() * (-2.0 * zin.array());
    Gda = (Gdz.array() * s).matrix();
    Ga = (Gz.array() * s).matrix();
  }

  Eigen::VectorXd grad(static_cast<Eigen::Index>(state.n_params()));
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < L; ++j) {
    for (Eigen::Index r = 0; r < gW[j].rows(); ++r) {
      for (Eigen::Index c = 0; c < gW[j].cols(); ++c) grad[pos++] = gW[j](r, c);
    }
    grad.segment(pos, gb[j].size()) = gb[j];
    pos += gb[j].size();
  }
  return grad;
}

}  // namespace tdvpinn
