/**
 * @file system_model.hpp
 * @brief Stochastic polynomial system x(t+1) = sum_i F_i(t) x^[i](t).
 *
 * Each coefficient matrix is affine in a per-step parameter vector w(t):
 *   F_i(t) = C_{i,0} + sum_p w_p(t) C_{i,p},
 * with a fresh independent draw of w at every step, identically distributed
 * across steps. The initial state is a vector of expressions over independent
 * scalar sources, independent of every w(t).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "momentprop/distributions.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/expression.hpp"
#include "momentprop/kron.hpp"

namespace momentprop {

struct CoefficientModel {
  std::size_t n = 1;
  std::size_t degree = 0;  // d_S
  std::vector<ScalarDistribution> params;
  std::vector<Matrix> constants;            // C_{i,0}, shape n x n^i
  std::vector<std::vector<Matrix>> linear;  // linear[i][p] = C_{i,p+1}, shape n x n^i

  /// Zero model with the right shapes.
  static CoefficientModel zeros(std::size_t n, std::size_t degree, std::vector<ScalarDistribution> params) {
    CoefficientModel m;
    m.n = n;
    m.degree = degree;
    m.params = std::move(params);
    for (std::size_t i = 0; i <= degree; ++i) {
      const auto cols = static_cast<Eigen::Index>(saturating_pow(n, i));
      m.constants.push_back(Matrix::Zero(static_cast<Eigen::Index>(n), cols));
      m.linear.emplace_back(m.params.size(), Matrix::Zero(static_cast<Eigen::Index>(n), cols));
    }
    return m;
  }

  std::size_t num_params() const noexcept { return params.size(); }

  /// Term p of F_i: p = 0 is the constant part, p >= 1 multiplies w_{p-1}.
  const Matrix& term(std::size_t i, std::size_t p) const { return p == 0 ? constants.at(i) : linear.at(i).at(p - 1); }

  /// F_i evaluated at a parameter draw.
  Matrix coefficient(std::size_t i, const std::vector<double>& w) const {
    Matrix f = constants.at(i);
    for (std::size_t p = 0; p < params.size(); ++p) {
      if (w[p] != 0.0) f += w[p] * linear[i][p];
    }
    return f;
  }

  /// One step of the dynamics for a fixed parameter draw.
  Vector apply(const std::vector<double>& w, const Vector& x) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
    Vector power = Vector::Ones(1);
    for (std::size_t i = 0; i <= degree; ++i) {
      if (i > 0) {
        Vector next(power.size() * x.size());
        for (Eigen::Index a = 0; a < power.size(); ++a) next.segment(a * x.size(), x.size()) = power[a] * x;
        power = std::move(next);
      }
      out.noalias() += constants[i] * power;
      for (std::size_t p = 0; p < params.size(); ++p) {
        if (w[p] != 0.0) out.noalias() += w[p] * (linear[i][p] * power);
      }
    }
    return out;
  }

  void validate() const {
    if (n == 0) throw ValidationError("model: state dimension n must be positive");
    if (constants.size() != degree + 1 || linear.size() != degree + 1) {
      throw ValidationError("model: expected " + std::to_string(degree + 1) + " coefficient matrices F_0..F_" +
                            std::to_string(degree));
    }
    bool any_nonzero = false;
    for (std::size_t i = 0; i <= degree; ++i) {
      const auto rows = static_cast<Eigen::Index>(n);
      const auto cols = static_cast<Eigen::Index>(saturating_pow(n, i));
      auto check = [&](const Matrix& m, const std::string& label) {
        if (m.rows() != rows || m.cols() != cols) {
          throw ValidationError("shape mismatch in F_" + std::to_string(i) + " (" + label + "): expected " +
                                std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        }
        if (!m.allFinite()) {
          throw ValidationError("non-finite entry in F_" + std::to_string(i) + " (" + label + ")");
        }
        any_nonzero = any_nonzero || !m.isZero(0.0);
      };
      check(constants[i], "const");
      if (linear[i].size() != params.size()) {
        throw ValidationError("F_" + std::to_string(i) + ": expected one linear term per parameter");
      }
      for (std::size_t p = 0; p < params.size(); ++p) check(linear[i][p], "linear " + std::to_string(p));
    }
    if (!any_nonzero) throw ValidationError("model: all coefficient matrices are zero");
  }
};

struct InitialStateModel {
  std::vector<ScalarDistribution> sources;
  std::vector<Expr> components;

  std::size_t dimension() const noexcept { return components.size(); }

  Vector evaluate(const std::vector<double>& source_values) const {
    Vector x(static_cast<Eigen::Index>(components.size()));
    for (std::size_t i = 0; i < components.size(); ++i) x[static_cast<Eigen::Index>(i)] = components[i].evaluate(source_values);
    return x;
  }

  void validate() const {
    if (components.empty()) throw ValidationError("initial_state: no components");
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (components[i].max_source() >= static_cast<long>(sources.size())) {
        throw ValidationError("initial_state: component " + std::to_string(i) + " references an unknown source");
      }
    }
  }
};

struct PolynomialSystemSpec {
  std::string name;
  CoefficientModel coeffs;
  InitialStateModel init;

  void validate() const {
    coeffs.validate();
    init.validate();
    if (coeffs.n != init.dimension()) {
      throw ValidationError("model: n = " + std::to_string(coeffs.n) + " but initial state has " +
                            std::to_string(init.dimension()) + " components");
    }
  }
};

/// Adds coeff * prod_{v in vars} x_v to row `row` of F_{|vars|}, at the column of the sorted index tuple.
inline void add_monomial(Matrix& f, std::size_t n, std::size_t row, std::vector<std::size_t> vars, double coeff) {
  std::sort(vars.begin(), vars.end());
  std::size_t col = 0;
  for (std::size_t v : vars) col = col * n + v;
  f(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += coeff;
}

/// Sum of a row's coefficients over every column whose index tuple is a permutation of `vars`.
inline double monomial_coefficient(const Matrix& f, std::size_t n, std::size_t row, std::vector<std::size_t> vars) {
  std::sort(vars.begin(), vars.end());
  double sum = 0.0;
  for (Eigen::Index col = 0; col < f.cols(); ++col) {
    std::vector<std::size_t> digits(vars.size());
    auto c = static_cast<std::size_t>(col);
    for (std::size_t k = vars.size(); k-- > 0;) {
      digits[k] = c % n;
      c /= n;
    }
    std::sort(digits.begin(), digits.end());
    if (digits == vars) sum += f(static_cast<Eigen::Index>(row), col);
  }
  return sum;
}

/// x(t+1) = r(t) x(t) (1 - x(t)): F_0 = 0, F_1 = r, F_2 = -r.
inline PolynomialSystemSpec build_logistic_model(const ScalarDistribution& r, const ScalarDistribution& x0,
                                                 std::vector<std::string>* warnings = nullptr) {
  if (warnings != nullptr) {
    const auto [rlo, rhi] = r.support();
    if (rlo < 0.0 || rhi > 4.0) warnings->push_back("growth rate support leaves [0, 4]");
    const auto [xlo, xhi] = x0.support();
    if (xlo < 0.0 || xhi > 1.0) warnings->push_back("initial state support leaves [0, 1]");
  }
  PolynomialSystemSpec spec;
  spec.name = "logistic";
  spec.coeffs = CoefficientModel::zeros(1, 2, {r});
  spec.coeffs.linear[1][0](0, 0) = 1.0;
  spec.coeffs.linear[2][0](0, 0) = -1.0;
  spec.init.sources = {x0};
  spec.init.components = {Expr::source(0)};
  spec.validate();
  return spec;
}

struct BicycleParams {
  double dt = 0.1;      // Delta
  double beta = 0.0;    // velocity angle
  double length = 1.0;  // rear axle to mass center
};

/// State indices of the polynomialized bicycle model.
enum BicycleState : std::size_t { kX = 0, kY = 1, kPsi = 2, kV = 3, kC = 4, kS = 5 };

/**
 * Second-order Taylor discretization of the kinematic bicycle model with
 * c = cos(psi + beta), s = sin(psi + beta) as auxiliary states and the
 * acceleration a(t) as the only random parameter.
 */
inline PolynomialSystemSpec build_bicycle_model(const BicycleParams& bp, const ScalarDistribution& accel,
                                                InitialStateModel init) {
  if (!(bp.dt > 0.0)) throw ValidationError("bicycle: time step must be positive");
  if (!(bp.length > 0.0)) throw ValidationError("bicycle: length must be positive");
  constexpr std::size_t n = 6;
  const double d = bp.dt;
  const double h = 0.5 * d * d;
  const double k = std::sin(bp.beta) / bp.length;

  PolynomialSystemSpec spec;
  spec.name = "bicycle";
  spec.coeffs = CoefficientModel::zeros(n, 3, {accel});
  auto& cst = spec.coeffs.constants;
  auto& lin = spec.coeffs.linear;

  // F_0: acceleration-driven offsets.
  add_monomial(lin[0][0], n, kPsi, {}, h * k);
  add_monomial(lin[0][0], n, kV, {}, d);

  // F_1: identity plus acceleration couplings.
  for (std::size_t i = 0; i < n; ++i) add_monomial(cst[1], n, i, {i}, 1.0);
  add_monomial(cst[1], n, kPsi, {kV}, d * k);
  add_monomial(lin[1][0], n, kX, {kC}, h);
  add_monomial(lin[1][0], n, kY, {kS}, h);
  add_monomial(lin[1][0], n, kC, {kS}, -h * k);
  add_monomial(lin[1][0], n, kS, {kC}, h * k);

  // F_2: first-order velocity terms.
  add_monomial(cst[2], n, kX, {kC, kV}, d);
  add_monomial(cst[2], n, kY, {kS, kV}, d);
  add_monomial(cst[2], n, kC, {kS, kV}, -d * k);
  add_monomial(cst[2], n, kS, {kC, kV}, d * k);

  // F_3: second-order velocity-squared terms.
  add_monomial(cst[3], n, kX, {kS, kV, kV}, -h * k);
  add_monomial(cst[3], n, kY, {kC, kV, kV}, h * k);
  add_monomial(cst[3], n, kC, {kC, kV, kV}, -h * k * k);
  add_monomial(cst[3], n, kS, {kS, kV, kV}, -h * k * k);

  spec.init = std::move(init);
  spec.validate();
  return spec;
}

/// X, Y, psi, v independent N(0, sd^2); c = cos(psi + beta), s = sin(psi + beta).
inline InitialStateModel bicycle_initial_state(double beta, double sd) {
  InitialStateModel init;
  for (int i = 0; i < 4; ++i) init.sources.push_back(ScalarDistribution::gaussian(0.0, sd));
  init.components = {Expr::source(0),
                     Expr::source(1),
                     Expr::source(2),
                     Expr::source(3),
                     Expr::cos(2, 1.0, beta),
                     Expr::sin(2, 1.0, beta)};
  return init;
}

}  // namespace momentprop
