/**
 * @file quadrature.hpp
 * @brief Gauss-Legendre and Gauss-Hermite rules via the Golub-Welsch method.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

namespace momentprop::quadrature {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Symmetric Jacobi matrix with zero diagonal and the given off-diagonal;
// weights are mu0 times the squared first eigenvector components.
inline Rule golub_welsch(std::size_t m, double mu0, double (*offdiag)(std::size_t)) {
  Rule rule;
  if (m == 0) {
    return rule;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(m > 1 ? m - 1 : 0));
  for (std::size_t k = 1; k < m; ++k) {
    sub[static_cast<Eigen::Index>(k - 1)] = offdiag(k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  rule.nodes.resize(m);
  rule.weights.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    rule.nodes[i] = solver.eigenvalues()[ii];
    const double v0 = solver.eigenvectors()(0, ii);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

inline double legendre_offdiag(std::size_t k) {
  const double kk = static_cast<double>(k);
  return kk / std::sqrt(4.0 * kk * kk - 1.0);
}

inline double hermite_offdiag(std::size_t k) { return std::sqrt(static_cast<double>(k)); }

inline const Rule& cached(std::map<std::size_t, Rule>& cache, std::mutex& mu, std::size_t m,
                          double mu0, double (*offdiag)(std::size_t)) {
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(m);
  if (it == cache.end()) {
    it = cache.emplace(m, golub_welsch(m, mu0, offdiag)).first;
  }
  return it->second;
}

}  // namespace detail

/// m-point Gauss-Legendre rule on [-1, 1].
inline const Rule& gauss_legendre(std::size_t m) {
  static std::map<std::size_t, Rule> cache;
  static std::mutex mu;
  return detail::cached(cache, mu, m, 2.0, &detail::legendre_offdiag);
}

/// m-point rule for E[f(Z)], Z ~ N(0,1) (probabilists' Hermite weight, weights sum to 1).
inline const Rule& gauss_hermite(std::size_t m) {
  static std::map<std::size_t, Rule> cache;
  static std::mutex mu;
  return detail::cached(cache, mu, m, 1.0, &detail::hermite_offdiag);
}

}  // namespace momentprop::quadrature
