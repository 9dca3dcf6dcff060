/**
 * @file initial_moments.hpp
 * @brief Kronecker moments E[x0^[j]] of the initial state.
 *
 * Each entry of E[x0^[j]] is E[prod_i x_i^{alpha_i}] for the exponent vector
 * alpha of that index, so entries are computed once per exponent vector. The
 * product of component expressions is expanded into terms that factor over
 * independent sources; each per-source factor is a closed-form raw moment or a
 * 1-D Gauss rule.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "momentprop/distributions.hpp"
#include "momentprop/expression.hpp"
#include "momentprop/kron.hpp"
#include "momentprop/system_model.hpp"

namespace momentprop {

class InitialMomentEngine {
 public:
  explicit InitialMomentEngine(InitialStateModel init) : init_(std::move(init)) {
    init_.validate();
    for (const auto& c : init_.components) expanded_.push_back(expand(c));
  }

  std::size_t n() const noexcept { return init_.dimension(); }
  const InitialStateModel& model() const noexcept { return init_; }

  /// E[prod_i x_i^{exponents_i}].
  double monomial_moment(const std::vector<unsigned>& exponents) const {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = monomial_cache_.find(exponents); it != monomial_cache_.end()) return it->second;
    }
    ExpandedExpr product = {ExpandedTerm{}};
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      for (unsigned e = 0; e < exponents[i]; ++e) product = combine(multiply(product, expanded_[i]));
    }
    double value = 0.0;
    for (const auto& term : product) {
      double t = term.coeff;
      for (const auto& [src, factor] : term.factors) {
        if (t == 0.0) break;
        t *= source_expectation(src, factor);
      }
      value += t;
    }
    std::lock_guard<std::mutex> lock(mu_);
    monomial_cache_.emplace(exponents, value);
    return value;
  }

  /// E[x0^[j]], length n^j.
  Vector kron_moment(std::size_t j) const {
    const std::size_t len = saturating_pow(n(), j);
    check_element_count(len, 1, "initial moment E[x0^[" + std::to_string(j) + "]]");
    Vector out(static_cast<Eigen::Index>(len));
    std::vector<unsigned> exps(n());
    for (std::size_t idx = 0; idx < len; ++idx) {
      std::fill(exps.begin(), exps.end(), 0u);
      std::size_t rest = idx;
      for (std::size_t d = 0; d < j; ++d) {
        ++exps[rest % n()];
        rest /= n();
      }
      out[static_cast<Eigen::Index>(idx)] = monomial_moment(exps);
    }
    return out;
  }

  /// ||E[x0^[j]]||_2 for j = 0..j_max.
  std::vector<double> norm_table(std::size_t j_max) const {
    std::vector<double> norms;
    norms.reserve(j_max + 1);
    for (std::size_t j = 0; j <= j_max; ++j) norms.push_back(kron_moment(j).norm());
    return norms;
  }

 private:
  double source_expectation(std::size_t src, const SourceFactor& factor) const {
    const auto key = std::make_pair(src, factor);
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = source_cache_.find(key); it != source_cache_.end()) return it->second;
    }
    const ScalarDistribution& dist = init_.sources.at(src);
    double value = 0.0;
    if (factor.trig.empty()) {
      value = raw_moment(dist, factor.power);
    } else {
      value = expect(
          dist,
          [&factor](double s) {
            double v = std::pow(s, factor.power);
            for (const auto& tf : factor.trig) {
              const double arg = tf.scale * s + tf.offset;
              v *= tf.is_sin ? std::sin(arg) : std::cos(arg);
            }
            return v;
          },
          factor.power);
    }
    std::lock_guard<std::mutex> lock(mu_);
    source_cache_.emplace(key, value);
    return value;
  }

  InitialStateModel init_;
  std::vector<ExpandedExpr> expanded_;
  mutable std::mutex mu_;
  mutable std::map<std::vector<unsigned>, double> monomial_cache_;
  mutable std::map<std::pair<std::size_t, SourceFactor>, double> source_cache_;
};

inline Vector kron_moment(const InitialStateModel& init, std::size_t j) { return InitialMomentEngine(init).kron_moment(j); }

inline std::vector<double> moment_norm_table(const InitialStateModel& init, std::size_t j_max) {
  return InitialMomentEngine(init).norm_table(j_max);
}

}  // namespace momentprop
