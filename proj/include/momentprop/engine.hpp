/**
 * @file engine.hpp
 * @brief Uniform front over the dense and the monomial-basis truncated propagators.
 */
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "momentprop/propagation.hpp"
#include "momentprop/reduced_propagation.hpp"

namespace momentprop {

enum class EngineKind { automatic, dense, reduced };

inline const char* engine_name(EngineKind k) {
  switch (k) {
    case EngineKind::dense: return "dense";
    case EngineKind::reduced: return "reduced";
    default: return "auto";
  }
}

/// Dense when E(N_T,N_T) fits the element limit, otherwise the monomial basis.
inline EngineKind select_engine(std::size_t n, std::size_t N_T) {
  const std::size_t dim = BlockLayout(n, N_T).total();
  if (saturating_mul(dim, dim) <= element_limit()) return EngineKind::dense;
  return EngineKind::reduced;
}

class MomentEngine {
 public:
  struct State {
    std::size_t t = 0;
    Vector y;
  };

  static MomentEngine build(const PolynomialSystemSpec& spec, std::size_t N_T, std::size_t threads = 1,
                            EngineKind kind = EngineKind::automatic,
                            const std::optional<std::filesystem::path>& cache_dir = std::nullopt) {
    MomentEngine eng;
    eng.kind_ = kind == EngineKind::automatic ? select_engine(spec.coeffs.n, N_T) : kind;
    eng.n_ = spec.coeffs.n;
    eng.N_T_ = N_T;
    if (eng.kind_ == EngineKind::dense) {
      eng.dense_ = std::make_shared<const TruncatedPropagator>(load_or_build_propagator(spec, N_T, threads, cache_dir));
    } else {
      eng.reduced_ = std::make_shared<const ReducedPropagator>(make_reduced_propagator(spec.coeffs, N_T, threads));
    }
    return eng;
  }

  EngineKind kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t truncation() const noexcept { return N_T_; }

  State initial(const InitialMomentEngine& init) const {
    if (dense_) {
      MomentState s = init_state(init, n_, N_T_);
      return {0, std::move(s.y)};
    }
    ReducedState s = reduced_init_state(*reduced_, init);
    return {0, std::move(s.m)};
  }

  State step(const State& s) const {
    if (dense_) {
      MomentState next = momentprop::step(*dense_, MomentState{s.t, n_, N_T_, s.y});
      return {next.t, std::move(next.y)};
    }
    ReducedState next = reduced_step(*reduced_, ReducedState{s.t, s.y});
    return {next.t, std::move(next.m)};
  }

  /// Moment block E[x^[j]] in Kronecker layout.
  Vector block(const State& s, std::size_t j) const {
    if (dense_) return extract_moment(MomentState{s.t, n_, N_T_, s.y}, j);
    return reduced_kron_block(*reduced_, ReducedState{s.t, s.y}, j);
  }

  /// Diagonal second moments E[x_i^2], i = 0..n-1.
  Vector second_diagonal(const State& s) const {
    if (N_T_ < 2) throw PreconditionError("second moments need truncation limit >= 2");
    Vector out(static_cast<Eigen::Index>(n_));
    if (dense_) {
      const Vector b2 = block(s, 2);
      for (std::size_t i = 0; i < n_; ++i) out[static_cast<Eigen::Index>(i)] = b2[static_cast<Eigen::Index>(i * n_ + i)];
      return out;
    }
    for (std::size_t i = 0; i < n_; ++i) {
      std::vector<unsigned> e(n_, 0);
      e[i] = 2;
      out[static_cast<Eigen::Index>(i)] = s.y[reduced_->basis->index(e)];
    }
    return out;
  }

  const TruncatedPropagator* dense() const noexcept { return dense_.get(); }
  const ReducedPropagator* reduced() const noexcept { return reduced_.get(); }

 private:
  EngineKind kind_ = EngineKind::dense;
  std::size_t n_ = 1;
  std::size_t N_T_ = 0;
  std::shared_ptr<const TruncatedPropagator> dense_;
  std::shared_ptr<const ReducedPropagator> reduced_;
};

}  // namespace momentprop
