/**
 * @file propagation.hpp
 * @brief Truncated moment iteration y(t+1) = E(N_T,N_T) y(t) over the dense Kronecker layout.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "momentprop/carleman.hpp"
#include "momentprop/csv.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/initial_moments.hpp"
#include "momentprop/kron.hpp"
#include "momentprop/model_io.hpp"
#include "momentprop/propagator_cache.hpp"

namespace momentprop {

struct TruncatedPropagator {
  Matrix E;
  std::size_t n = 1;
  std::size_t N_T = 0;
  std::uint64_t model_hash = 0;

  BlockLayout layout() const { return BlockLayout(n, N_T); }
};

inline void check_propagator(const TruncatedPropagator& p) {
  const std::size_t dim = BlockLayout(p.n, p.N_T).total();
  if (static_cast<std::size_t>(p.E.rows()) != dim || static_cast<std::size_t>(p.E.cols()) != dim) {
    throw PreconditionError("propagator matrix has wrong dimension");
  }
  if (p.E(0, 0) != 1.0 || (dim > 1 && p.E.row(0).tail(dim - 1).cwiseAbs().maxCoeff() != 0.0)) {
    throw PreconditionError("propagator first row must be [1, 0, ..., 0]");
  }
}

inline TruncatedPropagator make_propagator(const CoefficientModel& model, std::size_t N_T, std::size_t threads = 1,
                                           std::uint64_t hash = 0) {
  TruncatedPropagator p;
  p.n = model.n;
  p.N_T = N_T;
  p.model_hash = hash;
  p.E = build_E(model, N_T, N_T, threads).assemble();
  return p;
}

/// Loads E(N_T,N_T) from `cache_dir` when a matching file exists, otherwise builds and stores it.
inline TruncatedPropagator load_or_build_propagator(const PolynomialSystemSpec& spec, std::size_t N_T,
                                                    std::size_t threads,
                                                    const std::optional<std::filesystem::path>& cache_dir,
                                                    bool* cache_hit = nullptr) {
  const std::uint64_t hash = model_hash(spec);
  if (cache_hit != nullptr) *cache_hit = false;
  std::filesystem::path file;
  if (cache_dir) {
    file = *cache_dir / cache_file_name(hash, N_T, N_T);
    if (auto cached = read_propagator_cache(file)) {
      const auto& [h, E] = *cached;
      if (h.model_hash == hash && h.n == spec.coeffs.n && h.N == N_T && h.M == N_T) {
        TruncatedPropagator p{E, spec.coeffs.n, N_T, hash};
        check_propagator(p);
        if (cache_hit != nullptr) *cache_hit = true;
        return p;
      }
    }
  }
  TruncatedPropagator p = make_propagator(spec.coeffs, N_T, threads, hash);
  if (cache_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*cache_dir, ec);
    CacheHeader h;
    h.model_hash = hash;
    h.n = spec.coeffs.n;
    h.degree = spec.coeffs.degree;
    h.N = N_T;
    h.M = N_T;
    h.rows = static_cast<std::uint64_t>(p.E.rows());
    h.cols = static_cast<std::uint64_t>(p.E.cols());
    try {
      write_propagator_cache(file, h, p.E);
    } catch (const std::exception&) {
      // an unwritable cache only costs a rebuild next time
    }
  }
  return p;
}

struct MomentState {
  std::size_t t = 0;
  std::size_t n = 1;
  std::size_t N_T = 0;
  Vector y;

  BlockLayout layout() const { return BlockLayout(n, N_T); }
};

inline MomentState init_state(const InitialMomentEngine& engine, std::size_t n, std::size_t N_T) {
  BlockLayout layout(n, N_T);
  check_element_count(layout.total(), 1, "initial moment vector");
  MomentState s{0, n, N_T, Vector::Zero(static_cast<Eigen::Index>(layout.total()))};
  for (std::size_t j = 0; j <= N_T; ++j) {
    s.y.segment(static_cast<Eigen::Index>(layout.offset(j)), static_cast<Eigen::Index>(layout.block_size(j))) =
        engine.kron_moment(j);
  }
  s.y[0] = 1.0;
  return s;
}

inline MomentState init_state(const InitialStateModel& init, std::size_t N_T) {
  return init_state(InitialMomentEngine(init), init.dimension(), N_T);
}

inline MomentState step(const TruncatedPropagator& p, const MomentState& s) {
  if (s.n != p.n || s.N_T != p.N_T || s.y.size() != p.E.cols()) {
    throw PreconditionError("moment state does not match propagator dimensions");
  }
  MomentState next{s.t + 1, s.n, s.N_T, p.E * s.y};
  next.y[0] = 1.0;
  if (!next.y.allFinite()) {
    throw DivergenceError("truncated system diverged at step " + std::to_string(next.t), s.t);
  }
  return next;
}

struct Trajectory {
  std::vector<MomentState> states;
  std::optional<std::size_t> diverged_at;
};

/// Runs up to `t` steps, stopping at the first non-finite state.
inline Trajectory try_propagate(const TruncatedPropagator& p, const MomentState& s0, std::size_t t) {
  Trajectory traj;
  traj.states.reserve(t + 1);
  traj.states.push_back(s0);
  for (std::size_t k = 0; k < t; ++k) {
    try {
      traj.states.push_back(step(p, traj.states.back()));
    } catch (const DivergenceError&) {
      traj.diverged_at = traj.states.back().t + 1;
      break;
    }
  }
  return traj;
}

inline std::vector<MomentState> propagate(const TruncatedPropagator& p, const MomentState& s0, std::size_t t) {
  std::vector<MomentState> out;
  out.reserve(t + 1);
  out.push_back(s0);
  for (std::size_t k = 0; k < t; ++k) out.push_back(step(p, out.back()));
  return out;
}

inline Vector extract_moment(const MomentState& s, std::size_t j) {
  if (j > s.N_T) {
    throw PreconditionError("moment order " + std::to_string(j) + " exceeds truncation limit " +
                            std::to_string(s.N_T));
  }
  return stacked_view(s.y, s.layout(), j);
}

inline void write_trajectory_header(CsvWriter& csv) { csv.header({"t", "block", "index", "value"}); }

inline void write_trajectory_rows(CsvWriter& csv, const MomentState& s, const std::vector<std::size_t>& blocks) {
  for (std::size_t j : blocks) {
    const Vector v = extract_moment(s, j);
    for (Eigen::Index i = 0; i < v.size(); ++i) csv.row() << s.t << j << i << v[i];
  }
}

}  // namespace momentprop
