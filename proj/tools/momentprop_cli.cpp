// momentprop command-line front end.
//
// Exit codes: 0 success, 1 parse/validation/precondition, 2 size limit, 3 divergence.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "momentprop/momentprop.hpp"

namespace mp = momentprop;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240501;
const std::filesystem::path kCacheDir = ".moment_cache";

struct Common {
  std::string model;
  std::size_t nt = 16;
  std::size_t steps = 8;
  std::size_t threads = 1;
  std::size_t size_limit = mp::kDefaultElementLimit;
  bool no_cache = false;
  std::string out;
  std::string engine = "auto";
  std::optional<std::uint64_t> seed;
};

/// --out file, or stdout when empty / "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw mp::ValidationError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("MOMENT_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw mp::ValidationError(std::string("MOMENT_SEED is not an integer: ") + env);
    return v;
  }
  return kDefaultSeed;
}

mp::EngineKind parse_engine(const std::string& s) {
  if (s == "dense") return mp::EngineKind::dense;
  if (s == "reduced") return mp::EngineKind::reduced;
  return mp::EngineKind::automatic;
}

mp::JStrategy parse_strategy(const std::string& s) {
  return s == "moment-norm" ? mp::JStrategy::by_moment_norm : mp::JStrategy::by_row_norm;
}

std::optional<std::filesystem::path> cache_dir(const Common& c) {
  if (c.no_cache) return std::nullopt;
  return kCacheDir;
}

mp::PolynomialSystemSpec load(const Common& c) {
  mp::set_element_limit(c.size_limit);
  return mp::load_model(c.model);
}

mp::MomentEngine build_engine(const mp::PolynomialSystemSpec& spec, const Common& c) {
  return mp::MomentEngine::build(spec, c.nt, c.threads, parse_engine(c.engine), cache_dir(c));
}

void write_blocks(mp::CsvWriter& csv, const mp::MomentEngine& eng, const mp::MomentEngine::State& s,
                  const std::vector<std::size_t>& blocks) {
  for (std::size_t j : blocks) {
    const mp::Vector v = eng.block(s, j);
    for (Eigen::Index i = 0; i < v.size(); ++i) csv.row() << s.t << j << i << v[i];
  }
}

// -----------------------------------------------------------------------------

int cmd_propagate(const Common& c, std::vector<std::size_t> blocks) {
  const auto spec = load(c);
  if (blocks.empty()) {
    blocks.push_back(1);
    if (c.nt >= 2) blocks.push_back(2);
  }
  for (std::size_t j : blocks) {
    if (j > c.nt) throw mp::PreconditionError("block " + std::to_string(j) + " exceeds --nt " + std::to_string(c.nt));
  }
  const auto eng = build_engine(spec, c);
  Output out(c.out);
  mp::CsvWriter csv(out.stream());
  mp::write_trajectory_header(csv);
  auto s = eng.initial(mp::InitialMomentEngine(spec.init));
  write_blocks(csv, eng, s, blocks);
  for (std::size_t k = 0; k < c.steps; ++k) {
    try {
      s = eng.step(s);
    } catch (const mp::DivergenceError& e) {
      csv.row() << s.t + 1 << "status" << "" << "diverged";
      csv.flush();
      std::cerr << "error: " << e.what() << "\n";
      return 3;
    }
    write_blocks(csv, eng, s, blocks);
  }
  csv.flush();
  return 0;
}

int cmd_error_bound(const Common& c, std::size_t j0, const std::string& strategy_name,
                    std::vector<std::size_t> sizes) {
  const auto spec = load(c);
  const auto strategy = parse_strategy(strategy_name);
  const auto ec = mp::build_error_coefficients(spec.coeffs, j0, c.steps, c.nt);
  const auto tab = mp::initial_moment_table(spec.init, ec.max_order());
  const std::size_t count = ec.max_order() + 1;
  if (sizes.empty()) {
    for (std::size_t k = 0; k < count; k += 2) sizes.push_back(k);
    if (sizes.back() != count) sizes.push_back(count);
  }
  for (std::size_t k : sizes) {
    if (k > count) {
      throw mp::PreconditionError("|J| = " + std::to_string(k) + " exceeds the " + std::to_string(count) +
                                  " available moment orders");
    }
  }
  if (ec.exact) std::cerr << "note: j0*d^t <= N_T, the truncated moments are exact and every bound is zero\n";

  Output out(c.out);
  mp::CsvWriter csv(out.stream());
  mp::write_bound_header(csv);
  const auto g = mp::global_bound(ec, tab.norms);
  const int exact = ec.exact ? 1 : 0;
  csv.row() << j0 << c.steps << c.nt << "" << "global" << "" << g.bound << g.xi << "" << g.norm_kind << exact;
  for (std::size_t k : sizes) {
    for (std::size_t i = 0; i < ec.rows(); ++i) {
      const auto J = mp::choose_J(ec, tab.norms, i, k, strategy);
      const auto rb = mp::refined_row_bound(ec, tab, i, J);
      csv.row() << j0 << c.steps << c.nt << k << mp::strategy_name(strategy) << i << rb.bound << g.xi << rb.xi_J
                << g.norm_kind << exact;
    }
  }
  csv.flush();
  return 0;
}

int cmd_tail(const Common& c, double p_max, std::size_t j_per_step, const std::string& strategy_name,
             std::size_t mc) {
  const auto spec = load(c);
  if (c.nt < 2) throw mp::PreconditionError("tail analysis needs --nt >= 2");
  if (!(p_max > 0.0 && p_max <= 1.0)) throw mp::PreconditionError("--pmax must lie in (0, 1]");
  const std::uint64_t seed = resolve_seed(c);
  const auto eng = build_engine(spec, c);
  mp::TailOptions opt;
  opt.j_per_step = j_per_step;
  opt.strategy = parse_strategy(strategy_name);

  Output out(c.out);
  mp::CsvWriter csv(out.stream());
  mp::write_tail_header(csv, mc > 0);
  auto s = eng.initial(mp::InitialMomentEngine(spec.init));
  for (std::size_t t = 0;; ++t) {
    std::optional<mp::TailRow> row;
    std::string status;
    try {
      row = mp::tail_row(mp::tail_inputs(spec, eng, s, opt), t, p_max);
      status = row->status;
    } catch (const mp::SizeLimitError& e) {
      status = "size-limit";
      std::cerr << "t=" << t << ": " << e.what() << "\n";
    }
    {
      auto r = csv.row();
      if (row) {
        r << t << row->alpha << row->bound_raw << row->bound_clamped << row->eps << row->numerator << status;
      } else {
        r << t << "" << "" << "" << "" << "" << status;
      }
      if (mc > 0) {
        if (row && std::isfinite(row->alpha)) {
          const auto et = mp::empirical_tail(spec, row->center, row->alpha, t, mc, seed, c.threads);
          const bool ok = et.frequency <= row->bound_clamped + 3.0 * et.standard_error;
          r << et.frequency << et.standard_error << (ok ? 1 : 0);
        } else {
          r << "" << "" << "";
        }
      }
    }
    csv.flush();
    if (t == c.steps) break;
    try {
      s = eng.step(s);
    } catch (const mp::DivergenceError& e) {
      csv.row() << t + 1 << "" << "" << "" << "" << "" << "diverged";
      csv.flush();
      std::cerr << "error: " << e.what() << "\n";
      return 3;
    }
  }
  return 0;
}

// -----------------------------------------------------------------------------

struct Timing {
  double mean_us = 0.0;
  double sd_us = 0.0;
};

template <typename Fn>
Timing time_reps(std::size_t reps, Fn&& fn) {
  std::vector<double> us;
  us.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn(r);
    const auto t1 = std::chrono::steady_clock::now();
    us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  Timing out;
  for (double v : us) out.mean_us += v;
  out.mean_us /= static_cast<double>(reps);
  if (reps > 1) {
    for (double v : us) out.sd_us += (v - out.mean_us) * (v - out.mean_us);
    out.sd_us = std::sqrt(out.sd_us / static_cast<double>(reps - 1));
  }
  return out;
}

int cmd_bench(const Common& c, const std::vector<std::size_t>& nts, const std::vector<std::size_t>& mcs,
              std::size_t reps) {
  const auto spec = load(c);
  if (reps == 0) throw mp::PreconditionError("--reps must be positive");
  const std::uint64_t seed = resolve_seed(c);
  const char* note = reps == 1 ? "high-variance" : "";

  Output out(c.out);
  mp::CsvWriter csv(out.stream());
  csv.header({"method", "size", "steps", "reps", "offline_us", "online_us", "online_sd_us", "note"});

  std::optional<double> prop16;
  std::optional<double> mc10k;
  const mp::InitialMomentEngine init(spec.init);
  for (std::size_t nt : nts) {
    Common cn = c;
    cn.nt = nt;
    cn.no_cache = true;
    std::optional<mp::MomentEngine> eng;
    const auto t0 = std::chrono::steady_clock::now();
    eng.emplace(build_engine(spec, cn));
    const auto s0 = eng->initial(init);
    const auto t1 = std::chrono::steady_clock::now();
    const double offline = std::chrono::duration<double, std::micro>(t1 - t0).count();
    double sink = 0.0;
    const Timing tm = time_reps(reps, [&](std::size_t) {
      auto s = s0;
      for (std::size_t k = 0; k < c.steps; ++k) s = eng->step(s);
      sink += s.y[1];
    });
    if (!std::isfinite(sink)) std::cerr << "note: N_T=" << nt << " produced non-finite moments\n";
    csv.row() << "propagation" << nt << c.steps << reps << offline << tm.mean_us << tm.sd_us << note;
    csv.flush();
    if (nt == 16) prop16 = tm.mean_us;
  }
  for (std::size_t m : mcs) {
    const Timing tm = time_reps(reps, [&](std::size_t r) {
      (void)mp::empirical_moments(spec, 1, c.steps, m, seed + r, c.threads);
    });
    csv.row() << "monte-carlo" << m << c.steps << reps << 0.0 << tm.mean_us << tm.sd_us << note;
    csv.flush();
    if (m == 10'000) mc10k = tm.mean_us;
  }
  if (prop16 && mc10k) {
    const double ratio = *mc10k / *prop16;
    csv.row() << "speedup-nt16-vs-mc10000" << "" << c.steps << reps << "" << ratio << "" << (ratio >= 10.0 ? "PASS" : "FAIL");
  }
  csv.flush();
  return 0;
}

// -----------------------------------------------------------------------------

/// For each initial source, the state component that equals it.
std::vector<std::size_t> measured_components(const mp::InitialStateModel& init) {
  std::vector<std::size_t> comp(init.sources.size(), init.components.size());
  for (std::size_t i = 0; i < init.components.size(); ++i) {
    const auto& e = init.components[i];
    if (e.kind() == mp::Expr::Kind::source && comp[e.source_index()] == init.components.size()) comp[e.source_index()] = i;
  }
  for (std::size_t s = 0; s < comp.size(); ++s) {
    if (comp[s] == init.components.size()) {
      throw mp::ValidationError("replay needs every initial source to appear as a plain state component (source " +
                                std::to_string(s) + " does not)");
    }
  }
  return comp;
}

int cmd_replay(const Common& c, std::size_t horizon, double noise, double p_max, std::size_t mc) {
  const auto spec = load(c);
  if (!(noise >= 0.0)) throw mp::PreconditionError("--noise must be non-negative");
  const std::uint64_t seed = resolve_seed(c);
  const auto comp = measured_components(spec.init);
  const auto eng = build_engine(spec, c);
  const std::size_t n = spec.coeffs.n;
  const auto truth = mp::sample_trajectory(spec, c.steps + horizon, seed, 0);
  const auto noise_dist = noise > 0.0 ? mp::ScalarDistribution::gaussian(0.0, noise) : mp::ScalarDistribution::point(0.0);

  Output out(c.out);
  mp::CsvWriter csv(out.stream());
  std::vector<std::string> head = {"step", "lookahead"};
  for (std::size_t i = 0; i < n; ++i) head.push_back("pred_" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i) head.push_back("truth_" + std::to_string(i));
  if (mc > 0) {
    for (std::size_t i = 0; i < n; ++i) head.push_back("mc_" + std::to_string(i));
  }
  head.insert(head.end(), {"distance_to_truth", "distance_to_mc", "radius", "radius_uncorrected", "status"});
  csv.header(head);

  mp::TailOptions opt;
  for (std::size_t k = 0; k < c.steps; ++k) {
    mp::PolynomialSystemSpec local = spec;
    for (std::size_t s = 0; s < comp.size(); ++s) {
      // measurement noise draws on sample index 1 so it never aliases the truth path
      const double z = truth[k][static_cast<Eigen::Index>(comp[s])] +
                       noise_dist.sample(mp::stream_uniform(seed, 1, k, s));
      local.init.sources[s] = noise > 0.0 ? mp::ScalarDistribution::gaussian(z, noise) : mp::ScalarDistribution::point(z);
    }
    std::vector<mp::EmpiricalMoments> emp;
    if (mc > 0) emp = mp::empirical_moment_trajectory(local, 1, horizon, mc, seed + 1 + k, c.threads);

    auto st = eng.initial(mp::InitialMomentEngine(local.init));
    for (std::size_t l = 0;; ++l) {
      const mp::Vector pred = eng.block(st, 1);
      const mp::Vector& tru = truth[k + l];
      std::string status = "ok";
      std::optional<double> radius;
      std::optional<double> radius_unc;
      if (c.nt >= 2) {
        mp::TailInputs plain;
        plain.x1 = pred;
        plain.x2_diag = eng.second_diagonal(st);
        plain.eps_i = plain.eps_ii = mp::Vector::Zero(static_cast<Eigen::Index>(n));
        radius_unc = mp::safety_radius(plain, p_max);
        try {
          const auto row = mp::tail_row(mp::tail_inputs(local, eng, st, opt), l, p_max);
          radius = row.alpha;
          status = row.status;
        } catch (const mp::SizeLimitError&) {
          status = "size-limit";
        }
      } else {
        status = "nt<2";
      }
      {
        auto r = csv.row();
        r << k << l;
        for (Eigen::Index i = 0; i < pred.size(); ++i) r << pred[i];
        for (Eigen::Index i = 0; i < tru.size(); ++i) r << tru[i];
        if (mc > 0) {
          for (Eigen::Index i = 0; i < pred.size(); ++i) r << emp[l].mean[i];
        }
        r << (pred - tru).norm();
        if (mc > 0) {
          r << (pred - emp[l].mean).norm();
        } else {
          r << "";
        }
        if (radius) {
          r << *radius;
        } else {
          r << "";
        }
        if (radius_unc) {
          r << *radius_unc;
        } else {
          r << "";
        }
        r << status;
      }
      if (l == horizon) break;
      try {
        st = eng.step(st);
      } catch (const mp::DivergenceError& e) {
        csv.row() << k << l + 1 << "diverged";
        csv.flush();
        std::cerr << "error: " << e.what() << "\n";
        return 3;
      }
    }
    csv.flush();
  }
  return 0;
}

// -----------------------------------------------------------------------------

int cmd_validate(const Common& c) {
  const auto spec = load(c);
  const std::size_t n = spec.coeffs.n;
  std::cout << "model: " << (spec.name.empty() ? "(unnamed)" : spec.name) << "\n"
            << "state dimension: " << n << "\n"
            << "degree: " << spec.coeffs.degree << "\n"
            << "parameters: " << spec.coeffs.num_params() << "\n"
            << "initial sources: " << spec.init.sources.size() << "\n"
            << "hash: " << std::hex << mp::model_hash(spec) << std::dec << "\n";
  const auto kind = mp::select_engine(n, c.nt);
  std::cout << "N_T=" << c.nt << ": dense dimension " << mp::BlockLayout(n, c.nt).total() << ", reduced dimension "
            << mp::reduced_dimension(n, c.nt) << ", engine " << mp::engine_name(kind) << "\n";
  return 0;
}

int cmd_demo(const std::string& which, const std::string& out) {
  if (which == "logistic") {
    const std::string path = out.empty() ? "logistic.json" : out;
    mp::save_model(mp::logistic_demo_model(), path);
    std::cout << "wrote " << path << "\n"
              << "  momentprop propagate   --model " << path << " --nt 16 --steps 8 --out logistic_moments.csv\n"
              << "  momentprop error-bound --model " << path << " --nt 16 --steps 4 --j0 2 --out logistic_bounds.csv\n"
              << "  momentprop tail        --model " << path << " --nt 16 --steps 5 --pmax 0.05 --mc 10000\n"
              << "  momentprop bench       --model " << path << " --nt-list 4,16,64,256 --mc-list 10,10000\n";
    return 0;
  }
  const std::string path = out.empty() ? "vehicle.json" : out;
  mp::save_model(mp::vehicle_demo_model(), path);
  std::cout << "wrote " << path << "\n";
  for (std::size_t nt : {2, 4, 8}) {
    std::cout << "  momentprop propagate --model " << path << " --nt " << nt << " --steps 10 --blocks 1 --out vehicle_nt"
              << nt << ".csv\n";
  }
  std::cout << "  momentprop replay    --model " << path << " --nt 8 --horizon 8 --steps 20 --noise 0.1 --mc 10000\n";
  const auto model = mp::vehicle_demo_model();
  if (!mp::exactness_condition(1, 2, model.coeffs.degree, 8)) {
    std::cout << "note: with degree " << model.coeffs.degree << ", first moments at t=2 need N_T >= "
              << model.coeffs.degree * model.coeffs.degree
              << "; at N_T=8 they are approximations, not exact values\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment propagation for stochastic polynomial systems"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub, bool needs_model = true) {
    auto* m = sub->add_option("--model", c.model, "model JSON file");
    if (needs_model) m->required();
    sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--size-limit", c.size_limit, "maximum matrix elements")->check(CLI::PositiveNumber);
    sub->add_flag("--no-cache", c.no_cache, "do not read or write ./.moment_cache/");
    sub->add_option("--out", c.out, "output file (default stdout)");
    sub->add_option("--engine", c.engine, "moment engine")->check(CLI::IsMember({"auto", "dense", "reduced"}));
  };

  std::vector<std::size_t> blocks;
  auto* propagate = app.add_subcommand("propagate", "write the truncated moment trajectory");
  add_common(propagate);
  propagate->add_option("--nt", c.nt, "truncation limit N_T");
  propagate->add_option("--steps", c.steps, "number of steps");
  propagate->add_option("--blocks", blocks, "moment orders to write (default 1,2)")->delimiter(',');

  std::size_t j0 = 1;
  std::string strategy = "row-norm";
  std::vector<std::size_t> j_sizes;
  auto* bound = app.add_subcommand("error-bound", "error bounds for the order-j0 moment at step t");
  add_common(bound);
  bound->add_option("--nt", c.nt, "truncation limit N_T");
  bound->add_option("--steps", c.steps, "step t");
  bound->add_option("--j0", j0, "moment order")->check(CLI::PositiveNumber);
  bound->add_option("--j-strategy", strategy, "index set choice")->check(CLI::IsMember({"row-norm", "moment-norm"}));
  bound->add_option("--j-sizes", j_sizes, "index set sizes (default 0,2,4,...,all)")->delimiter(',');

  double p_max = 0.05;
  std::size_t j_per_step = 6;
  std::size_t mc = 0;
  auto* tail = app.add_subcommand("tail", "safety radius per step at level p_max");
  add_common(tail);
  tail->add_option("--nt", c.nt, "truncation limit N_T");
  tail->add_option("--steps", c.steps, "last step");
  tail->add_option("--pmax", p_max, "exceedance probability");
  tail->add_option("--j-per-step", j_per_step, "|J| = value * t");
  tail->add_option("--j-strategy", strategy, "index set choice")->check(CLI::IsMember({"row-norm", "moment-norm"}));
  tail->add_option("--mc", mc, "Monte Carlo samples for the cross-check");
  tail->add_option("--seed", c.seed, "random seed (overrides MOMENT_SEED)");

  std::vector<std::size_t> nt_list = {4, 16, 64, 256};
  std::vector<std::size_t> mc_list = {10, 10'000};
  std::size_t reps = 100;
  auto* bench = app.add_subcommand("bench", "online timing of propagation against Monte Carlo");
  add_common(bench);
  bench->add_option("--steps", c.steps, "number of steps");
  bench->add_option("--nt-list", nt_list, "truncation limits")->delimiter(',');
  bench->add_option("--mc-list", mc_list, "Monte Carlo sample counts")->delimiter(',');
  bench->add_option("--reps", reps, "repetitions");
  bench->add_option("--seed", c.seed, "random seed (overrides MOMENT_SEED)");

  std::size_t horizon = 8;
  double noise = 0.1;
  auto* replay = app.add_subcommand("replay", "receding-horizon prediction along a simulated path");
  add_common(replay);
  replay->add_option("--nt", c.nt, "truncation limit N_T");
  replay->add_option("--steps", c.steps, "replay steps");
  replay->add_option("--horizon", horizon, "lookahead per step");
  replay->add_option("--noise", noise, "measurement noise standard deviation");
  replay->add_option("--pmax", p_max, "exceedance probability for the radius");
  replay->add_option("--mc", mc, "Monte Carlo samples per step for distance_to_mc");
  replay->add_option("--seed", c.seed, "random seed (overrides MOMENT_SEED)");

  auto* validate = app.add_subcommand("validate", "check a model file and report its dimensions");
  add_common(validate);
  validate->add_option("--nt", c.nt, "truncation limit N_T");

  std::string which;
  auto* demo = app.add_subcommand("demo", "write a demo model file to the working directory");
  demo->add_option("name", which, "logistic or vehicle")->required()->check(CLI::IsMember({"logistic", "vehicle"}));
  demo->add_option("--out", c.out, "model file path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (propagate->parsed()) return cmd_propagate(c, blocks);
    if (bound->parsed()) return cmd_error_bound(c, j0, strategy, j_sizes);
    if (tail->parsed()) return cmd_tail(c, p_max, j_per_step, strategy, mc);
    if (bench->parsed()) return cmd_bench(c, nt_list, mc_list, reps);
    if (replay->parsed()) return cmd_replay(c, horizon, noise, p_max, mc);
    if (validate->parsed()) return cmd_validate(c);
    if (demo->parsed()) return cmd_demo(which, c.out);
  } catch (const mp::SizeLimitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mp::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
