#include "sgdlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "sgdlab/version.hpp"

namespace sgdlab {

namespace {

constexpr double kLogFloor = 1e-300;

std::vector<InitInterval> effective_init(const EnsembleConfig& cfg, int dim) {
  if (cfg.init.empty()) return std::vector<InitInterval>(static_cast<std::size_t>(dim), InitInterval{});
  return cfg.init;
}

// Coordinates that left [-cap, cap] (or stopped being finite) are pinned to
// the cap, keeping their sign when it is known.
Vector freeze_at_cap(const Vector& w, const Vector& fallback, double cap) {
  Vector out = w;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (std::isfinite(w(i)) && std::abs(w(i)) <= cap) continue;
    const double sign_src = std::isnan(w(i)) ? fallback(i) : w(i);
    out(i) = std::copysign(cap, sign_src);
  }
  return out;
}

bool exceeds_cap(const Vector& w, double cap) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w(i)) || std::abs(w(i)) > cap) return true;
  }
  return false;
}

// True when w = 0 is a fixed point of every update rule: all sampled
// gradients and the mean gradient vanish there.
bool origin_is_fixed(const StochasticObjective& obj) {
  const Vector zero = Vector::Zero(obj.dim());
  for (const Atom& atom : obj.noise().atoms()) {
    if (atom.prob == 0.0) continue;
    if (!obj.sample_grad(zero, atom.value).isZero(0.0)) return false;
  }
  return obj.mean_grad(zero).isZero(0.0);
}

struct RunContext {
  const StochasticObjective& obj;
  const HyperParams& hp;
  const BoxConstraint& box;
  const EnsembleConfig& cfg;
  std::vector<InitInterval> init;
  bool origin_fixed;
};

void simulate_run(const RunContext& ctx, std::size_t run, RunRecord& rec, double* snaps) {
  const int dim = ctx.obj.dim();
  const auto& schedule = ctx.cfg.snapshot_steps;
  const double cap = ctx.cfg.divergence_cap;

  RngStream rng = RngStream::for_run(ctx.cfg.master_seed, run);
  Vector w0(dim);
  for (int i = 0; i < dim; ++i) {
    const InitInterval& iv = ctx.init[static_cast<std::size_t>(i)];
    w0(i) = iv.lo == iv.hi ? iv.lo : rng.uniform(iv.lo, iv.hi);
  }
  rec.initial = w0;
  OptimizerState state = OptimizerState::initial(ctx.box.enabled ? project(OptimizerState::initial(w0), ctx.box).w : w0);

  std::size_t next_snap = 0;
  auto record_until = [&](std::int64_t t) {
    while (next_snap < schedule.size() && schedule[next_snap] <= t) {
      for (int i = 0; i < dim; ++i) snaps[next_snap * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i)] = state.w(i);
      ++next_snap;
    }
  };
  record_until(0);

  rec.status = RunStatus::running;
  for (std::int64_t t = 1; t <= ctx.cfg.n_steps; ++t) {
    const Vector prev = state.w;
    try {
      step_in_place(state, ctx.obj, ctx.hp, ctx.box, rng);
      if (exceeds_cap(state.w, cap)) {
        state.w = freeze_at_cap(state.w, prev, cap);
        rec.status = RunStatus::diverged;
        rec.first_divergence_step = t;
      }
    } catch (const DivergenceError&) {
      state.w = freeze_at_cap(state.w, prev, cap);
      rec.status = RunStatus::diverged;
      rec.first_divergence_step = t;
    }
    if (rec.status == RunStatus::diverged) {
      record_until(ctx.cfg.n_steps);
      break;
    }
    if (ctx.origin_fixed && state.w.isZero(0.0) && state.m.isZero(0.0)) {
      rec.status = RunStatus::absorbed_zero;
      rec.absorbed_step = t;
      record_until(ctx.cfg.n_steps);
      break;
    }
    record_until(t);
  }
  if (rec.status == RunStatus::running) rec.status = RunStatus::completed;
  rec.terminal = state.w;
}

}  // namespace

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::absorbed_zero: return "absorbed_zero";
    case RunStatus::diverged: return "diverged";
    case RunStatus::completed: return "completed";
  }
  return "?";
}

void EnsembleConfig::validate(int dim) const {
  if (n_runs <= 0) throw ConfigError("n_runs must be positive");
  if (n_steps <= 0) throw ConfigError("n_steps must be positive");
  if (!(divergence_cap > 0.0) || !std::isfinite(divergence_cap)) throw ConfigError("divergence_cap must be > 0");
  if (!init.empty() && static_cast<int>(init.size()) != dim) {
    throw ConfigError("init needs one interval per coordinate (" + std::to_string(dim) + ")");
  }
  for (const InitInterval& iv : init) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw ConfigError("init interval must be finite with lo <= hi");
    }
  }
  for (std::size_t i = 0; i < snapshot_steps.size(); ++i) {
    const auto s = snapshot_steps[i];
    if (s < 0 || s > n_steps) throw ConfigError("snapshot step " + std::to_string(s) + " outside [0, n_steps]");
    if (i > 0 && s <= snapshot_steps[i - 1]) throw ConfigError("snapshot_steps must be sorted and unique");
  }
}

nlohmann::json EnsembleConfig::to_json() const {
  nlohmann::json j;
  j["n_runs"] = n_runs;
  j["n_steps"] = n_steps;
  j["master_seed"] = master_seed;
  j["snapshot_steps"] = snapshot_steps;
  j["divergence_cap"] = divergence_cap;
  nlohmann::json iv = nlohmann::json::array();
  for (const InitInterval& i : init) iv.push_back({i.lo, i.hi});
  j["init"] = iv;
  return j;
}

Vector EnsembleResult::snapshot(std::size_t run, std::size_t snapshot_index) const {
  Vector w(dim);
  const std::size_t base = (run * n_snapshots() + snapshot_index) * static_cast<std::size_t>(dim);
  for (int i = 0; i < dim; ++i) w(i) = snapshot_data[base + static_cast<std::size_t>(i)];
  return w;
}

std::size_t EnsembleResult::snapshot_index(std::int64_t step) const {
  const auto& s = config.snapshot_steps;
  const auto it = std::find(s.begin(), s.end(), step);
  if (it == s.end()) throw ConfigError("step " + std::to_string(step) + " was not snapshotted");
  return static_cast<std::size_t>(it - s.begin());
}

std::int64_t EnsembleResult::count(RunStatus status) const {
  return std::count_if(runs.begin(), runs.end(), [&](const RunRecord& r) { return r.status == status; });
}

EnsembleResult run_ensemble(const StochasticObjective& obj, const HyperParams& hp, const BoxConstraint& box,
                            const EnsembleConfig& cfg) {
  const int dim = obj.dim();
  hp.validate();
  box.validate(dim);
  cfg.validate(dim);

  EnsembleResult result;
  result.dim = dim;
  result.config = cfg;
  const auto n_runs = static_cast<std::size_t>(cfg.n_runs);
  const std::size_t per_run = cfg.snapshot_steps.size() * static_cast<std::size_t>(dim);
  result.runs.resize(n_runs);
  result.snapshot_data.assign(n_runs * per_run, 0.0);

  const RunContext ctx{obj, hp, box, cfg, effective_init(cfg, dim), origin_is_fixed(obj)};

  unsigned n_threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_runs));

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&](unsigned k) {
    try {
      for (std::size_t r = k; r < n_runs; r += n_threads) {
        simulate_run(ctx, r, result.runs[r], result.snapshot_data.data() + r * per_run);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (n_threads <= 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker, k);
  }
  if (failure) std::rethrow_exception(failure);

  if (result.count(RunStatus::diverged) == cfg.n_runs) result.warnings.emplace_back("all runs diverged");

  result.provenance = {{"version", kVersion},
                       {"landscape", obj.describe()},
                       {"hyperparams", hp.to_json()},
                       {"box", box.to_json()},
                       {"ensemble", cfg.to_json()}};
  return result;
}

double escape_probability(const EnsembleResult& result, double tau) {
  if (!(tau > 0.0)) throw ConfigError("escape threshold must be > 0");
  if (result.runs.empty()) return 0.0;
  std::int64_t escaped = 0;
  for (const RunRecord& r : result.runs) {
    if (r.status == RunStatus::diverged || r.terminal.norm() > tau) ++escaped;
  }
  return static_cast<double>(escaped) / static_cast<double>(result.runs.size());
}

EscapeRateEstimate escape_rate_estimate(const EnsembleResult& result, std::int64_t t_est) {
  if (t_est <= 0) throw ConfigError("t_est must be positive");
  const std::size_t s = result.snapshot_index(t_est);
  EscapeRateEstimate out;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const double n0 = result.runs[r].initial.norm();
    if (n0 == 0.0) throw ConfigError("escape rate needs w_0 != 0 for every run");
    const double nt = result.snapshot(r, s).norm();
    if (nt == 0.0) {
      ++out.n_zero;
      continue;
    }
    const double g = std::log(std::max(nt, kLogFloor) / n0) / static_cast<double>(t_est);
    sum += g;
    sum_sq += g * g;
    ++out.n_used;
  }
  if (out.n_used == 0) {
    out.gamma = -std::numeric_limits<double>::infinity();
    out.stderr_ = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const auto n = static_cast<double>(out.n_used);
  out.gamma = sum / n;
  if (out.n_used > 1) {
    const double var = std::max(0.0, (sum_sq - n * out.gamma * out.gamma) / (n - 1.0));
    out.stderr_ = std::sqrt(var / n);
  }
  return out;
}

std::int64_t Histogram::total() const {
  std::int64_t t = underflow + overflow;
  for (auto c : counts) t += c;
  return t;
}

double Histogram::bin_center(std::size_t i) const {
  const double w = (hi - lo) / static_cast<double>(counts.size());
  return lo + w * (static_cast<double>(i) + 0.5);
}

namespace {

// Bin of v in [lo, hi] with the right edge folded into the last bin; -1 or
// `bins` for out-of-range values.
std::ptrdiff_t bin_of(double v, double lo, double hi, std::size_t bins) {
  if (!std::isfinite(v) || v > hi) return static_cast<std::ptrdiff_t>(bins);
  if (v < lo) return -1;
  auto k = static_cast<std::ptrdiff_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
  return std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(bins) - 1);
}

void check_range(std::size_t bins, double lo, double hi) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) throw ConfigError("histogram range must be lo < hi");
}

}  // namespace

Histogram histogram(const EnsembleResult& result, std::size_t snapshot_index, std::size_t bins, double lo, double hi,
                    int coord) {
  check_range(bins, lo, hi);
  if (snapshot_index >= result.n_snapshots()) throw ConfigError("snapshot index out of range");
  if (coord < 0 || coord >= result.dim) throw ConfigError("coordinate out of range");
  Histogram h{lo, hi, std::vector<std::int64_t>(bins, 0), 0, 0};
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const auto k = bin_of(result.snapshot(r, snapshot_index)(coord), lo, hi, bins);
    if (k < 0) {
      ++h.underflow;
    } else if (k == static_cast<std::ptrdiff_t>(bins)) {
      ++h.overflow;
    } else {
      ++h.counts[static_cast<std::size_t>(k)];
    }
  }
  return h;
}

Histogram2D histogram2d(const EnsembleResult& result, std::size_t snapshot_index, std::size_t nx, double x_lo,
                        double x_hi, std::size_t ny, double y_lo, double y_hi) {
  check_range(nx, x_lo, x_hi);
  check_range(ny, y_lo, y_hi);
  if (result.dim != 2) throw ConfigError("2-D histogram needs a 2-D landscape");
  if (snapshot_index >= result.n_snapshots()) throw ConfigError("snapshot index out of range");
  Histogram2D h{x_lo, x_hi, y_lo, y_hi, nx, ny, std::vector<std::int64_t>(nx * ny, 0), 0};
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const Vector w = result.snapshot(r, snapshot_index);
    const auto ix = bin_of(w(0), x_lo, x_hi, nx);
    const auto iy = bin_of(w(1), y_lo, y_hi, ny);
    if (ix < 0 || iy < 0 || ix >= static_cast<std::ptrdiff_t>(nx) || iy >= static_cast<std::ptrdiff_t>(ny)) {
      ++h.outside;
    } else {
      ++h.counts[static_cast<std::size_t>(ix) * ny + static_cast<std::size_t>(iy)];
    }
  }
  return h;
}

std::int64_t ClassificationCounts::count(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return counts[i];
  }
  throw ConfigError("no catalog entry labelled '" + std::string(label) + "'");
}

ClassificationCounts classify_terminal(const EnsembleResult& result, std::span<const CriticalPoint> catalog,
                                       double radius) {
  if (!(radius > 0.0)) throw ConfigError("classification radius must be > 0");
  ClassificationCounts out;
  for (const CriticalPoint& cp : catalog) out.labels.push_back(cp.label);
  out.counts.assign(catalog.size(), 0);
  for (const RunRecord& r : result.runs) {
    if (r.status == RunStatus::diverged) {
      ++out.diverged;
      continue;
    }
    std::size_t best = catalog.size();
    double best_d = radius;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      const double d = catalog[i].distance_to(r.terminal);
      if (d <= best_d) {
        best_d = d;
        best = i;
        if (d == 0.0) break;
      }
    }
    if (best == catalog.size()) {
      ++out.unclassified;
    } else {
      ++out.counts[best];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(LandscapeFamily family) {
  return family == LandscapeFamily::quadratic ? "quadratic" : "quartic";
}

std::vector<double> SweepAxis::values() const {
  if (n < 2) throw ConfigError("sweep axis needs at least 2 points");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) throw ConfigError("sweep axis needs lo < hi");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

std::vector<double> PhaseDiagramGrid::row(std::size_t ia) const {
  const auto first = escape_probability.begin() + static_cast<std::ptrdiff_t>(ia * lr_values.size());
  return {first, first + static_cast<std::ptrdiff_t>(lr_values.size())};
}

double default_escape_threshold(LandscapeFamily family, double a) {
  if (family == LandscapeFamily::quadratic) return 10.0;
  return a < 0.0 ? 0.5 * std::sqrt(-a / 2.0) : 0.5;
}

PhaseDiagramGrid phase_sweep(LandscapeFamily family, const SweepAxis& a_axis, const SweepAxis& lr_axis,
                             const EnsembleConfig& cfg, std::optional<double> tau) {
  PhaseDiagramGrid grid;
  grid.family = family;
  grid.a_values = a_axis.values();
  grid.lr_values = lr_axis.values();
  if (grid.lr_values.front() < 0.0) throw ConfigError("learning rates must be >= 0");
  if (tau && !(*tau > 0.0)) throw ConfigError("escape threshold must be > 0");
  const std::size_t n_lr = grid.lr_values.size();
  grid.escape_probability.assign(grid.a_values.size() * n_lr, 0.0);
  grid.diverged.assign(grid.a_values.size() * n_lr, 0);

  for (std::size_t ia = 0; ia < grid.a_values.size(); ++ia) {
    const double a = grid.a_values[ia];
    grid.theory_boundary.push_back(trapped_interval(a));
    std::unique_ptr<StochasticObjective> obj;
    if (family == LandscapeFamily::quadratic) {
      obj = std::make_unique<QuadraticObjective>(a);
    } else {
      obj = std::make_unique<QuarticObjective>(a);
    }
    const double threshold = tau.value_or(default_escape_threshold(family, a));
    for (std::size_t il = 0; il < n_lr; ++il) {
      HyperParams hp;
      hp.rule = UpdateRule::sgd;
      hp.lr = grid.lr_values[il];
      const EnsembleResult res = run_ensemble(*obj, hp, BoxConstraint::none(), cfg);
      const std::size_t cell = ia * n_lr + il;
      grid.escape_probability[cell] = escape_probability(res, threshold);
      grid.diverged[cell] = res.count(RunStatus::diverged) == cfg.n_runs ? 1 : 0;
    }
  }
  return grid;
}

std::vector<Crossing> level_crossings(std::span<const double> xs, std::span<const double> values, double level) {
  if (xs.size() != values.size()) throw ConfigError("level_crossings: size mismatch");
  std::vector<Crossing> out;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const bool above0 = values[i - 1] >= level;
    const bool above1 = values[i] >= level;
    if (above0 == above1) continue;
    const double d0 = values[i - 1] - level;
    const double d1 = values[i] - level;
    const double t = d0 / (d0 - d1);
    out.push_back({xs[i - 1] + t * (xs[i] - xs[i - 1]), above1});
  }
  return out;
}

}  // namespace sgdlab
