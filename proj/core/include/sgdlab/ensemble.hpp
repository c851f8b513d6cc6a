#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgdlab/landscapes.hpp"
#include "sgdlab/optimizers.hpp"
#include "sgdlab/theory.hpp"
#include "sgdlab/types.hpp"

namespace sgdlab {

struct InitInterval {
  double lo = -1.0;
  double hi = 1.0;
};

struct EnsembleConfig {
  std::int64_t n_runs = 2000;
  std::int64_t n_steps = 1000;
  std::vector<InitInterval> init;  // one per coordinate; empty means U[-1, 1]
  std::uint64_t master_seed = 0;
  std::vector<std::int64_t> snapshot_steps;  // sorted, unique, within [0, n_steps]
  double divergence_cap = 1e12;
  unsigned threads = 0;  // 0: hardware concurrency. Never affects results.

  void validate(int dim) const;
  nlohmann::json to_json() const;
};

enum class RunStatus { running, absorbed_zero, diverged, completed };

std::string_view to_string(RunStatus status);

struct RunRecord {
  RunStatus status = RunStatus::running;
  Vector initial;
  Vector terminal;
  std::optional<std::int64_t> first_divergence_step;
  std::optional<std::int64_t> absorbed_step;
};

struct EnsembleResult {
  int dim = 1;
  EnsembleConfig config;
  std::vector<RunRecord> runs;
  std::vector<double> snapshot_data;  // run-major: [run][snapshot][coord]
  nlohmann::json provenance;
  std::vector<std::string> warnings;

  std::size_t n_snapshots() const { return config.snapshot_steps.size(); }
  Vector snapshot(std::size_t run, std::size_t snapshot_index) const;
  /// Index of `step` in the snapshot schedule; throws ConfigError if absent.
  std::size_t snapshot_index(std::int64_t step) const;
  std::int64_t count(RunStatus status) const;
};

/// Runs n_runs independent trajectories. Run i draws its initial point and all
/// noise from RngStream::for_run(master_seed, i), so the result is
/// bit-identical for any thread count.
///
/// A run stops early once it is absorbed (w and m exactly zero at a point
/// where every sampled gradient vanishes) or diverges (|w_i| > cap or a
/// non-finite update). Diverged runs are frozen at the last iterate with
/// coordinates clamped to +-cap.
EnsembleResult run_ensemble(const StochasticObjective& obj, const HyperParams& hp, const BoxConstraint& box,
                            const EnsembleConfig& cfg);

/// Fraction of runs whose terminal |w| exceeds tau, or that diverged.
double escape_probability(const EnsembleResult& result, double tau);

struct EscapeRateEstimate {
  double gamma = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_used = 0;
  std::int64_t n_zero = 0;  // exactly-zero iterates, excluded from the mean
};

/// gamma_hat = mean over runs of (1/t) ln(|w_t| / |w_0|), |w_t| floored at
/// 1e-300. t_est must be a snapshot step > 0 and every w_0 non-zero.
EscapeRateEstimate escape_rate_estimate(const EnsembleResult& result, std::int64_t t_est);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::int64_t> counts;
  std::int64_t underflow = 0;
  std::int64_t overflow = 0;  // includes non-finite values

  std::int64_t total() const;
  double bin_center(std::size_t i) const;
};

/// Equal-width histogram of one coordinate at a snapshot; the last bin is
/// closed on the right.
Histogram histogram(const EnsembleResult& result, std::size_t snapshot_index, std::size_t bins, double lo, double hi,
                    int coord = 0);

struct Histogram2D {
  double x_lo, x_hi, y_lo, y_hi;
  std::size_t nx, ny;
  std::vector<std::int64_t> counts;  // row-major [ix][iy]
  std::int64_t outside = 0;
};

Histogram2D histogram2d(const EnsembleResult& result, std::size_t snapshot_index, std::size_t nx, double x_lo,
                        double x_hi, std::size_t ny, double y_lo, double y_hi);

struct ClassificationCounts {
  std::vector<std::string> labels;
  std::vector<std::int64_t> counts;
  std::int64_t diverged = 0;
  std::int64_t unclassified = 0;

  std::int64_t count(std::string_view label) const;
};

/// Assigns each run to the nearest catalog entry within `radius` (manifolds by
/// distance to the manifold).
ClassificationCounts classify_terminal(const EnsembleResult& result, std::span<const CriticalPoint> catalog,
                                       double radius);

// ---------------------------------------------------------------------------
// Phase diagrams

enum class LandscapeFamily { quadratic, quartic };

std::string_view to_string(LandscapeFamily family);

struct SweepAxis {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 2;

  std::vector<double> values() const;
};

struct PhaseDiagramGrid {
  LandscapeFamily family = LandscapeFamily::quadratic;
  std::vector<double> a_values;
  std::vector<double> lr_values;
  std::vector<double> escape_probability;  // row-major [a][lr]
  std::vector<char> diverged;              // every run in the cell diverged
  std::vector<TrappedInterval> theory_boundary;  // one per a value

  double at(std::size_t ia, std::size_t ilr) const { return escape_probability[ia * lr_values.size() + ilr]; }
  std::vector<double> row(std::size_t ia) const;
};

/// Default escape threshold: 10 for the quadratic; half the distance to the
/// quartic's minima (1/2 sqrt(-a/2)) for a < 0, and 1/2 otherwise.
double default_escape_threshold(LandscapeFamily family, double a);

/// Runs SGD for every (a, lr) cell with the same config (and seed) and records
/// escape_probability. `tau` overrides the per-family default threshold.
PhaseDiagramGrid phase_sweep(LandscapeFamily family, const SweepAxis& a_axis, const SweepAxis& lr_axis,
                             const EnsembleConfig& cfg, std::optional<double> tau = std::nullopt);

struct Crossing {
  double lr;
  bool rising;  // probability increases through the level
};

/// Linear-interpolated points where `values` crosses `level` along `xs`.
std::vector<Crossing> level_crossings(std::span<const double> xs, std::span<const double> values, double level = 0.5);

}  // namespace sgdlab
