#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>

#include "sgdlab/audit.hpp"
#include "sgdlab/ensemble.hpp"
#include "sgdlab/io.hpp"
#include "sgdlab/theory.hpp"
#include "sgdlab/version.hpp"
#include "svg.hpp"

namespace sgdlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// The output directory is left out so artifacts do not depend on where they
// were written.
json recorded_config(const Settings& settings) {
  json cfg = settings.resolved();
  cfg.erase("out");
  return cfg;
}

}  // namespace

void ExperimentContext::write_csv(const std::string& name, const std::function<void(std::ostream&)>& fill,
                                  const json& extra) const {
  fs::create_directories(out_dir);
  {
    std::ofstream os(out_dir / name, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + (out_dir / name).string());
    fill(os);
  }
  json prov = {{"artifact", name},
               {"command", command},
               {"config", recorded_config(settings)},
               {"seed", settings.resolved().value("seed", json())},
               {"version", kVersion}};
  for (const auto& [k, v] : extra.items()) prov[k] = v;
  write_json_file(out_dir / (fs::path(name).stem().string() + ".provenance.json"), prov);
}

void ExperimentContext::write_summary(const json& summary) const {
  fs::create_directories(out_dir);
  json j = summary;
  j["command"] = command;
  j["config"] = recorded_config(settings);
  j["version"] = kVersion;
  write_json_file(out_dir / "summary.json", j);
}

namespace {

// ---------------------------------------------------------------------------
// shared option handling

EnsembleConfig ensemble_config(Settings& s, std::int64_t runs, std::int64_t steps) {
  EnsembleConfig cfg;
  cfg.n_runs = s.integer("runs", runs);
  cfg.n_steps = s.integer("steps", steps);
  cfg.master_seed = s.seed("seed", 1);
  const auto threads = s.integer("threads", 0);
  if (threads < 0) throw ConfigError("--threads must be >= 0");
  cfg.threads = static_cast<unsigned>(threads);
  if (cfg.n_runs <= 0 || cfg.n_steps <= 0) throw ConfigError("--runs and --steps must be positive");
  return cfg;
}

BoxConstraint box_option(Settings& s, int dim, const std::string& fallback) {
  const std::string text = s.text("box", fallback);
  if (text == "none" || text.empty()) return BoxConstraint::none();
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("--box: expected lo,hi or none");
  const double lo = parse_number(std::string_view(text).substr(0, comma), "box");
  const double hi = parse_number(std::string_view(text).substr(comma + 1), "box");
  if (!(lo <= hi)) throw ConfigError("--box: lo must not exceed hi");
  return BoxConstraint::uniform(dim, lo, hi);
}

HyperParams hyper_params(Settings& s, UpdateRule rule, double lr) {
  HyperParams hp;
  hp.rule = parse_update_rule(s.text("rule", std::string(to_string(rule))));
  hp.lr = s.number("lr", lr);
  hp.beta1 = s.number("beta1", 0.0);
  hp.beta2 = s.number("beta2", 0.999);
  hp.validate();
  return hp;
}

std::vector<std::int64_t> schedule(std::initializer_list<std::int64_t> wanted, std::int64_t steps) {
  std::set<std::int64_t> s{steps};
  for (auto t : wanted) {
    if (t >= 0 && t <= steps) s.insert(t);
  }
  return {s.begin(), s.end()};
}

std::vector<std::int64_t> log_schedule(std::int64_t steps, int per_decade = 10) {
  std::set<std::int64_t> s{0, steps};
  for (int k = 0;; ++k) {
    const auto t = std::llround(std::pow(10.0, static_cast<double>(k) / per_decade));
    if (t > steps) break;
    s.insert(t);
  }
  return {s.begin(), s.end()};
}

std::vector<double> linspace(double lo, double hi, std::int64_t n) {
  if (n < 1) throw ConfigError("need at least one grid point");
  if (n == 1) return {lo};
  return SweepAxis{lo, hi, static_cast<std::size_t>(n)}.values();
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr m;
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double n = static_cast<double>(xs.size());
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

MeanStderr mean_abs_at(const EnsembleResult& res, std::size_t snap) {
  std::vector<double> v;
  v.reserve(res.runs.size());
  for (std::size_t r = 0; r < res.runs.size(); ++r) v.push_back(res.snapshot(r, snap).norm());
  return mean_stderr(v);
}

json trapped_json(const TrappedInterval& iv) {
  return {{"lr_lo", iv.lr_lo},
          {"lr_hi", std::isnan(iv.lr_hi) ? json() : json(iv.lr_hi)},
          {"exists", iv.exists},
          {"minimum_instability", iv.minimum_instability}};
}

json status_counts(const EnsembleResult& res) {
  json j;
  for (auto st : {RunStatus::completed, RunStatus::absorbed_zero, RunStatus::diverged}) {
    j[std::string(to_string(st))] = res.count(st);
  }
  return j;
}

void write_density2d(std::ostream& os, const std::vector<std::pair<std::int64_t, Histogram2D>>& hs) {
  CsvWriter csv(os, {"step", "w1", "w2", "count"});
  for (const auto& [step, h] : hs) {
    const double dx = (h.x_hi - h.x_lo) / static_cast<double>(h.nx);
    const double dy = (h.y_hi - h.y_lo) / static_cast<double>(h.ny);
    for (std::size_t ix = 0; ix < h.nx; ++ix) {
      for (std::size_t iy = 0; iy < h.ny; ++iy) {
        csv.cell(step)
            .cell(h.x_lo + dx * (static_cast<double>(ix) + 0.5))
            .cell(h.y_lo + dy * (static_cast<double>(iy) + 0.5))
            .cell(h.counts[ix * h.ny + iy])
            .end_row();
      }
    }
  }
}

void density_svg(const ExperimentContext& ctx, const Histogram2D& h, const std::string& file, const std::string& title) {
  std::vector<double> xs, ys, vals(h.nx * h.ny);
  const double dx = (h.x_hi - h.x_lo) / static_cast<double>(h.nx);
  const double dy = (h.y_hi - h.y_lo) / static_cast<double>(h.ny);
  for (std::size_t i = 0; i < h.nx; ++i) xs.push_back(h.x_lo + dx * (static_cast<double>(i) + 0.5));
  for (std::size_t i = 0; i < h.ny; ++i) ys.push_back(h.y_lo + dy * (static_cast<double>(i) + 0.5));
  double vmax = 0.0;
  for (std::size_t ix = 0; ix < h.nx; ++ix) {
    for (std::size_t iy = 0; iy < h.ny; ++iy) {
      const double v = std::log1p(static_cast<double>(h.counts[ix * h.ny + iy]));
      vals[iy * h.nx + ix] = v;
      vmax = std::max(vmax, v);
    }
  }
  svg::Plot plot(title, "w1", "w2");
  plot.heatmap(xs, ys, vals, 0.0, vmax);
  plot.set_x_range(h.x_lo, h.x_hi);
  plot.set_y_range(h.y_lo, h.y_hi);
  plot.save(ctx.out_dir / file);
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

// ---------------------------------------------------------------------------

json cmd_converge_quadratic(ExperimentContext& ctx) {
  Settings& s = ctx.settings;
  const double a = s.number("a", -1.0);
  const HyperParams hp = hyper_params(s, UpdateRule::sgd, 0.8);
  EnsembleConfig cfg = ensemble_config(s, 2000, 1000);
  cfg.snapshot_steps = schedule({0, 10, 100, 1000}, cfg.n_steps);
  const double tau = s.number("tau", 10.0);
  const auto bins = s.integer("bins", 41);
  const double range = s.number("range", 2.0);
  if (bins < 1 || !(range > 0.0)) throw ConfigError("--bins and --range must be positive");
  const QuadraticObjective obj(a);
  const BoxConstraint box = box_option(s, 1, "none");

  const EnsembleResult res = run_ensemble(obj, hp, box, cfg);

  std::vector<std::pair<std::int64_t, Histogram>> hists;
  for (std::size_t i = 0; i < res.n_snapshots(); ++i) {
    hists.emplace_back(cfg.snapshot_steps[i], histogram(res, i, static_cast<std::size_t>(bins), -range, range));
  }
  std::int64_t small = 0;
  for (const RunRecord& r : res.runs) small += r.terminal.norm() < 1e-6 ? 1 : 0;

  const LogContractionStats lc = log_contraction(obj.noise(), hp.lr);
  const TrappedInterval iv = trapped_interval(a);
  const double p_escape = escape_probability(res, tau);
  json summary = {{"escape_probability", p_escape},
                  {"tau", tau},
                  {"fraction_below_1e-6", static_cast<double>(small) / static_cast<double>(cfg.n_runs)},
                  {"status_counts", status_counts(res)},
                  {"theory",
                   {{"mu", lc.absorbing ? json("-inf") : json(lc.mu)},
                    {"s2", lc.absorbing ? json() : json(lc.s2)},
                    {"absorbing_atom", lc.absorbing},
                    {"trapped_interval", trapped_json(iv)},
                    {"lr_in_trapped_interval", iv.contains(hp.lr)}}},
                  {"warnings", res.warnings}};

  ctx.write_csv("histogram.csv", [&](std::ostream& os) { write_histogram_csv(os, hists); }, res.provenance);
  ctx.write_csv("runs.csv", [&](std::ostream& os) { write_runs_csv(os, res); }, res.provenance);
  ctx.write_csv("snapshots.csv", [&](std::ostream& os) { write_snapshots_csv(os, res); }, res.provenance);
  ctx.write_summary(summary);
  if (ctx.svg) {
    svg::Plot plot("SGD iterates on the quadratic, a=" + fmt(a) + " lr=" + fmt(hp.lr), "w", "runs");
    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
    for (std::size_t i = 0; i < hists.size(); ++i) {
      std::vector<double> c, h;
      for (std::size_t k = 0; k < hists[i].second.counts.size(); ++k) {
        c.push_back(hists[i].second.bin_center(k));
        h.push_back(static_cast<double>(hists[i].second.counts[k]));
      }
      plot.bars(c, h, colors[i % 5], "t=" + std::to_string(hists[i].first));
    }
    plot.save(ctx.out_dir / "histogram.svg");
  }

  ctx.out << "escape probability (tau=" << fmt(tau) << "): " << fmt(p_escape) << '\n';
  ctx.out << "fraction |w_T| < 1e-6: " << fmt(summary["fraction_below_1e-6"].get<double>()) << '\n';
  ctx.out << "mu = " << (lc.absorbing ? std::string("-inf") : fmt(lc.mu)) << ", trapped interval ("
          << fmt(iv.lr_lo) << ", " << fmt(iv.lr_hi) << ")\n";
  for (const auto& w : res.warnings) ctx.out << "warning: " << w << '\n';
  return summary;
}

json cmd_phase_diagram(ExperimentContext& ctx) {
  Settings& s = ctx.settings;
  const std::string fam = s.text("landscape", "quadratic");
  LandscapeFamily family;
  if (fam == "quadratic") {
    family = LandscapeFamily::quadratic;
  } else if (fam == "quartic") {
    family = LandscapeFamily::quartic;
  } else {
    throw ConfigError("--landscape must be quadratic or quartic for phase-diagram");
  }
  const auto [na, nlr] = s.grid("grid", {20, 80});
  const auto [a_lo, a_hi] = s.range("a-range", {-2.0, -0.1});
  const auto [lr_lo, lr_hi] = s.range("lr-range", {0.02, 1.6});
  const auto tau = s.optional_number("tau");
  const double S = s.number("S", 1.0);
  EnsembleConfig cfg = ensemble_config(s, 500, 1000);

  const PhaseDiagramGrid pg = phase_sweep(family, {a_lo, a_hi, static_cast<std::size_t>(na)},
                                          {lr_lo, lr_hi, static_cast<std::size_t>(nlr)}, cfg, tau);

  json crossings = json::array();
  for (std::size_t ia = 0; ia < pg.a_values.size(); ++ia) {
    const auto row = pg.row(ia);
    for (const Crossing& c : level_crossings(pg.lr_values, row, 0.5)) {
      crossings.push_back({{"a", pg.a_values[ia]}, {"lr", c.lr}, {"rising", c.rising}});
    }
  }
  const json extra = {{"family", std::string(to_string(family))}, {"ensemble", cfg.to_json()}};
  ctx.write_csv("grid.csv", [&](std::ostream& os) { write_phase_grid_csv(os, pg); }, extra);
  ctx.write_csv("boundary.csv", [&](std::ostream& os) { write_boundary_csv(os, pg); }, extra);
  ctx.write_csv("continuous_boundary.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"a", "S", "lr"});
    for (double a : pg.a_values) {
      if (a < 0.0) csv.cell(a).cell(S).cell(continuous_escape_boundary(a, S)).end_row();
    }
  }, extra);
  ctx.write_csv("crossings.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"a", "lr", "rising"});
    for (const auto& c : crossings) {
      csv.cell(c["a"].get<double>()).cell(c["lr"].get<double>()).cell(c["rising"].get<bool>() ? 1 : 0).end_row();
    }
  }, extra);
  json summary = {{"family", std::string(to_string(family))}, {"crossings", crossings}};
  ctx.write_summary(summary);

  if (ctx.svg) {
    svg::Plot plot("Escape probability (" + std::string(to_string(family)) + ")", "learning rate", "a");
    plot.heatmap(pg.lr_values, pg.a_values, pg.escape_probability, 0.0, 1.0);
    std::vector<double> lo, hi, cont, as;
    for (std::size_t i = 0; i < pg.a_values.size(); ++i) {
      as.push_back(pg.a_values[i]);
      lo.push_back(pg.theory_boundary[i].lr_lo);
      hi.push_back(pg.theory_boundary[i].lr_hi);
      cont.push_back(pg.a_values[i] < 0.0 ? continuous_escape_boundary(pg.a_values[i], S)
                                          : std::numeric_limits<double>::quiet_NaN());
    }
    plot.line(lo, as, "#d62728", "discrete lower bound");
    plot.line(hi, as, "#ff7f0e", "discrete upper bound");
    plot.line(cont, as, "#2ca02c", "continuous boundary");
    plot.set_x_range(pg.lr_values.front(), pg.lr_values.back());
    plot.set_y_range(pg.a_values.front(), pg.a_values.back());
    plot.save(ctx.out_dir / "grid.svg");
  }
  ctx.out << "phase diagram " << na << "x" << nlr << " (" << to_string(family) << "), 0.5 crossings:\n";
  for (const auto& c : crossings) {
    ctx.out << "  a=" << fmt(c["a"].get<double>()) << "  lr=" << fmt(c["lr"].get<double>())
            << (c["rising"].get<bool>() ? "  (rising)" : "  (falling)") << '\n';
  }
  return summary;
}

json cmd_escape_rate(ExperimentContext& ctx) {
  Settings& s = ctx.settings;
  const double a = s.number("a", -1.0);
  const auto t_est = s.integer("t-est", 100);
  if (t_est <= 0) throw ConfigError("--t-est must be positive");
  const auto [lr_lo, lr_hi] = s.range("lr-range", {0.05, 0.95});
  const auto n_lr = s.integer("lr-points", 19);
  if (lr_hi > 1.0) throw ConfigError("--lr-range: the closed-form escape rate needs lr <= 1");
  EnsembleConfig cfg = ensemble_config(s, 2000, t_est);
  if (cfg.n_steps < t_est) throw ConfigError("--steps must be >= --t-est");
  cfg.snapshot_steps = schedule({0, t_est}, cfg.n_steps);
  const QuadraticObjective obj(a);
  const bool has_opt = a < 0.0;
  const OptimalEscape opt = has_opt ? optimal_escape(a) : OptimalEscape{0.25, 0.0};
  const double trace_lr = s.number("lr", opt.lr_star);

  struct Row {
    double lr;
    EscapeRateEstimate est;
    double theory;
  };
  std::vector<Row> rows;
  for (double lr : linspace(lr_lo, lr_hi, n_lr)) {
    HyperParams hp;
    hp.lr = lr;
    const EnsembleResult res = run_ensemble(obj, hp, BoxConstraint::none(), cfg);
    rows.push_back({lr, escape_rate_estimate(res, t_est), escape_rate_curve(a, lr)});
  }

  EnsembleConfig trace_cfg = cfg;
  trace_cfg.n_steps = t_est;
  trace_cfg.snapshot_steps.clear();
  for (std::int64_t t = 0; t <= t_est; ++t) trace_cfg.snapshot_steps.push_back(t);
  HyperParams trace_hp;
  trace_hp.lr = trace_lr;
  const EnsembleResult trace = run_ensemble(obj, trace_hp, BoxConstraint::none(), trace_cfg);

  const auto best = std::max_element(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    return x.est.gamma < y.est.gamma;
  });
  ctx.write_csv("escape_rate.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"lr", "gamma_hat", "stderr", "gamma_theory", "n_zero"});
    for (const Row& r : rows) csv.cell(r.lr).cell(r.est.gamma).cell(r.est.stderr_).cell(r.theory).cell(r.est.n_zero).end_row();
  });
  ctx.write_csv("stability.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"step", "gamma_hat", "stderr"});
    for (std::int64_t t = 1; t <= t_est; ++t) {
      const EscapeRateEstimate e = escape_rate_estimate(trace, t);
      csv.cell(t).cell(e.gamma).cell(e.stderr_).end_row();
    }
  }, {{"lr", trace_lr}});

  json summary = {{"t_est", t_est}, {"empirical_argmax_lr", best->lr}, {"empirical_max_gamma", best->est.gamma}};
  if (has_opt) summary["theory"] = {{"lr_star", opt.lr_star}, {"gamma_star", opt.gamma_star}};
  ctx.write_summary(summary);

  if (ctx.svg) {
    std::vector<double> xs, ys, th;
    for (const Row& r : rows) xs.push_back(r.lr), ys.push_back(r.est.gamma), th.push_back(r.theory);
    svg::Plot plot("Escape rate, a=" + fmt(a), "learning rate", "gamma");
    plot.line(xs, th, "#d62728", "closed form");
    plot.line(xs, ys, "#1f77b4", "empirical");
    if (has_opt) plot.vline(opt.lr_star, "#7f7f7f", "lr*");
    plot.save(ctx.out_dir / "escape_rate.svg");
  }
  ctx.out << "empirical argmax lr = " << fmt(best->lr) << ", gamma_hat = " << fmt(best->est.gamma) << '\n';
  if (has_opt) ctx.out << "closed form: lr* = " << fmt(opt.lr_star) << ", gamma* = " << fmt(opt.gamma_star) << '\n';
  return summary;
}

json cmd_sharpflat(ExperimentContext& ctx) {
  Settings& s = ctx.settings;
  const double a = s.number("a", 1.0);
  const HyperParams hp = hyper_params(s, UpdateRule::sgd, 0.05);
  const SharpFlatConstants sc = sharpflat_constants(hp.lr);
  const double b = s.number("b", sc.b);
  EnsembleConfig cfg = ensemble_config(s, 2000, 10000);
  cfg.snapshot_steps = schedule({0, 2}, cfg.n_steps);
  const double radius = s.number("radius", 0.05);
  const BoxConstraint box = box_option(s, 2, "-1,1");
  const SharpFlatObjective obj(a, b);

  std::vector<std::string> warnings;
  if (!sc.converges) {
    warnings.push_back("lr = " + fmt(hp.lr) + " exceeds (1+sqrt 6)/20; the dynamics need not converge");
  }
  const EnsembleResult res = run_ensemble(obj, hp, box, cfg);
  for (const auto& w : res.warnings) warnings.push_back(w);
  const auto catalog = obj.critical_point_catalog();
  const ClassificationCounts cls = classify_terminal(res, catalog, radius);

  std::int64_t sharp = 0, flat = 0;
  for (std::size_t i = 0; i < cls.labels.size(); ++i) {
    if (cls.labels[i].rfind("sharp", 0) == 0) sharp += cls.counts[i];
    if (cls.labels[i].rfind("flat", 0) == 0) flat += cls.counts[i];
  }
  std::vector<std::pair<std::int64_t, Histogram2D>> dens;
  for (std::size_t i = 0; i < res.n_snapshots(); ++i) {
    dens.emplace_back(cfg.snapshot_steps[i], histogram2d(res, i, 60, -1.2, 1.2, 60, -1.2, 1.2));
  }
  ctx.write_csv("density.csv", [&](std::ostream& os) { write_density2d(os, dens); }, res.provenance);
  ctx.write_csv("classification.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"label", "count"});
    for (std::size_t i = 0; i < cls.labels.size(); ++i) csv.cell(cls.labels[i]).cell(cls.counts[i]).end_row();
    csv.cell("diverged").cell(cls.diverged).end_row();
    csv.cell("unclassified").cell(cls.unclassified).end_row();
  }, res.provenance);
  ctx.write_csv("runs.csv", [&](std::ostream& os) { write_runs_csv(os, res); }, res.provenance);
  const double n = static_cast<double>(cfg.n_runs);
  json summary = {{"a", a},
                  {"b", b},
                  {"converges", sc.converges},
                  {"fraction_sharp", static_cast<double>(sharp) / n},
                  {"fraction_flat", static_cast<double>(flat) / n},
                  {"diverged", cls.diverged},
                  {"unclassified", cls.unclassified},
                  {"warnings", warnings}};
  ctx.write_summary(summary);
  if (ctx.svg) {
    for (const auto& [step, h] : dens) {
      density_svg(ctx, h, "density_t" + std::to_string(step) + ".svg", "log(1+count) at t=" + std::to_string(step));
    }
  }
  for (const auto& w : warnings) ctx.out << "warning: " << w << '\n';
  ctx.out << "b = " << fmt(b) << "; sharp minima: " << sharp << ", flat minima: " << flat
          << ", unclassified: " << cls.unclassified << ", diverged: " << cls.diverged << '\n';
  return summary;
}

json cmd_amsgrad_compare(ExperimentContext& ctx) {
  Settings& s = ctx.settings;
  const double a = s.number("a", -0.1);
  const double lr = s.number("lr", 0.2);
  const double beta2 = s.number("beta2", 0.999);
  const double gd_lr = s.number("gd-lr", 0.01);
  const std::vector<double> beta1s = s.list("beta1-values", {0.0, 0.9});
  EnsembleConfig cfg = ensemble_config(s, 2000, 50000);
  cfg.snapshot_steps = log_schedule(cfg.n_steps);
  const BoxConstraint box = box_option(s, 1, "-1,1");
  const QuadraticObjective obj(a);

  struct Variant {
    std::string rule;
    double beta1;
    EnsembleResult res;
  };
  std::vector<Variant> variants;
  {
    HyperParams hp;
    hp.rule = UpdateRule::gd;
    hp.lr = gd_lr;
    variants.push_back({"gd", 0.0, run_ensemble(obj, hp, box, cfg)});
  }
  for (UpdateRule rule : {UpdateRule::adam, UpdateRule::amsgrad}) {
    for (double b1 : beta1s) {
      HyperParams hp{rule, lr, b1, beta2};
      variants.push_back({std::string(to_string(rule)), b1, run_ensemble(obj, hp, box, cfg)});
    }
  }
  ctx.write_csv("trajectory.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"rule", "beta1", "step", "mean_abs_w", "stderr"});
    for (const Variant& v : variants) {
      for (std::size_t i = 0; i < v.res.n_snapshots(); ++i) {
        const MeanStderr m = mean_abs_at(v.res, i);
        csv.cell(v.rule).cell(v.beta1).cell(cfg.snapshot_steps[i]).cell(m.mean).cell(m.stderr_).end_row();
      }
    }
  }, {{"ensemble", cfg.to_json()}, {"lr", lr}, {"gd_lr", gd_lr}, {"beta2", beta2}});
  json summary = {{"final", json::array()}};
  for (const Variant& v : variants) {
    const MeanStderr m = mean_abs_at(v.res, v.res.n_snapshots() - 1);
    summary["final"].push_back({{"rule", v.rule}, {"beta1", v.beta1}, {"mean_abs_w", m.mean}, {"stderr", m.stderr_}});
    ctx.out << v.rule << " beta1=" << fmt(v.beta1) << ": mean |w_T| = " << fmt(m.mean) << " +- " << fmt(m.stderr_)
            << '\n';
  }
  for (double b1 : beta1s) {
    const double c_lo = std::pow(lr / trapped_interval(a).lr_hi, 2.0);
    const double c_hi = std::pow(lr / trapped_interval(a).lr_lo, 2.0);
    summary["trapping_preconditioner_range"][fmt(b1)] = {c_lo, c_hi};
  }
  ctx.write_summary(summary);
  if (ctx.svg) {
    svg::Plot plot("Mean |w| on the quadratic, a=" + fmt(a), "log10(step)", "mean |w|");
    const char* colors[] = {"#000000", "#1f77b4", "#aec7e8", "#d62728", "#ff9896"};
    for (std::size_t k = 0; k < variants.size(); ++k) {
      std::vector<double> xs, ys;
      for (std::size_t i = 1; i < variants[k].res.n_snapshots(); ++i) {
        xs.push_back(std::log10(static_cast<double>(cfg.snapshot_steps[i])));
        ys.push_back(mean_abs_at(variants[k].res, i).mean);
      }
      plot.line(xs, ys, colors[k % 5], variants[k].rule + " b1=" + fmt(variants[k].beta1));
    }
    plot.save(ctx.out_dir / "trajectory.svg");
  }
  return summary;
}

json cmd_toynet(ExperimentContext& ctx) {
  Settings& s = ctx.settings;
  const std::vector<double> default_lrs = {0.001, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08,
                                           0.09,  0.1,  0.105, 0.108, 0.11, 0.12, 0.13, 0.14, 0.15};
  std::vector<double> lrs;
  if (s.has("lr-range") || s.has("lr-points")) {
    const auto [lo, hi] = s.range("lr-range", {0.001, 0.15});
    lrs = linspace(lo, hi, s.integer("lr-points", 16));
  } else {
    lrs = s.list("lr-values", default_lrs);
  }
  const std::vector<double> density_lrs = s.list("density-lrs", {0.001, 0.1});
  EnsembleConfig cfg = ensemble_config(s, 1000, 10000);
  cfg.init = {{-1.0, 1.0}, {0.0, 1.0}};
  cfg.snapshot_steps = schedule({0}, cfg.n_steps);
  const double radius = s.number("radius", 0.05);
  const ToyNetObjective obj;
  const auto catalog = obj.critical_point_catalog();

  auto run_at = [&](double lr) {
    HyperParams hp;
    hp.lr = lr;
    return run_ensemble(obj, hp, BoxConstraint::none(), cfg);
  };

  struct Row {
    double lr;
    MeanStderr loss;
    double loss_all;
    double div_frac;
    double global, saddle, negative_w2, unclassified;
  };
  std::vector<Row> rows;
  std::vector<std::pair<double, Histogram2D>> dens;
  auto summarize = [&](double lr, const EnsembleResult& res) {
    std::vector<double> losses;
    for (const RunRecord& r : res.runs) {
      if (r.status != RunStatus::diverged) losses.push_back(obj.mean_loss(r.terminal));
    }
    const ClassificationCounts cls = classify_terminal(res, catalog, radius);
    const double n = static_cast<double>(res.runs.size());
    const MeanStderr m = mean_stderr(losses);
    rows.push_back({lr, m, cls.diverged > 0 ? std::numeric_limits<double>::infinity() : m.mean,
                    static_cast<double>(cls.diverged) / n, static_cast<double>(cls.count("global_min_manifold")) / n,
                    static_cast<double>(cls.count("saddle_manifold")) / n,
                    static_cast<double>(cls.count("negative_w2_manifold")) / n, static_cast<double>(cls.unclassified) / n});
  };
  for (double lr : lrs) {
    const EnsembleResult res = run_at(lr);
    summarize(lr, res);
    if (std::find(density_lrs.begin(), density_lrs.end(), lr) != density_lrs.end()) {
      dens.emplace_back(lr, histogram2d(res, res.n_snapshots() - 1, 60, -1.5, 1.5, 60, -1.0, 2.0));
    }
  }
  for (double lr : density_lrs) {
    if (std::find(lrs.begin(), lrs.end(), lr) == lrs.end()) {
      dens.emplace_back(lr, histogram2d(run_at(lr), cfg.snapshot_steps.size() - 1, 60, -1.5, 1.5, 60, -1.0, 2.0));
    }
  }

  ctx.write_csv("sweep.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"lr", "mean_loss", "mean_loss_stderr", "mean_loss_all_runs", "divergence_fraction",
                       "fraction_global_min", "fraction_saddle", "fraction_negative_w2", "fraction_unclassified"});
    for (const Row& r : rows) {
      csv.cell(r.lr).cell(r.loss.mean).cell(r.loss.stderr_).cell(r.loss_all).cell(r.div_frac);
      csv.cell(r.global).cell(r.saddle).cell(r.negative_w2).cell(r.unclassified).end_row();
    }
  }, {{"ensemble", cfg.to_json()}});
  for (const auto& [lr, h] : dens) {
    const std::string stem = "density_lr" + fmt(lr);
    ctx.write_csv(stem + ".csv", [&, &h = h](std::ostream& os) { write_density2d(os, {{cfg.n_steps, h}}); },
                  {{"lr", lr}});
    if (ctx.svg) density_svg(ctx, h, stem + ".svg", "terminal density, lr=" + fmt(lr));
  }
  json summary = {{"sweep", json::array()}};
  for (const Row& r : rows) {
    summary["sweep"].push_back({{"lr", r.lr},
                                {"mean_loss", r.loss.mean},
                                {"divergence_fraction", r.div_frac},
                                {"fraction_global_min", r.global},
                                {"fraction_saddle", r.saddle},
                                {"fraction_negative_w2", r.negative_w2}});
    ctx.out << "lr=" << fmt(r.lr) << "  mean loss " << fmt(r.loss.mean) << "  diverged " << fmt(r.div_frac)
            << "  global " << fmt(r.global) << "  saddle " << fmt(r.saddle) << '\n';
  }
  ctx.write_summary(summary);
  if (ctx.svg) {
    std::vector<double> xs, ls, ds;
    for (const Row& r : rows) xs.push_back(r.lr), ls.push_back(r.loss.mean), ds.push_back(r.div_frac);
    svg::Plot plot("Toy network: terminal loss", "learning rate", "mean loss (finite runs)");
    plot.line(xs, ls, "#1f77b4", "mean loss");
    plot.save(ctx.out_dir / "sweep_loss.svg");
    svg::Plot dplot("Toy network: divergence", "learning rate", "fraction diverged");
    dplot.line(xs, ds, "#d62728", "diverged");
    dplot.set_y_range(0.0, 1.0);
    dplot.save(ctx.out_dir / "sweep_divergence.svg");
  }
  return summary;
}

json cmd_fp_stationary(ExperimentContext& ctx) {
  Settings& s = ctx.settings;
  const FPKind kind = parse_fp_kind(s.text("kind", "additive"));
  FPStationaryParams p;
  p.a = s.number("a", -1.0);
  p.b = s.number("b", 1.0);
  p.sigma = s.number("sigma", 0.1);
  p.lr = s.number("lr", 0.1);
  p.batch_size = s.number("S", 1.0);
  const double hw = s.number("half-width", 6.0);
  const auto points = s.integer("points", 4001);
  if (points < 2) throw ConfigError("--points must be >= 2");
  p.validate();
  const auto grid = symmetric_grid(hw, static_cast<std::size_t>(points));
  const FPDensity d = fp_stationary_density(p, kind, grid, true);

  json summary = {{"kind", std::string(to_string(kind))},
                  {"delta_at_zero", d.delta_at_zero},
                  {"exponent", d.exponent},
                  {"snr", -p.batch_size * p.a / (2.0 * p.lr)},
                  {"critical_a", fp_critical_a(p.lr, p.batch_size)}};
  if (p.a < 0.0) summary["continuous_escape_boundary"] = continuous_escape_boundary(p.a, p.batch_size);
  std::vector<double> modes;
  if (p.b > 0.0 && kind != FPKind::quadratic) {
    modes = fp_mode(p);
    summary["modes"] = modes;
    if (p.a < 0.0) summary["landscape_minimum"] = std::sqrt(-p.a / (2.0 * p.b));
  }
  if (!d.delta_at_zero) {
    const auto it = std::max_element(d.density.begin(), d.density.end());
    summary["grid_argmax"] = d.grid[static_cast<std::size_t>(it - d.density.begin())];
  }
  ctx.write_csv("density.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"w", "density"});
    for (std::size_t i = 0; i < d.density.size(); ++i) csv.cell(d.grid[i]).cell(d.density[i]).end_row();
  }, {{"delta_at_zero", d.delta_at_zero}});
  ctx.write_csv("modes.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"mode"});
    for (double m : modes) csv.cell(m).end_row();
  });
  ctx.write_summary(summary);
  if (ctx.svg && !d.delta_at_zero) {
    svg::Plot plot("Stationary density (" + std::string(to_string(kind)) + ")", "w", "P(w)");
    plot.line(d.grid, d.density, "#1f77b4", "density");
    for (double m : modes) plot.vline(m, "#d62728");
    plot.save(ctx.out_dir / "density.svg");
  }
  if (d.delta_at_zero) {
    ctx.out << "density collapses to a delta at w = 0 (-S a / (2 lr) = " << fmt(summary["snr"].get<double>())
            << " < 1)\n";
  } else {
    ctx.out << "density normalized on " << points << " points; grid argmax " << fmt(summary["grid_argmax"].get<double>())
            << '\n';
  }
  if (!modes.empty()) {
    ctx.out << "modes:";
    for (double m : modes) ctx.out << ' ' << fmt(m);
    ctx.out << '\n';
  }
  ctx.out << "critical a = " << fmt(summary["critical_a"].get<double>()) << '\n';
  return summary;
}

json cmd_audit(ExperimentContext& ctx) {
  Settings& s = ctx.settings;
  const auto w1s = s.list("w1-values", {1, 2, 4, 8, 16});
  const auto w2s = s.list("w2-values", {0, -1});
  const double step = s.number("fd-step", kAuditFdStep);
  const double control_a = s.number("a", 1.0);
  if (!(control_a > 0.0)) throw ConfigError("--a for the control landscape must be > 0");
  const ToyNetObjective net;
  const QuadraticObjective control(control_a);

  struct Entry {
    std::string subject;
    AuditReport report;
  };
  std::vector<Entry> entries = {
      {"toynet", audit_hessian_lipschitz(net, w1s, step)},
      {"toynet", audit_pl(net, step)},
      {"toynet", audit_cnc(net, step)},
      {"toynet", audit_one_point_convexity(net, w2s, step)},
      {"quadratic", audit_hessian_lipschitz(control, w1s, step)},
      {"quadratic", audit_one_point_convexity(control, w2s, step)},
  };
  json reports = json::array();
  for (const Entry& e : entries) {
    json j = e.report.to_json();
    j["subject"] = e.subject;
    reports.push_back(j);
    ctx.out << "[" << e.subject << "] " << e.report.to_text();
  }
  fs::create_directories(ctx.out_dir);
  write_json_file(ctx.out_dir / "audit.json", {{"command", ctx.command},
                                               {"config", recorded_config(s)},
                                               {"version", kVersion},
                                               {"reports", reports}});
  ctx.write_csv("audit.csv", [&](std::ostream& os) {
    CsvWriter csv(os, {"subject", "assumption", "verdict", "witness", "w1", "w2", "measure", "value"});
    for (const Entry& e : entries) {
      for (std::size_t k = 0; k < e.report.witnesses.size(); ++k) {
        const Witness& w = e.report.witnesses[k];
        for (const auto& [name, value] : w.measured) {
          csv.cell(e.subject).cell(e.report.assumption).cell(to_string(e.report.verdict)).cell(k);
          csv.cell(w.point(0)).cell(w.point.size() > 1 ? w.point(1) : 0.0).cell(name).cell(value).end_row();
        }
      }
    }
  });
  json summary = {{"reports", reports}};
  ctx.write_summary(summary);
  return summary;
}

const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> list = {
      {"converge-quadratic", "SGD ensemble on the quadratic saddle: histograms and escape statistics",
       cmd_converge_quadratic},
      {"phase-diagram", "escape probability over an (a, lr) grid with the analytic boundaries", cmd_phase_diagram},
      {"escape-rate", "empirical escape rate against learning rate, with the closed form", cmd_escape_rate},
      {"sharpflat", "2-D landscape where SGD prefers the sharper minima", cmd_sharpflat},
      {"amsgrad-compare", "GD, Adam and AMSGrad near a local maximum", cmd_amsgrad_compare},
      {"toynet", "two-parameter network: terminal loss and divergence versus learning rate", cmd_toynet},
      {"fp-stationary", "continuous-time stationary densities, modes and critical a", cmd_fp_stationary},
      {"audit", "numerical checks of standard convergence assumptions on the toy network", cmd_audit},
  };
  return list;
}

}  // namespace sgdlab::cli
