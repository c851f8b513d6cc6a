#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "sgdlab/types.hpp"
#include "sgdlab/version.hpp"

namespace sgdlab::cli {

namespace {

struct OptionSpec {
  std::string key;
  std::string names;
  std::string help;
};

const std::vector<OptionSpec>& option_specs() {
  static const std::vector<OptionSpec> specs = {
      {"a", "--a", "landscape parameter a"},
      {"b", "--b", "landscape parameter b (sharpflat, fp-stationary)"},
      {"lr", "--lr", "learning rate"},
      {"beta1", "--b1,--beta1", "first-moment coefficient"},
      {"beta2", "--b2,--beta2", "second-moment coefficient"},
      {"rule", "--rule", "update rule: gd|sgd|adam|amsgrad"},
      {"box", "--box", "box constraint lo,hi or none"},
      {"steps", "--steps", "steps per run"},
      {"runs", "--runs", "number of runs"},
      {"seed", "--seed", "master seed"},
      {"grid", "--grid", "phase-diagram grid NxM (a values x lr values)"},
      {"out", "--out", "output directory"},
      {"threads", "--threads", "worker threads (0: all cores); never changes results"},
      {"tau", "--tau", "escape threshold on |w_T|"},
      {"bins", "--bins", "histogram bins"},
      {"range", "--range", "histogram half-range"},
      {"landscape", "--landscape", "phase-diagram family: quadratic|quartic"},
      {"a-range", "--a-range", "a axis lo,hi"},
      {"lr-range", "--lr-range", "learning-rate axis lo,hi"},
      {"lr-points", "--lr-points", "learning-rate grid points"},
      {"lr-values", "--lr-values", "explicit learning rates, comma separated"},
      {"t-est", "--t-est", "step at which the escape rate is estimated"},
      {"S", "--S", "batch size in the continuous-time theory"},
      {"sigma", "--sigma", "additive noise strength"},
      {"kind", "--kind", "density kind: quadratic|quartic|additive"},
      {"half-width", "--half-width", "density grid half-width"},
      {"points", "--points", "density grid points"},
      {"radius", "--radius", "classification radius"},
      {"gd-lr", "--gd-lr", "learning rate of the GD reference run"},
      {"beta1-values", "--beta1-values", "beta1 values compared by amsgrad-compare"},
      {"density-lrs", "--density-lrs", "learning rates with a density dump (toynet)"},
      {"w1-values", "--w1-values", "Hessian-Lipschitz sweep"},
      {"w2-values", "--w2-values", "one-point convexity witnesses (w2 <= 0)"},
      {"fd-step", "--fd-step", "finite-difference step for the audits"},
  };
  return specs;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"sgdlab: stochastic optimizer dynamics experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string command;
  std::string config_path;
  bool svg = false;
  std::string footer = "commands:\n";
  for (const Experiment& e : experiments()) footer += "  " + e.name + std::string(20 - std::min<std::size_t>(19, e.name.size()), ' ') + e.help + "\n";
  app.footer(footer);
  app.add_option("command", command, "experiment to run")->required();
  app.add_option("--config", config_path, "JSON file supplying any flag; command-line flags win");
  auto* svg_flag = app.add_flag("--svg", svg, "also write SVG plots");

  const auto& specs = option_specs();
  std::vector<std::string> raw(specs.size());
  std::vector<CLI::Option*> opts;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    opts.push_back(app.add_option(specs[i].names, raw[i], specs[i].help));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    Settings settings;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (opts[i]->count() > 0) settings.set(specs[i].key, raw[i]);
    }
    if (svg_flag->count() > 0) settings.set("svg", svg);
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read config file " + config_path);
      nlohmann::json cfg;
      try {
        cfg = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + config_path + ": " + e.what());
      }
      std::vector<std::string> known{"svg"};
      for (const auto& s : specs) known.push_back(s.key);
      settings.merge_config(cfg, known);
    }

    const auto it = std::find_if(experiments().begin(), experiments().end(),
                                 [&](const Experiment& e) { return e.name == command; });
    if (it == experiments().end()) throw ConfigError("unknown command '" + command + "'; see --help");

    ExperimentContext ctx{command, settings, settings.text("out", "out/" + command), settings.flag("svg"), out};
    it->run(ctx);
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace sgdlab::cli
