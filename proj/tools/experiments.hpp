#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "settings.hpp"

namespace sgdlab::cli {

struct ExperimentContext {
  std::string command;
  Settings& settings;
  std::filesystem::path out_dir;
  bool svg = false;
  std::ostream& out;

  /// Writes `name` into out_dir plus a `<stem>.provenance.json` sidecar with
  /// the command, resolved config, seed and version.
  void write_csv(const std::string& name, const std::function<void(std::ostream&)>& fill,
                 const nlohmann::json& extra = nlohmann::json::object()) const;
  void write_summary(const nlohmann::json& summary) const;
};

using ExperimentFn = std::function<nlohmann::json(ExperimentContext&)>;

struct Experiment {
  std::string name;
  std::string help;
  ExperimentFn run;
};

const std::vector<Experiment>& experiments();

nlohmann::json cmd_converge_quadratic(ExperimentContext& ctx);
nlohmann::json cmd_phase_diagram(ExperimentContext& ctx);
nlohmann::json cmd_escape_rate(ExperimentContext& ctx);
nlohmann::json cmd_sharpflat(ExperimentContext& ctx);
nlohmann::json cmd_amsgrad_compare(ExperimentContext& ctx);
nlohmann::json cmd_toynet(ExperimentContext& ctx);
nlohmann::json cmd_fp_stationary(ExperimentContext& ctx);
nlohmann::json cmd_audit(ExperimentContext& ctx);

/// Parses argv, merges --config, runs the command. Returns the process exit
/// code: 0 success, 1 configuration error, 2 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sgdlab::cli
