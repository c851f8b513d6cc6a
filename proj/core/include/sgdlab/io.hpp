#pragma once

#include <filesystem>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sgdlab/ensemble.hpp"

namespace sgdlab {

/// Shortest round-trip decimal form ("0.1", "1e+12", "nan", "inf").
std::string format_double(double v);

/// Comma-separated rows with a header and LF line endings. Cells are
/// numbers or simple identifiers, so nothing is quoted.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header);
  CsvWriter(std::ostream& os, const std::vector<std::string>& header);

  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(std::size_t v) { return cell(static_cast<std::int64_t>(v)); }
  CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  CsvWriter& cell(std::string_view v);
  CsvWriter& cell(const char* v) { return cell(std::string_view(v)); }
  /// Ends the row; throws ConfigError if its width differs from the header.
  void end_row();

 private:
  void sep();
  std::ostream& os_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

/// run_id,status,w1[,w2],first_divergence_step (empty when not diverged)
void write_runs_csv(std::ostream& os, const EnsembleResult& result);
/// run_id,step,w1[,w2]
void write_snapshots_csv(std::ostream& os, const EnsembleResult& result);
/// a,lr,escape_probability,diverged
void write_phase_grid_csv(std::ostream& os, const PhaseDiagramGrid& grid);
/// a,lr_lo,lr_hi,exists,minimum_instability
void write_boundary_csv(std::ostream& os, const PhaseDiagramGrid& grid);
/// step,bin_lo,bin_hi,count for each (step, histogram); underflow and
/// overflow are rows with an infinite edge.
void write_histogram_csv(std::ostream& os, const std::vector<std::pair<std::int64_t, Histogram>>& hists);

/// Pretty-printed JSON with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace sgdlab
