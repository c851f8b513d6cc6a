#include "sgdlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace sgdlab {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header)
    : os_(os), columns_(header.size()) {
  for (auto h : header) cell(h);
  end_row();
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), columns_(header.size()) {
  for (const auto& h : header) cell(std::string_view(h));
  end_row();
}

void CsvWriter::sep() {
  if (filled_ > 0) os_ << ',';
  ++filled_;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  os_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t v) {
  sep();
  os_ << v;
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view v) {
  sep();
  os_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) {
    throw ConfigError("csv row has " + std::to_string(filled_) + " cells, header has " + std::to_string(columns_));
  }
  os_ << '\n';
  filled_ = 0;
}

namespace {

std::vector<std::string> coord_header(std::vector<std::string> head, int dim) {
  for (int i = 0; i < dim; ++i) head.push_back("w" + std::to_string(i + 1));
  return head;
}

}  // namespace

void write_runs_csv(std::ostream& os, const EnsembleResult& result) {
  auto head = coord_header({"run_id", "status"}, result.dim);
  head.emplace_back("first_divergence_step");
  CsvWriter csv(os, head);
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const RunRecord& rec = result.runs[r];
    csv.cell(r).cell(to_string(rec.status));
    for (int i = 0; i < result.dim; ++i) csv.cell(rec.terminal(i));
    if (rec.first_divergence_step) {
      csv.cell(*rec.first_divergence_step);
    } else {
      csv.cell("");
    }
    csv.end_row();
  }
}

void write_snapshots_csv(std::ostream& os, const EnsembleResult& result) {
  CsvWriter csv(os, coord_header({"run_id", "step"}, result.dim));
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    for (std::size_t s = 0; s < result.n_snapshots(); ++s) {
      csv.cell(r).cell(result.config.snapshot_steps[s]);
      const Vector w = result.snapshot(r, s);
      for (int i = 0; i < result.dim; ++i) csv.cell(w(i));
      csv.end_row();
    }
  }
}

void write_phase_grid_csv(std::ostream& os, const PhaseDiagramGrid& grid) {
  CsvWriter csv(os, {"a", "lr", "escape_probability", "diverged"});
  for (std::size_t ia = 0; ia < grid.a_values.size(); ++ia) {
    for (std::size_t il = 0; il < grid.lr_values.size(); ++il) {
      csv.cell(grid.a_values[ia]).cell(grid.lr_values[il]).cell(grid.at(ia, il));
      csv.cell(static_cast<int>(grid.diverged[ia * grid.lr_values.size() + il])).end_row();
    }
  }
}

void write_boundary_csv(std::ostream& os, const PhaseDiagramGrid& grid) {
  CsvWriter csv(os, {"a", "lr_lo", "lr_hi", "exists", "minimum_instability"});
  for (std::size_t ia = 0; ia < grid.a_values.size(); ++ia) {
    const TrappedInterval& iv = grid.theory_boundary[ia];
    csv.cell(grid.a_values[ia]).cell(iv.lr_lo).cell(iv.lr_hi);
    csv.cell(iv.exists ? 1 : 0).cell(iv.minimum_instability ? 1 : 0).end_row();
  }
}

void write_histogram_csv(std::ostream& os, const std::vector<std::pair<std::int64_t, Histogram>>& hists) {
  CsvWriter csv(os, {"step", "bin_lo", "bin_hi", "count"});
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& [step, h] : hists) {
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    csv.cell(step).cell(-inf).cell(h.lo).cell(h.underflow).end_row();
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double lo = h.lo + width * static_cast<double>(i);
      csv.cell(step).cell(lo).cell(i + 1 == h.counts.size() ? h.hi : lo + width).cell(h.counts[i]).end_row();
    }
    csv.cell(step).cell(h.hi).cell(inf).cell(h.overflow).end_row();
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace sgdlab
