#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sgdlab/io.hpp"

using namespace sgdlab;

TEST_SUITE("io") {
  TEST_CASE("number formatting round-trips") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(NAN) == "nan");
    CHECK(format_double(-INFINITY) == "-inf");
    const double x = 0.12345678901234567;
    CHECK(std::stod(format_double(x)) == x);
  }

  TEST_CASE("CSV writer") {
    std::ostringstream os;
    CsvWriter w(os, {"a", "b", "c"});
    w.cell(1).cell(2.5).cell("x");
    w.end_row();
    CHECK(os.str() == "a,b,c\n1,2.5,x\n");
    w.cell(1);
    CHECK_THROWS_AS(w.end_row(), ConfigError);
  }

  TEST_CASE("ensemble CSVs use LF endings and a header") {
    const QuadraticObjective q(-1.0);
    EnsembleConfig cfg;
    cfg.n_runs = 3;
    cfg.n_steps = 4;
    cfg.snapshot_steps = {0, 4};
    const auto res = run_ensemble(q, {UpdateRule::sgd, 0.1, 0.0, 0.999}, BoxConstraint::none(), cfg);
    std::ostringstream runs, snaps, hist;
    write_runs_csv(runs, res);
    write_snapshots_csv(snaps, res);
    write_histogram_csv(hist, {{4, histogram(res, 1, 4, -1, 1)}});
    for (const std::string& s : {runs.str(), snaps.str(), hist.str()}) {
      CHECK(s.find('\r') == std::string::npos);
      CHECK(s.back() == '\n');
    }
    CHECK(runs.str().rfind("run_id,status,w1,first_divergence_step\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : runs.str()) lines += c == '\n';
    CHECK(lines == 4);
  }
}
