#pragma once

#include <cmath>
#include <random>

#include "sgdlab/landscapes.hpp"

namespace testing {

// Central differences of mean_loss, written independently of the library's
// numerical_gradient.
inline sgdlab::Vector fd_gradient(const sgdlab::StochasticObjective& obj, const sgdlab::Vector& w, double h) {
  sgdlab::Vector g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    sgdlab::Vector p = w, m = w;
    p(i) += h;
    m(i) -= h;
    g(i) = (obj.mean_loss(p) - obj.mean_loss(m)) / (2.0 * h);
  }
  return g;
}

inline bool rel_close(double x, double y, double rel, double abs_floor) {
  return std::abs(x - y) <= rel * std::max(std::abs(x), std::abs(y)) + abs_floor;
}

}  // namespace testing
