#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace moffle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;  // row-major semantics are by convention (x,a) flattening, storage stays Eigen default
using IntVector = Eigen::VectorXi;

inline double clip(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

// Flattened (state, action) row index for tables of shape (num_states * num_actions) x d.
inline int sa_index(int x, int a, int num_actions) { return x * num_actions + a; }

constexpr double kStochasticRowTol = 1e-9;
constexpr double kRewardRangeTol = 1e-9;

}  // namespace moffle
