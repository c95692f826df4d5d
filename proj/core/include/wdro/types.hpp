#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>

namespace wdro {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace wdro
