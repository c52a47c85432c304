#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace netmpg {

using Real = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::int64_t;

// Per-agent component tuples (one entry per agent, each within its space).
using JointState = std::vector<int>;
using JointAction = std::vector<int>;

} // namespace netmpg
