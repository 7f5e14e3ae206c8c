#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace qmrom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// 0-based (i, j) with i <= j.
using IndexPair = std::pair<int, int>;

enum class RefMode { initial, time_mean };

std::string to_string(RefMode mode);
RefMode parse_ref_mode(const std::string& text);

bool all_finite(const Matrix& m);

}  // namespace qmrom
