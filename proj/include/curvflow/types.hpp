#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace curvflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

/// The frame became too ill-conditioned to carry curvature information
/// (Gram condition number above kMaxGramCondition).
class DegenerateFrameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kMaxGramCondition = 1e12;

}  // namespace curvflow
