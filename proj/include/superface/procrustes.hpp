#ifndef SUPERFACE_PROCRUSTES_HPP
#define SUPERFACE_PROCRUSTES_HPP

// Rigid alignment between landmark sets (Kabsch) and Euler extraction in the
// same Rz(roll)*Ry(yaw)*Rx(pitch) convention the toy face uses. Shared by the
// fallback pose estimator and the expression-distance fallback.

#include <Eigen/Dense>

#include "superface/landmarks.hpp"

namespace sf {

struct RigidFit {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double scale = 1.0;
};

// best-fit similarity transform mapping `src` onto `dst` (n x 3 each)
inline RigidFit kabsch_fit(const Tensor<float>& src, const Tensor<float>& dst) {
  int64_t n = src.shape()[0];
  if (n < 3 || dst.shape()[0] != n) throw std::runtime_error("kabsch_fit: need matching sets of >= 3 points");
  Eigen::MatrixXd A(n, 3), B(n, 3);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t c = 0; c < 3; ++c) {
      A(i, c) = src[i * 3 + c];
      B(i, c) = dst[i * 3 + c];
    }
  Eigen::RowVector3d ca = A.colwise().mean(), cb = B.colwise().mean();
  A.rowwise() -= ca;
  B.rowwise() -= cb;
  Eigen::Matrix3d H = A.transpose() * B;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU(), V = svd.matrixV();
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((V * U.transpose()).determinant() < 0) D(2, 2) = -1;
  RigidFit fit;
  fit.R = V * D * U.transpose();
  double var = A.squaredNorm();
  fit.scale = var > 0 ? (svd.singularValues().asDiagonal() * D).trace() / var : 1.0;
  fit.t = cb.transpose() - fit.scale * fit.R * ca.transpose();
  return fit;
}

// Euler angles (yaw, pitch, roll) from R = Rz(roll)*Ry(yaw)*Rx(pitch)
inline void euler_from_rot(const Eigen::Matrix3d& R, double& yaw, double& pitch, double& roll) {
  yaw = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  pitch = std::atan2(R(2, 1), R(2, 2));
  roll = std::atan2(R(1, 0), R(0, 0));
}

// pose of a landmark set relative to a canonical reference (same topology)
inline void procrustes_pose(const Tensor<float>& canonical, const Tensor<float>& observed, double& yaw, double& pitch,
                            double& roll) {
  RigidFit fit = kabsch_fit(canonical, observed);
  euler_from_rot(fit.R, yaw, pitch, roll);
}

// expression descriptor: per-point residual after removing the best rigid
// similarity from canonical to observed
inline Tensor<float> expression_residual(const Tensor<float>& canonical, const Tensor<float>& observed) {
  RigidFit fit = kabsch_fit(canonical, observed);
  int64_t n = canonical.shape()[0];
  Tensor<float> out({n, 3});
  for (int64_t i = 0; i < n; ++i) {
    Eigen::Vector3d p(canonical[i * 3], canonical[i * 3 + 1], canonical[i * 3 + 2]);
    Eigen::Vector3d fitp = fit.scale * fit.R * p + fit.t;
    for (int64_t c = 0; c < 3; ++c) out[i * 3 + c] = observed[i * 3 + c] - static_cast<float>(fitp(c));
  }
  return out;
}

}  // namespace sf

#endif
