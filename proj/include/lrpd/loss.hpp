#ifndef LRPD_LOSS_HPP
#define LRPD_LOSS_HPP

// Training objective of the refinement stage, with analytic gradients:
//
//   L_obj = -(1 - p_t)^(-ln p_hat_t) * ln p_t     (automated focal loss)
//   L_xyz, L_lwh = smooth-l1 (beta = 1) on the offset residuals
//   L_theta = smooth-l1 on (s - sin theta_gt, c - cos theta_gt)
//   L = L_xyz + L_lwh + L_theta + L_obj           (unweighted)
//
// p_hat_t, the expected probability of a correct prediction, is tracked by
// the caller as an exponential moving average (update_p_hat).

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "lrpd/error.hpp"

namespace lrpd {

inline constexpr double kProbabilityEpsilon = 1e-7;
inline constexpr double kDefaultPHatMomentum = 0.99;

struct ValueGrad {
  double value = 0.0;
  double grad = 0.0;
};

/// Automated focal loss of the probability assigned to the correct class.
/// `grad` is d value / d p_t; it is zero where p_t was clamped.
inline ValueGrad automated_focal_loss(double p_t, double p_hat_t) {
  const double p = std::clamp(p_t, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  const double p_hat = std::clamp(p_hat_t, kProbabilityEpsilon, 1.0);
  const double gamma = -std::log(p_hat);
  const double log_p = std::log(p);
  const double q = 1.0 - p;
  const double mod = std::pow(q, gamma);
  ValueGrad out;
  out.value = -mod * log_p;
  if (p == p_t) {
    const double dmod = gamma == 0.0 ? 0.0 : -gamma * std::pow(q, gamma - 1.0);
    out.grad = -(dmod * log_p + mod / p);
  }
  return out;
}

/// Exponential moving average of the batch's mean correct-class probability.
inline double update_p_hat(double p_hat_t, double batch_mean_p_t, double momentum = kDefaultPHatMomentum) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0, 1)");
  const double next = momentum * p_hat_t + (1.0 - momentum) * batch_mean_p_t;
  return std::clamp(next, kProbabilityEpsilon, 1.0);
}

inline ValueGrad smooth_l1(double r) {
  const double a = std::abs(r);
  if (a < 1.0) return {0.5 * r * r, r};
  return {a - 0.5, r > 0.0 ? 1.0 : -1.0};
}

struct VectorLoss {
  double value = 0.0;
  std::vector<double> grad;
};

/// Elementwise smooth-l1, summed.
inline VectorLoss smooth_l1(std::span<const double> residuals) {
  VectorLoss out;
  out.grad.reserve(residuals.size());
  for (const double r : residuals) {
    const auto e = smooth_l1(r);
    out.value += e.value;
    out.grad.push_back(e.grad);
  }
  return out;
}

struct HeadingLoss {
  double value = 0.0;
  double d_s = 0.0;
  double d_c = 0.0;
};

inline HeadingLoss heading_loss(double s_pred, double c_pred, double theta_gt) {
  const auto es = smooth_l1(s_pred - std::sin(theta_gt));
  const auto ec = smooth_l1(c_pred - std::cos(theta_gt));
  return {es.value + ec.value, es.grad, ec.grad};
}

// One refinement output against its target. Residuals are prediction minus
// target for the center and size offsets.
struct LossSample {
  double p_t = 1.0;
  double p_hat_t = 1.0;
  std::array<double, 3> xyz_residual{};
  std::array<double, 3> lwh_residual{};
  double s_pred = 0.0;
  double c_pred = 1.0;
  double theta_gt = 0.0;
};

struct LossBreakdown {
  double xyz = 0.0;
  double lwh = 0.0;
  double heading = 0.0;
  double objectness = 0.0;
  double total = 0.0;
};

inline LossBreakdown total_loss(const LossSample& s) {
  LossBreakdown b;
  b.xyz = smooth_l1(std::span<const double>(s.xyz_residual)).value;
  b.lwh = smooth_l1(std::span<const double>(s.lwh_residual)).value;
  b.heading = heading_loss(s.s_pred, s.c_pred, s.theta_gt).value;
  b.objectness = automated_focal_loss(s.p_t, s.p_hat_t).value;
  b.total = b.xyz + b.lwh + b.heading + b.objectness;
  return b;
}

}  // namespace lrpd

#endif  // LRPD_LOSS_HPP
