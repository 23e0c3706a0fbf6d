#pragma once

#include <span>
#include <vector>

namespace pofmkl {

enum class CostKind { SquaredError };

struct LossConfig {
  CostKind cost = CostKind::SquaredError;
  double lambda = 0.0;           // ridge coefficient on |theta|^2
  bool clip_for_weights = true;  // clamp the Hedge loss to [0, 1]
};

/// (pred - label)^2 + lambda * |theta|^2
double loss(double pred, double label, std::span<const double> theta,
            const LossConfig& cfg);

/// Gradient of `loss` at pred = theta.z: 2 (theta.z - y) z + 2 lambda theta.
std::vector<double> loss_grad_theta(std::span<const double> z,
                                    std::span<const double> theta, double label,
                                    const LossConfig& cfg);
void loss_grad_theta_into(std::span<const double> z, std::span<const double> theta,
                          double label, const LossConfig& cfg, std::span<double> out);

/// Loss fed to the multiplicative weight update. Unregularized.
double bounded_loss(double pred, double label, const LossConfig& cfg);

}  // namespace pofmkl
