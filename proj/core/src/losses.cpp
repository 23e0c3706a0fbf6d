#include "pofmkl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pofmkl/error.hpp"
#include "pofmkl/kernels.hpp"

namespace pofmkl {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::Numeric, std::string("non-finite ") + what);
  }
}

}  // namespace

double loss(double pred, double label, std::span<const double> theta,
            const LossConfig& cfg) {
  require_finite(pred, "prediction");
  require_finite(label, "label");
  const double err = pred - label;
  double value = err * err;
  if (cfg.lambda != 0.0) value += cfg.lambda * dot(theta, theta);
  require_finite(value, "loss");
  return value;
}

void loss_grad_theta_into(std::span<const double> z, std::span<const double> theta,
                          double label, const LossConfig& cfg, std::span<double> out) {
  if (z.size() != theta.size() || out.size() != theta.size()) {
    throw Error(ErrorKind::Shape, "loss gradient: theta and z lengths differ");
  }
  require_finite(label, "label");
  const double residual = 2.0 * (dot(theta, z) - label);
  require_finite(residual, "residual");
  const double ridge = 2.0 * cfg.lambda;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = residual * z[i] + ridge * theta[i];
  }
}

std::vector<double> loss_grad_theta(std::span<const double> z,
                                    std::span<const double> theta, double label,
                                    const LossConfig& cfg) {
  std::vector<double> g(theta.size());
  loss_grad_theta_into(z, theta, label, cfg, g);
  return g;
}

double bounded_loss(double pred, double label, const LossConfig& cfg) {
  require_finite(pred, "prediction");
  require_finite(label, "label");
  const double err = pred - label;
  const double sq = err * err;
  return cfg.clip_for_weights ? std::clamp(sq, 0.0, 1.0) : sq;
}

}  // namespace pofmkl
