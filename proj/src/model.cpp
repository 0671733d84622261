#include "flowspec/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace flowspec {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void ModelParams::validate() const {
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
  require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0,
          "alpha must lie in (0, 1]");
  require(std::isfinite(lambda_minus) && lambda_minus > 0.0 &&
              lambda_minus <= 1.0,
          "lambda_minus must lie in (0, 1]");
  require(lambda_plus == 1.0, "lambda_plus is normalized to 1");
  require(std::isfinite(theta) && theta >= 0.0, "theta must be >= 0");
}

KernelCoeffs kernel_coefficients(const ModelParams& p, double t) {
  p.validate();
  require(std::isfinite(t) && t >= 0.0, "t must be finite and >= 0");

  const double lp2 = p.lambda_plus * p.lambda_plus;
  const double lm2 = p.lambda_minus * p.lambda_minus;

  KernelCoeffs k;
  k.t = t;
  k.a = std::exp(-lp2 * t);
  k.b = std::exp(-lm2 * t);
  // -expm1 keeps the small-t gains accurate.
  k.f_fast = -std::expm1(-lp2 * t);
  k.f_slow = -std::expm1(-lm2 * t);
  k.c = k.f_fast / p.lambda_plus;
  k.d = k.f_slow / p.lambda_minus;
  return k;
}

VarianceProfile variance_profile(const ModelParams& p, double t) {
  const KernelCoeffs k = kernel_coefficients(p, t);

  // Per-block (decay, gain) pairs; the null block neither decays nor learns.
  std::array<double, kMaxBlocks> decay{k.a, k.b, 1.0};
  std::array<double, kMaxBlocks> gain{k.c, k.d, 0.0};

  VarianceProfile v;
  if (p.has_null_block()) {
    v.n_blocks = 3;
    v.weights = {p.alpha * p.gamma, (1.0 - p.alpha) * p.gamma, 1.0 - p.gamma};
  } else {
    v.n_blocks = 2;
    v.weights = {p.alpha, 1.0 - p.alpha, 0.0};
  }

  for (int i = 0; i < v.n_blocks; ++i) {
    for (int j = 0; j < v.n_blocks; ++j) {
      const double s = decay[i] + decay[j];
      v.sigma[i][j] =
          s * s + (gain[i] * gain[i] + gain[j] * gain[j]) / p.gamma;
    }
  }
  return v;
}

std::array<double, kMaxBlocks> block_signals(const ModelParams& p, double t) {
  const KernelCoeffs k = kernel_coefficients(p, t);
  return {k.f_fast, k.f_slow, 0.0};
}

double VarianceProfile::sigma_max() const {
  double m = 0.0;
  for (int i = 0; i < n_blocks; ++i)
    for (int j = 0; j < n_blocks; ++j) m = std::max(m, sigma[i][j]);
  return m;
}

}  // namespace flowspec
