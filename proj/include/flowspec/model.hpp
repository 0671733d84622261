#pragma once

#include <array>

namespace flowspec {

// Linear teacher-student model with a two-rate input covariance: a fraction
// alpha of the input directions relaxes at unit rate, the remainder at
// lambda_minus^2. gamma = M/N is the sample-to-dimension ratio and theta the
// teacher signal strength. lambda_plus is pinned to 1 by normalization.
struct ModelParams {
  double gamma = 1.0;
  double alpha = 0.5;
  double lambda_minus = 1.0;
  double lambda_plus = 1.0;
  double theta = 0.0;

  bool has_null_block() const { return gamma < 1.0; }
  void validate() const;  // throws std::invalid_argument
};

// Flow coefficients at time t. The initial condition decays as a (fast
// block) / b (slow block); the data-driven part grows as c / d. f_* is the
// fraction of the teacher signal absorbed by each block, in [0, 1).
struct KernelCoeffs {
  double t;
  double a, b, c, d;
  double f_fast, f_slow;
};

KernelCoeffs kernel_coefficients(const ModelParams& p, double t);

inline constexpr int kMaxBlocks = 3;

// Block variance profile of the symmetrized flow matrix. Two blocks for
// gamma >= 1; for gamma < 1 a third block covers the null space of the
// sample covariance (unit decay, no data gain). Weights sum to 1.
struct VarianceProfile {
  int n_blocks = 2;
  std::array<double, kMaxBlocks> weights{};
  std::array<std::array<double, kMaxBlocks>, kMaxBlocks> sigma{};

  double sigma_max() const;
};

VarianceProfile variance_profile(const ModelParams& p, double t);

// Learned signal fraction per block, aligned with the blocks of
// variance_profile(p, t). The null block never learns: its entry is 0.
std::array<double, kMaxBlocks> block_signals(const ModelParams& p, double t);

}  // namespace flowspec
