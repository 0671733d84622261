#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "flowspec/model.hpp"

namespace flowspec {

enum class SpectrumKind { two_block, power_law };

// Truncated power-law singular-value density p(lambda) ~ lambda^{-beta} on
// [lambda_min, lambda_max].
struct PowerLawSpec {
  double beta = 1.5;
  double lambda_min = 0.1;
  double lambda_max = 5.0;
};

struct SimConfig {
  int n = 128;
  ModelParams params;
  SpectrumKind spectrum_kind = SpectrumKind::two_block;
  PowerLawSpec power_law;  // read only when spectrum_kind == power_law
  int n_realizations = 1;
  std::vector<double> times;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SpectrumSample {
  std::vector<double> eigenvalues;  // ascending
  double top_overlap = 0.0;  // squared teacher projection of the top eigenvector
  double t = 0.0;
  int realization_id = 0;
  std::uint64_t seed_used = 0;
};

struct Histogram {
  std::vector<double> bin_edges;  // strictly increasing, counts.size() + 1
  std::vector<double> counts;     // density values; total mass 1
  std::size_t n_samples = 0;
};

struct OverlapCurve {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> std_error;
  int n_realizations = 0;
};

// Deterministic per-realization seed derived from the base seed.
std::uint64_t realization_seed(std::uint64_t base, int realization_id);

// One realization of the two-block flow, evaluated at every config time.
// The matrices are sampled once and evolved deterministically, so samples
// at different times of one realization share their noise.
std::vector<SpectrumSample> sample_two_block(const SimConfig& config,
                                             int realization_id);

// Same ensemble assembled in the original basis through explicit orthogonal
// factors instead of working in the covariance eigenbasis directly. Slower;
// kept to check that the two routes agree in distribution. Requires
// round(gamma * n) == n.
std::vector<SpectrumSample> sample_two_block_original(const SimConfig& config,
                                                      int realization_id);

std::vector<double> powerlaw_singular_values(double beta, double lambda_min,
                                             double lambda_max, int n,
                                             std::uint64_t seed);

// One realization of the flow over a sampled power-law covariance spectrum.
std::vector<SpectrumSample> sample_powerlaw_flow(const SimConfig& config,
                                                 int realization_id);

// Pooled unit-mass histogram of eigenvalues taken at a common time.
Histogram empirical_density(const std::vector<SpectrumSample>& samples,
                            int bins);

// Mean and standard error of the top-eigenvector teacher overlap per time,
// across n_realizations independent realizations.
OverlapCurve empirical_overlap_curve(const SimConfig& config);

}  // namespace flowspec
