#pragma once

#include <array>
#include <complex>
#include <vector>

#include "flowspec/model.hpp"

namespace flowspec {

using Complex = std::complex<double>;

struct DysonOptions {
  double tol = 1e-10;      // fixed-point residual target
  long max_iter = 100000;  // iterations before giving up
  double damping = 1.0;    // falls back to 0.5 when progress stalls
};

// Block-resolved resolvent traces g_p(z). Solutions satisfy
//   g_p = 1 / (z - sum_q w_q sigma_pq g_q),
// behave as 1/z at infinity and carry Im g_p < 0 for Im z > 0.
struct PartialTransforms {
  int n_blocks = 0;
  std::array<Complex, kMaxBlocks> g{};
  Complex z{};
  double residual = 0.0;
  long iterations = 0;

  Complex average(const VarianceProfile& v) const;
};

// Fixed-point solve at one spectral point. z must satisfy Im z > 0, or be
// real and lie outside the bulk. Starting point g_p = 1/z unless a warm
// start is supplied.
PartialTransforms solve_dyson(const VarianceProfile& v, Complex z,
                              const DysonOptions& opts = {});
PartialTransforms solve_dyson(const VarianceProfile& v, Complex z,
                              const PartialTransforms& warm,
                              const DysonOptions& opts = {});

// d g_p / dz, from the linearized fixed point at a solved point. Throws
// SingularityError when the stability matrix is singular (bulk edge).
std::array<Complex, kMaxBlocks> dyson_derivative(const VarianceProfile& v,
                                                 const PartialTransforms& s);

// det(I - diag(g^2) sigma w): positive outside the bulk, zero at an edge.
double stability_margin(const VarianceProfile& v, const PartialTransforms& s);

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> rho;
  double epsilon = 1e-2;
  double t = 0.0;
};

// Smoothed spectral density rho(x) = -(1/pi) Im gbar(x + i epsilon) on the
// given grid. Solver failures are rethrown with the offending grid point.
DensityCurve spectral_density(const ModelParams& p, double t,
                              const std::vector<double>& grid,
                              double epsilon = 1e-2,
                              const DysonOptions& opts = {});
DensityCurve spectral_density(const VarianceProfile& v,
                              const std::vector<double>& grid, double epsilon,
                              const DysonOptions& opts = {});

struct EdgeOptions {
  double epsilon = 1e-6;          // smoothing for the threshold scan
  double threshold = 1e-4;        // density level defining the support
  double coarse_step_frac = 1e-3; // coarse grid step / scan span
  int refine_iters = 40;          // bisection steps per crossing
};

struct BulkEdges {
  double lower = 0.0;
  double upper = 0.0;
  double threshold = 0.0;
  double grid_step = 0.0;
};

// Outermost crossings of the density threshold: coarse scan over
// [-2 sqrt(sigma_max) - 1, 2 sqrt(sigma_max) + 1], then bisection.
BulkEdges bulk_edges(const ModelParams& p, double t,
                     const EdgeOptions& opts = {});
BulkEdges bulk_edges(const VarianceProfile& v, const EdgeOptions& opts = {});

// Edge location refined to ~1e-9 by bisecting the loss of the real-axis
// solution (stability margin hitting zero). `rough` must be the matching
// threshold-crossing edge; side +1 refines the upper edge, -1 the lower.
double refine_edge(const VarianceProfile& v, double rough, int side);

}  // namespace flowspec
