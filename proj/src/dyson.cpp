#include "flowspec/dyson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "flowspec/errors.hpp"

namespace flowspec {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Scan window guaranteed to contain the spectrum.
double support_bound(const VarianceProfile& v) {
  return 2.0 * std::sqrt(v.sigma_max()) + 1.0;
}

bool finite(Complex w) {
  return std::isfinite(w.real()) && std::isfinite(w.imag());
}

struct IterationState {
  std::array<Complex, kMaxBlocks> g{};
  double residual = 0.0;
  long iterations = 0;
  bool converged = false;
};

// Damped fixed-point iteration g_p <- 1/(z - sum_q w_q sigma_pq g_q). The
// map preserves Im g <= 0 for Im z >= 0, where the physical solution is the
// unique attracting point. Two accelerators, neither able to change the
// answer (convergence is always judged by the true fixed-point residual):
//  - damping drops to 0.5 once 50 iterations fail to shrink the residual
//    appreciably (oscillatory or near-unit contraction);
//  - every 25 iterations the dominant error mode is extrapolated away
//    (geometric-series jump), rejected unless it stays in Im g <= 0.
IterationState iterate(const VarianceProfile& v, Complex z,
                       const std::array<Complex, kMaxBlocks>& init,
                       const DysonOptions& opts) {
  const int n = v.n_blocks;
  IterationState st;
  st.g = init;

  double damping = opts.damping;
  double window_residual = std::numeric_limits<double>::infinity();
  std::array<Complex, kMaxBlocks> step_prev{};
  bool have_step = false;

  for (long it = 1; it <= opts.max_iter; ++it) {
    double res = 0.0;
    std::array<Complex, kMaxBlocks> next{};
    for (int p = 0; p < n; ++p) {
      Complex denom = z;
      for (int q = 0; q < n; ++q)
        denom -= v.weights[q] * v.sigma[p][q] * st.g[q];
      next[p] = 1.0 / denom;
      res = std::max(res, std::abs(next[p] - st.g[p]));
    }
    st.iterations = it;
    st.residual = res;
    if (!std::isfinite(res)) return st;
    if (res <= opts.tol) {
      st.converged = true;
      return st;
    }

    std::array<Complex, kMaxBlocks> step{};
    for (int p = 0; p < n; ++p)
      step[p] = damping * (next[p] - st.g[p]);

    if (it % 25 == 0 && have_step) {
      Complex num = 0.0, den = 0.0;
      for (int p = 0; p < n; ++p) {
        num += step[p] * std::conj(step_prev[p]);
        den += step_prev[p] * std::conj(step_prev[p]);
      }
      if (den != Complex(0.0, 0.0)) {
        const Complex mu = num / den;
        const double m = std::abs(mu);
        if (m > 0.5 && m < 1.0 - 1e-14) {
          bool ok = true;
          std::array<Complex, kMaxBlocks> cand{};
          const Complex gain = mu / (1.0 - mu);
          for (int p = 0; p < n; ++p) {
            cand[p] = st.g[p] + step[p] + step[p] * gain;
            if (!finite(cand[p]) || cand[p].imag() > 0.0) ok = false;
          }
          if (ok) {
            st.g = cand;
            have_step = false;
            continue;
          }
        }
      }
    }

    for (int p = 0; p < n; ++p) st.g[p] += step[p];
    step_prev = step;
    have_step = true;

    if (it % 50 == 0) {
      if (res > 0.7 * window_residual && damping > 0.5) {
        damping = 0.5;
        have_step = false;
      }
      window_residual = res;
    }
  }
  return st;
}

std::array<Complex, kMaxBlocks> default_init(int n, Complex z) {
  std::array<Complex, kMaxBlocks> g{};
  for (int p = 0; p < n; ++p) g[p] = 1.0 / z;
  return g;
}

PartialTransforms run_solver(const VarianceProfile& v, Complex z,
                             const std::array<Complex, kMaxBlocks>& init,
                             const DysonOptions& opts) {
  if (v.n_blocks < 1 || v.n_blocks > kMaxBlocks)
    throw std::invalid_argument("variance profile has invalid block count");
  if (!finite(z)) throw std::invalid_argument("z must be finite");
  if (z.imag() < 0.0)
    throw std::invalid_argument("z must have Im z >= 0");
  if (z == Complex(0.0, 0.0))
    throw DomainError("z = 0 lies inside the bulk");

  const IterationState st = iterate(v, z, init, opts);
  if (!st.converged) {
    if (z.imag() == 0.0 && std::abs(z.real()) <= support_bound(v))
      throw DomainError(
          "real z appears to lie inside the bulk (no stable real solution)");
    throw ConvergenceError("Dyson iteration did not reach tolerance",
                           st.residual);
  }
  if (z.imag() == 0.0) {
    // Outside the bulk every block transform has the sign of z. A converged
    // real point violating this is a spurious algebraic solution, not the
    // Stieltjes branch.
    for (int p = 0; p < v.n_blocks; ++p)
      if (st.g[p].real() * z.real() <= 0.0)
        throw DomainError("real-axis solution is not the Stieltjes branch");
  }

  PartialTransforms out;
  out.n_blocks = v.n_blocks;
  out.g = st.g;
  out.z = z;
  out.residual = st.residual;
  out.iterations = st.iterations;
  return out;
}

}  // namespace

Complex PartialTransforms::average(const VarianceProfile& v) const {
  Complex m = 0.0;
  for (int p = 0; p < n_blocks; ++p) m += v.weights[p] * g[p];
  return m;
}

PartialTransforms solve_dyson(const VarianceProfile& v, Complex z,
                              const DysonOptions& opts) {
  return run_solver(v, z, default_init(v.n_blocks, z), opts);
}

PartialTransforms solve_dyson(const VarianceProfile& v, Complex z,
                              const PartialTransforms& warm,
                              const DysonOptions& opts) {
  if (warm.n_blocks != v.n_blocks)
    throw std::invalid_argument("warm start block count mismatch");
  return run_solver(v, z, warm.g, opts);
}

std::array<Complex, kMaxBlocks> dyson_derivative(const VarianceProfile& v,
                                                 const PartialTransforms& s) {
  const int n = v.n_blocks;
  if (s.n_blocks != n)
    throw std::invalid_argument("solution block count mismatch");

  // Linearized fixed point: (I - diag(g^2) sigma w) g' = -g^2.
  Complex a[kMaxBlocks][kMaxBlocks];
  Complex b[kMaxBlocks];
  for (int p = 0; p < n; ++p) {
    const Complex g2 = s.g[p] * s.g[p];
    for (int q = 0; q < n; ++q) {
      a[p][q] = -g2 * v.weights[q] * v.sigma[p][q];
      if (p == q) a[p][q] += 1.0;
    }
    b[p] = -g2;
  }

  // Gaussian elimination with partial pivoting; n <= 3.
  int perm[kMaxBlocks] = {0, 1, 2};
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[perm[r]][col]) > std::abs(a[perm[piv]][col])) piv = r;
    std::swap(perm[col], perm[piv]);
    const Complex head = a[perm[col]][col];
    if (std::abs(head) < 1e-13)
      throw SingularityError("stability matrix is singular (bulk edge)");
    for (int r = col + 1; r < n; ++r) {
      const Complex m = a[perm[r]][col] / head;
      for (int c = col; c < n; ++c) a[perm[r]][c] -= m * a[perm[col]][c];
      b[perm[r]] -= m * b[perm[col]];
    }
  }
  std::array<Complex, kMaxBlocks> x{};
  for (int row = n - 1; row >= 0; --row) {
    Complex acc = b[perm[row]];
    for (int c = row + 1; c < n; ++c) acc -= a[perm[row]][c] * x[c];
    x[row] = acc / a[perm[row]][row];
  }
  return x;
}

double stability_margin(const VarianceProfile& v, const PartialTransforms& s) {
  const int n = v.n_blocks;
  Complex a[kMaxBlocks][kMaxBlocks];
  for (int p = 0; p < n; ++p) {
    const Complex g2 = s.g[p] * s.g[p];
    for (int q = 0; q < n; ++q) {
      a[p][q] = -g2 * v.weights[q] * v.sigma[p][q];
      if (p == q) a[p][q] += 1.0;
    }
  }
  Complex det = 1.0;
  int perm[kMaxBlocks] = {0, 1, 2};
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[perm[r]][col]) > std::abs(a[perm[piv]][col])) piv = r;
    if (piv != col) {
      std::swap(perm[col], perm[piv]);
      det = -det;
    }
    const Complex head = a[perm[col]][col];
    det *= head;
    if (head == Complex(0.0, 0.0)) return 0.0;
    for (int r = col + 1; r < n; ++r) {
      const Complex m = a[perm[r]][col] / head;
      for (int c = col; c < n; ++c) a[perm[r]][c] -= m * a[perm[col]][c];
    }
  }
  return det.real();
}

DensityCurve spectral_density(const VarianceProfile& v,
                              const std::vector<double>& grid, double epsilon,
                              const DysonOptions& opts) {
  if (grid.empty()) throw std::invalid_argument("density grid is empty");
  for (size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw std::invalid_argument("density grid must be strictly ascending");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be positive");

  DensityCurve curve;
  curve.grid = grid;
  curve.rho.resize(grid.size());
  curve.epsilon = epsilon;
  for (size_t i = 0; i < grid.size(); ++i) {
    try {
      const auto sol = solve_dyson(v, Complex(grid[i], epsilon), opts);
      curve.rho[i] = std::max(0.0, -sol.average(v).imag() / kPi);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("density solve failed at lambda = " +
                                 std::to_string(grid[i]) + ": " + e.what(),
                             e.residual());
    }
  }
  return curve;
}

DensityCurve spectral_density(const ModelParams& p, double t,
                              const std::vector<double>& grid, double epsilon,
                              const DysonOptions& opts) {
  DensityCurve curve = spectral_density(variance_profile(p, t), grid, epsilon, opts);
  curve.t = t;
  return curve;
}

namespace {

// Density at a single point with warm starting; generous budget because the
// epsilon used for edge scans is small.
double rho_at(const VarianceProfile& v, double x, double epsilon,
              PartialTransforms* warm) {
  DysonOptions opts;
  opts.max_iter = 400000;
  const Complex z(x, epsilon);
  PartialTransforms sol = (warm && warm->n_blocks == v.n_blocks)
                              ? solve_dyson(v, z, *warm, opts)
                              : solve_dyson(v, z, opts);
  if (warm) *warm = sol;
  return std::max(0.0, -sol.average(v).imag() / kPi);
}

}  // namespace

BulkEdges bulk_edges(const VarianceProfile& v, const EdgeOptions& opts) {
  if (!(opts.epsilon > 0.0) || !(opts.threshold > 0.0) ||
      !(opts.coarse_step_frac > 0.0) || opts.refine_iters < 1)
    throw std::invalid_argument("invalid edge options");

  const double hi = support_bound(v);
  const double lo = -hi;
  const double span = hi - lo;
  const double step = opts.coarse_step_frac * span;
  const int npts = static_cast<int>(std::ceil(span / step)) + 1;

  std::vector<double> xs(npts);
  std::vector<char> above(npts);
  PartialTransforms warm;
  int first = -1, last = -1;
  for (int i = 0; i < npts; ++i) {
    xs[i] = lo + (span * i) / (npts - 1);
    above[i] = rho_at(v, xs[i], opts.epsilon, &warm) >= opts.threshold;
    if (above[i]) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0)
    throw EdgeDetectionError("no density above threshold in scan window");
  if (first == 0 || last == npts - 1)
    throw EdgeDetectionError("spectrum reaches the scan window boundary");

  // Bisect the outermost threshold crossings.
  const auto refine = [&](double out, double in) {
    PartialTransforms local;
    for (int k = 0; k < opts.refine_iters; ++k) {
      const double mid = 0.5 * (out + in);
      if (rho_at(v, mid, opts.epsilon, &local) >= opts.threshold)
        in = mid;
      else
        out = mid;
    }
    return 0.5 * (out + in);
  };

  BulkEdges e;
  e.lower = refine(xs[first - 1], xs[first]);
  e.upper = refine(xs[last + 1], xs[last]);
  e.threshold = opts.threshold;
  e.grid_step = span / (npts - 1);
  return e;
}

BulkEdges bulk_edges(const ModelParams& p, double t, const EdgeOptions& opts) {
  return bulk_edges(variance_profile(p, t), opts);
}

double refine_edge(const VarianceProfile& v, double rough, int side) {
  if (side != 1 && side != -1)
    throw std::invalid_argument("side must be +1 (upper) or -1 (lower)");

  // A point is outside the bulk iff the real-axis solve lands on a stable
  // real solution. Budgeted so that failures just outside the edge bias the
  // answer outward by well under the downstream evaluation offsets.
  DysonOptions opts;
  opts.tol = 1e-9;
  opts.max_iter = 30000;
  const auto outside = [&](double x) {
    try {
      return stability_margin(v, solve_dyson(v, x, opts)) > 0.0;
    } catch (const ConvergenceError&) {
      return false;
    } catch (const DomainError&) {
      return false;
    }
  };

  const double dir = side;  // outward direction
  double out = rough;
  double step = 1e-3;
  for (int k = 0; k < 12 && !outside(out); ++k) {
    out = rough + dir * step;
    step *= 2.0;
  }
  if (!outside(out))
    throw EdgeDetectionError("failed to step outside the bulk edge");

  double in = out - dir * 1e-3;
  step = 2e-3;
  for (int k = 0; k < 12 && outside(in); ++k) {
    in = out - dir * step;
    step *= 2.0;
  }
  if (outside(in))
    throw EdgeDetectionError("failed to step inside the bulk edge");

  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (in + out);
    if (mid == in || mid == out) break;
    if (outside(mid))
      out = mid;
    else
      in = mid;
    if (std::abs(out - in) < 1e-10 * std::max(1.0, std::abs(out))) break;
  }
  return out;
}

}  // namespace flowspec
