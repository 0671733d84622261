#include "flowspec/outlier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowspec/errors.hpp"

namespace flowspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct RealForms {
  double phi = 0.0, psi = 0.0, chi = 0.0;
  double dphi = 0.0, dpsi = 0.0, dchi = 0.0;
};

DysonOptions form_options() {
  DysonOptions o;
  o.tol = 1e-12;
  o.max_iter = 400000;
  return o;
}

RealForms forms_at(const VarianceProfile& v,
                   const std::array<double, kMaxBlocks>& f, double z,
                   PartialTransforms* warm, bool derivatives) {
  const DysonOptions opts = form_options();
  PartialTransforms s = (warm && warm->n_blocks == v.n_blocks)
                            ? solve_dyson(v, z, *warm, opts)
                            : solve_dyson(v, z, opts);
  if (warm) *warm = s;
  RealForms r;
  for (int p = 0; p < v.n_blocks; ++p) {
    const double g = s.g[p].real();
    const double w = v.weights[p];
    r.phi += w * g;
    r.psi += w * f[p] * g;
    r.chi += w * f[p] * f[p] * g;
  }
  if (derivatives) {
    const auto gp = dyson_derivative(v, s);
    for (int p = 0; p < v.n_blocks; ++p) {
      const double d = gp[p].real();
      const double w = v.weights[p];
      r.dphi += w * d;
      r.dpsi += w * f[p] * d;
      r.dchi += w * f[p] * f[p] * d;
    }
  }
  return r;
}

double e_plus_of(const RealForms& r) {
  return r.psi + std::sqrt(std::max(r.phi * r.chi, 0.0));
}

double e_minus_of(const RealForms& r) {
  return r.psi - std::sqrt(std::max(r.phi * r.chi, 0.0));
}

// Extrapolate y(delta) to delta -> 0 in the basis {1, sqrt(delta), delta},
// the leading expansion at a square-root spectral edge.
double to_edge(const double* deltas, const double* y) {
  double m[3][4];
  for (int i = 0; i < 3; ++i) {
    m[i][0] = 1.0;
    m[i][1] = std::sqrt(deltas[i]);
    m[i][2] = deltas[i];
    m[i][3] = y[i];
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  double x[3];
  for (int row = 2; row >= 0; --row) {
    double acc = m[row][3];
    for (int c = row + 1; c < 3; ++c) acc -= m[row][c] * x[c];
    x[row] = acc / m[row][row];
  }
  return x[0];
}

EdgeFactors edge_factors(const VarianceProfile& v,
                         const std::array<double, kMaxBlocks>& f, double edge,
                         double dir) {
  static constexpr double kDeltas[3] = {4e-3, 2e-3, 1e-3};
  double ep[3], em[3];
  PartialTransforms warm;
  for (int i = 0; i < 3; ++i) {
    const RealForms r = forms_at(v, f, edge + dir * kDeltas[i], &warm, false);
    ep[i] = e_plus_of(r);
    em[i] = e_minus_of(r);
  }
  EdgeFactors out;
  out.location = edge;
  out.e_plus = to_edge(kDeltas, ep);
  out.e_minus = to_edge(kDeltas, em);
  return out;
}

double threshold_from(double e_plus) {
  return e_plus > 1e-13 ? 1.0 / e_plus : kInf;
}

double max_signal(const EdgeAnalysis& a) {
  double m = 0.0;
  for (int p = 0; p < a.profile.n_blocks; ++p)
    m = std::max(m, a.signal[p]);
  return m;
}

OutlierResult outlier_root(const ModelParams& params, const EdgeAnalysis& a,
                           OutlierSide side) {
  params.validate();
  const double theta = params.theta;
  const EdgeFactors& ef = side == OutlierSide::upper ? a.upper : a.lower;

  OutlierResult res;
  res.side = side;
  res.xi = std::numeric_limits<double>::quiet_NaN();
  res.margin = std::numeric_limits<double>::quiet_NaN();
  if (theta <= 0.0 || !(theta > threshold_from(ef.e_plus))) return res;

  // Bisect 1 - theta * e_plus(edge + dir*m) over the outward distance m.
  // The edge is the negative endpoint (theta is above threshold there); the
  // cap is positive because the forms decay like 1/m, so theta*e_plus at
  // m = span is below 1/2.
  const double dir = side == OutlierSide::upper ? 1.0 : -1.0;
  const double span = 2.0 * theta * (1.0 + max_signal(a)) + 10.0;
  double neg = 0.0;
  double pos = span;
  PartialTransforms warm;
  for (int k = 0; k < 200; ++k) {
    const double m = 0.5 * (neg + pos);
    double h;
    try {
      const RealForms r =
          forms_at(a.profile, a.signal, ef.location + dir * m, &warm, false);
      h = 1.0 - theta * e_plus_of(r);
    } catch (const DomainError&) {
      h = -1.0;  // bulk contact: below the root
    }
    (h < 0.0 ? neg : pos) = m;
    if (pos - neg <= 1e-10) break;
  }
  res.exists = true;
  res.margin = 0.5 * (neg + pos);
  res.xi = ef.location + dir * res.margin;
  return res;
}

double overlap_from(const ModelParams& params, const EdgeAnalysis& a) {
  const OutlierResult up = outlier_root(params, a, OutlierSide::upper);
  if (!up.exists) return 0.0;

  RealForms r;
  try {
    r = forms_at(a.profile, a.signal, up.xi, nullptr, true);
  } catch (const DomainError&) {
    // The root grazes the edge closer than the refined edge is accurate, so
    // the resolvent cannot be evaluated there. The overlap vanishes
    // continuously at the threshold, so the grazing limit is zero.
    return 0.0;
  }
  const double inv = 1.0 / params.theta;
  const double num =
      -(r.chi * r.phi * r.phi + 2.0 * (inv - r.psi) * r.phi * r.psi +
        r.phi * r.psi * r.psi);
  const double dden =
      r.dphi * r.chi + r.phi * r.dchi + 2.0 * (inv - r.psi) * r.dpsi;
  if (std::abs(dden) < 1e-12)
    throw SingularityError("outlier root is degenerate");
  const double q = num / dden;
  const double clamped = std::clamp(q, 0.0, 1.0);
  // Near reabsorption the root grazes the edge and inherits the edge-factor
  // extrapolation error, so small excursions outside [0, 1] are expected.
  if (std::abs(q - clamped) > 1e-4)
    throw ResolutionError("overlap residue left [0, 1]: " +
                          std::to_string(q));
  return clamped;
}

EdgeProvider memoized_edges(const ModelParams& params) {
  auto cache = std::make_shared<std::map<double, EdgeAnalysis>>();
  return [params, cache](double t) -> EdgeAnalysis {
    auto it = cache->find(t);
    if (it == cache->end())
      it = cache->emplace(t, analyze_edges(params, t)).first;
    return it->second;
  };
}

StoppingResult stopping_impl(const ModelParams& params,
                             std::pair<double, double> window,
                             const EdgeProvider& edges_at) {
  const double w1 = window.first;
  const double w2 = window.second;
  if (!(w1 > 0.0) || !(w2 > w1) || !std::isfinite(w2))
    throw std::invalid_argument("stopping window is empty");

  const auto q_at = [&](double t) { return overlap_from(params, edges_at(t)); };

  constexpr int kGrid = 64;
  std::vector<double> ts(kGrid), qs(kGrid);
  const double lr = std::log(w2 / w1);
  for (int i = 0; i < kGrid; ++i) {
    ts[i] = w1 * std::exp(lr * i / (kGrid - 1));
    qs[i] = q_at(ts[i]);
  }
  ts.front() = w1;
  ts.back() = w2;

  int best = 0;
  for (int i = 1; i < kGrid; ++i)
    if (qs[i] > qs[best]) best = i;

  // Count local maxima of the grid curve (endpoints included); more than
  // one means the golden-section assumption failed and the global grid
  // maximum is refined instead.
  int maxima = 0;
  int dir = -2;
  for (int i = 1; i < kGrid; ++i) {
    const double d = qs[i] - qs[i - 1];
    const int s = d > 1e-12 ? 1 : (d < -1e-12 ? -1 : 0);
    if (s == 0) continue;
    if (s < 0 && (dir == 1 || dir == -2)) ++maxima;
    dir = s;
  }
  if (dir == 1 || dir == -2) ++maxima;

  // Golden-section in log t around the grid maximum, relative tolerance
  // 1e-3 in t.
  double a = std::log(ts[std::max(0, best - 1)]);
  double b = std::log(ts[std::min(kGrid - 1, best + 1)]);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = q_at(std::exp(x1));
  double f2 = q_at(std::exp(x2));
  while (b - a > 1e-3) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = q_at(std::exp(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = q_at(std::exp(x1));
    }
  }

  StoppingResult out;
  out.t_opt = std::exp(0.5 * (a + b));
  out.q_max = q_at(out.t_opt);
  if (qs[best] > out.q_max) {
    out.t_opt = ts[best];
    out.q_max = qs[best];
  }
  out.multimodal = maxima > 1;
  return out;
}

}  // namespace

QuadraticForms quadratic_forms(const ModelParams& params, double t, double z) {
  const VarianceProfile v = variance_profile(params, t);
  const auto f = block_signals(params, t);
  if (!std::isfinite(z)) throw std::invalid_argument("z must be finite");
  const RealForms r = forms_at(v, f, z, nullptr, true);
  QuadraticForms q;
  q.phi = r.phi;
  q.psi = r.psi;
  q.chi = r.chi;
  q.dphi = r.dphi;
  q.dpsi = r.dpsi;
  q.dchi = r.dchi;
  q.z = z;
  q.t = t;
  return q;
}

EdgeAnalysis analyze_edges(const ModelParams& params, double t,
                           const EdgeOptions& opts) {
  EdgeAnalysis a;
  a.t = t;
  a.profile = variance_profile(params, t);
  a.signal = block_signals(params, t);

  const BulkEdges rough = bulk_edges(a.profile, opts);
  const double up = refine_edge(a.profile, rough.upper, +1);
  const double lo = refine_edge(a.profile, rough.lower, -1);
  a.upper = edge_factors(a.profile, a.signal, up, +1.0);
  a.lower = edge_factors(a.profile, a.signal, lo, -1.0);
  return a;
}

double critical_theta(const EdgeAnalysis& edges) {
  return threshold_from(edges.upper.e_plus);
}

double critical_theta(const ModelParams& params, double t) {
  return critical_theta(analyze_edges(params, t));
}

double critical_theta_lower(const EdgeAnalysis& edges) {
  return threshold_from(edges.lower.e_plus);
}

double edge_discriminant(const EdgeAnalysis& edges, double theta) {
  return (1.0 - theta * edges.upper.e_plus) *
         (1.0 - theta * edges.upper.e_minus);
}

double edge_discriminant(const ModelParams& params, double t) {
  params.validate();
  return edge_discriminant(analyze_edges(params, t), params.theta);
}

OutlierResult outlier_location(const ModelParams& params,
                               const EdgeAnalysis& edges) {
  const OutlierResult up = outlier_root(params, edges, OutlierSide::upper);
  if (up.exists) return up;
  const OutlierResult low = outlier_root(params, edges, OutlierSide::lower);
  if (low.exists) return low;
  return up;
}

OutlierResult outlier_location(const ModelParams& params, double t) {
  return outlier_location(params, analyze_edges(params, t));
}

OutlierResult outlier_side(const ModelParams& params,
                           const EdgeAnalysis& edges, OutlierSide side) {
  return outlier_root(params, edges, side);
}

double overlap_theory(const ModelParams& params, const EdgeAnalysis& edges) {
  params.validate();
  return overlap_from(params, edges);
}

double overlap_theory(const ModelParams& params, double t) {
  params.validate();
  if (params.theta == 0.0) return 0.0;
  return overlap_from(params, analyze_edges(params, t));
}

RegimeReport classify_regime(const ModelParams& params,
                             std::pair<double, double> t_range, int grid_size,
                             const EdgeProvider& edges_at,
                             bool with_stopping) {
  params.validate();
  const double t_min = t_range.first;
  const double t_max = t_range.second;
  if (!(t_min > 0.0) || !(t_max > t_min) || !std::isfinite(t_max))
    throw std::invalid_argument("time range must satisfy 0 < t_min < t_max");
  if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");

  const double theta = params.theta;
  const auto negative_at = [&](double t) {
    return edge_discriminant(edges_at(t), theta) < 0.0;
  };

  std::vector<double> ts(grid_size);
  const double lr = std::log(t_max / t_min);
  for (int i = 0; i < grid_size; ++i)
    ts[i] = t_min * std::exp(lr * i / (grid_size - 1));
  ts.front() = t_min;
  ts.back() = t_max;

  // Sign changes of the discriminant, with a virtual positive sign at
  // t -> 0 (nothing has been learned yet, so no outlier).
  std::vector<std::pair<double, double>> flips;
  bool prev_neg = false;
  double prev_t = 0.0;
  for (int i = 0; i < grid_size; ++i) {
    const bool neg = negative_at(ts[i]);
    if (neg != prev_neg) flips.push_back({prev_t, ts[i]});
    prev_neg = neg;
    prev_t = ts[i];
  }

  RegimeReport rep;
  if (flips.empty()) return rep;  // weak everywhere
  if (flips.size() > 2)
    throw ResolutionError(
        "discriminant changes sign more than twice on the grid; "
        "use a finer time grid");

  // Bisect a bracket to 1e-4 relative; `to_negative` states which sign the
  // upper endpoint carries.
  const auto refine = [&](double lo, double hi, bool to_negative) {
    if (!(lo > 0.0)) return hi;  // emergence before the scan window
    while (hi / lo > 1.0 + 1e-4) {
      const double mid = std::sqrt(lo * hi);
      if (negative_at(mid) == to_negative)
        hi = mid;
      else
        lo = mid;
    }
    return std::sqrt(lo * hi);
  };

  rep.t1 = refine(flips[0].first, flips[0].second, true);
  if (flips.size() == 2) {
    rep.regime = Regime::transient;
    rep.t2 = refine(flips[1].first, flips[1].second, false);
  } else {
    rep.regime = Regime::persistent;
  }

  if (with_stopping) {
    const double right = rep.t2 ? *rep.t2 : t_max;
    const StoppingResult s = stopping_impl(params, {*rep.t1, right}, edges_at);
    rep.t_opt = s.t_opt;
    rep.q_max = s.q_max;
  }
  return rep;
}

RegimeReport classify_regime(const ModelParams& params,
                             std::pair<double, double> t_range,
                             int grid_size) {
  return classify_regime(params, t_range, grid_size, memoized_edges(params),
                         true);
}

StoppingResult optimal_stopping(const ModelParams& params,
                                std::pair<double, double> window,
                                const EdgeProvider& edges_at) {
  params.validate();
  return stopping_impl(params, window, edges_at);
}

StoppingResult optimal_stopping(const ModelParams& params,
                                std::pair<double, double> window) {
  return optimal_stopping(params, window, memoized_edges(params));
}

}  // namespace flowspec
