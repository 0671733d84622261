#pragma once

#include <array>
#include <functional>
#include <optional>
#include <utility>

#include "flowspec/dyson.hpp"
#include "flowspec/model.hpp"

namespace flowspec {

// Quadratic forms of the resolvent against the teacher direction at a real
// point z outside the bulk: phi averages every block, psi and chi weight the
// blocks by their learned fraction (once and twice), so the null block
// contributes to phi only. The z-derivatives come from the same solve.
struct QuadraticForms {
  double phi = 0.0;
  double psi = 0.0;
  double chi = 0.0;
  double dphi = 0.0;
  double dpsi = 0.0;
  double dchi = 0.0;
  double z = 0.0;
  double t = 0.0;
};

QuadraticForms quadratic_forms(const ModelParams& params, double t, double z);

// One bulk edge with the limits of psi ± sqrt(phi·chi) on its outer side
// (Richardson-extrapolated to the edge). 1/e_plus is the signal threshold
// for an outlier on that side; +inf when e_plus vanishes.
struct EdgeFactors {
  double location = 0.0;
  double e_plus = 0.0;
  double e_minus = 0.0;
};

// Spectrum geometry of one (params, t) pair: refined edges and edge factors
// on both sides. theta-independent, so sweeps compute it once per t.
struct EdgeAnalysis {
  double t = 0.0;
  VarianceProfile profile;
  std::array<double, kMaxBlocks> signal{};
  EdgeFactors upper;
  EdgeFactors lower;
};

EdgeAnalysis analyze_edges(const ModelParams& params, double t,
                           const EdgeOptions& opts = {});

double critical_theta(const EdgeAnalysis& edges);
double critical_theta(const ModelParams& params, double t);
double critical_theta_lower(const EdgeAnalysis& edges);

// F(theta, t) at the upper edge: negative exactly when an upper outlier
// exists, with sign(F) = sign(theta_c(t) - theta).
double edge_discriminant(const EdgeAnalysis& edges, double theta);
double edge_discriminant(const ModelParams& params, double t);

enum class OutlierSide { upper, lower };

struct OutlierResult {
  bool exists = false;
  double xi = 0.0;
  OutlierSide side = OutlierSide::upper;
  double margin = 0.0;  // distance from the nearer bulk edge
};

// Outermost detached eigenvalue for params.theta at time t. When outliers
// exist on both sides the upper one is returned (it is the larger root and
// the one regime classification tracks); a lower-only detection is reported
// with side = lower.
OutlierResult outlier_location(const ModelParams& params, double t);
OutlierResult outlier_location(const ModelParams& params,
                               const EdgeAnalysis& edges);

// Root search restricted to one side; lets callers inspect a lower outlier
// that coexists with (and is masked by) an upper one.
OutlierResult outlier_side(const ModelParams& params,
                           const EdgeAnalysis& edges, OutlierSide side);

// Squared overlap of the upper outlier eigenvector with the teacher
// direction; 0 when no upper outlier exists.
double overlap_theory(const ModelParams& params, double t);
double overlap_theory(const ModelParams& params, const EdgeAnalysis& edges);

enum class Regime { weak, persistent, transient };

struct RegimeReport {
  Regime regime = Regime::weak;
  std::optional<double> t1;     // emergence time
  std::optional<double> t2;     // reabsorption time (transient only)
  std::optional<double> t_opt;  // overlap-maximizing time
  std::optional<double> q_max;
};

struct StoppingResult {
  double t_opt = 0.0;
  double q_max = 0.0;
  bool multimodal = false;
};

// Shared-edge hook for sweeps: classify_regime and optimal_stopping accept a
// provider so a (theta, t) scan can reuse per-t edge analyses across theta.
using EdgeProvider = std::function<EdgeAnalysis(double)>;

RegimeReport classify_regime(const ModelParams& params,
                             std::pair<double, double> t_range = {0.05,
                                                                  3000.0},
                             int grid_size = 60);
RegimeReport classify_regime(const ModelParams& params,
                             std::pair<double, double> t_range, int grid_size,
                             const EdgeProvider& edges_at,
                             bool with_stopping = true);

StoppingResult optimal_stopping(const ModelParams& params,
                                std::pair<double, double> window);
StoppingResult optimal_stopping(const ModelParams& params,
                                std::pair<double, double> window,
                                const EdgeProvider& edges_at);

}  // namespace flowspec
