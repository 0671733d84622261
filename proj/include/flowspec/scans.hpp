#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "flowspec/model.hpp"
#include "flowspec/outlier.hpp"

namespace flowspec {

enum class CellStatus { ok, infinite, failed };

struct ThetaCPoint {
  double t = 0.0;
  double theta_c = 0.0;  // +inf when status == infinite
  CellStatus status = CellStatus::ok;
};

struct ThetaCCurve {
  std::vector<ThetaCPoint> points;
};

struct TransitionRow {
  double theta = 0.0;
  CellStatus status = CellStatus::ok;
  Regime regime = Regime::weak;  // meaningful only when status == ok
  std::optional<double> t1;
  std::optional<double> t2;
  std::optional<double> t_opt;
  std::optional<double> q_max;
};

struct PhaseDiagramTT {
  std::vector<double> theta_grid;
  std::vector<double> time_grid;
  ThetaCCurve boundary;               // theta_c sampled on time_grid
  std::vector<TransitionRow> rows;    // one per theta
};

struct PhaseDiagramTL {
  std::vector<double> theta_grid;
  std::vector<double> lambda_minus_grid;
  // regime_label[i][j] pairs theta_grid[i] with lambda_minus_grid[j].
  std::vector<std::vector<Regime>> regime_label;
  std::vector<std::vector<CellStatus>> status;
};

std::vector<double> log_grid(double lo, double hi, int n);

// Critical signal strength along a time grid; theta in `base` is ignored.
// Failures mark single points, never the whole curve.
ThetaCCurve theta_c_curve(const ModelParams& base,
                          const std::vector<double>& time_grid);

// Regime classification per theta over the span of time_grid, assembled
// with the theta_c boundary sampled on the same grid.
PhaseDiagramTT phase_diagram_theta_time(const ModelParams& base,
                                        const std::vector<double>& theta_grid,
                                        const std::vector<double>& time_grid);

// Regime label per (theta, lambda_minus), counting discriminant sign
// changes over a shared log time grid in the window.
PhaseDiagramTL phase_diagram_theta_lambda(
    double gamma, double alpha, const std::vector<double>& theta_grid,
    const std::vector<double>& lambda_grid,
    std::pair<double, double> time_window = {0.05, 3000.0},
    int time_grid_size = 60);

// Bisect a discriminant sign change to 1e-4 relative accuracy in t.
double refine_transition(const ModelParams& params,
                         std::pair<double, double> bracket);

}  // namespace flowspec
