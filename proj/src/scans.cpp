#include "flowspec/scans.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>

#include "flowspec/errors.hpp"

namespace flowspec {

namespace {

EdgeProvider cached_edges(const ModelParams& params) {
  auto cache = std::make_shared<std::map<double, EdgeAnalysis>>();
  return [params, cache](double t) -> EdgeAnalysis {
    auto it = cache->find(t);
    if (it == cache->end())
      it = cache->emplace(t, analyze_edges(params, t)).first;
    return it->second;
  };
}

void require_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty())
    throw std::invalid_argument(std::string(name) + " grid must be nonempty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument(std::string(name) +
                                  " grid must be strictly increasing");
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2)
    throw std::invalid_argument("log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double lr = std::log(hi / lo);
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = lo * std::exp(lr * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

ThetaCCurve theta_c_curve(const ModelParams& base,
                          const std::vector<double>& time_grid) {
  base.validate();
  require_grid(time_grid, "time");
  ThetaCCurve curve;
  curve.points.reserve(time_grid.size());
  for (double t : time_grid) {
    ThetaCPoint pt;
    pt.t = t;
    try {
      pt.theta_c = critical_theta(base, t);
      pt.status = std::isfinite(pt.theta_c) ? CellStatus::ok
                                            : CellStatus::infinite;
    } catch (const std::exception&) {
      pt.theta_c = std::numeric_limits<double>::quiet_NaN();
      pt.status = CellStatus::failed;
    }
    curve.points.push_back(pt);
  }
  return curve;
}

PhaseDiagramTT phase_diagram_theta_time(const ModelParams& base,
                                        const std::vector<double>& theta_grid,
                                        const std::vector<double>& time_grid) {
  base.validate();
  require_grid(theta_grid, "theta");
  require_grid(time_grid, "time");

  PhaseDiagramTT out;
  out.theta_grid = theta_grid;
  out.time_grid = time_grid;

  // One edge cache feeds the boundary and every row: the analysis does not
  // depend on theta.
  const EdgeProvider edges = cached_edges(base);

  out.boundary.points.reserve(time_grid.size());
  for (double t : time_grid) {
    ThetaCPoint pt;
    pt.t = t;
    try {
      pt.theta_c = critical_theta(edges(t));
      pt.status = std::isfinite(pt.theta_c) ? CellStatus::ok
                                            : CellStatus::infinite;
    } catch (const std::exception&) {
      pt.theta_c = std::numeric_limits<double>::quiet_NaN();
      pt.status = CellStatus::failed;
    }
    out.boundary.points.push_back(pt);
  }

  const std::pair<double, double> window{time_grid.front(), time_grid.back()};
  const int grid_size = static_cast<int>(time_grid.size());
  out.rows.reserve(theta_grid.size());
  for (double theta : theta_grid) {
    TransitionRow row;
    row.theta = theta;
    ModelParams p = base;
    p.theta = theta;
    try {
      const RegimeReport rep =
          classify_regime(p, window, grid_size, edges, true);
      row.regime = rep.regime;
      row.t1 = rep.t1;
      row.t2 = rep.t2;
      row.t_opt = rep.t_opt;
      row.q_max = rep.q_max;
    } catch (const std::exception&) {
      row.status = CellStatus::failed;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

PhaseDiagramTL phase_diagram_theta_lambda(
    double gamma, double alpha, const std::vector<double>& theta_grid,
    const std::vector<double>& lambda_grid,
    std::pair<double, double> time_window, int time_grid_size) {
  require_grid(theta_grid, "theta");
  require_grid(lambda_grid, "lambda_minus");
  if (!(time_window.first > 0.0) || !(time_window.second > time_window.first))
    throw std::invalid_argument("time window must satisfy 0 < lo < hi");
  if (time_grid_size < 2)
    throw std::invalid_argument("time grid size must be >= 2");

  const std::vector<double> times =
      log_grid(time_window.first, time_window.second, time_grid_size);

  PhaseDiagramTL out;
  out.theta_grid = theta_grid;
  out.lambda_minus_grid = lambda_grid;
  out.regime_label.assign(theta_grid.size(),
                          std::vector<Regime>(lambda_grid.size(), Regime::weak));
  out.status.assign(
      theta_grid.size(),
      std::vector<CellStatus>(lambda_grid.size(), CellStatus::ok));

  for (std::size_t j = 0; j < lambda_grid.size(); ++j) {
    ModelParams p;
    p.gamma = gamma;
    p.alpha = alpha;
    p.lambda_minus = lambda_grid[j];
    p.theta = 0.0;
    p.validate();

    // The edge analysis is theta independent: one pass over the time grid
    // serves the whole column.
    std::vector<EdgeAnalysis> column;
    column.reserve(times.size());
    bool column_ok = true;
    try {
      for (double t : times) column.push_back(analyze_edges(p, t));
    } catch (const std::exception&) {
      column_ok = false;
    }
    if (!column_ok) {
      for (std::size_t i = 0; i < theta_grid.size(); ++i)
        out.status[i][j] = CellStatus::failed;
      continue;
    }

    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
      const double theta = theta_grid[i];
      // Virtual positive sign at t -> 0: no outlier before learning starts.
      int flips = 0;
      bool prev_neg = false;
      for (const EdgeAnalysis& a : column) {
        const bool neg = edge_discriminant(a, theta) < 0.0;
        if (neg != prev_neg) ++flips;
        prev_neg = neg;
      }
      if (flips == 0)
        out.regime_label[i][j] = Regime::weak;
      else if (flips == 1)
        out.regime_label[i][j] = Regime::persistent;
      else if (flips == 2)
        out.regime_label[i][j] = Regime::transient;
      else
        out.status[i][j] = CellStatus::failed;
    }
  }
  return out;
}

double refine_transition(const ModelParams& params,
                         std::pair<double, double> bracket) {
  params.validate();
  double lo = bracket.first;
  double hi = bracket.second;
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
    throw std::invalid_argument("bracket must satisfy 0 < lo < hi");

  const EdgeProvider edges = cached_edges(params);
  const auto f = [&](double t) {
    return edge_discriminant(edges(t), params.theta);
  };
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!(flo * fhi < 0.0))
    throw std::invalid_argument("discriminant does not change sign across "
                                "the bracket");

  const bool lo_neg = flo < 0.0;
  while (hi / lo > 1.0 + 1e-4) {
    const double mid = std::sqrt(lo * hi);
    if ((f(mid) < 0.0) == lo_neg)
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(lo * hi);
}

}  // namespace flowspec
