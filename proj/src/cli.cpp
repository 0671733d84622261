#include "flowspec/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flowspec/dyson.hpp"
#include "flowspec/io.hpp"
#include "flowspec/model.hpp"
#include "flowspec/outlier.hpp"
#include "flowspec/scans.hpp"
#include "flowspec/simulate.hpp"

namespace flowspec {

namespace {

double parse_num(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (pos != s.size())
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split_colon(const std::string& spec) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  // A leading '-' belongs to the first number, not the separator logic.
  while (true) {
    const std::size_t sep = spec.find(':', start);
    if (sep == std::string::npos) {
      parts.push_back(spec.substr(start));
      break;
    }
    parts.push_back(spec.substr(start, sep - start));
    start = sep + 1;
  }
  return parts;
}

}  // namespace

std::vector<double> parse_step_grid(const std::string& spec) {
  const auto parts = split_colon(spec);
  if (parts.size() != 3)
    throw std::invalid_argument("grid spec must be lo:hi:step, got '" + spec +
                                "'");
  const double lo = parse_num(parts[0]);
  const double hi = parse_num(parts[1]);
  const double step = parse_num(parts[2]);
  if (!(step > 0.0) || !(hi > lo))
    throw std::invalid_argument("grid spec needs hi > lo and step > 0");
  const double count = std::floor((hi - lo) / step + 0.5) + 1.0;
  if (count > 1e7)
    throw std::invalid_argument("grid spec describes too many points");
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(count));
  for (double x = lo; x <= hi + step * 0.5; x += step) g.push_back(x);
  return g;
}

std::vector<double> parse_spaced_grid(const std::string& spec) {
  const auto parts = split_colon(spec);
  if (parts.size() != 4 || (parts[0] != "log" && parts[0] != "lin"))
    throw std::invalid_argument(
        "grid spec must be log:a:b:n or lin:a:b:n, got '" + spec + "'");
  const double a = parse_num(parts[1]);
  const double b = parse_num(parts[2]);
  const double nd = parse_num(parts[3]);
  const int n = static_cast<int>(nd);
  if (nd != n || n < 1)
    throw std::invalid_argument("grid spec needs a positive integer count");
  if (n == 1) {
    if (!(b >= a)) throw std::invalid_argument("grid spec needs b >= a");
    return {a};
  }
  if (!(b > a)) throw std::invalid_argument("grid spec needs b > a");
  if (parts[0] == "log") {
    if (!(a > 0.0))
      throw std::invalid_argument("log grid needs a positive start");
    return log_grid(a, b, n);
  }
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  g.front() = a;
  g.back() = b;
  return g;
}

namespace {

namespace fs = std::filesystem;

using Row = std::vector<Json>;

std::string cell_to_csv(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number_unsigned())
    return std::to_string(v.get<unsigned long long>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

struct RunContext {
  std::string command;
  fs::path dir;
  std::string format = "csv";
  Json config = Json::object();
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  std::string path_of(const std::string& name) const {
    return (dir / name).string();
  }

  void emit_table(const std::string& base,
                  const std::vector<std::string>& header,
                  const std::vector<Row>& rows) {
    if (format == "csv" || format == "both") {
      std::vector<std::vector<std::string>> text;
      text.reserve(rows.size());
      for (const Row& r : rows) {
        std::vector<std::string> line;
        line.reserve(r.size());
        for (const Json& v : r) line.push_back(cell_to_csv(v));
        text.push_back(std::move(line));
      }
      write_table(path_of(base + ".csv"), header, text);
      outputs.push_back(base + ".csv");
    }
    if (format == "json" || format == "both") {
      Json doc;
      doc["header"] = header;
      doc["rows"] = rows;
      write_summary(path_of(base + ".json"), doc);
      outputs.push_back(base + ".json");
    }
  }

  void emit_document(const std::string& base, const Json& doc) {
    write_summary(path_of(base + ".json"), doc);
    outputs.push_back(base + ".json");
  }

  void write_meta() {
    Json meta;
    meta["command"] = command;
    meta["version"] = version_string();
    meta["config"] = config;
    meta["outputs"] = outputs;
    meta["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    write_summary(path_of("meta.json"), meta);
  }

  Json stdout_summary(Json body) const {
    Json line;
    line["command"] = command;
    for (auto& [k, v] : body.items()) line[k] = v;
    line["out_dir"] = dir.string();
    line["outputs"] = outputs;
    return line;
  }
};

std::string default_out_dir() {
  const char* env = std::getenv("FLOWSPEC_OUT_DIR");
  return env && *env ? std::string(env) : std::string(".");
}

struct ModelOpts {
  double gamma = 1.0;
  double alpha = 0.5;
  double lambda_minus = 0.1;
  double theta = 0.0;
};

void add_model_flags(CLI::App* cmd, ModelOpts& m, bool with_theta) {
  cmd->add_option("--gamma", m.gamma, "samples per dimension M/N");
  cmd->add_option("--alpha", m.alpha, "fraction of fast directions");
  cmd->add_option("--lambda-minus", m.lambda_minus,
                  "slow singular value in (0, 1]");
  if (with_theta)
    cmd->add_option("--theta", m.theta, "teacher signal strength");
}

ModelParams to_params(const ModelOpts& m) {
  ModelParams p;
  p.gamma = m.gamma;
  p.alpha = m.alpha;
  p.lambda_minus = m.lambda_minus;
  p.theta = m.theta;
  p.validate();
  return p;
}

Json params_json(const ModelParams& p) {
  Json j;
  j["gamma"] = p.gamma;
  j["alpha"] = p.alpha;
  j["lambda_minus"] = p.lambda_minus;
  j["lambda_plus"] = p.lambda_plus;
  j["theta"] = p.theta;
  return j;
}

void add_out_flags(CLI::App* cmd, RunContext& ctx) {
  cmd->add_option("--out", ctx.dir,
                  "output directory (default $FLOWSPEC_OUT_DIR or .)");
  cmd->add_option("--format", ctx.format, "table format: csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
}

Json opt_json(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

// Shared state of one invocation: each subcommand fills `prepare` (config
// validation; failures are usage errors) and `execute` (computation and
// writes; failures are numerical errors).
struct Pending {
  std::function<void(RunContext&)> prepare;
  std::function<Json(RunContext&)> execute;
};

double trapezoid_mass(const std::vector<double>& x,
                      const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return acc;
}

Json edge_factors_json(const EdgeFactors& f) {
  Json j;
  j["location"] = f.location;
  j["e_plus"] = f.e_plus;
  j["e_minus"] = f.e_minus;
  return j;
}

Json finite_or_null(double v) {
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

struct OverlapStats {
  std::vector<double> mean;
  std::vector<double> std_error;
};

OverlapStats overlap_stats(const std::vector<std::vector<double>>& per_time,
                           int reps) {
  OverlapStats s;
  s.mean.resize(per_time.size());
  s.std_error.resize(per_time.size());
  for (std::size_t k = 0; k < per_time.size(); ++k) {
    double m = 0.0;
    for (double x : per_time[k]) m += x;
    m /= reps;
    double v = 0.0;
    for (double x : per_time[k]) v += (x - m) * (x - m);
    s.mean[k] = m;
    s.std_error[k] = reps > 1 ? std::sqrt(v / (reps - 1) / reps) : 0.0;
  }
  return s;
}

Json run_flow_command(RunContext& ctx, const SimConfig& config,
                      bool power_law) {
  std::vector<Row> spectra;
  spectra.reserve(static_cast<std::size_t>(config.n_realizations) *
                  config.times.size() * static_cast<std::size_t>(config.n));
  std::vector<std::vector<double>> q(config.times.size());
  for (int rid = 0; rid < config.n_realizations; ++rid) {
    const std::vector<SpectrumSample> samples =
        power_law ? sample_powerlaw_flow(config, rid)
                  : sample_two_block(config, rid);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      q[k].push_back(samples[k].top_overlap);
      for (double ev : samples[k].eigenvalues)
        spectra.push_back({samples[k].t, rid, ev});
    }
  }
  ctx.emit_table("spectra", {"t", "realization_id", "eigenvalue"}, spectra);

  const OverlapStats stats = overlap_stats(q, config.n_realizations);
  std::vector<Row> overlap_rows;
  for (std::size_t k = 0; k < config.times.size(); ++k)
    overlap_rows.push_back(
        {config.times[k], stats.mean[k], stats.std_error[k]});
  ctx.emit_table("overlap", {"t", "mean_overlap", "stderr"}, overlap_rows);

  Json body;
  body["n"] = config.n;
  body["realizations"] = config.n_realizations;
  body["n_times"] = config.times.size();
  body["seed"] = config.seed;
  return body;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "Spectral theory and Monte Carlo for gradient-flow weight matrices"};
  app.require_subcommand(1);

  auto ctx = std::make_shared<RunContext>();
  ctx->dir = default_out_dir();
  auto pending = std::make_shared<Pending>();

  // density: smoothed bulk density on a fixed grid.
  {
    auto o = std::make_shared<ModelOpts>();
    auto t = std::make_shared<double>(0.0);
    auto grid = std::make_shared<std::string>("-6:8:0.01");
    auto eps = std::make_shared<double>(1e-4);
    CLI::App* cmd = app.add_subcommand("density", "spectral density rho(x)");
    add_model_flags(cmd, *o, false);
    cmd->add_option("--t", *t, "flow time");
    cmd->add_option("--grid", *grid, "evaluation grid lo:hi:step");
    cmd->add_option("--epsilon", *eps, "imaginary smoothing");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto params = std::make_shared<ModelParams>();
      auto points = std::make_shared<std::vector<double>>();
      pending->prepare = [=](RunContext& c) {
        *params = to_params(*o);
        *points = parse_step_grid(*grid);
        c.command = "density";
        c.config["params"] = params_json(*params);
        c.config["t"] = *t;
        c.config["grid"] = *grid;
        c.config["epsilon"] = *eps;
      };
      pending->execute = [=](RunContext& c) -> Json {
        const DensityCurve curve = spectral_density(*params, *t, *points, *eps);
        std::vector<Row> rows;
        rows.reserve(curve.grid.size());
        for (std::size_t i = 0; i < curve.grid.size(); ++i)
          rows.push_back({curve.grid[i], curve.rho[i]});
        c.emit_table("density", {"lambda", "rho"}, rows);
        Json body;
        body["t"] = *t;
        body["n_points"] = curve.grid.size();
        body["mass"] = trapezoid_mass(curve.grid, curve.rho);
        return body;
      };
    });
  }

  // edges: refined support endpoints and threshold factors at one time.
  {
    auto o = std::make_shared<ModelOpts>();
    auto t = std::make_shared<double>(0.0);
    CLI::App* cmd =
        app.add_subcommand("edges", "bulk support edges and thresholds");
    add_model_flags(cmd, *o, false);
    cmd->add_option("--t", *t, "flow time");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto params = std::make_shared<ModelParams>();
      pending->prepare = [=](RunContext& c) {
        *params = to_params(*o);
        c.command = "edges";
        c.config["params"] = params_json(*params);
        c.config["t"] = *t;
      };
      pending->execute = [=](RunContext& c) -> Json {
        const EdgeAnalysis a = analyze_edges(*params, *t);
        Json doc;
        doc["t"] = *t;
        doc["upper"] = edge_factors_json(a.upper);
        doc["lower"] = edge_factors_json(a.lower);
        doc["theta_c"] = finite_or_null(critical_theta(a));
        doc["theta_c_lower"] = finite_or_null(critical_theta_lower(a));
        c.emit_document("edges", doc);
        return doc;
      };
    });
  }

  // theta-c: critical curve over a time grid.
  {
    auto o = std::make_shared<ModelOpts>();
    auto times = std::make_shared<std::string>("log:0.05:3000:60");
    CLI::App* cmd =
        app.add_subcommand("theta-c", "critical signal strength over time");
    add_model_flags(cmd, *o, false);
    cmd->add_option("--times", *times, "time grid log:a:b:n or lin:a:b:n");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto params = std::make_shared<ModelParams>();
      auto grid = std::make_shared<std::vector<double>>();
      pending->prepare = [=](RunContext& c) {
        *params = to_params(*o);
        *grid = parse_spaced_grid(*times);
        c.command = "theta-c";
        c.config["params"] = params_json(*params);
        c.config["times"] = *times;
      };
      pending->execute = [=](RunContext& c) -> Json {
        const ThetaCCurve curve = theta_c_curve(*params, *grid);
        std::vector<Row> rows;
        std::size_t n_ok = 0;
        for (const ThetaCPoint& pt : curve.points) {
          rows.push_back({pt.t,
                          pt.status == CellStatus::ok ? Json(pt.theta_c)
                                                      : Json(nullptr),
                          status_name(pt.status)});
          n_ok += pt.status == CellStatus::ok;
        }
        c.emit_table("theta_c", {"t", "theta_c", "status"}, rows);
        Json body;
        body["n_points"] = curve.points.size();
        body["n_ok"] = n_ok;
        return body;
      };
    });
  }

  // outlier: location, side, margin and overlap at one (theta, t).
  {
    auto o = std::make_shared<ModelOpts>();
    auto t = std::make_shared<double>(10.0);
    CLI::App* cmd =
        app.add_subcommand("outlier", "isolated eigenvalue at one time");
    add_model_flags(cmd, *o, true);
    cmd->add_option("--t", *t, "flow time");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto params = std::make_shared<ModelParams>();
      pending->prepare = [=](RunContext& c) {
        *params = to_params(*o);
        c.command = "outlier";
        c.config["params"] = params_json(*params);
        c.config["t"] = *t;
      };
      pending->execute = [=](RunContext& c) -> Json {
        const EdgeAnalysis a = analyze_edges(*params, *t);
        const OutlierResult r = outlier_location(*params, a);
        Json doc;
        doc["t"] = *t;
        doc["theta"] = params->theta;
        doc["exists"] = r.exists;
        doc["xi"] = r.exists ? Json(r.xi) : Json(nullptr);
        doc["side"] = r.exists ? Json(side_name(r.side)) : Json(nullptr);
        doc["margin"] = r.exists ? Json(r.margin) : Json(nullptr);
        doc["theta_c"] = finite_or_null(critical_theta(a));
        doc["overlap"] = overlap_theory(*params, a);
        c.emit_document("outlier", doc);
        return doc;
      };
    });
  }

  // regime: trichotomy report over a time window.
  {
    auto o = std::make_shared<ModelOpts>();
    auto times = std::make_shared<std::string>("log:0.05:3000:60");
    CLI::App* cmd =
        app.add_subcommand("regime", "weak / transient / persistent report");
    add_model_flags(cmd, *o, true);
    cmd->add_option("--times", *times, "time grid log:a:b:n or lin:a:b:n");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto params = std::make_shared<ModelParams>();
      auto grid = std::make_shared<std::vector<double>>();
      pending->prepare = [=](RunContext& c) {
        *params = to_params(*o);
        *grid = parse_spaced_grid(*times);
        if (grid->size() < 2)
          throw std::invalid_argument("regime needs a time grid with n >= 2");
        c.command = "regime";
        c.config["params"] = params_json(*params);
        c.config["times"] = *times;
      };
      pending->execute = [=](RunContext& c) -> Json {
        const RegimeReport rep =
            classify_regime(*params, {grid->front(), grid->back()},
                            static_cast<int>(grid->size()));
        Json doc;
        doc["regime"] = regime_name(rep.regime);
        doc["t1"] = opt_json(rep.t1);
        doc["t2"] = opt_json(rep.t2);
        doc["t_opt"] = opt_json(rep.t_opt);
        doc["q_max"] = opt_json(rep.q_max);
        c.emit_document("regime", doc);
        return doc;
      };
    });
  }

  // overlap: theoretical overlap curve over a time grid.
  {
    auto o = std::make_shared<ModelOpts>();
    auto times = std::make_shared<std::string>("log:0.05:3000:60");
    CLI::App* cmd =
        app.add_subcommand("overlap", "theoretical outlier overlap curve");
    add_model_flags(cmd, *o, true);
    cmd->add_option("--times", *times, "time grid log:a:b:n or lin:a:b:n");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto params = std::make_shared<ModelParams>();
      auto grid = std::make_shared<std::vector<double>>();
      pending->prepare = [=](RunContext& c) {
        *params = to_params(*o);
        *grid = parse_spaced_grid(*times);
        c.command = "overlap";
        c.config["params"] = params_json(*params);
        c.config["times"] = *times;
      };
      pending->execute = [=](RunContext& c) -> Json {
        std::vector<Row> rows;
        double best_q = 0.0;
        double best_t = grid->front();
        for (double t : *grid) {
          const double q = overlap_theory(*params, t);
          rows.push_back({t, q});
          if (q > best_q) {
            best_q = q;
            best_t = t;
          }
        }
        c.emit_table("overlap", {"t", "overlap"}, rows);
        Json body;
        body["n_points"] = grid->size();
        body["q_max_on_grid"] = best_q;
        body["argmax_t"] = best_t;
        return body;
      };
    });
  }

  // phase-tt: (theta, t) diagram with boundary and stopping overlay.
  {
    auto o = std::make_shared<ModelOpts>();
    auto thetas = std::make_shared<std::string>("lin:0.25:12:60");
    auto times = std::make_shared<std::string>("log:0.05:3000:60");
    CLI::App* cmd =
        app.add_subcommand("phase-tt", "regimes across signal strengths");
    add_model_flags(cmd, *o, false);
    cmd->add_option("--thetas", *thetas, "theta grid log:a:b:n or lin:a:b:n");
    cmd->add_option("--times", *times, "time grid log:a:b:n or lin:a:b:n");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto params = std::make_shared<ModelParams>();
      auto tg = std::make_shared<std::vector<double>>();
      auto wg = std::make_shared<std::vector<double>>();
      pending->prepare = [=](RunContext& c) {
        *params = to_params(*o);
        *tg = parse_spaced_grid(*thetas);
        *wg = parse_spaced_grid(*times);
        c.command = "phase-tt";
        c.config["params"] = params_json(*params);
        c.config["thetas"] = *thetas;
        c.config["times"] = *times;
      };
      pending->execute = [=](RunContext& c) -> Json {
        const PhaseDiagramTT d = phase_diagram_theta_time(*params, *tg, *wg);
        std::vector<Row> brows;
        for (const ThetaCPoint& pt : d.boundary.points)
          brows.push_back({pt.t,
                           pt.status == CellStatus::ok ? Json(pt.theta_c)
                                                       : Json(nullptr),
                           status_name(pt.status)});
        c.emit_table("boundary", {"t", "theta_c", "status"}, brows);

        std::vector<Row> rrows;
        Json counts = {{"weak", 0}, {"persistent", 0}, {"transient", 0}};
        for (const TransitionRow& row : d.rows) {
          rrows.push_back({row.theta,
                           row.status == CellStatus::ok
                               ? Json(regime_name(row.regime))
                               : Json(nullptr),
                           opt_json(row.t1), opt_json(row.t2),
                           opt_json(row.t_opt), opt_json(row.q_max),
                           status_name(row.status)});
          if (row.status == CellStatus::ok)
            counts[regime_name(row.regime)] =
                counts[regime_name(row.regime)].get<int>() + 1;
        }
        c.emit_table(
            "regimes",
            {"theta", "regime", "t1", "t2", "t_opt", "q_max", "status"},
            rrows);
        Json body;
        body["n_theta"] = tg->size();
        body["n_times"] = wg->size();
        body["regime_counts"] = counts;
        return body;
      };
    });
  }

  // phase-tl: (theta, lambda_minus) regime labels.
  {
    auto gamma = std::make_shared<double>(1.0);
    auto alpha = std::make_shared<double>(0.5);
    auto thetas = std::make_shared<std::string>("lin:0.25:12:60");
    auto lambdas = std::make_shared<std::string>("lin:0.025:1:40");
    auto times = std::make_shared<std::string>("log:0.05:3000:60");
    CLI::App* cmd =
        app.add_subcommand("phase-tl", "regimes across anisotropy levels");
    cmd->add_option("--gamma", *gamma, "samples per dimension M/N");
    cmd->add_option("--alpha", *alpha, "fraction of fast directions");
    cmd->add_option("--thetas", *thetas, "theta grid log:a:b:n or lin:a:b:n");
    cmd->add_option("--lambdas", *lambdas,
                    "lambda_minus grid log:a:b:n or lin:a:b:n");
    cmd->add_option("--times", *times,
                    "time window grid log:a:b:n or lin:a:b:n");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto tg = std::make_shared<std::vector<double>>();
      auto lg = std::make_shared<std::vector<double>>();
      auto wg = std::make_shared<std::vector<double>>();
      pending->prepare = [=](RunContext& c) {
        *tg = parse_spaced_grid(*thetas);
        *lg = parse_spaced_grid(*lambdas);
        *wg = parse_spaced_grid(*times);
        if (wg->size() < 2)
          throw std::invalid_argument("phase-tl needs a time grid with n >= 2");
        c.command = "phase-tl";
        c.config["gamma"] = *gamma;
        c.config["alpha"] = *alpha;
        c.config["thetas"] = *thetas;
        c.config["lambdas"] = *lambdas;
        c.config["times"] = *times;
      };
      pending->execute = [=](RunContext& c) -> Json {
        const PhaseDiagramTL d = phase_diagram_theta_lambda(
            *gamma, *alpha, *tg, *lg, {wg->front(), wg->back()},
            static_cast<int>(wg->size()));
        std::vector<Row> rows;
        Json counts = {{"weak", 0}, {"persistent", 0}, {"transient", 0}};
        for (std::size_t i = 0; i < tg->size(); ++i)
          for (std::size_t j = 0; j < lg->size(); ++j) {
            const bool ok = d.status[i][j] == CellStatus::ok;
            rows.push_back({(*tg)[i], (*lg)[j],
                            ok ? Json(regime_name(d.regime_label[i][j]))
                               : Json(nullptr),
                            status_name(d.status[i][j])});
            if (ok)
              counts[regime_name(d.regime_label[i][j])] =
                  counts[regime_name(d.regime_label[i][j])].get<int>() + 1;
          }
        c.emit_table("cells", {"theta", "lambda_minus", "label", "status"},
                     rows);
        Json body;
        body["n_theta"] = tg->size();
        body["n_lambda"] = lg->size();
        body["regime_counts"] = counts;
        return body;
      };
    });
  }

  // simulate: two-block Monte Carlo.
  {
    auto o = std::make_shared<ModelOpts>();
    auto n = std::make_shared<int>(500);
    auto reps = std::make_shared<int>(20);
    auto times = std::make_shared<std::string>("log:0.1:2000:8");
    auto seed = std::make_shared<std::uint64_t>(1);
    CLI::App* cmd =
        app.add_subcommand("simulate", "finite-size two-block ensemble");
    add_model_flags(cmd, *o, true);
    cmd->add_option("--n", *n, "matrix dimension");
    cmd->add_option("--realizations", *reps, "ensemble size");
    cmd->add_option("--times", *times, "time grid log:a:b:n or lin:a:b:n");
    cmd->add_option("--seed", *seed, "base RNG seed");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto config = std::make_shared<SimConfig>();
      pending->prepare = [=](RunContext& c) {
        config->n = *n;
        config->params = to_params(*o);
        config->spectrum_kind = SpectrumKind::two_block;
        config->n_realizations = *reps;
        config->times = parse_spaced_grid(*times);
        config->seed = *seed;
        config->validate();
        c.command = "simulate";
        c.config["params"] = params_json(config->params);
        c.config["n"] = *n;
        c.config["realizations"] = *reps;
        c.config["times"] = *times;
        c.config["seed"] = *seed;
      };
      pending->execute = [=](RunContext& c) -> Json {
        return run_flow_command(c, *config, false);
      };
    });
  }

  // powerlaw: Monte Carlo over a sampled power-law spectrum.
  {
    auto o = std::make_shared<ModelOpts>();
    auto beta = std::make_shared<double>(1.5);
    auto lmin = std::make_shared<double>(0.1);
    auto lmax = std::make_shared<double>(5.0);
    auto n = std::make_shared<int>(400);
    auto reps = std::make_shared<int>(8);
    auto times = std::make_shared<std::string>("log:0.05:1000:85");
    auto seed = std::make_shared<std::uint64_t>(1);
    CLI::App* cmd = app.add_subcommand(
        "powerlaw", "finite-size ensemble with power-law spectrum");
    cmd->add_option("--theta", o->theta, "teacher signal strength");
    cmd->add_option("--beta", *beta, "power-law exponent");
    cmd->add_option("--lambda-min", *lmin, "lower truncation");
    cmd->add_option("--lambda-max", *lmax, "upper truncation");
    cmd->add_option("--n", *n, "matrix dimension");
    cmd->add_option("--realizations", *reps, "ensemble size");
    cmd->add_option("--times", *times, "time grid log:a:b:n or lin:a:b:n");
    cmd->add_option("--seed", *seed, "base RNG seed");
    add_out_flags(cmd, *ctx);
    cmd->callback([=]() {
      auto config = std::make_shared<SimConfig>();
      pending->prepare = [=](RunContext& c) {
        config->n = *n;
        config->params = to_params(*o);
        config->spectrum_kind = SpectrumKind::power_law;
        config->power_law = {*beta, *lmin, *lmax};
        config->n_realizations = *reps;
        config->times = parse_spaced_grid(*times);
        config->seed = *seed;
        config->validate();
        c.command = "powerlaw";
        c.config["theta"] = o->theta;
        c.config["beta"] = *beta;
        c.config["lambda_min"] = *lmin;
        c.config["lambda_max"] = *lmax;
        c.config["n"] = *n;
        c.config["realizations"] = *reps;
        c.config["times"] = *times;
        c.config["seed"] = *seed;
      };
      pending->execute = [=](RunContext& c) -> Json {
        return run_flow_command(c, *config, true);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    pending->prepare(*ctx);
    std::filesystem::create_directories(ctx->dir);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  Json body;
  try {
    body = pending->execute(*ctx);
    ctx->write_meta();
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }

  std::cout << ctx->stdout_summary(body).dump() << '\n';
  return 0;
}

}  // namespace flowspec
