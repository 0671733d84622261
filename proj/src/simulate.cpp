#include "flowspec/simulate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace flowspec {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct BlockSizes {
  int fast = 0;
  int slow = 0;
  int null_ = 0;
  int m = 0;  // noise dimension round(gamma * n)
};

BlockSizes block_sizes(const SimConfig& c) {
  const int n = c.n;
  BlockSizes b;
  b.m = static_cast<int>(std::lround(c.params.gamma * n));
  if (b.m < 1) throw std::invalid_argument("gamma * n rounds to zero");
  if (c.params.gamma >= 1.0) {
    b.fast = static_cast<int>(std::lround(c.params.alpha * n));
    b.slow = n - b.fast;
  } else {
    b.fast = static_cast<int>(std::lround(c.params.alpha * b.m));
    b.slow = b.m - b.fast;
    b.null_ = n - b.m;
  }
  if (b.fast <= 0 || b.slow <= 0)
    throw std::invalid_argument("block sizes degenerate at this n");
  return b;
}

// Per-index singular values: fast block first, then slow, then zeros for
// directions the data never touches.
std::vector<double> block_lambdas(const SimConfig& c, const BlockSizes& b) {
  std::vector<double> lam(c.n, 0.0);
  int k = 0;
  for (int i = 0; i < b.fast; ++i) lam[k++] = c.params.lambda_plus;
  for (int i = 0; i < b.slow; ++i) lam[k++] = c.params.lambda_minus;
  return lam;
}

// Draw order is part of the reproducibility contract: upper triangle of A
// row by row, then Z row by row, then the teacher vector.
void sample_inputs(int n, int m, std::mt19937_64& rng, MatrixXd& a, MatrixXd& z,
                   VectorXd& v) {
  std::normal_distribution<double> nd(0.0, 1.0);
  const double off = std::sqrt(1.0 / n);
  const double diag = std::sqrt(2.0 / n);
  a.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double x = nd(rng) * (i == j ? diag : off);
      a(i, j) = x;
      a(j, i) = x;
    }
  const double zs = std::sqrt(1.0 / m);
  z.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = nd(rng) * zs;
  v.resize(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  v.normalize();
}

// S_t in the covariance eigenbasis: the initialization decays per row and
// column, the noise enters through the accumulated response, and the
// teacher adds a symmetric rank-2 spike with the learned fraction f.
MatrixXd assemble(const MatrixXd& a, const MatrixXd& z, const VectorXd& v,
                  const std::vector<double>& lam, double t, double theta) {
  const int n = static_cast<int>(lam.size());
  VectorXd d1(n), d2(n), f(n);
  for (int i = 0; i < n; ++i) {
    const double mu = lam[i] * lam[i];
    const double learned = -std::expm1(-t * mu);
    d1(i) = std::exp(-t * mu);
    f(i) = learned;
    d2(i) = lam[i] > 0.0 ? learned / lam[i] : 0.0;
  }
  MatrixXd s = d1.asDiagonal() * a + a * d1.asDiagonal();
  s.noalias() += z * d2.asDiagonal();
  s.noalias() += d2.asDiagonal() * z.transpose();
  const VectorXd w = f.cwiseProduct(v);
  s.noalias() += theta * (v * w.transpose() + w * v.transpose());
  return s;
}

SpectrumSample decompose(const MatrixXd& s, const VectorXd& v, double t,
                         int realization_id, std::uint64_t seed_used) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  SpectrumSample out;
  const auto& ev = es.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  const double proj = es.eigenvectors().col(s.rows() - 1).dot(v);
  out.top_overlap = proj * proj;
  out.t = t;
  out.realization_id = realization_id;
  out.seed_used = seed_used;
  return out;
}

MatrixXd haar_orthogonal(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = nd(rng);
  const Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

void draw_powerlaw(const PowerLawSpec& p, std::mt19937_64& rng,
                   std::vector<double>& out) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const double lo = p.lambda_min;
  const double hi = p.lambda_max;
  for (double& x : out) {
    const double u = ud(rng);
    if (p.beta == 1.0) {
      x = lo * std::pow(hi / lo, u);
    } else {
      const double e = 1.0 - p.beta;
      x = std::pow(std::pow(lo, e) + u * (std::pow(hi, e) - std::pow(lo, e)),
                   1.0 / e);
    }
    x = std::clamp(x, lo, hi);
  }
}

}  // namespace

void SimConfig::validate() const {
  params.validate();
  if (n < 32) throw std::invalid_argument("matrix dimension must be >= 32");
  if (n_realizations < 1)
    throw std::invalid_argument("n_realizations must be >= 1");
  if (times.empty()) throw std::invalid_argument("times must be nonempty");
  double prev = -1.0;
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("times must be finite and nonnegative");
    if (!(t > prev) && prev >= 0.0)
      throw std::invalid_argument("times must be strictly increasing");
    prev = t;
  }
  if (spectrum_kind == SpectrumKind::power_law) {
    if (!(power_law.lambda_min > 0.0) ||
        !(power_law.lambda_max > power_law.lambda_min))
      throw std::invalid_argument(
          "power law requires 0 < lambda_min < lambda_max");
    if (!std::isfinite(power_law.beta))
      throw std::invalid_argument("beta must be finite");
  }
}

std::uint64_t realization_seed(std::uint64_t base, int realization_id) {
  return splitmix64(base +
                    0x9e3779b97f4a7c15ULL *
                        static_cast<std::uint64_t>(realization_id + 1));
}

std::vector<SpectrumSample> sample_two_block(const SimConfig& config,
                                             int realization_id) {
  config.validate();
  if (config.spectrum_kind != SpectrumKind::two_block)
    throw std::invalid_argument("config does not describe a two-block run");
  const BlockSizes b = block_sizes(config);
  const std::vector<double> lam = block_lambdas(config, b);

  const std::uint64_t seed = realization_seed(config.seed, realization_id);
  std::mt19937_64 rng(seed);
  MatrixXd a, z;
  VectorXd v;
  sample_inputs(config.n, b.m, rng, a, z, v);

  std::vector<SpectrumSample> out;
  out.reserve(config.times.size());
  for (double t : config.times) {
    const MatrixXd s = assemble(a, z, v, lam, t, config.params.theta);
    out.push_back(decompose(s, v, t, realization_id, seed));
  }
  return out;
}

std::vector<SpectrumSample> sample_two_block_original(const SimConfig& config,
                                                      int realization_id) {
  config.validate();
  if (config.spectrum_kind != SpectrumKind::two_block)
    throw std::invalid_argument("config does not describe a two-block run");
  const BlockSizes b = block_sizes(config);
  if (b.m != config.n)
    throw std::invalid_argument(
        "original-basis mode requires a square noise matrix");
  const std::vector<double> lam = block_lambdas(config, b);

  const std::uint64_t seed = realization_seed(config.seed, realization_id);
  std::mt19937_64 rng(seed);
  MatrixXd a, z;
  VectorXd v;
  sample_inputs(config.n, b.m, rng, a, z, v);
  const MatrixXd u_rot = haar_orthogonal(config.n, rng);
  const MatrixXd v_rot = haar_orthogonal(config.n, rng);

  // Push everything into the covariance eigenbasis, evolve there, and pull
  // the result back.  The spectrum is conjugation-invariant, so this route
  // must agree in distribution with sampling in the eigenbasis directly.
  const MatrixXd a_tilde = u_rot.transpose() * a * u_rot;
  const MatrixXd z_tilde = u_rot.transpose() * z * v_rot;
  const VectorXd v_tilde = u_rot.transpose() * v;

  std::vector<SpectrumSample> out;
  out.reserve(config.times.size());
  for (double t : config.times) {
    const MatrixXd s_tilde =
        assemble(a_tilde, z_tilde, v_tilde, lam, t, config.params.theta);
    const MatrixXd s = u_rot * s_tilde * u_rot.transpose();
    out.push_back(decompose(s, v, t, realization_id, seed));
  }
  return out;
}

std::vector<double> powerlaw_singular_values(double beta, double lambda_min,
                                             double lambda_max, int n,
                                             std::uint64_t seed) {
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min))
    throw std::invalid_argument(
        "power law requires 0 < lambda_min < lambda_max");
  if (n < 1) throw std::invalid_argument("sample count must be positive");
  if (!std::isfinite(beta)) throw std::invalid_argument("beta must be finite");
  PowerLawSpec spec;
  spec.beta = beta;
  spec.lambda_min = lambda_min;
  spec.lambda_max = lambda_max;
  std::mt19937_64 rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n));
  draw_powerlaw(spec, rng, out);
  return out;
}

std::vector<SpectrumSample> sample_powerlaw_flow(const SimConfig& config,
                                                 int realization_id) {
  config.validate();
  if (config.spectrum_kind != SpectrumKind::power_law)
    throw std::invalid_argument("config does not describe a power-law run");

  const std::uint64_t seed = realization_seed(config.seed, realization_id);
  std::mt19937_64 rng(seed);
  // Spectrum first, then the matrices: one stream per realization.
  std::vector<double> lam(static_cast<std::size_t>(config.n));
  draw_powerlaw(config.power_law, rng, lam);
  MatrixXd a, z;
  VectorXd v;
  sample_inputs(config.n, config.n, rng, a, z, v);

  std::vector<SpectrumSample> out;
  out.reserve(config.times.size());
  for (double t : config.times) {
    const MatrixXd s = assemble(a, z, v, lam, t, config.params.theta);
    out.push_back(decompose(s, v, t, realization_id, seed));
  }
  return out;
}

Histogram empirical_density(const std::vector<SpectrumSample>& samples,
                            int bins) {
  if (samples.empty())
    throw std::invalid_argument("need at least one spectrum sample");
  if (bins < 1) throw std::invalid_argument("bins must be positive");
  const double t0 = samples.front().t;
  std::size_t total = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : samples) {
    if (s.t != t0)
      throw std::invalid_argument("samples mix evaluation times");
    for (double x : s.eigenvalues) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    total += s.eigenvalues.size();
  }
  if (total == 0) throw std::invalid_argument("samples carry no eigenvalues");
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  hi += 1e-9 * (hi - lo);  // the maximum lands inside the last bin

  Histogram h;
  h.n_samples = total;
  h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i)
    h.bin_edges[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / bins;
  h.counts.assign(static_cast<std::size_t>(bins), 0.0);
  const double width = (hi - lo) / bins;
  for (const auto& s : samples)
    for (double x : s.eigenvalues) {
      int k = static_cast<int>((x - lo) / width);
      k = std::clamp(k, 0, bins - 1);
      h.counts[static_cast<std::size_t>(k)] += 1.0;
    }
  const double norm = 1.0 / (static_cast<double>(total) * width);
  for (double& c : h.counts) c *= norm;
  return h;
}

OverlapCurve empirical_overlap_curve(const SimConfig& config) {
  config.validate();
  const std::size_t nt = config.times.size();
  const int r = config.n_realizations;

  std::vector<std::vector<double>> q(nt);
  for (auto& col : q) col.reserve(static_cast<std::size_t>(r));
  for (int rid = 0; rid < r; ++rid) {
    const std::vector<SpectrumSample> samples =
        config.spectrum_kind == SpectrumKind::two_block
            ? sample_two_block(config, rid)
            : sample_powerlaw_flow(config, rid);
    for (std::size_t k = 0; k < nt; ++k) q[k].push_back(samples[k].top_overlap);
  }

  OverlapCurve out;
  out.times = config.times;
  out.n_realizations = r;
  out.mean.resize(nt);
  out.std_error.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    double m = 0.0;
    for (double x : q[k]) m += x;
    m /= r;
    out.mean[k] = m;
    double s2 = 0.0;
    for (double x : q[k]) s2 += (x - m) * (x - m);
    out.std_error[k] = r > 1 ? std::sqrt(s2 / (r - 1) / r) : 0.0;
  }
  return out;
}

}  // namespace flowspec
