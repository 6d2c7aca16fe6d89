#include "kno/classical.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace kno {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reversal-experiment overlap grid; occupancy is ~6 counts per cell at n=1e5.
constexpr std::size_t kReversalIBins = 64;
constexpr std::size_t kReversalThetaBins = 256;

// Move theta_unwrapped to the branch of -arg(alpha) nearest its current
// value. Keeps the mod-2pi agreement exact after every kick.
void anchor_theta(PhasePoint& p) {
  double d = -std::arg(p.alpha) - p.theta_unwrapped;
  d -= kTwoPi * std::round(d / kTwoPi);
  p.theta_unwrapped += d;
}

void check_finite(const PhasePoint& p) {
  if (!std::isfinite(p.action()) || !std::isfinite(p.theta_unwrapped)) {
    throw std::overflow_error("classical map diverged: action is no longer finite");
  }
}

// theta-bin of a point, with the principal angle shifted to [0, 2 pi).
std::size_t theta_bin(const Complex& alpha, std::size_t n_bins) {
  double th = -std::arg(alpha);
  if (th < 0.0) th += kTwoPi;
  const auto j = static_cast<std::size_t>(th / kTwoPi * static_cast<double>(n_bins));
  return j < n_bins ? j : n_bins - 1;
}

std::size_t action_bin(const Complex& alpha, double i_max, std::size_t n_bins) {
  const auto i = static_cast<std::size_t>(std::norm(alpha) / i_max * static_cast<double>(n_bins));
  return i < n_bins ? i : n_bins - 1;
}

}  // namespace

bool MapParams::chaotic() const { return std::abs(g0) > 1.0; }

PhasePoint map_step(const PhasePoint& p, const MapParams& params) {
  PhasePoint q = p;
  q.alpha += Complex(0.0, params.g0);
  anchor_theta(q);
  const double phase = params.omega0 + 2.0 * q.action();
  q.alpha *= std::polar(1.0, -phase);
  q.theta_unwrapped += phase;
  check_finite(q);
  return q;
}

PhasePoint inverse_map_step(const PhasePoint& p, const MapParams& params) {
  PhasePoint q = p;
  const double phase = params.omega0 + 2.0 * q.action();
  q.alpha *= std::polar(1.0, phase);
  q.theta_unwrapped -= phase;
  q.alpha -= Complex(0.0, params.g0);
  anchor_theta(q);
  check_finite(q);
  return q;
}

ClassicalEnsemble sample_isotropic(double scale, std::size_t n, RandomStream& stream) {
  if (!(scale > 0.0)) throw std::invalid_argument("sample_isotropic: scale must be positive");
  if (n == 0) throw std::invalid_argument("sample_isotropic: need at least one point");
  ClassicalEnsemble e;
  e.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double action = -scale * std::log(1.0 - stream.uniform());
    const double theta = kTwoPi * stream.uniform();
    PhasePoint p;
    p.alpha = std::sqrt(action) * std::polar(1.0, -theta);
    p.theta_unwrapped = theta;
    e.points.push_back(p);
  }
  return e;
}

ClassicalEnsemble evolve_ensemble(const ClassicalEnsemble& e, std::int64_t t,
                                  double noise_sigma, RandomStream& stream) {
  if (t < 0) throw std::invalid_argument("evolve_ensemble: negative step count");
  if (noise_sigma < 0.0) throw std::invalid_argument("evolve_ensemble: negative noise strength");
  ClassicalEnsemble out = e;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    PhasePoint p = out.points[i];
    if (noise_sigma > 0.0) {
      RandomStream trajectory_stream = stream.fork(i);
      for (std::int64_t k = 0; k < t; ++k) {
        p = map_step(p, out.params);
        const double xi = noise_sigma * trajectory_stream.gaussian();
        p.alpha *= std::polar(1.0, -xi);
        p.theta_unwrapped += xi;
      }
    } else {
      for (std::int64_t k = 0; k < t; ++k) p = map_step(p, out.params);
    }
    out.points[i] = p;
  }
  out.time += t;
  return out;
}

double mean_action(const ClassicalEnsemble& e) {
  if (e.points.empty()) throw std::invalid_argument("mean_action: empty ensemble");
  double acc = 0.0;
  for (const PhasePoint& p : e.points) acc += p.action();
  return acc / static_cast<double>(e.points.size());
}

double phase_correlation(const ClassicalEnsemble& e0, std::int64_t t) {
  if (e0.points.empty()) throw std::invalid_argument("phase_correlation: empty ensemble");
  if (t < 0) throw std::invalid_argument("phase_correlation: negative time");
  Complex acc(0.0, 0.0);
  for (const PhasePoint& start : e0.points) {
    PhasePoint p = start;
    for (std::int64_t k = 0; k < t; ++k) p = map_step(p, e0.params);
    acc += std::polar(1.0, p.theta_unwrapped - start.theta_unwrapped);
  }
  acc /= static_cast<double>(e0.points.size());
  return std::norm(acc);
}

CorrelationFit correlation_time(const ClassicalEnsemble& e0, std::int64_t t_min,
                                std::int64_t t_max) {
  if (e0.points.empty()) throw std::invalid_argument("correlation_time: empty ensemble");
  if (t_min < 1 || t_max < t_min) throw std::invalid_argument("correlation_time: bad window");
  const std::size_t n = e0.points.size();
  const double floor = 10.0 / static_cast<double>(n);

  std::vector<PhasePoint> pts = e0.points;
  std::vector<double> theta0(n);
  for (std::size_t i = 0; i < n; ++i) theta0[i] = pts[i].theta_unwrapped;

  std::vector<double> ts, ys;
  for (std::int64_t t = 1; t <= t_max; ++t) {
    Complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = map_step(pts[i], e0.params);
      acc += std::polar(1.0, pts[i].theta_unwrapped - theta0[i]);
    }
    const double c = std::norm(acc / static_cast<double>(n));
    if (t >= t_min && c > floor) {
      ts.push_back(static_cast<double>(t));
      ys.push_back(std::log(c));
    }
  }
  if (ts.size() < 3) {
    throw std::runtime_error(
        "correlation_time: fewer than three correlation values above the sampling floor");
  }

  const auto m = static_cast<double>(ts.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) { tm += ts[k]; ym += ys[k]; }
  tm /= m;
  ym /= m;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    sxy += (ts[k] - tm) * (ys[k] - ym);
    sxx += (ts[k] - tm) * (ts[k] - tm);
    syy += (ys[k] - ym) * (ys[k] - ym);
  }
  const double slope = sxy / sxx;

  CorrelationFit fit;
  fit.points_used = static_cast<int>(ts.size());
  // Slopes shallower than 1e-12 per step are below the resolution of the
  // estimator (ln C carries ~1e-16 roundoff); report them as non-decaying.
  fit.tau_c = slope < -1e-12 ? -1.0 / slope : std::numeric_limits<double>::infinity();
  if (syy > 1e-18) {
    double ss_res = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double r = ys[k] - (ym + slope * (ts[k] - tm));
      ss_res += r * r;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  } else {
    fit.r_squared = 1.0;  // constant correlator: the flat fit is exact
  }
  return fit;
}

HarmonicPower classical_harmonic_power(const ClassicalEnsemble& e, std::size_t n_I_bins,
                                       std::size_t n_theta_bins, std::size_t m_max) {
  if (e.points.empty()) throw std::invalid_argument("classical_harmonics: empty ensemble");
  if (n_I_bins == 0 || n_theta_bins == 0) {
    throw std::invalid_argument("classical_harmonics: need at least one bin per axis");
  }
  if (n_theta_bins < 4 * m_max) {
    throw std::invalid_argument(
        "classical_harmonics: n_theta_bins must be >= 4*m_max to resolve the "
        "requested harmonics without aliasing");
  }

  double i_max = 0.0;
  for (const PhasePoint& p : e.points) i_max = std::max(i_max, p.action());
  i_max = i_max > 0.0 ? i_max * (1.0 + 1e-12) : 1.0;

  RealMatrix hist = RealMatrix::Zero(static_cast<Eigen::Index>(n_I_bins),
                                     static_cast<Eigen::Index>(n_theta_bins));
  for (const PhasePoint& p : e.points) {
    hist(static_cast<Eigen::Index>(action_bin(p.alpha, i_max, n_I_bins)),
         static_cast<Eigen::Index>(theta_bin(p.alpha, n_theta_bins))) += 1.0;
  }

  // W_m(I) per action bin is the DFT of that bin's theta-row; constant
  // prefactors (bin areas, ensemble size) cancel in the normalized weights.
  RealMatrix cos_t(static_cast<Eigen::Index>(n_theta_bins), static_cast<Eigen::Index>(m_max + 1));
  RealMatrix sin_t(static_cast<Eigen::Index>(n_theta_bins), static_cast<Eigen::Index>(m_max + 1));
  for (std::size_t j = 0; j < n_theta_bins; ++j) {
    for (std::size_t m = 0; m <= m_max; ++m) {
      const double ang = kTwoPi * static_cast<double>(m * j % n_theta_bins) /
                         static_cast<double>(n_theta_bins);
      cos_t(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) = std::cos(ang);
      sin_t(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) = std::sin(ang);
    }
  }
  const RealMatrix re = hist * cos_t;
  const RealMatrix im = hist * sin_t;

  HarmonicPower hp;
  hp.samples = e.points.size();
  hp.power.resize(m_max + 1);
  for (std::size_t m = 0; m <= m_max; ++m) {
    hp.power[m] = re.col(static_cast<Eigen::Index>(m)).squaredNorm() +
                  im.col(static_cast<Eigen::Index>(m)).squaredNorm();
  }
  return hp;
}

HarmonicSpectrum classical_harmonics(const ClassicalEnsemble& e, std::size_t n_I_bins,
                                     std::size_t n_theta_bins, std::size_t m_max) {
  const HarmonicPower hp = classical_harmonic_power(e, n_I_bins, n_theta_bins, m_max);
  HarmonicSpectrum s;
  s.weights.resize(hp.power.size());
  double total = 0.0;
  for (std::size_t m = 0; m < hp.power.size(); ++m) {
    s.weights[m] = (m == 0 ? 1.0 : 2.0) * hp.power[m];
    total += s.weights[m];
  }
  for (double& w : s.weights) w /= total;
  return s;
}

double reversal_experiment(const MapParams& params, double init_scale, std::int64_t t_r,
                           double probe_sigma, std::size_t n, RandomStream& stream) {
  if (t_r < 1) throw std::invalid_argument("reversal_experiment: need t_r >= 1");
  if (probe_sigma < 0.0) throw std::invalid_argument("reversal_experiment: negative probe");

  ClassicalEnsemble initial = sample_isotropic(init_scale, n, stream);
  initial.params = params;

  ClassicalEnsemble returned = initial;
  for (std::size_t i = 0; i < n; ++i) {
    PhasePoint p = returned.points[i];
    for (std::int64_t k = 0; k < t_r; ++k) p = map_step(p, params);
    if (probe_sigma > 0.0) {
      RandomStream probe = stream.fork(i);
      const double xi = probe_sigma * probe.gaussian();
      p.alpha *= std::polar(1.0, -xi);
      p.theta_unwrapped += xi;
    }
    for (std::int64_t k = 0; k < t_r; ++k) p = inverse_map_step(p, params);
    returned.points[i] = p;
  }

  double i_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    i_max = std::max({i_max, initial.points[i].action(), returned.points[i].action()});
  }
  i_max = i_max > 0.0 ? i_max * (1.0 + 1e-12) : 1.0;

  std::vector<double> h0(kReversalIBins * kReversalThetaBins, 0.0);
  std::vector<double> hr(kReversalIBins * kReversalThetaBins, 0.0);
  auto cell = [i_max](const Complex& alpha) {
    return action_bin(alpha, i_max, kReversalIBins) * kReversalThetaBins +
           theta_bin(alpha, kReversalThetaBins);
  };
  for (std::size_t i = 0; i < n; ++i) {
    h0[cell(initial.points[i].alpha)] += 1.0;
    hr[cell(returned.points[i].alpha)] += 1.0;
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < h0.size(); ++k) {
    num += h0[k] * hr[k];
    den += h0[k] * h0[k];
  }
  return num / den;
}

double ehrenfest_time(double tau_c, double mean_I, double hbar) {
  if (!(tau_c > 0.0) || !(mean_I > 0.0) || !(hbar > 0.0)) {
    throw std::invalid_argument("ehrenfest_time: all arguments must be positive");
  }
  return tau_c * std::log(2.0 * mean_I / hbar);
}

}  // namespace kno
