#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "kno/numerics.hpp"
#include "kno/spectrum.hpp"

namespace kno {

// Kicked nonlinear oscillator, classical limit. One period = one kick
// followed by free rotation around the origin; kicks arrive at integer times.
struct MapParams {
  double omega0 = 0.5;  // linear frequency of the well
  double g0 = 2.0;      // kick strength
  // |g0| > 1 puts the map in the regime of global chaos.
  bool chaotic() const;
};

// Phase-space point in the complex coordinate alpha = sqrt(I) e^{-i theta}.
// theta_unwrapped accumulates the full rotation angle so phase correlations
// across many periods stay well defined; it agrees with -arg(alpha) modulo
// 2*pi at all times (the map re-anchors it at every kick, so the agreement
// never degrades beyond one period's roundoff).
struct PhasePoint {
  Complex alpha{0.0, 0.0};
  double theta_unwrapped = 0.0;
  double action() const { return std::norm(alpha); }
};

struct ClassicalEnsemble {
  std::vector<PhasePoint> points;
  MapParams params;
  std::int64_t time = 0;  // kick count since sampling
};

// One map period: kick alpha -> alpha + i g0, then twist theta -> theta +
// omega0 + 2 I at fixed I = |alpha|^2. The ordering mirrors the quantum
// Floquet factorization (rotation applied after the displacement).
// Throws std::overflow_error if the action stops being finite.
PhasePoint map_step(const PhasePoint& p, const MapParams& params);

// Exact inverse of map_step: untwist, then remove the kick. Retracing a
// chaotic orbit amplifies roundoff by roughly e^{2 Lambda} per period
// (about 30x at g0=2), so round trips are faithful only for ~6 periods in
// double precision.
PhasePoint inverse_map_step(const PhasePoint& p, const MapParams& params);

// I ~ Exponential(mean = scale), theta ~ Uniform[0, 2 pi). Two uniform draws
// per point, action first, so a given stream always yields the same
// ensemble. params of the result is default-constructed; assign as needed.
ClassicalEnsemble sample_isotropic(double scale, std::size_t n, RandomStream& stream);

// Advance every trajectory by t periods. When noise_sigma > 0 each period
// ends with a random rotation theta -> theta + xi, xi ~ N(0, sigma^2), drawn
// from stream.fork(trajectory_index); results are therefore independent of
// iteration order, and the master stream itself is never advanced.
ClassicalEnsemble evolve_ensemble(const ClassicalEnsemble& e, std::int64_t t,
                                  double noise_sigma, RandomStream& stream);

double mean_action(const ClassicalEnsemble& e);

// |<e^{i (theta(t) - theta(0))}>|^2 over the ensemble after t noise-free
// periods, starting from e0. Equals 1 at t = 0 and decays exponentially in
// the chaotic regime; an ensemble of n random phases gives values of order
// 1/n, which is the estimator's floor.
double phase_correlation(const ClassicalEnsemble& e0, std::int64_t t);

struct CorrelationFit {
  double tau_c = 0.0;      // decay time of the squared correlator
  double r_squared = 0.0;  // quality of the log-linear fit
  int points_used = 0;     // bins that cleared the sampling floor
};

// Least-squares fit of ln C(t) = a - t/tau_c over t in [t_min, t_max],
// keeping only bins with C(t) > 10/n to stay clear of the sampling floor.
// A non-decaying correlator yields tau_c = +infinity. Throws if fewer than
// three bins survive.
CorrelationFit correlation_time(const ClassicalEnsemble& e0, std::int64_t t_min = 1,
                                std::int64_t t_max = 10);

// Raw one-sided harmonic powers of the sample density: histogram counts on
// an n_I_bins x n_theta_bins grid spanning [0, max I] x [0, 2 pi), DFT
// across theta per action bin, power[m] = sum_I |F_m(I)|^2 for m <= m_max.
// Requires n_theta_bins >= 4 m_max to keep the reported harmonics clear of
// aliasing. Counting noise biases every power upward by ~samples, so
// quantitative growth studies should subtract that baseline.
struct HarmonicPower {
  std::vector<double> power;
  std::size_t samples = 0;
};
HarmonicPower classical_harmonic_power(const ClassicalEnsemble& e, std::size_t n_I_bins,
                                       std::size_t n_theta_bins, std::size_t m_max);

// Normalized weights of the theta-harmonics: the powers above folded to
// m >= 0 (factor 2 - delta_m0) and normalized over the reported window
// m <= m_max, so the weights sum to one by construction; content beyond
// m_max is renormalized away.
HarmonicSpectrum classical_harmonics(const ClassicalEnsemble& e, std::size_t n_I_bins,
                                     std::size_t n_theta_bins, std::size_t m_max);

// Sensitivity-to-perturbation experiment: sample an isotropic ensemble of n
// points with mean action init_scale, run t_r periods forward, rotate each
// trajectory once by xi ~ N(0, probe_sigma^2), run t_r periods backward, and
// return the overlap  sum w0 w_ret / sum w0^2  of the initial and returned
// sample densities on a fixed 64 x 256 (I, theta) grid spanning both
// ensembles. probe_sigma = 0 returns exactly 1. Resolution limit: once the
// returned density has decorrelated from the initial one the overlap
// saturates at the angle-averaged radial overlap, roughly
// I_0/(I_0 + g0^2 t_r), so the exponential sensitivity decay is visible
// only while e^{-t_r/tau_c} exceeds that floor (t_r ~ 1 at g0 = 2).
double reversal_experiment(const MapParams& params, double init_scale, std::int64_t t_r,
                           double probe_sigma, std::size_t n, RandomStream& stream);

// t_E = tau_c ln(2 mean_I / hbar): the time a minimal quantum cell needs to
// spread across the accessible action range. All arguments must be positive.
double ehrenfest_time(double tau_c, double mean_I, double hbar);

}  // namespace kno
