#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kno/quantum.hpp"
#include "kno/spectrum.hpp"

namespace kno {

/// A labeled scalar diagnostic sampled once per period. times and values
/// have equal length and times are strictly increasing.
struct MetricSeries {
  std::vector<std::int64_t> times;
  std::vector<double> values;
  std::string label;
};

/// Tr[rho^2]. 1 for pure states, 1/N for the maximally mixed state on N
/// levels, and conserved under unitary and dephasing-per-realization steps.
double purity(const FockDensityMatrix& rho);

/// Weights of the phase harmonics carried by the state's off-diagonals:
/// W_m = (2 - delta_{m0}) / Tr[rho^2] * sum_n |<n+m|rho|n>|^2. Normalized
/// to sum 1 exactly by construction (Hermitian fold). Throws
/// std::invalid_argument if the state is identically zero.
HarmonicSpectrum harmonic_weights(const FockDensityMatrix& rho);

/// Response to an instant Gaussian phase probe of width sigma:
/// F = sum_m exp(-sigma^2 m^2 / 2) W_m. Equals the Peres overlap between
/// the state and its rotation-averaged copy. Monotone non-increasing in
/// sigma with F(0) = 1. Throws std::invalid_argument for sigma < 0.
double fidelity_from_spectrum(const HarmonicSpectrum& spectrum, double sigma);

/// Second moment sum_m m^2 W_m of the harmonic spectrum; equals -F''(0)
/// of the probe response. The harmonic spread <|m|> is its square root.
double mean_m2(const HarmonicSpectrum& spectrum);

/// Peres overlap Tr[rho_a rho_b] / Tr[rho_a^2] between two states on the
/// same basis. 1 for identical states, 0 for orthogonal supports. Note the
/// normalization is by the FIRST argument's purity.
double peres_fidelity_general(const FockDensityMatrix& rho_a,
                              const FockDensityMatrix& rho_b);

/// Overlap series F(t) = Tr[rho_clean(t) rho_av(t)] / Tr[rho_clean(t)^2]
/// between a noise-free trajectory and the matching noise-averaged one.
/// Equals the mean of per-realization overlaps by linearity. Throws
/// std::invalid_argument when the trajectories differ in length.
MetricSeries averaged_noise_fidelity(
    const std::vector<FockDensityMatrix>& rho_clean_traj,
    const std::vector<FockDensityMatrix>& rho_av_traj);

/// Information entropy -sum W_m ln W_m of a harmonic spectrum (0 ln 0 = 0).
/// For exponential spectra with large spread this approaches
/// ln<|m|> + 1 - ln(2)/2.
double shannon_entropy(const HarmonicSpectrum& spectrum);

/// -sum lambda ln lambda over the state's eigenvalues. Eigenvalues within
/// 1e-9 of [0, 1] are clamped onto the interval; violations beyond that
/// throw std::invalid_argument (a broken state, not a metric problem).
double von_neumann_entropy(const FockDensityMatrix& rho);

/// Order-of-magnitude estimate sqrt(hbar / (sigma^2 D)) of the time at
/// which dephasing of strength sigma erases quantum interference, given
/// the classical action diffusion rate D. sigma = 0 returns +infinity.
/// Throws std::invalid_argument for hbar <= 0, D <= 0 or sigma < 0.
double decoherence_time(double sigma, double hbar, double diffusion_d);

/// Loschmidt echo operator f(t) = U†(t) U_V(t) where U_V evolves with the
/// same kick but a level-dependent phase perturbed by epsilon: per period
/// level n advances by an extra epsilon * n. Unitary within 1e-9; the
/// identity at epsilon = 0 or t = 0.
ComplexMatrix echo_operator(const FloquetSpec& spec, double epsilon,
                            std::int64_t t);

/// |Tr[f(t) rho0]|^2: the squared mean echo amplitude over the initial
/// mixture. For a pure rho0 this is the return probability |<psi|f|psi>|^2.
double allegiance(const FockDensityMatrix& rho0, const ComplexMatrix& f_t);

/// Tr[f rho0 f† rho0] / Tr[rho0^2]: the Peres overlap between the initial
/// state and its echo image. Coincides with allegiance on pure states.
double transition_fidelity(const FockDensityMatrix& rho0,
                           const ComplexMatrix& f_t);

}  // namespace kno
