#include "kno/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace kno {

namespace {

// Tr[a b] for Hermitian a, b: the Frobenius inner product, real up to
// roundoff.
double hermitian_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a.cwiseProduct(b.conjugate()).sum().real();
}

}  // namespace

double purity(const FockDensityMatrix& rho) { return rho.rho.squaredNorm(); }

HarmonicSpectrum harmonic_weights(const FockDensityMatrix& rho) {
  const int n = rho.dim();
  const double p = rho.rho.squaredNorm();
  if (!(p > 0.0)) {
    throw std::invalid_argument("harmonic_weights: state has zero purity");
  }
  HarmonicSpectrum spectrum;
  spectrum.weights.resize(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    const double fold = m == 0 ? 1.0 : 2.0;
    spectrum.weights[static_cast<std::size_t>(m)] =
        fold * rho.rho.diagonal(-m).squaredNorm() / p;
  }
  return spectrum;
}

double fidelity_from_spectrum(const HarmonicSpectrum& spectrum, double sigma) {
  if (sigma < 0.0) {
    throw std::invalid_argument("fidelity_from_spectrum: sigma must be >= 0");
  }
  double fidelity = 0.0;
  for (std::size_t m = 0; m < spectrum.weights.size(); ++m) {
    const double x = sigma * static_cast<double>(m);
    fidelity += spectrum.weights[m] * std::exp(-0.5 * x * x);
  }
  return fidelity;
}

double mean_m2(const HarmonicSpectrum& spectrum) {
  double second = 0.0;
  for (std::size_t m = 0; m < spectrum.weights.size(); ++m) {
    second += static_cast<double>(m) * static_cast<double>(m) *
              spectrum.weights[m];
  }
  return second;
}

double peres_fidelity_general(const FockDensityMatrix& rho_a,
                              const FockDensityMatrix& rho_b) {
  if (rho_a.dim() != rho_b.dim()) {
    throw std::invalid_argument("peres_fidelity_general: dimension mismatch");
  }
  const double p = rho_a.rho.squaredNorm();
  if (!(p > 0.0)) {
    throw std::invalid_argument(
        "peres_fidelity_general: first state has zero purity");
  }
  return hermitian_trace_product(rho_a.rho, rho_b.rho) / p;
}

MetricSeries averaged_noise_fidelity(
    const std::vector<FockDensityMatrix>& rho_clean_traj,
    const std::vector<FockDensityMatrix>& rho_av_traj) {
  if (rho_clean_traj.size() != rho_av_traj.size()) {
    throw std::invalid_argument(
        "averaged_noise_fidelity: trajectory lengths differ");
  }
  MetricSeries series;
  series.label = "averaged_noise_fidelity";
  series.times.reserve(rho_clean_traj.size());
  series.values.reserve(rho_clean_traj.size());
  for (std::size_t t = 0; t < rho_clean_traj.size(); ++t) {
    series.times.push_back(static_cast<std::int64_t>(t));
    series.values.push_back(
        peres_fidelity_general(rho_clean_traj[t], rho_av_traj[t]));
  }
  return series;
}

double shannon_entropy(const HarmonicSpectrum& spectrum) {
  double entropy = 0.0;
  for (const double w : spectrum.weights) {
    if (w > 0.0) entropy -= w * std::log(w);
  }
  return entropy;
}

double von_neumann_entropy(const FockDensityMatrix& rho) {
  const int n = rho.dim();
  // Rows that vanish identically contribute zero eigenvalues exactly, so
  // the solve runs on the populated block only.
  int s = n;
  while (s > 1 && rho.rho.row(s - 1).squaredNorm() == 0.0) --s;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver;
  solver.compute(rho.rho.topLeftCorner(s, s), Eigen::EigenvaluesOnly);
  double entropy = 0.0;
  for (int i = 0; i < s; ++i) {
    double lambda = solver.eigenvalues()(i);
    if (lambda < -1e-9 || lambda > 1.0 + 1e-9) {
      throw std::invalid_argument(
          "von_neumann_entropy: eigenvalue " + std::to_string(lambda) +
          " is outside [0, 1] beyond the 1e-9 clamp budget");
    }
    lambda = std::clamp(lambda, 0.0, 1.0);
    if (lambda > 0.0) entropy -= lambda * std::log(lambda);
  }
  return entropy;
}

double decoherence_time(double sigma, double hbar, double diffusion_d) {
  if (!(hbar > 0.0) || !(diffusion_d > 0.0) || sigma < 0.0) {
    throw std::invalid_argument(
        "decoherence_time: need hbar > 0, diffusion_d > 0 and sigma >= 0");
  }
  if (sigma == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(hbar / (sigma * sigma * diffusion_d));
}

ComplexMatrix echo_operator(const FloquetSpec& spec, double epsilon,
                            std::int64_t t) {
  if (t < 0) throw std::invalid_argument("echo_operator: t must be >= 0");
  const ComplexMatrix u = build_floquet(spec);
  const int n = spec.n_max;
  if (t == 0 || epsilon == 0.0) return ComplexMatrix::Identity(n, n);
  // The perturbation advances level n by an extra epsilon * n per period,
  // which is exactly a shift of omega0.
  FloquetSpec perturbed = spec;
  perturbed.omega0 += epsilon;
  const ComplexMatrix u_v = build_floquet(perturbed);
  const ComplexMatrix u_dag = u.adjoint();
  ComplexMatrix f(n, n);
  f.noalias() = u_dag * u_v;
  ComplexMatrix scratch(n, n);
  for (std::int64_t s = 1; s < t; ++s) {
    // f(s) = U† f(s-1) U_V accumulates U†^s U_V^s one period at a time.
    scratch.noalias() = u_dag * f;
    f.noalias() = scratch * u_v;
  }
  return f;
}

double allegiance(const FockDensityMatrix& rho0, const ComplexMatrix& f_t) {
  if (rho0.dim() != f_t.rows() || f_t.rows() != f_t.cols()) {
    throw std::invalid_argument("allegiance: operator/state shape mismatch");
  }
  const Complex amplitude =
      f_t.cwiseProduct(rho0.rho.transpose()).sum();  // Tr[f rho0]
  return std::norm(amplitude);
}

double transition_fidelity(const FockDensityMatrix& rho0,
                           const ComplexMatrix& f_t) {
  if (rho0.dim() != f_t.rows() || f_t.rows() != f_t.cols()) {
    throw std::invalid_argument(
        "transition_fidelity: operator/state shape mismatch");
  }
  const double p = rho0.rho.squaredNorm();
  if (!(p > 0.0)) {
    throw std::invalid_argument("transition_fidelity: state has zero purity");
  }
  ComplexMatrix image(rho0.dim(), rho0.dim());
  image.noalias() = f_t * rho0.rho * f_t.adjoint();
  return hermitian_trace_product(image, rho0.rho) / p;
}

}  // namespace kno
