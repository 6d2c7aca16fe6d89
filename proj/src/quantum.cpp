#include "kno/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace kno {

namespace {

// Occupation mass below this total may be dropped from the tracked support
// each step; hundreds of steps stay far inside the 1e-9 trace budget.
constexpr double kSupportTail = 1e-15;

// Kick elements below this magnitude sit outside the declared band. Their
// magnitudes fall super-exponentially past the band edge, so the dropped
// contribution stays at the cutoff scale rather than accumulating.
constexpr double kBandCutoff = 1e-16;

// Certification bar: total occupation allowed in the top tail levels.
constexpr double kLeakageThreshold = 1e-8;

void validate_spec(const FloquetSpec& spec) {
  if (!(spec.hbar > 0.0)) {
    throw std::invalid_argument("FloquetSpec: hbar must be positive");
  }
  if (spec.n_max < 16) {
    throw std::invalid_argument("FloquetSpec: n_max must be at least 16");
  }
}

// Twist phases exp(-i(omega0 n + hbar n^2 + shift n)); the shift folds a
// frozen noise phase into the same diagonal.
ComplexVector twist_phases(double omega0, double hbar, double shift, int n) {
  ComplexVector phases(n);
  for (int i = 0; i < n; ++i) {
    const double level = double(i);
    phases(i) =
        std::polar(1.0, -(omega0 * level + hbar * level * level + shift * level));
  }
  return phases;
}

// Smallest s (>= 1) whose discarded upper occupations sum to at most
// kSupportTail. Slightly negative diagonal noise is ignored.
int support_from_diagonal(const ComplexMatrix& rho, int upper) {
  double tail = 0.0;
  int support = upper;
  while (support > 1) {
    tail += std::max(0.0, std::real(rho(support - 1, support - 1)));
    if (tail > kSupportTail) break;
    --support;
  }
  return support;
}

// Zeroes the frame between [0, support)^2 and [0, extent)^2 so that the
// matrix is exactly zero outside the declared support, then shrinks extent.
void trim_frame(ComplexMatrix& rho, int support, int& extent) {
  if (support < extent) {
    rho.block(0, support, extent, extent - support).setZero();
    rho.block(support, 0, extent - support, support).setZero();
  }
  extent = support;
}

// rho[0:s, 0:s] = P (mask ∘ sym(product)) P† where P = diag(phases) and
// sym is the Hermitian part; the mask damps by off-diagonal distance.
void write_back(const ComplexMatrix& product, const ComplexVector& phases,
                const RealVector* mask, int s, ComplexMatrix& rho) {
  for (int j = 0; j < s; ++j) {
    const Complex col_phase = std::conj(phases(j));
    for (int i = 0; i <= j; ++i) {
      Complex value = 0.5 * (product(i, j) + std::conj(product(j, i)));
      value *= phases(i) * col_phase;
      if (mask != nullptr) value *= (*mask)(j - i);
      rho(i, j) = value;
      rho(j, i) = std::conj(value);
    }
  }
}

}  // namespace

ComplexMatrix build_floquet(const FloquetSpec& spec) {
  validate_spec(spec);
  const ComplexVector phases =
      twist_phases(spec.omega0, spec.hbar, 0.0, spec.n_max);
  if (spec.g0 == 0.0) {
    return ComplexMatrix(phases.asDiagonal());
  }
  const Complex eta(0.0, spec.g0 / std::sqrt(spec.hbar));
  ComplexMatrix u = displacement_matrix(eta, spec.n_max);
  u = phases.asDiagonal() * u;
  return u;
}

FockDensityMatrix initial_mixed_state(double delta, const FloquetSpec& spec) {
  validate_spec(spec);
  if (delta < 0.0) {
    throw std::invalid_argument("initial_mixed_state: delta must be non-negative");
  }
  const int n = spec.n_max;
  const double ratio = delta / (delta + spec.hbar);
  RealVector weights(n);
  double sum = 0.0;
  double term = 1.0;  // ratio^n accumulated multiplicatively
  for (int i = 0; i < n; ++i) {
    weights(i) = term;
    sum += term;
    term *= ratio;
  }
  // The untruncated normalization is 1/(1 - ratio); what is missing past
  // the last level is ratio^n, the value `term` holds on loop exit.
  if (!(term < 1e-10)) {
    std::ostringstream message;
    message << "initial_mixed_state: truncated tail mass " << term
            << " exceeds 1e-10; increase n_max for delta = " << delta;
    throw std::invalid_argument(message.str());
  }
  FockDensityMatrix state{ComplexMatrix::Zero(n, n)};
  state.rho.diagonal() = (weights / sum).cast<Complex>();
  return state;
}

FockDensityMatrix unitary_step(const FockDensityMatrix& state,
                               const ComplexMatrix& u) {
  if (u.rows() != state.dim() || u.cols() != state.dim()) {
    throw std::invalid_argument("unitary_step: operator/state size mismatch");
  }
  ComplexMatrix rotated = u * state.rho;
  return {rotated * u.adjoint()};
}

FockDensityMatrix noisy_step(const FockDensityMatrix& state,
                             const ComplexMatrix& u, double xi) {
  FockDensityMatrix next = unitary_step(state, u);
  const int n = next.dim();
  ComplexVector phase(n);
  for (int i = 0; i < n; ++i) phase(i) = std::polar(1.0, -xi * double(i));
  const ComplexVector conjugate = phase.conjugate();
  next.rho = phase.asDiagonal() * next.rho * conjugate.asDiagonal();
  return next;
}

FockDensityMatrix averaged_step(const FockDensityMatrix& state,
                                const ComplexMatrix& u, double sigma) {
  if (sigma < 0.0) {
    throw std::invalid_argument("averaged_step: sigma must be non-negative");
  }
  FockDensityMatrix next = unitary_step(state, u);
  if (sigma == 0.0) return next;
  const int n = next.dim();
  RealVector damp(n);
  for (int k = 0; k < n; ++k) {
    damp(k) = std::exp(-0.5 * sigma * sigma * double(k) * double(k));
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      next.rho(i, j) *= damp(std::abs(i - j));
    }
  }
  return next;
}

RealVector occupation_distribution(const FockDensityMatrix& state) {
  return state.rho.diagonal().real();
}

TruncationReport truncation_check(const FockDensityMatrix& state,
                                  int tail_levels) {
  const int n = state.dim();
  if (tail_levels < 1 || tail_levels >= n) {
    throw std::invalid_argument("truncation_check: tail_levels must be in [1, dim)");
  }
  const double leakage =
      state.rho.diagonal().tail(tail_levels).real().sum();
  return {leakage < kLeakageThreshold, leakage};
}

FockDensityMatrix evolve(const FockDensityMatrix& rho0,
                         const FloquetSpec& spec, std::int64_t t,
                         const NoiseSpec& noise, EvolveMode mode,
                         const EvolveOptions& options) {
  validate_spec(spec);
  if (rho0.dim() != spec.n_max || rho0.rho.cols() != spec.n_max) {
    throw std::invalid_argument("evolve: state dimension differs from n_max");
  }
  if (t < 0) throw std::invalid_argument("evolve: negative step count");
  if (noise.sigma < 0.0) {
    throw std::invalid_argument("evolve: sigma must be non-negative");
  }
  const int n = spec.n_max;
  const int tail_levels = options.tail_levels > 0
                              ? std::min(options.tail_levels, n - 1)
                              : std::max(16, n / 16);

  FockDensityMatrix state{rho0.rho};
  if (options.observer) options.observer(0, state);
  if (t == 0) return state;

  const Complex eta(0.0, spec.g0 / std::sqrt(spec.hbar));
  const ComplexMatrix kick = displacement_matrix(eta, n);
  const int band = matrix_bandwidth(kick, kBandCutoff);

  RandomStream fallback_stream(noise.master_seed);
  RandomStream* stream =
      options.stream != nullptr ? options.stream : &fallback_stream;
  const bool frozen_noise =
      mode == EvolveMode::per_realization && noise.sigma > 0.0;

  RealVector mask;
  const bool masked = mode == EvolveMode::averaged && noise.sigma > 0.0;
  if (masked) {
    mask.resize(n);
    for (int k = 0; k < n; ++k) {
      mask(k) = std::exp(-0.5 * noise.sigma * noise.sigma * double(k) * double(k));
    }
  }

  ComplexMatrix scratch;
  ComplexMatrix product;
  int support = support_from_diagonal(state.rho, n);
  int extent = n;
  trim_frame(state.rho, support, extent);

  for (std::int64_t step = 1; step <= t; ++step) {
    const int grown =
        conjugate_by_banded(kick, band, state.rho, support, scratch, product);
    const double xi = frozen_noise ? noise.sigma * stream->gaussian() : 0.0;
    const ComplexVector phases =
        twist_phases(spec.omega0, spec.hbar, xi, grown);
    support = support_from_diagonal(product, grown);
    write_back(product, phases, masked ? &mask : nullptr, support, state.rho);
    trim_frame(state.rho, support, extent);
    if (options.observer) options.observer(step, state);
    if (options.enforce_truncation && options.check_every > 0 &&
        step % options.check_every == 0) {
      const TruncationReport report = truncation_check(state, tail_levels);
      if (!report.pass) {
        std::ostringstream message;
        message << "evolve: truncation failure at step " << step << ": top "
                << tail_levels << " levels hold " << report.leakage
                << " (threshold " << kLeakageThreshold << ")";
        throw std::runtime_error(message.str());
      }
    }
  }
  return state;
}

std::vector<FockDensityMatrix> evolve_trajectory(
    const FockDensityMatrix& rho0, const FloquetSpec& spec, std::int64_t t,
    const NoiseSpec& noise, EvolveMode mode, EvolveOptions options) {
  std::vector<FockDensityMatrix> trajectory;
  trajectory.reserve(static_cast<std::size_t>(t) + 1);
  StepObserver downstream = std::move(options.observer);
  options.observer = [&trajectory, &downstream](
                         std::int64_t step, const FockDensityMatrix& state) {
    trajectory.push_back(state);
    if (downstream) downstream(step, state);
  };
  evolve(rho0, spec, t, noise, mode, options);
  return trajectory;
}

}  // namespace kno
