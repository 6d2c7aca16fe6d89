#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kno/numerics.hpp"

namespace kno {

/// One-period propagator of the kicked nonlinear oscillator in the number
/// basis: a coherent kick of strength g0 followed by the anharmonic twist
/// phases exp(-i(omega0 n + hbar n^2)). hbar sets the action quantum, so
/// level n carries action hbar (n + 1/2).
struct FloquetSpec {
  double omega0 = 0.5;
  double g0 = 2.0;
  double hbar = 1.0;  // > 0
  int n_max = 2048;   // >= 16; adequacy certified by truncation_check
};

/// Density matrix in the number basis. Valid states are Hermitian within
/// 1e-10 max-norm, have unit trace within 1e-9 and eigenvalues >= -1e-10.
struct FockDensityMatrix {
  ComplexMatrix rho;

  int dim() const { return static_cast<int>(rho.rows()); }
};

/// Dephasing noise: each period multiplies the state by exp(-i xi n̂) with
/// xi drawn independently per period from N(0, sigma^2).
struct NoiseSpec {
  double sigma = 0.0;  // >= 0
  std::uint64_t master_seed = 0;
};

/// U = diag(exp(-i(omega0 n + hbar n^2))) · D(i g0/sqrt(hbar)), unitary
/// within 1e-10 on the truncated space. Throws std::invalid_argument for
/// hbar <= 0 or n_max < 16.
ComplexMatrix build_floquet(const FloquetSpec& spec);

/// Diagonal geometric mixture rho_nn ∝ (delta/(delta+hbar))^n — mean
/// occupation delta/hbar, purity hbar/(2 delta + hbar) — renormalized over
/// the truncated space. Throws std::invalid_argument if delta < 0 or the
/// renormalization correction exceeds 1e-10 (n_max too small for delta).
FockDensityMatrix initial_mixed_state(double delta, const FloquetSpec& spec);

/// U rho U†. Trace, purity and spectrum are preserved.
FockDensityMatrix unitary_step(const FockDensityMatrix& state,
                               const ComplexMatrix& u);

/// exp(-i xi n̂) U rho U† exp(i xi n̂): one period under a frozen noise
/// phase. Unitary for any xi; the occupation diagonal never depends on xi.
FockDensityMatrix noisy_step(const FockDensityMatrix& state,
                             const ComplexMatrix& u, double xi);

/// Noise-averaged period: off-diagonal elements of U rho U† are damped by
/// exp(-sigma^2 (n - n')^2 / 2), the Gaussian characteristic function of
/// the per-period phase. Trace-preserving; purity never increases.
FockDensityMatrix averaged_step(const FockDensityMatrix& state,
                                const ComplexMatrix& u, double sigma);

/// Occupation probabilities w_n = rho_nn.
RealVector occupation_distribution(const FockDensityMatrix& state);

struct TruncationReport {
  bool pass = false;
  double leakage = 0.0;  // total occupation of the top tail_levels levels
};

/// Certifies that the truncated basis still contains the state: passes when
/// the top tail_levels occupations sum to below 1e-8. tail_levels must lie
/// in [1, dim).
TruncationReport truncation_check(const FockDensityMatrix& state,
                                  int tail_levels);

enum class EvolveMode {
  per_realization,  // one frozen noise history; unitary throughout
  averaged,         // closed-form noise average; coherences decay
};

/// Receives the state at step 0 and after every completed period. The
/// reference is only valid during the call.
using StepObserver =
    std::function<void(std::int64_t step, const FockDensityMatrix& state)>;

struct EvolveOptions {
  std::int64_t check_every = 10;   // truncation cadence; <= 0 disables
  int tail_levels = 0;             // 0 -> max(16, n_max/16)
  bool enforce_truncation = true;  // false: run to completion regardless
  RandomStream* stream = nullptr;  // per_realization noise source; null ->
                                   // a fresh stream seeded by master_seed
  StepObserver observer;
};

/// Applies t periods of the selected step type to rho0 and returns the
/// final state. Every check_every steps the truncation is certified and a
/// failure aborts with std::runtime_error (unless enforce_truncation is
/// false, e.g. when the caller records the leakage itself). The state is
/// tracked on its occupied support and the kick is applied through its
/// numerical band, so the cost scales with the populated block rather than
/// n_max^3; the result matches composing the dense per-step operations to
/// ~1e-12. Mass below 1e-15 may be trimmed from the support each step,
/// well inside the 1e-9 trace budget.
FockDensityMatrix evolve(const FockDensityMatrix& rho0,
                         const FloquetSpec& spec, std::int64_t t,
                         const NoiseSpec& noise, EvolveMode mode,
                         const EvolveOptions& options = {});

/// evolve, collecting all t + 1 states (dense copies; meant for small
/// n_max). A caller-supplied observer still runs after each collection.
std::vector<FockDensityMatrix> evolve_trajectory(
    const FockDensityMatrix& rho0, const FloquetSpec& spec, std::int64_t t,
    const NoiseSpec& noise, EvolveMode mode, EvolveOptions options = {});

}  // namespace kno
