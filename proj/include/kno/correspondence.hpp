#pragma once

#include "kno/numerics.hpp"

namespace kno {

/// Harmonic well m omega^2 x^2 / 2; level n carries energy
/// hbar omega (n + 1/2) and classical turning amplitude
/// A = sqrt((2n+1) hbar / (m omega)).
struct WellSpec {
  double mass = 1.0;
  double omega = 1.0;
  double hbar = 1.0;  // all three > 0
};

/// A probability density sampled on a uniform, sign-symmetric position grid
/// (2001 points spanning 1.5 turning amplitudes each side; x[j] = -x[2000-j]
/// exactly). density is per unit length; trapezoid integration over the
/// grid recovers the stated normalizations.
struct GridDensity {
  RealVector x;
  RealVector density;
};

/// Turning amplitude of level n.
double turning_amplitude(const WellSpec& well, int n);

/// Classical position density of the energy-E_n orbit: 1/(pi sqrt(A^2-x^2))
/// inside the turning points, 0 outside. Values are cell averages of the
/// arcsine law, so the grid sum telescopes to exactly 1 despite the
/// integrable endpoint singularities. Throws std::invalid_argument for
/// non-positive well parameters or n < 0.
GridDensity classical_density(const WellSpec& well, int n);

/// |psi_n(x)|^2 from the normalized Hermite-function recurrence
/// h_{k+1} = xi sqrt(2/(k+1)) h_k - sqrt(k/(k+1)) h_{k-1}, which keeps every
/// intermediate bounded. Levels above 10^4 are refused. Integrates to 1
/// within 1e-8 (the grid holds the full exponential tails).
GridDensity quantum_density(const WellSpec& well, int n);

/// Uniform incoherent mixture of |psi_k|^2 over k in
/// [n_center - dn, n_center + dn], on the grid of n_center. dn = 0
/// degenerates to quantum_density. Requires dn >= 0 and n_center - dn >= 0.
GridDensity mixed_density(const WellSpec& well, int n_center, int dn);

/// quantum_density smoothed by a position boxcar whose full width at each
/// interior point x is the local de Broglie half-wavelength
/// pi hbar / p_c(x) — exactly one oscillation period of the density — with
/// p_c evaluated at the window center. Outside the turning points the
/// density is left untouched; windows are clipped to the grid, and the
/// result is rescaled to unit trapezoid mass (clipping near the turning
/// points, where the window widens, would otherwise shave a few percent).
GridDensity boxcar_smoothed_density(const WellSpec& well, int n);

}  // namespace kno
