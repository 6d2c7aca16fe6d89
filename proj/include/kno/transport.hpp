#pragma once

#include <complex>
#include <vector>

#include "kno/numerics.hpp"

namespace kno {

/// An isolated resonance coupled to two leads and to an equidistant
/// ("picket fence") background spectrum of level spacing d. Partial escape
/// widths are listed per channel; the first lead1_count entries belong to
/// lead 1, the rest to lead 2. The closed forms below assume the resonance
/// is isolated (total width small against the resonance spacing), which is
/// the caller's responsibility.
struct DoorwayParams {
  double e_res = 0.0;
  std::vector<double> gamma_channels;  // all > 0
  int lead1_count = 0;                 // in [0, gamma_channels.size()]
  double gamma_s = 0.0;                // escape width into the background, >= 0
  double d = 1.0;                      // background level spacing, > 0
};

/// Total escape width through the leads (sum of all partial widths).
double total_width(const DoorwayParams& p);

/// Width of one lead (1 or 2): sum of its partial widths.
double lead_width(const DoorwayParams& p, int lead);

/// Inelastic loss in the background, parameterized by the quasi-particle
/// width gamma_e. xi and kappa are derived: xi = tanh(pi gamma_e / 2d) and
/// kappa = 4 xi / (1 - xi)^2, which equals exp(tau_d gamma_e) - 1 with
/// tau_d = 2 pi / d.
struct AbsorptionParams {
  double gamma_e = 0.0;
  double xi = 0.0;
  double kappa = 0.0;
};

/// Build AbsorptionParams from the quasi-particle width (gamma_e >= 0).
AbsorptionParams kappa_of(double gamma_e, double d);

/// Build AbsorptionParams from a target kappa >= 0 (inverts kappa_of).
AbsorptionParams absorption_from_kappa(double kappa, double d);

/// Real part of the background loop function: cot(pi E / d). Periodic with
/// period d; poles at integer multiples of d. Throws std::domain_error
/// within 1e-12 * d of a pole.
double loop_g(double e, double d);

/// Imaginary-part loop function: (pi/d) / sin^2(pi E / d). Satisfies
/// l = (pi/d)(1 + g^2) and l >= pi/d. Same pole guard as loop_g.
double loop_l(double e, double d);

/// Roots of E - e_res - (gamma_s/2) cot(pi E / d) inside [lo, hi], in
/// ascending order. The residual is strictly increasing between adjacent
/// cot poles, so each inter-pole interval holds exactly one root; roots are
/// bisected to 1e-12 * d. Requires gamma_s > 0 and lo < hi.
std::vector<double> fine_structure_roots(const DoorwayParams& p, double lo,
                                         double hi);

/// Transition cross section a -> b resolved on the fine-structure scale:
/// gamma_a gamma_b / ([E - e_res - (gamma_s/2) cot(pi E/d)]^2 + Gamma^2/4),
/// with Gamma the total lead width. Channel indices address
/// gamma_channels. gamma_s = 0 decouples the background (plain
/// Breit-Wigner); otherwise E must be pole-safe.
double cross_section_fine(double e, const DoorwayParams& p, int a, int b);

/// Wigner time delay resolved on the fine-structure scale:
/// Gamma [1 + (pi gamma_s / 2d) sin^{-2}(pi E/d)] / (same denominator).
double wigner_delay_fine(double e, const DoorwayParams& p);

/// Cross section averaged over the fine structure: an incoherent sum of the
/// directly transmitted part and the background re-emitted part, in the
/// constant ratio Gamma : gamma_s.
struct AveragedCrossSection {
  double direct = 0.0;
  double re_emitted = 0.0;
  double total = 0.0;
};

/// (1 + gamma_s/Gamma) gamma_a gamma_b / ((E-e_res)^2 + (Gamma+gamma_s)^2/4),
/// split into its direct and re-emitted parts.
AveragedCrossSection averaged_cross_section(double e, const DoorwayParams& p,
                                            int a, int b);

/// Fine-structure-averaged time delay:
/// (Gamma+gamma_s)/((E-e_res)^2 + (Gamma+gamma_s)^2/4) + 2 pi / d. The
/// constant term counts the sojourn in the background and persists even as
/// gamma_s -> 0 (a documented property of the closed form).
double averaged_delay(double e, const DoorwayParams& p);

/// Two-lead conductance with background absorption. The direct term is
/// T_12 = Gamma_1 Gamma_2 / L(E) with L(E) = (E-e_res)^2 + (Gamma+gamma_s)^2/4;
/// the background path contributes T_1s T_s2 / (T_1s + T_s2) with
/// T_sk = gamma_s Gamma_k / L(E; kappa) and
/// 1/L(E;kappa) = 1/L(E) * 1/(1 + kappa L(E)/(Gamma gamma_s)). A vanishing
/// T_1s + T_s2 contributes zero.
struct Conductance {
  double t_12 = 0.0;
  double t_1s = 0.0;
  double t_s2 = 0.0;
  double total = 0.0;
};

Conductance conductance(double e, const DoorwayParams& p,
                        const AbsorptionParams& abs);

/// Resonance denominator with absorption, eta = cot(pi E / d):
/// E - e_res - (gamma_s/2)(1-xi^2) eta/(1+xi^2 eta^2)
///   + (i/2) [Gamma + gamma_s xi (1+eta^2)/(1+xi^2 eta^2)].
/// Its imaginary part never drops below Gamma/2.
std::complex<double> resonant_denominator(double e, const DoorwayParams& p,
                                          const AbsorptionParams& abs);

enum class Ensemble { goe, gue };

/// Inputs for the ensemble-averaged absorption correction. The channel
/// escape is summarized by the Weisskopf width gamma_w (m * D / (2 pi) for
/// m unit-transmission channels with mean resonance spacing D — see
/// weisskopf_width) and the Heisenberg time t_h = 2 pi / D; both enter
/// explicitly so no spacing convention is baked in.
struct DeltaSigmaParams {
  double kappa = 0.0;    // >= 0
  double gamma_s = 1.0;  // > 0, same units as gamma_w
  Ensemble ensemble = Ensemble::gue;
  int m = 2;             // open channels, >= 2
  double t_h = 1.0;      // > 0
  double gamma_w = 1.0;  // > 0
};

double weisskopf_width(int m, double resonance_spacing);

/// Ensemble-averaged transmission split into the absorption-free baseline
/// and the absorption-induced correction (zero at kappa = 0).
struct DeltaSigma {
  double baseline = 0.0;
  double correction = 0.0;
  double total = 0.0;
};

/// Evaluates the decay-width average of 1/Gamma (baseline) and of
/// -sqrt(kappa gamma_s / 4) / (Gamma sqrt(Gamma + kappa (Gamma+gamma_s)^2
/// / (4 gamma_s))) (correction) over the channel-decay weight. The GUE
/// weight is a delta at gamma_w; the GOE weight adds -(2/t_h) delta' and
/// (m/2t_h^2) delta'' terms, which integrate against a smooth f as +f' and
/// +f'' factors — evaluated here with exact derivatives, no quadrature.
DeltaSigma delta_sigma(const DeltaSigmaParams& p);

/// Channel layout for the weak-localization formula: lead channel counts
/// m1, m2 (total m = m1 + m2), dimensionless spreading width gamma_s, and
/// absorption kappa.
struct WeakLocParams {
  int m1 = 1;
  int m2 = 1;
  double gamma_s = 1.0;  // > 0
  double kappa = 0.0;    // >= 0
};

/// Ensemble conductance difference
///   dG = m1 m2 (2 d/dmu + (mu/2) d^2/dmu^2)
///        { (1/mu) [1 - sqrt(kappa gamma_s/4)
///                      / sqrt(mu + kappa (mu+gamma_s)^2 / (4 gamma_s))] }
/// at mu = m1 + m2, with the mu-derivatives in closed form (cross-checked
/// against Richardson finite differences in the tests).
double weak_localization(const WeakLocParams& w);

}  // namespace kno
