#include "kno/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kno {

namespace {

constexpr double kPoleBar = 1e-12;  // pole guard, in units of d

void validate_doorway(const DoorwayParams& p) {
  if (!(p.d > 0.0)) throw std::invalid_argument("level spacing d must be > 0");
  if (!(p.gamma_s >= 0.0)) {
    throw std::invalid_argument("spreading width must be >= 0");
  }
  if (p.gamma_channels.empty()) {
    throw std::invalid_argument("at least one escape channel required");
  }
  for (double g : p.gamma_channels) {
    if (!(g > 0.0)) throw std::invalid_argument("partial widths must be > 0");
  }
  if (p.lead1_count < 0 ||
      p.lead1_count > static_cast<int>(p.gamma_channels.size())) {
    throw std::invalid_argument("lead1_count out of range");
  }
}

double checked_channel(const DoorwayParams& p, int c) {
  if (c < 0 || c >= static_cast<int>(p.gamma_channels.size())) {
    throw std::invalid_argument("channel index out of range");
  }
  return p.gamma_channels[static_cast<std::size_t>(c)];
}

// Distance from E to the nearest cot pole (integer multiple of d), in
// units of d.
double pole_distance(double e, double d) {
  const double q = e / d;
  return std::abs(q - std::round(q));
}

void require_pole_safe(double e, double d) {
  const double dist = pole_distance(e, d);
  if (dist < kPoleBar) {
    throw std::domain_error("energy within " + std::to_string(dist) +
                            " * d of a background pole");
  }
}

double cot_pi(double e, double d) {
  const double x = std::numbers::pi * (e / d);
  return std::cos(x) / std::sin(x);
}

// Fine-structure secular residual E - e_res - (gamma_s/2) cot(pi E/d);
// strictly increasing between adjacent cot poles.
double secular_residual(double e, const DoorwayParams& p) {
  return e - p.e_res - 0.5 * p.gamma_s * cot_pi(e, p.d);
}

// [E - e_res - (gamma_s/2) cot]^2 + Gamma^2/4, the shared fine-structure
// denominator. gamma_s == 0 drops the cot term entirely (no pole guard).
double fine_denominator(double e, const DoorwayParams& p, double gamma) {
  double shift = e - p.e_res;
  if (p.gamma_s > 0.0) {
    require_pole_safe(e, p.d);
    shift -= 0.5 * p.gamma_s * cot_pi(e, p.d);
  }
  return shift * shift + 0.25 * gamma * gamma;
}

// Value and first two mu-derivatives of psi(mu) = 1 / (mu sqrt(R)) with
// R(mu) = mu + c (mu + gamma)^2. Shared by delta_sigma and
// weak_localization, whose correctness rests on this algebra.
struct ProfileDerivatives {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

ProfileDerivatives inverse_sqrt_profile(double mu, double c, double gamma) {
  const double r = mu + c * (mu + gamma) * (mu + gamma);
  const double r1 = 1.0 + 2.0 * c * (mu + gamma);
  const double r2 = 2.0 * c;
  const double rm12 = 1.0 / std::sqrt(r);
  const double rm32 = rm12 / r;
  const double rm52 = rm32 / r;
  ProfileDerivatives out;
  out.value = rm12 / mu;
  out.d1 = -rm12 / (mu * mu) - 0.5 * rm32 * r1 / mu;
  out.d2 = 2.0 * rm12 / (mu * mu * mu) + rm32 * r1 / (mu * mu) +
           0.75 * rm52 * r1 * r1 / mu - 0.5 * rm32 * r2 / mu;
  return out;
}

}  // namespace

double total_width(const DoorwayParams& p) {
  validate_doorway(p);
  double sum = 0.0;
  for (double g : p.gamma_channels) sum += g;
  return sum;
}

double lead_width(const DoorwayParams& p, int lead) {
  validate_doorway(p);
  if (lead != 1 && lead != 2) {
    throw std::invalid_argument("lead must be 1 or 2");
  }
  double sum = 0.0;
  for (int c = 0; c < static_cast<int>(p.gamma_channels.size()); ++c) {
    if ((c < p.lead1_count) == (lead == 1)) {
      sum += p.gamma_channels[static_cast<std::size_t>(c)];
    }
  }
  return sum;
}

AbsorptionParams kappa_of(double gamma_e, double d) {
  if (!(gamma_e >= 0.0)) {
    throw std::invalid_argument("quasi-particle width must be >= 0");
  }
  if (!(d > 0.0)) throw std::invalid_argument("level spacing d must be > 0");
  AbsorptionParams out;
  out.gamma_e = gamma_e;
  out.xi = std::tanh(0.5 * std::numbers::pi * gamma_e / d);
  // Same quantity as 4 xi / (1 - xi)^2, but computed without the 1 - xi
  // cancellation that loses digits once tanh saturates.
  out.kappa = std::expm1(2.0 * std::numbers::pi * gamma_e / d);
  return out;
}

AbsorptionParams absorption_from_kappa(double kappa, double d) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  // kappa = exp(tau_d gamma_e) - 1 with tau_d = 2 pi / d.
  const double gamma_e = std::log1p(kappa) * d / (2.0 * std::numbers::pi);
  return kappa_of(gamma_e, d);
}

double loop_g(double e, double d) {
  if (!(d > 0.0)) throw std::invalid_argument("level spacing d must be > 0");
  require_pole_safe(e, d);
  return cot_pi(e, d);
}

double loop_l(double e, double d) {
  if (!(d > 0.0)) throw std::invalid_argument("level spacing d must be > 0");
  require_pole_safe(e, d);
  const double s = std::sin(std::numbers::pi * (e / d));
  return std::numbers::pi / (d * s * s);
}

std::vector<double> fine_structure_roots(const DoorwayParams& p, double lo,
                                         double hi) {
  validate_doorway(p);
  if (!(p.gamma_s > 0.0)) {
    throw std::invalid_argument(
        "root structure requires a positive spreading width");
  }
  if (!(lo < hi)) throw std::invalid_argument("window must satisfy lo < hi");

  // Inset from the poles small enough that the cot term dominates the
  // bracket sign, so each inter-pole interval is a guaranteed bracket.
  const double bound =
      std::max(std::abs(lo - p.e_res), std::abs(hi - p.e_res)) + 1.0;
  const double inset =
      std::min(1e-13 * p.d,
               0.25 * p.gamma_s * p.d / (std::numbers::pi * bound));

  std::vector<double> roots;
  const long long k_lo = static_cast<long long>(std::floor(lo / p.d));
  const long long k_hi = static_cast<long long>(std::ceil(hi / p.d));
  for (long long k = k_lo; k < k_hi; ++k) {
    double a = static_cast<double>(k) * p.d + inset;
    double b = static_cast<double>(k + 1) * p.d - inset;
    if (b < lo || a > hi) continue;
    if (!(secular_residual(a, p) < 0.0 && secular_residual(b, p) > 0.0)) {
      throw std::logic_error("fine-structure bracket failed");
    }
    while (b - a > 1e-12 * p.d) {
      const double mid = 0.5 * (a + b);
      (secular_residual(mid, p) < 0.0 ? a : b) = mid;
    }
    const double root = 0.5 * (a + b);
    if (root >= lo && root <= hi) roots.push_back(root);
  }
  return roots;
}

double cross_section_fine(double e, const DoorwayParams& p, int a, int b) {
  validate_doorway(p);
  const double ga = checked_channel(p, a);
  const double gb = checked_channel(p, b);
  return ga * gb / fine_denominator(e, p, total_width(p));
}

double wigner_delay_fine(double e, const DoorwayParams& p) {
  validate_doorway(p);
  const double gamma = total_width(p);
  double enhancement = 1.0;
  if (p.gamma_s > 0.0) {
    require_pole_safe(e, p.d);
    const double s = std::sin(std::numbers::pi * (e / p.d));
    enhancement += 0.5 * std::numbers::pi * p.gamma_s / (p.d * s * s);
  }
  return gamma * enhancement / fine_denominator(e, p, gamma);
}

AveragedCrossSection averaged_cross_section(double e, const DoorwayParams& p,
                                            int a, int b) {
  validate_doorway(p);
  const double ga = checked_channel(p, a);
  const double gb = checked_channel(p, b);
  const double gamma = total_width(p);
  const double shift = e - p.e_res;
  const double half = 0.5 * (gamma + p.gamma_s);
  AveragedCrossSection out;
  out.direct = ga * gb / (shift * shift + half * half);
  out.re_emitted = out.direct * p.gamma_s / gamma;
  out.total = out.direct + out.re_emitted;
  return out;
}

double averaged_delay(double e, const DoorwayParams& p) {
  validate_doorway(p);
  const double gamma = total_width(p);
  const double shift = e - p.e_res;
  const double half = 0.5 * (gamma + p.gamma_s);
  return (gamma + p.gamma_s) / (shift * shift + half * half) +
         2.0 * std::numbers::pi / p.d;
}

Conductance conductance(double e, const DoorwayParams& p,
                        const AbsorptionParams& abs) {
  validate_doorway(p);
  if (!(abs.kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  const double gamma_1 = lead_width(p, 1);
  const double gamma_2 = lead_width(p, 2);
  const double gamma = gamma_1 + gamma_2;
  const double shift = e - p.e_res;
  const double half = 0.5 * (gamma + p.gamma_s);
  const double lambda = shift * shift + half * half;

  Conductance out;
  out.t_12 = gamma_1 * gamma_2 / lambda;
  // Absorption rescales only the background path:
  // 1/L(E;kappa) = 1/L(E) / (1 + kappa L(E) / (Gamma gamma_s)).
  double lambda_abs = lambda;
  if (abs.kappa > 0.0 && p.gamma_s > 0.0) {
    lambda_abs = lambda * (1.0 + abs.kappa * lambda / (gamma * p.gamma_s));
  }
  out.t_1s = p.gamma_s * gamma_1 / lambda_abs;
  out.t_s2 = p.gamma_s * gamma_2 / lambda_abs;
  const double through = out.t_1s + out.t_s2;
  out.total = out.t_12;
  if (through > 0.0) out.total += out.t_1s * out.t_s2 / through;
  return out;
}

std::complex<double> resonant_denominator(double e, const DoorwayParams& p,
                                          const AbsorptionParams& abs) {
  validate_doorway(p);
  require_pole_safe(e, p.d);
  const double eta = cot_pi(e, p.d);
  const double xi = abs.xi;
  const double mixer = 1.0 + xi * xi * eta * eta;
  const double real_part =
      e - p.e_res - 0.5 * p.gamma_s * (1.0 - xi * xi) * eta / mixer;
  const double imag_part =
      0.5 * (total_width(p) + p.gamma_s * xi * (1.0 + eta * eta) / mixer);
  return {real_part, imag_part};
}

double weisskopf_width(int m, double resonance_spacing) {
  if (m < 1) throw std::invalid_argument("channel count must be >= 1");
  if (!(resonance_spacing > 0.0)) {
    throw std::invalid_argument("resonance spacing must be > 0");
  }
  return m * resonance_spacing / (2.0 * std::numbers::pi);
}

DeltaSigma delta_sigma(const DeltaSigmaParams& p) {
  if (p.m < 2) throw std::invalid_argument("need at least two channels");
  if (!(p.kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");
  if (!(p.gamma_s > 0.0) || !(p.t_h > 0.0) || !(p.gamma_w > 0.0)) {
    throw std::invalid_argument("gamma_s, t_h, gamma_w must be > 0");
  }

  const double w = p.gamma_w;
  DeltaSigma out;
  // Baseline: the weight-average of 1/Gamma.
  out.baseline = 1.0 / w;
  if (p.ensemble == Ensemble::goe) {
    out.baseline += -2.0 / (p.t_h * w * w) + p.m / (p.t_h * p.t_h * w * w * w);
  }

  if (p.kappa > 0.0) {
    const double prefactor = -0.5 * std::sqrt(p.kappa * p.gamma_s);
    const ProfileDerivatives f =
        inverse_sqrt_profile(w, 0.25 * p.kappa / p.gamma_s, p.gamma_s);
    double average = f.value;
    if (p.ensemble == Ensemble::goe) {
      // delta' and delta'' against a smooth f pick up +f' and +f''.
      average += 2.0 * f.d1 / p.t_h + 0.5 * p.m * f.d2 / (p.t_h * p.t_h);
    }
    out.correction = prefactor * average;
  }
  out.total = out.baseline + out.correction;
  return out;
}

double weak_localization(const WeakLocParams& w) {
  if (w.m1 < 1 || w.m2 < 1) {
    throw std::invalid_argument("lead channel counts must be >= 1");
  }
  if (!(w.gamma_s > 0.0)) {
    throw std::invalid_argument("spreading width must be > 0");
  }
  if (!(w.kappa >= 0.0)) throw std::invalid_argument("kappa must be >= 0");

  const double m = w.m1 + w.m2;
  // dG = m1 m2 [2 phi' + (m/2) phi''] with phi = 1/mu - s psi(mu); the
  // 1/mu part contributes exactly -1/m^2.
  double bracket = -1.0 / (m * m);
  if (w.kappa > 0.0) {
    const double s = 0.5 * std::sqrt(w.kappa * w.gamma_s);
    const ProfileDerivatives psi =
        inverse_sqrt_profile(m, 0.25 * w.kappa / w.gamma_s, w.gamma_s);
    bracket -= s * (2.0 * psi.d1 + 0.5 * m * psi.d2);
  }
  return w.m1 * w.m2 * bracket;
}

}  // namespace kno
