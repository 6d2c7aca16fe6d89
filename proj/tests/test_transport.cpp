#include "kno/transport.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "kno/numerics.hpp"
#include "oracles.hpp"

using kno::AbsorptionParams;
using kno::Conductance;
using kno::DeltaSigmaParams;
using kno::DoorwayParams;
using kno::Ensemble;
using kno::WeakLocParams;

namespace {

DoorwayParams narrow_doorway() {
  DoorwayParams p;
  p.e_res = 0.3;
  p.gamma_channels = {0.02, 0.03, 0.04};
  p.lead1_count = 2;
  p.gamma_s = 2.0;
  p.d = 0.1;
  return p;
}

// The weak-localization generating bracket, written from scratch so the
// library's closed-form derivatives are checked against finite differences
// of an independent expression.
long double coherence_bracket(long double mu, long double kappa,
                              long double gamma_s) {
  const long double s = 0.5L * std::sqrt(kappa * gamma_s);
  const long double r =
      mu + 0.25L * kappa / gamma_s * (mu + gamma_s) * (mu + gamma_s);
  return (1.0L - s / std::sqrt(r)) / mu;
}

// Fourth-order central differences in extended precision: the comparison
// grid spans strong cancellation inside the channel bracket, and double
// stencils bottom out in roundoff above the 1e-8 bar.
template <typename F>
long double central_d1(F&& f, long double x, long double h) {
  const long double coarse = (f(x + h) - f(x - h)) / (2.0L * h);
  const long double fine = (f(x + 0.5L * h) - f(x - 0.5L * h)) / h;
  return (4.0L * fine - coarse) / 3.0L;
}

template <typename F>
long double central_d2(F&& f, long double x, long double h) {
  const long double middle = f(x);
  const long double coarse = (f(x + h) - 2.0L * middle + f(x - h)) / (h * h);
  const long double fine =
      (f(x + 0.5L * h) - 2.0L * middle + f(x - 0.5L * h)) / (0.25L * h * h);
  return (4.0L * fine - coarse) / 3.0L;
}

}  // namespace

TEST_SUITE("transport") {

TEST_CASE("loop functions: closed points, identity, periodicity, guard") {
  const double d = 0.7;
  CHECK(std::abs(kno::loop_g(0.5 * d, d)) < 1e-14);
  CHECK(kno::loop_g(0.25 * d, d) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kno::loop_l(0.5 * d, d) ==
        doctest::Approx(std::numbers::pi / d).epsilon(1e-14));

  kno::RandomStream stream(41);
  int sampled = 0;
  while (sampled < 1000) {
    const double e = (stream.uniform() - 0.5) * 10.0;
    const double q = e / d;
    if (std::abs(q - std::round(q)) < 1e-3) continue;
    ++sampled;
    const double g = kno::loop_g(e, d);
    const double l = kno::loop_l(e, d);
    REQUIRE(l >= std::numbers::pi / d);
    REQUIRE(std::abs(l - (std::numbers::pi / d) * (1.0 + g * g)) <=
            1e-12 * l);
    if (std::abs(q - std::round(q)) > 0.05) {
      REQUIRE(std::abs(kno::loop_g(e + d, d) - g) < 1e-11);
    }
  }

  CHECK_THROWS_AS(kno::loop_g(5.0 * d + 1e-13 * d, d), std::domain_error);
  CHECK_THROWS_AS(kno::loop_l(0.0, d), std::domain_error);
  CHECK_THROWS_AS(kno::loop_g(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("secular roots: one per lattice cell, spacing, residual") {
  const DoorwayParams p = narrow_doorway();
  const double lo = -5.03;
  const double hi = 5.01;
  const std::vector<double> roots = kno::fine_structure_roots(p, lo, hi);

  // Window covers ~100.4 lattice cells; count can differ by the edge cells.
  CHECK(roots.size() >= 99);
  CHECK(roots.size() <= 102);

  long long previous_cell = -1000000;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    const double root = roots[i];
    REQUIRE(root >= lo);
    REQUIRE(root <= hi);
    if (i > 0) REQUIRE(root > roots[i - 1]);
    // strictly inside its own inter-pole cell, at most one per cell
    const long long cell = static_cast<long long>(std::floor(root / p.d));
    REQUIRE(cell > previous_cell);
    previous_cell = cell;
    REQUIRE(root - cell * p.d > 0.0);
    REQUIRE((cell + 1) * p.d - root > 0.0);
    // converged: the secular equation balances to bisection accuracy
    const double residual =
        root - p.e_res - 0.5 * p.gamma_s * kno::loop_g(root, p.d);
    REQUIRE(std::abs(residual) < 1e-9);
  }

  // Near the resonance the roots are laid out one per cell, spacing ~ d.
  std::vector<double> near;
  for (double root : roots) {
    if (std::abs(root - p.e_res) <= p.gamma_s) near.push_back(root);
  }
  REQUIRE(near.size() >= 10);
  for (std::size_t i = 1; i < near.size(); ++i) {
    const double gap = near[i] - near[i - 1];
    REQUIRE(gap > 0.9 * p.d);
    REQUIRE(gap < 1.1 * p.d);
  }

  DoorwayParams decoupled = p;
  decoupled.gamma_s = 0.0;
  CHECK_THROWS_AS(kno::fine_structure_roots(decoupled, lo, hi),
                  std::invalid_argument);
  CHECK_THROWS_AS(kno::fine_structure_roots(p, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("fine cross section: decoupled limit and resonance peaks") {
  DoorwayParams p;
  p.e_res = 0.0;
  p.gamma_channels = {0.01, 0.02};
  p.lead1_count = 1;
  p.gamma_s = 1.0;
  p.d = 0.05;
  const double gamma = kno::total_width(p);

  DoorwayParams decoupled = p;
  decoupled.gamma_s = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double e = -0.4 + 0.043 * i;
    const double expected =
        p.gamma_channels[0] * p.gamma_channels[1] /
        (e * e + 0.25 * gamma * gamma);
    REQUIRE(kno::cross_section_fine(e, decoupled, 0, 1) ==
            doctest::Approx(expected).epsilon(1e-14));
  }

  // At every secular root the resonant bracket vanishes, so the cross
  // section touches its unitarity ceiling.
  const double peak =
      4.0 * p.gamma_channels[0] * p.gamma_channels[1] / (gamma * gamma);
  for (double root : kno::fine_structure_roots(p, -0.6, 0.6)) {
    REQUIRE(kno::cross_section_fine(root, p, 0, 1) ==
            doctest::Approx(peak).epsilon(1e-9));
  }
  CHECK(kno::cross_section_fine(0.012, p, 0, 1) ==
        kno::cross_section_fine(0.012, p, 1, 0));
  CHECK_THROWS_AS(kno::cross_section_fine(0.012, p, 0, 2),
                  std::invalid_argument);
}

TEST_CASE("wigner delay: decoupled limit, positivity, finite pole limit") {
  DoorwayParams p;
  p.e_res = 0.0;
  p.gamma_channels = {0.05, 0.05};
  p.lead1_count = 1;
  p.gamma_s = 0.8;
  p.d = 0.04;
  const double gamma = kno::total_width(p);

  DoorwayParams decoupled = p;
  decoupled.gamma_s = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double e = -0.3 + 0.031 * i;
    REQUIRE(kno::wigner_delay_fine(e, decoupled) ==
            doctest::Approx(gamma / (e * e + 0.25 * gamma * gamma))
                .epsilon(1e-14));
  }

  for (int i = 0; i < 1000; ++i) {
    const double e = -3.0 * p.d + 6.0 * p.d * (i + 0.5) / 1000.0;
    const double q = e / p.d;
    if (std::abs(q - std::round(q)) < 1e-3) continue;
    REQUIRE(kno::wigner_delay_fine(e, p) > 0.0);
  }

  // Approaching a background pole the enhancement and the suppression of
  // the cross section balance to a finite delay 2 pi Gamma / (d gamma_s).
  const double limit = 2.0 * std::numbers::pi * gamma / (p.d * p.gamma_s);
  CHECK(kno::wigner_delay_fine(1e-8 * p.d, p) ==
        doctest::Approx(limit).epsilon(0.01));
}

TEST_CASE("one-period averages reproduce the smoothed closed forms") {
  // Finite level spacing leaves an O(d) remainder in both averages (the
  // window straddles one background cell), so d is chosen well inside the
  // dense-spectrum regime relative to the resonance widths.
  struct Setup {
    double gamma_a, gamma_b, gamma_s, d;
  };
  for (const Setup& s :
       {Setup{0.3, 0.2, 1.0, 0.002}, Setup{0.1, 0.1, 3.0, 0.0005}}) {
    DoorwayParams p;
    p.e_res = 0.0;
    p.gamma_channels = {s.gamma_a, s.gamma_b};
    p.lead1_count = 1;
    p.gamma_s = s.gamma_s;
    p.d = s.d;

    const double cross_avg =
        oracle::midpoint(
            [&](double e) { return kno::cross_section_fine(e, p, 0, 1); },
            -0.5 * p.d, 0.5 * p.d, 100000) /
        p.d;
    const double cross_closed = kno::averaged_cross_section(0.0, p, 0, 1).total;
    REQUIRE(std::abs(cross_avg / cross_closed - 1.0) < 5e-3);

    const double delay_avg =
        oracle::midpoint(
            [&](double e) { return kno::wigner_delay_fine(e, p); },
            -0.5 * p.d, 0.5 * p.d, 100000) /
        p.d;
    const double delay_closed = kno::averaged_delay(0.0, p);
    REQUIRE(std::abs(delay_avg / delay_closed - 1.0) < 5e-3);
  }
}

TEST_CASE("fine delay integrates to exactly one sojourn time per cell") {
  // The enhancement bracket in the fine delay is the exact derivative of
  // the secular variable y = E - e_res - (gamma_s/2) cot(pi E / d), so the
  // integral over any pole-to-pole cell is Gamma * int dy / (y^2 +
  // Gamma^2/4) = 2 pi, independent of every parameter. This pins the
  // normalization of the delay against the background level density.
  DoorwayParams p;
  p.e_res = 0.13;
  p.gamma_channels = {0.21, 0.17};
  p.lead1_count = 1;
  p.gamma_s = 0.9;
  p.d = 0.05;
  for (int cell : {-7, 0, 2, 31}) {
    const double integral = oracle::midpoint(
        [&](double e) { return kno::wigner_delay_fine(e, p); }, cell * p.d,
        (cell + 1) * p.d, 200000);
    REQUIRE(integral ==
            doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-6));
  }
}

TEST_CASE("smoothed closed forms: structure and end points") {
  DoorwayParams p;
  p.e_res = 0.4;
  p.gamma_channels = {0.3, 0.2};
  p.lead1_count = 1;
  p.gamma_s = 1.5;
  p.d = 0.01;
  const double gamma = kno::total_width(p);

  for (double e : {-1.0, 0.1, 0.4, 2.0}) {
    const kno::AveragedCrossSection parts =
        kno::averaged_cross_section(e, p, 0, 1);
    REQUIRE(parts.direct / parts.re_emitted ==
            doctest::Approx(gamma / p.gamma_s).epsilon(1e-14));
    REQUIRE(parts.total ==
            doctest::Approx(parts.direct + parts.re_emitted).epsilon(1e-15));
  }

  DoorwayParams decoupled = p;
  decoupled.gamma_s = 0.0;
  const kno::AveragedCrossSection bw =
      kno::averaged_cross_section(0.4, decoupled, 0, 1);
  CHECK(bw.re_emitted == 0.0);
  CHECK(bw.total == doctest::Approx(4.0 * 0.3 * 0.2 / (gamma * gamma))
                        .epsilon(1e-14));

  const double sojourn = 2.0 * std::numbers::pi / p.d;
  CHECK(kno::averaged_delay(p.e_res, p) ==
        doctest::Approx(4.0 / (gamma + p.gamma_s) + sojourn).epsilon(1e-14));
  CHECK(kno::averaged_delay(p.e_res + 50.0 * (gamma + p.gamma_s), p) ==
        doctest::Approx(sojourn).epsilon(1e-3));
}

TEST_CASE("absorption parameter: hyperbolic identity and limits") {
  const double d = 0.37;
  const AbsorptionParams none = kno::kappa_of(0.0, d);
  CHECK(none.xi == 0.0);
  CHECK(none.kappa == 0.0);

  for (double gamma_e : {1e-4, 0.002, 0.02, 0.1, 0.5, 1.0, 3.0}) {
    const AbsorptionParams abs = kno::kappa_of(gamma_e, d);
    REQUIRE(abs.xi >= 0.0);
    REQUIRE(abs.xi < 1.0);
    // tau_d Gamma_e with tau_d = 2 pi / d
    const double exponent = 2.0 * std::numbers::pi * gamma_e / d;
    REQUIRE(std::abs(abs.kappa - std::expm1(exponent)) <=
            1e-12 * std::expm1(exponent));
  }

  // kappa ~ tau_d gamma_e to first order; 1% boundary sits at 0.02.
  {
    const double d_unit = 2.0 * std::numbers::pi;  // tau_d = 1
    const AbsorptionParams at_boundary = kno::kappa_of(0.02, d_unit);
    CHECK(std::abs(at_boundary.kappa / 0.02 - 1.0) < 0.0101);
    const AbsorptionParams well_below = kno::kappa_of(0.002, d_unit);
    CHECK(std::abs(well_below.kappa / 0.002 - 1.0) < 0.00101);
  }

  for (double kappa : {0.0, 0.03, 1.0, 40.0}) {
    const AbsorptionParams abs = kno::absorption_from_kappa(kappa, d);
    REQUIRE(std::abs(abs.kappa - kappa) <= 1e-12 * (1.0 + kappa));
  }
  CHECK_THROWS_AS(kno::kappa_of(-0.1, d), std::invalid_argument);
  CHECK_THROWS_AS(kno::absorption_from_kappa(-1.0, d), std::invalid_argument);
}

TEST_CASE("conductance: composition, unit peak, absorption suppression") {
  DoorwayParams p;
  p.e_res = 0.2;
  p.gamma_channels = {0.004, 0.003, 0.003};
  p.lead1_count = 1;
  p.gamma_s = 1.0;
  p.d = 0.02;
  const double gamma = kno::total_width(p);
  const double gamma_1 = kno::lead_width(p, 1);
  const double gamma_2 = kno::lead_width(p, 2);
  CHECK(gamma_1 == doctest::Approx(0.004).epsilon(1e-15));
  CHECK(gamma_2 == doctest::Approx(0.006).epsilon(1e-15));

  // kappa = 0 keeps the bare background probabilities.
  const AbsorptionParams clean = kno::kappa_of(0.0, p.d);
  for (double e : {0.05, 0.2, 0.31}) {
    const Conductance g = kno::conductance(e, p, clean);
    const double shift = e - p.e_res;
    const double lambda =
        shift * shift + 0.25 * (gamma + p.gamma_s) * (gamma + p.gamma_s);
    REQUIRE(g.t_1s ==
            doctest::Approx(p.gamma_s * gamma_1 / lambda).epsilon(1e-14));
    REQUIRE(g.t_s2 ==
            doctest::Approx(p.gamma_s * gamma_2 / lambda).epsilon(1e-14));
    REQUIRE(g.total == doctest::Approx(g.t_12 + g.t_1s * g.t_s2 /
                                                    (g.t_1s + g.t_s2))
                           .epsilon(1e-14));
  }

  // Fully decoupled background at resonance: unit-transmission peak.
  DoorwayParams bare = p;
  bare.gamma_s = 0.0;
  const Conductance peak = kno::conductance(p.e_res, bare, clean);
  CHECK(peak.total ==
        doctest::Approx(4.0 * gamma_1 * gamma_2 / (gamma * gamma))
            .epsilon(1e-13));
  CHECK(peak.t_1s == 0.0);
  CHECK(peak.t_s2 == 0.0);

  // Narrow resonance, growing absorption: background transmission obeys
  // the 4 Gamma_k / gamma_s ceiling and G stays non-negative, decreasing.
  const double kappa_c =
      4.0 * gamma * p.gamma_s / ((gamma + p.gamma_s) * (gamma + p.gamma_s));
  double last_total = -1.0;
  bool first = true;
  for (double factor : {1.0, 2.0, 5.0, 25.0, 100.0, 1000.0}) {
    const AbsorptionParams abs =
        kno::absorption_from_kappa(factor * kappa_c, p.d);
    const Conductance g = kno::conductance(p.e_res, p, abs);
    REQUIRE(g.t_1s <= 4.0 * gamma_1 / p.gamma_s * 1.1);
    REQUIRE(g.t_s2 <= 4.0 * gamma_2 / p.gamma_s * 1.1);
    REQUIRE(g.total >= 0.0);
    if (!first) REQUIRE(g.total <= last_total + 1e-15);
    last_total = g.total;
    first = false;
  }
}

TEST_CASE("resonance denominator with absorption: limits and damping floor") {
  const DoorwayParams p = narrow_doorway();
  const double gamma = kno::total_width(p);

  // xi = 0: plain secular form.
  const AbsorptionParams clean = kno::kappa_of(0.0, p.d);
  for (double e : {-0.42, 0.012, 0.73}) {
    const std::complex<double> den = kno::resonant_denominator(e, p, clean);
    const double eta = kno::loop_g(e, p.d);
    REQUIRE(den.real() ==
            doctest::Approx(e - p.e_res - 0.5 * p.gamma_s * eta)
                .epsilon(1e-14));
    REQUIRE(den.imag() == doctest::Approx(0.5 * gamma).epsilon(1e-14));
  }

  // xi -> 1: background fully smoothed into one broadened resonance.
  AbsorptionParams opaque;
  opaque.xi = 1.0 - 1e-12;
  opaque.kappa = 4.0 * opaque.xi / ((1.0 - opaque.xi) * (1.0 - opaque.xi));
  for (double e : {-0.42, 0.012, 0.73}) {
    const std::complex<double> den = kno::resonant_denominator(e, p, opaque);
    REQUIRE(std::abs(den.real() - (e - p.e_res)) < 1e-9);
    REQUIRE(std::abs(den.imag() - 0.5 * (gamma + p.gamma_s)) < 1e-9);
  }

  for (double xi : {0.0, 0.3, 0.9, 0.99}) {
    AbsorptionParams abs;
    abs.xi = xi;
    for (int i = 0; i < 400; ++i) {
      const double e = -2.0 + 4.0 * (i + 0.5) / 400.0;
      if (std::abs(e / p.d - std::round(e / p.d)) < 1e-3) continue;
      REQUIRE(kno::resonant_denominator(e, p, abs).imag() >=
              0.5 * gamma - 1e-12);
    }
  }
  CHECK_THROWS_AS(kno::resonant_denominator(2.0 * p.d, p, clean),
                  std::domain_error);
}

TEST_CASE("ensemble-averaged correction: exact moments of the width weight") {
  DeltaSigmaParams p;
  p.gamma_s = 3.0;
  p.m = 6;
  p.t_h = 2.0;
  p.gamma_w = kno::weisskopf_width(p.m, 2.0 * std::numbers::pi / p.t_h);
  CHECK(p.gamma_w == doctest::Approx(p.m / p.t_h).epsilon(1e-15));

  // kappa = 0: correction vanishes identically, baseline is the weighted
  // 1/Gamma moment.
  p.kappa = 0.0;
  p.ensemble = Ensemble::gue;
  kno::DeltaSigma gue = kno::delta_sigma(p);
  CHECK(gue.correction == 0.0);
  CHECK(gue.baseline == doctest::Approx(1.0 / p.gamma_w).epsilon(1e-15));
  p.ensemble = Ensemble::goe;
  kno::DeltaSigma goe = kno::delta_sigma(p);
  CHECK(goe.correction == 0.0);
  {
    const double w = p.gamma_w;
    const double expected = 1.0 / w - 2.0 / (p.t_h * w * w) +
                            p.m / (p.t_h * p.t_h * w * w * w);
    CHECK(goe.baseline == doctest::Approx(expected).epsilon(1e-14));
  }

  // kappa > 0: GUE evaluates the integrand at the Weisskopf width; GOE adds
  // first and second derivative terms, checked against Richardson
  // differences of an independently written integrand.
  p.kappa = 0.8;
  const auto integrand = [&](double g) {
    const double r =
        g + 0.25 * p.kappa / p.gamma_s * (g + p.gamma_s) * (g + p.gamma_s);
    return -0.5 * std::sqrt(p.kappa * p.gamma_s) / (g * std::sqrt(r));
  };
  p.ensemble = Ensemble::gue;
  gue = kno::delta_sigma(p);
  REQUIRE(gue.correction ==
          doctest::Approx(integrand(p.gamma_w)).epsilon(1e-14));
  p.ensemble = Ensemble::goe;
  goe = kno::delta_sigma(p);
  {
    const double h = 3e-3 * p.gamma_w;
    const double expected =
        integrand(p.gamma_w) +
        (2.0 / p.t_h) * oracle::richardson_d1(integrand, p.gamma_w, h) +
        (0.5 * p.m / (p.t_h * p.t_h)) *
            oracle::richardson_d2(integrand, p.gamma_w, h);
    REQUIRE(std::abs(goe.correction - expected) <= 1e-8 * std::abs(expected));
  }

  // Strong absorption: kappa drops out and the integrand collapses to
  // gamma_s / (Gamma (Gamma + gamma_s)) = 1/Gamma - 1/(Gamma+gamma_s).
  const double kappa_star = 4.0 * p.gamma_s * p.gamma_w /
                            ((p.gamma_s + p.gamma_w) * (p.gamma_s + p.gamma_w));
  const auto collapsed = [&](double g) { return 1.0 / g - 1.0 / (g + p.gamma_s); };
  const auto collapsed_d1 = [&](double g) {
    return -1.0 / (g * g) + 1.0 / ((g + p.gamma_s) * (g + p.gamma_s));
  };
  const auto collapsed_d2 = [&](double g) {
    return 2.0 / (g * g * g) -
           2.0 / ((g + p.gamma_s) * (g + p.gamma_s) * (g + p.gamma_s));
  };
  for (double factor : {100.0, 1e4}) {
    const double bar = factor == 100.0 ? 0.01 : 1e-3;
    p.kappa = factor * kappa_star;
    p.ensemble = Ensemble::gue;
    const double gue_limit = -collapsed(p.gamma_w);
    REQUIRE(std::abs(kno::delta_sigma(p).correction / gue_limit - 1.0) < bar);
    p.ensemble = Ensemble::goe;
    const double goe_limit =
        -(collapsed(p.gamma_w) + (2.0 / p.t_h) * collapsed_d1(p.gamma_w) +
          (0.5 * p.m / (p.t_h * p.t_h)) * collapsed_d2(p.gamma_w));
    REQUIRE(std::abs(kno::delta_sigma(p).correction / goe_limit - 1.0) < bar);
  }

  DeltaSigmaParams bad = p;
  bad.m = 1;
  CHECK_THROWS_AS(kno::delta_sigma(bad), std::invalid_argument);
  bad = p;
  bad.kappa = -0.5;
  CHECK_THROWS_AS(kno::delta_sigma(bad), std::invalid_argument);
}

TEST_CASE("weak localization: closed-form derivatives match finite differences") {
  const double kappas[] = {1e-2, 0.1, 1.0, 10.0, 1e3};
  const double gammas[] = {5.0, 25.0, 64.0, 200.0};
  const int ms[] = {2, 3, 4, 7, 12};
  for (double kappa : kappas) {
    for (double gamma_s : gammas) {
      for (int m : ms) {
        WeakLocParams w;
        w.m1 = m / 2;
        if (w.m1 == 0) w.m1 = 1;
        w.m2 = m - w.m1;
        w.gamma_s = gamma_s;
        w.kappa = kappa;
        const double lib = kno::weak_localization(w);

        const auto phi = [&](long double mu) {
          return coherence_bracket(mu, kappa, gamma_s);
        };
        const long double mu = m;
        const long double h = 1e-3L * mu;
        const double fd = static_cast<double>(
            w.m1 * w.m2 *
            (2.0L * central_d1(phi, mu, h) + 0.5L * mu * central_d2(phi, mu, h)));
        REQUIRE(std::abs(lib - fd) <= 1e-8 * std::abs(fd));
      }
    }
  }
}

TEST_CASE("weak localization: clean and opaque limits, monotone suppression") {
  // kappa = 0: the bracket degenerates to 1/mu; compare against finite
  // differences of that bare profile (value computed, not quoted).
  for (int m : {2, 4, 9}) {
    WeakLocParams w;
    w.m1 = 1;
    w.m2 = m - 1;
    w.gamma_s = 25.0;
    w.kappa = 0.0;
    const auto bare = [](long double mu) { return 1.0L / mu; };
    const long double mu = m;
    const long double h = 1e-3L * mu;
    const double fd = static_cast<double>(
        w.m1 * w.m2 *
        (2.0L * central_d1(bare, mu, h) + 0.5L * mu * central_d2(bare, mu, h)));
    REQUIRE(std::abs(kno::weak_localization(w) - fd) <= 1e-10 * std::abs(fd));
  }

  // Large kappa: the bracket collapses to 1/(mu + gamma_s).
  for (double gamma_s : {25.0, 64.0}) {
    WeakLocParams w;
    w.m1 = 2;
    w.m2 = 2;
    w.gamma_s = gamma_s;
    const double m = 4.0;
    const double collapse =
        w.m1 * w.m2 *
        (-2.0 / ((m + gamma_s) * (m + gamma_s)) +
         m / ((m + gamma_s) * (m + gamma_s) * (m + gamma_s)));
    w.kappa = 1e4;
    REQUIRE(std::abs(kno::weak_localization(w) / collapse - 1.0) < 0.01);
    w.kappa = 1e8;
    REQUIRE(std::abs(kno::weak_localization(w) / collapse - 1.0) < 1e-4);
  }

  // |dG| shrinks monotonically with absorption on a 200-point log grid.
  for (double gamma_s : {25.0, 64.0}) {
    WeakLocParams w;
    w.m1 = 2;
    w.m2 = 2;
    w.gamma_s = gamma_s;
    double previous = 0.0;
    for (int i = 0; i < 200; ++i) {
      w.kappa = std::pow(10.0, -2.0 + 5.0 * i / 199.0);
      const double magnitude = std::abs(kno::weak_localization(w));
      if (i > 0) REQUIRE(magnitude <= previous + 1e-14);
      previous = magnitude;
    }
  }

  WeakLocParams bad;
  bad.m1 = 0;
  CHECK_THROWS_AS(kno::weak_localization(bad), std::invalid_argument);
  bad = WeakLocParams{};
  bad.gamma_s = 0.0;
  CHECK_THROWS_AS(kno::weak_localization(bad), std::invalid_argument);
  bad = WeakLocParams{};
  bad.kappa = -1.0;
  CHECK_THROWS_AS(kno::weak_localization(bad), std::invalid_argument);
}

TEST_CASE("ensemble difference of averaged transmission = weak localization") {
  // The GUE/GOE difference of delta_sigma totals, scaled by the channel
  // factor -m1 m2 / t_h, must reproduce weak_localization at every kappa:
  // both sides are the same width-weight moments composed differently.
  for (double t_h : {1.0, 2.0 * std::numbers::pi}) {
    for (double kappa : {0.0, 0.37, 12.0}) {
      const int m1 = 2;
      const int m2 = 2;
      const double gamma_s_dimless = 25.0;

      DeltaSigmaParams p;
      p.kappa = kappa;
      p.gamma_s = gamma_s_dimless / t_h;
      p.m = m1 + m2;
      p.t_h = t_h;
      p.gamma_w = kno::weisskopf_width(p.m, 2.0 * std::numbers::pi / t_h);
      p.ensemble = Ensemble::gue;
      const double gue_total = kno::delta_sigma(p).total;
      p.ensemble = Ensemble::goe;
      const double goe_total = kno::delta_sigma(p).total;

      WeakLocParams w;
      w.m1 = m1;
      w.m2 = m2;
      w.gamma_s = gamma_s_dimless;
      w.kappa = kappa;
      const double direct = kno::weak_localization(w);
      const double composed = -(m1 * m2 / t_h) * (gue_total - goe_total);
      REQUIRE(std::abs(direct - composed) <= 1e-10 * std::abs(direct));
    }
  }
}

}  // TEST_SUITE
