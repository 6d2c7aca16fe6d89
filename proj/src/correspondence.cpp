#include "kno/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kno {

namespace {

constexpr int kGridHalf = 1000;  // 2001 points, +-1.5 amplitudes
constexpr double kGridSpan = 1.5;

void validate_well(const WellSpec& well, int n) {
  if (!(well.mass > 0.0) || !(well.omega > 0.0) || !(well.hbar > 0.0)) {
    throw std::invalid_argument("well parameters must all be positive");
  }
  if (n < 0) throw std::invalid_argument("level must be >= 0");
}

// Sign-symmetric uniform grid: x[j] = (j - kGridHalf) * h exactly, so
// x[2N - j] == -x[j] bit for bit.
RealVector symmetric_grid(double amplitude) {
  const double h = kGridSpan * amplitude / kGridHalf;
  RealVector x(2 * kGridHalf + 1);
  for (int j = 0; j <= 2 * kGridHalf; ++j) x(j) = (j - kGridHalf) * h;
  return x;
}

// Normalized Hermite functions h_0..h_n at one point; returns h_n. The
// recurrence works on O(1) quantities, so the only loss channel is the
// harmless underflow of the far Gaussian tail.
double hermite_function(int n, double xi) {
  const double gaussian =
      std::exp(-0.5 * xi * xi) / std::pow(std::numbers::pi, 0.25);
  if (n == 0) return gaussian;
  double below = gaussian;
  double current = std::numbers::sqrt2 * xi * gaussian;
  for (int k = 1; k < n; ++k) {
    const double next = xi * std::sqrt(2.0 / (k + 1)) * current -
                        std::sqrt(double(k) / (k + 1)) * below;
    below = current;
    current = next;
  }
  return current;
}

}  // namespace

double turning_amplitude(const WellSpec& well, int n) {
  validate_well(well, n);
  return std::sqrt((2.0 * n + 1.0) * well.hbar / (well.mass * well.omega));
}

GridDensity classical_density(const WellSpec& well, int n) {
  const double amplitude = turning_amplitude(well, n);
  GridDensity result;
  result.x = symmetric_grid(amplitude);
  result.density.setZero(result.x.size());
  const double h = result.x(1) - result.x(0);
  // Cell average of the arcsine law: the antiderivative is arcsin(x/A)/pi,
  // clamped at the turning points, so the grid sum telescopes to exactly 1.
  const auto cumulative = [&](double x) {
    const double u = std::clamp(x / amplitude, -1.0, 1.0);
    return std::asin(u) / std::numbers::pi;
  };
  for (int j = 0; j < result.x.size(); ++j) {
    const double x = result.x(j);
    if (std::abs(x) - 0.5 * h > amplitude) continue;
    result.density(j) =
        (cumulative(x + 0.5 * h) - cumulative(x - 0.5 * h)) / h;
  }
  return result;
}

GridDensity quantum_density(const WellSpec& well, int n) {
  validate_well(well, n);
  if (n > 10000) {
    throw std::invalid_argument("quantum_density: level above 10^4");
  }
  const double amplitude = turning_amplitude(well, n);
  const double inv_length = std::sqrt(well.mass * well.omega / well.hbar);
  GridDensity result;
  result.x = symmetric_grid(amplitude);
  result.density.resize(result.x.size());
  for (int j = 0; j < result.x.size(); ++j) {
    const double value = hermite_function(n, result.x(j) * inv_length);
    result.density(j) = inv_length * value * value;
  }
  return result;
}

GridDensity mixed_density(const WellSpec& well, int n_center, int dn) {
  validate_well(well, n_center);
  if (dn < 0 || n_center - dn < 0) {
    throw std::invalid_argument(
        "mixed_density: need dn >= 0 and n_center - dn >= 0");
  }
  const double amplitude = turning_amplitude(well, n_center);
  const double inv_length = std::sqrt(well.mass * well.omega / well.hbar);
  GridDensity result;
  result.x = symmetric_grid(amplitude);
  result.density.setZero(result.x.size());
  const double weight = 1.0 / (2.0 * dn + 1.0);
  // One recurrence pass per point accumulates every level in the window.
  for (int j = 0; j < result.x.size(); ++j) {
    const double xi = result.x(j) * inv_length;
    double below = 0.0;
    double current = std::exp(-0.5 * xi * xi) /
                     std::pow(std::numbers::pi, 0.25);
    double sum = n_center - dn == 0 ? current * current : 0.0;
    for (int k = 1; k <= n_center + dn; ++k) {
      const double next = xi * std::sqrt(2.0 / k) * current -
                          std::sqrt((k - 1.0) / k) * below;
      below = current;
      current = next;
      if (k >= n_center - dn) sum += current * current;
    }
    result.density(j) = weight * inv_length * sum;
  }
  return result;
}

GridDensity boxcar_smoothed_density(const WellSpec& well, int n) {
  GridDensity raw = quantum_density(well, n);
  const double amplitude = turning_amplitude(well, n);
  const double h = raw.x(1) - raw.x(0);
  const int count = static_cast<int>(raw.x.size());
  GridDensity result;
  result.x = raw.x;
  result.density = raw.density;
  for (int j = 0; j < count; ++j) {
    const double x = raw.x(j);
    if (std::abs(x) >= amplitude) continue;
    const double momentum =
        well.mass * well.omega * std::sqrt(amplitude * amplitude - x * x);
    const double half_width = 0.5 * std::numbers::pi * well.hbar / momentum;
    const int reach = static_cast<int>(std::floor(half_width / h));
    const int lo = std::max(0, j - reach);
    const int hi = std::min(count - 1, j + reach);
    result.density(j) =
        raw.density.segment(lo, hi - lo + 1).mean();
  }
  // Clipped windows shave mass near the turning points where the window
  // widens; rescale so the trapezoid integral is 1 again.
  const double mass =
      h * (result.density.sum() -
           0.5 * (result.density(0) + result.density(count - 1)));
  result.density /= mass;
  return result;
}

}  // namespace kno
