#include "kno/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace kno {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  // seed_seq expansion is fully specified by the standard, so the draw
  // sequence is reproducible across platforms for a given (seed, stream).
  std::seed_seq sequence{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(sequence);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - u is in (0, 1], so the logarithm is finite.
  const double r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
  const double phi = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(phi);
  have_spare_ = true;
  return r * std::cos(phi);
}

RandomStream RandomStream::fork(std::uint64_t child) const {
  return RandomStream(seed_, splitmix64(stream_ * kGolden + child + 1));
}

double gaussian_draw(RandomStream& stream) { return stream.gaussian(); }

Eigensystem hermitian_eigensystem(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("hermitian_eigensystem: matrix is not square");
  }
  const double asymmetry = (a - a.adjoint()).cwiseAbs().maxCoeff();
  if (asymmetry > 1e-12) {
    std::ostringstream msg;
    msg << "hermitian_eigensystem: input asymmetry " << asymmetry
        << " exceeds tolerance 1e-12";
    throw std::invalid_argument(msg.str());
  }
  // Symmetrize the sub-tolerance asymmetry away before decomposing.
  const ComplexMatrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eigensystem: decomposition failed");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

ComplexMatrix displacement_matrix(Complex eta, int n_max) {
  if (n_max < 2) {
    throw std::invalid_argument("displacement_matrix: n_max must be >= 2");
  }
  // Generator G = eta a† - eta* a is anti-Hermitian; H = -iG is Hermitian
  // tridiagonal with H(n+1,n) = -i eta sqrt(n+1) and zero diagonal.
  // exp(G) = V e^{i lambda} V† is unitary on the truncated space regardless
  // of where the truncation cuts. A diagonal phase similarity makes the
  // subdiagonal real positive, so the eigenproblem is real symmetric
  // tridiagonal — far cheaper than a dense Hermitian solve.
  if (std::abs(eta) == 0.0) {
    return ComplexMatrix::Identity(n_max, n_max);
  }
  RealVector diag = RealVector::Zero(n_max);
  RealVector sub(n_max - 1);
  for (int n = 0; n + 1 < n_max; ++n) sub(n) = std::abs(eta) * std::sqrt(double(n + 1));
  Eigen::SelfAdjointEigenSolver<RealMatrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("displacement_matrix: tridiagonal decomposition failed");
  }
  // H = P† T P with P = diag(e^{i phi_n}), phi_n = n (pi/2 - arg eta).
  const double phi = 0.5 * std::numbers::pi - std::arg(eta);
  ComplexVector row_phase(n_max);
  for (int i = 0; i < n_max; ++i) row_phase(i) = std::polar(1.0, -phi * double(i));
  ComplexMatrix m = row_phase.asDiagonal() * solver.eigenvectors().cast<Complex>();
  ComplexVector phases(n_max);
  for (int k = 0; k < n_max; ++k) phases(k) = std::polar(1.0, solver.eigenvalues()(k));
  return m * phases.asDiagonal() * m.adjoint();
}

int matrix_bandwidth(const ComplexMatrix& a, double cutoff) {
  const int n = static_cast<int>(a.rows());
  int band = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (std::abs(i - j) > band && std::abs(a(i, j)) > cutoff) {
        band = std::abs(i - j);
      }
    }
  }
  return band;
}

void banded_product(const ComplexMatrix& a, int band_a, const ComplexMatrix& b,
                    int band_b, int support, ComplexMatrix& c) {
  const int n = static_cast<int>(a.rows());
  if (b.rows() != n || b.cols() != n) {
    throw std::invalid_argument("banded_product: operand shapes differ");
  }
  if (c.rows() != n || c.cols() != n) {
    c.setZero(n, n);
  }
  const int s = std::clamp(support, 0, n);
  if (s == 0) return;
  c.topLeftCorner(s, s).setZero();
  if (band_a >= s - 1 && band_b >= s - 1) {
    c.topLeftCorner(s, s).noalias() =
        a.topLeftCorner(s, s) * b.topLeftCorner(s, s);
    return;
  }
  constexpr int kPanel = 160;
  for (int j0 = 0; j0 < s; j0 += kPanel) {
    const int j1 = std::min(s, j0 + kPanel);
    // Rows of B that can be nonzero for these columns.
    const int rb0 = std::max(0, j0 - band_b);
    const int rb1 = std::min(s, j1 + band_b);
    if (rb0 >= rb1) continue;
    // Rows of A reachable from those B rows.
    const int ra0 = std::max(0, rb0 - band_a);
    const int ra1 = std::min(s, rb1 + band_a);
    if (ra0 >= ra1) continue;
    c.block(ra0, j0, ra1 - ra0, j1 - j0).noalias() =
        a.block(ra0, rb0, ra1 - ra0, rb1 - rb0) *
        b.block(rb0, j0, rb1 - rb0, j1 - j0);
  }
}

int conjugate_by_banded(const ComplexMatrix& a, int band_a,
                        const ComplexMatrix& b, int support,
                        ComplexMatrix& scratch, ComplexMatrix& out) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || b.rows() != n || b.cols() != n) {
    throw std::invalid_argument("conjugate_by_banded: operand shapes differ");
  }
  const int s = std::clamp(support, 0, n);
  const int band = std::clamp(band_a, 0, n > 0 ? n - 1 : 0);
  const int s2 = std::min(n, s + band);
  if (scratch.rows() != n || scratch.cols() != n) scratch.setZero(n, n);
  if (out.rows() != n || out.cols() != n) out.setZero(n, n);
  if (s == 0) return 0;
  constexpr int kChunk = 192;
  // scratch[0:s2, 0:s] = A[0:s2, 0:s] * B[0:s, 0:s] in row chunks; each
  // chunk touches only the A columns its band can reach.
  for (int r0 = 0; r0 < s2; r0 += kChunk) {
    const int r1 = std::min(s2, r0 + kChunk);
    const int k0 = std::max(0, r0 - band);
    const int k1 = std::min(s, r1 + band);
    scratch.block(r0, 0, r1 - r0, s).noalias() =
        a.block(r0, k0, r1 - r0, k1 - k0) * b.block(k0, 0, k1 - k0, s);
  }
  // out[0:s2, 0:s2] = scratch[0:s2, 0:s] * A[0:s2, 0:s]† in column chunks.
  for (int c0 = 0; c0 < s2; c0 += kChunk) {
    const int c1 = std::min(s2, c0 + kChunk);
    const int k0 = std::max(0, c0 - band);
    const int k1 = std::min(s, c1 + band);
    out.block(0, c0, s2, c1 - c0).noalias() =
        scratch.block(0, k0, s2, k1 - k0) *
        a.block(c0, k0, c1 - c0, k1 - k0).adjoint();
  }
  return s2;
}

}  // namespace kno
