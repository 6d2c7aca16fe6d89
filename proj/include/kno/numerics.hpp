#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>

namespace kno {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Deterministic pseudo-random stream identified by (seed, stream).
/// Identical (seed, stream) pairs reproduce identical draw sequences;
/// distinct stream indices give statistically independent sequences.
/// The Gaussian transform is an explicit Box-Muller so the sequence is
/// fixed by this code, not by the standard library implementation.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal variate.
  double gaussian();

  /// Child stream addressed by index; independent of draw position.
  RandomStream fork(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Standard normal variate drawn from the stream.
double gaussian_draw(RandomStream& stream);

struct Eigensystem {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // unitary, columns match values
};

/// Eigendecomposition of a Hermitian matrix. The input must be Hermitian
/// within 1e-12 in max |A_ij - conj(A_ji)|; larger asymmetry throws
/// std::invalid_argument quoting the measured value. Reconstruction
/// residual is below 1e-9 * dim in max-norm.
Eigensystem hermitian_eigensystem(const ComplexMatrix& a);

/// Coherent displacement operator exp(eta a† - eta* a) on the n_max-level
/// Fock space, built by exponentiating the truncated anti-Hermitian
/// generator through its eigensystem. Exactly unitary on the truncated
/// space (within 1e-10) by construction; n_max >= 2.
ComplexMatrix displacement_matrix(Complex eta, int n_max);

/// Half-bandwidth of a: smallest b such that every element with
/// |i - j| > b has magnitude <= cutoff. Returns 0 for diagonal matrices.
int matrix_bandwidth(const ComplexMatrix& a, double cutoff);

/// C = A * B restricted to declared structure: A and B are n x n with
/// half-bandwidths band_a, band_b (entries beyond the band are treated
/// as zero) and joint support [0, support): rows/columns >= support are
/// treated as zero. C is written (and zeroed) only inside its implied
/// structure: band band_a + band_b, support + band_a rows/cols.
/// Use band >= n - 1 for dense operands.
void banded_product(const ComplexMatrix& a, int band_a, const ComplexMatrix& b,
                    int band_b, int support, ComplexMatrix& c);

/// out = A * B * A† where A is n x n with half-bandwidth band_a (entries
/// beyond the band treated as zero) and B is dense inside [0, support)^2
/// (entries outside treated as zero). Writes out only on the grown block
/// [0, s2)^2 with s2 = min(n, support + band_a) and returns s2; entries of
/// out beyond that block are left untouched. scratch and out are resized
/// to n x n when needed and may be reused across calls. Cost scales with
/// support^2 * band_a instead of n^3.
int conjugate_by_banded(const ComplexMatrix& a, int band_a,
                        const ComplexMatrix& b, int support,
                        ComplexMatrix& scratch, ComplexMatrix& out);

}  // namespace kno
