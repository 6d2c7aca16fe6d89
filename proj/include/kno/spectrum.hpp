#pragma once

#include <vector>

namespace kno {

// Normalized weights W_0..W_M of the theta-harmonics of a phase-space
// distribution. Produced by the classical histogram pipeline and by the
// quantum density-matrix off-diagonals alike; every complexity metric
// downstream accepts either origin. Invariants: W_m >= 0, sum W_m = 1.
struct HarmonicSpectrum {
  std::vector<double> weights;
};

}  // namespace kno
