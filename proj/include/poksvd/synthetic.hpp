#pragma once

#include <cstdint>
#include <vector>

#include "poksvd/model.hpp"
#include "poksvd/spectral.hpp"

namespace poksvd {

/// Parameters of a planted phase-rich mixture drawn from the sparse mixing model.
struct SyntheticSpec {
  Index channels = 2;
  Index bins = 16;
  Index frames = 100;
  Index atoms = 8;
  /// Active atoms per frame (every frame uses exactly this many).
  Index s_max = 2;
  double gain_lo = 0.5;
  double gain_hi = 2.0;
  /// Per-entry standard deviation of the real and imaginary noise parts.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Log-normal spread of the per-bin atom envelope; 0 gives plain Gaussian atoms.
  double spectral_spread = 0.0;
  /// Redraw the dictionary until its coherence is below this; 0 disables.
  double max_coherence = 0.0;
  int max_redraws = 10000;
  /// Zero the DC and Nyquist bins of atoms and noise so that a
  /// rectangular, non-overlapping ISTFT renders the frames exactly.
  bool zero_edge_bins = false;

  void validate() const;
  /// Rectangular window of length 2 (F - 1) with hop = window.
  StftConfig nominal_stft(std::uint32_t sample_rate = 16000) const;
};

struct GroundTruth {
  Dictionary dictionary;
  std::vector<SparseCode> codes;
  std::vector<PhaseMatrix> phases;
};

struct SyntheticData {
  Spectrogram spectrogram;
  GroundTruth truth;
};

/// Random dictionary with the atom distribution and coherence limit given by `spec`.
Dictionary random_dictionary(const SyntheticSpec& spec, std::uint64_t seed);

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace poksvd
