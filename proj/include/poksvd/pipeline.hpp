#pragma once

#include <optional>
#include <vector>

#include "poksvd/pursuit.hpp"
#include "poksvd/spectral.hpp"

namespace poksvd {

struct MaskConfig {
  /// Fraction of quietest frames averaged into the per-(bin, channel) floor.
  double floor_quantile = 0.1;
  /// Compare channel-summed PSDs per (f, t) instead of each channel separately.
  bool summed_channels = false;

  void validate() const;
};

struct MaskOutcome {
  Spectrogram masked;
  Index masked_points = 0;
};

/// Floors time-frequency points where the target PSD falls below the noise
/// estimate's PSD, keeping the target phase.
MaskOutcome apply_mask(const Spectrogram& target, const Spectrogram& noise_estimate,
                       const MaskConfig& cfg = {});

struct DenoiseResult {
  Spectrogram target;
  Spectrogram noise_estimate;
  std::vector<SparseCode> codes;
  Index masked_points = 0;
};

/// Codes every mixture frame against the noise dictionary; the residual is the
/// target estimate. With `mask` set the masking post-processor runs on top.
DenoiseResult denoise(const Spectrogram& mixture, const Dictionary& noise_dict,
                      const PursuitConfig& cfg, const std::optional<MaskConfig>& mask = {});

inline constexpr double kMetricCapDb = 100.0;

struct EvalReport {
  double sdr_db = 0.0;
  std::optional<double> sir_db;
  std::vector<double> frame_residual_norms;
  std::optional<double> support_recovery;
};

/// Energy-ratio SDR (and SIR when a noise reference is given), capped at
/// +-100 dB. Inputs are compared entrywise and must share a shape.
EvalReport evaluate(const ComplexMatrix& reference, const ComplexMatrix& estimate,
                    const ComplexMatrix* noise_reference = nullptr);
/// Adds per-frame residual norms.
EvalReport evaluate(const Spectrogram& reference, const Spectrogram& estimate,
                    const Spectrogram* noise_reference = nullptr);
EvalReport evaluate(const SampleMatrix& reference, const SampleMatrix& estimate,
                    const SampleMatrix* noise_reference = nullptr);

struct AtomMatch {
  /// Per true atom: best score over learned atoms and which learned atom gave it.
  RealVector best_score;
  std::vector<Index> best_atom;
  /// Optimal one-to-one assignment (-1 when there are fewer learned atoms).
  std::vector<Index> assigned_atom;
  RealVector assigned_score;
};

/// Phase-invariant recovery score of every true atom against a learned dictionary.
AtomMatch atom_match_score(const Dictionary& learned, const Dictionary& truth);

/// Fraction of frames whose support set equals the reference support set.
double support_recovery_rate(const std::vector<SparseCode>& truth,
                             const std::vector<SparseCode>& estimate);

/// Maximum-weight assignment of rows to columns; result[i] is the column of row i or -1.
std::vector<Index> max_weight_assignment(const Eigen::MatrixXd& weights);

}  // namespace poksvd
