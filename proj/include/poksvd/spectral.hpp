#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poksvd/numerics.hpp"

namespace poksvd {

enum class Taper : std::uint32_t { Hamming = 0, Rectangular = 1 };

std::string to_string(Taper taper);
Taper parse_taper(const std::string& name);

struct StftConfig {
  std::uint32_t sample_rate = 16000;
  Index window_len = 1024;
  Index hop = 512;
  Taper taper = Taper::Hamming;

  /// 64 ms Hamming window with 50% overlap at the given rate.
  static StftConfig defaults_for(std::uint32_t sample_rate);

  Index num_bins() const { return window_len / 2 + 1; }
  void validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Periodic window coefficients, length window_len.
std::vector<double> window_coefficients(const StftConfig& cfg);

/// Multichannel signal, one column per channel.
using SampleMatrix = Eigen::MatrixXd;

/// Complex multichannel spectrogram. Column t holds the frame vector
/// y_t = [y_{0t}; ...; y_{(F-1)t}] with each y_{ft} of length M, so entry
/// (f, m, t) lives at row f * M + m.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(Index channels, Index frames, StftConfig cfg);
  Spectrogram(Index channels, ComplexMatrix values, StftConfig cfg);

  Index channels() const { return channels_; }
  Index bins() const { return cfg_.num_bins(); }
  Index frames() const { return values_.cols(); }
  Index frame_dim() const { return values_.rows(); }
  const StftConfig& config() const { return cfg_; }

  Complex& at(Index f, Index m, Index t) { return values_(f * channels_ + m, t); }
  Complex at(Index f, Index m, Index t) const { return values_(f * channels_ + m, t); }

  const ComplexMatrix& values() const { return values_; }
  ComplexMatrix& values() { return values_; }

  bool same_shape(const Spectrogram& other) const {
    return channels_ == other.channels_ && values_.rows() == other.values_.rows() &&
           values_.cols() == other.values_.cols();
  }

 private:
  Index channels_ = 0;
  ComplexMatrix values_;
  StftConfig cfg_;
};

/// Frame count for a signal of the given length (trailing partial windows dropped).
Index frame_count(Index num_samples, const StftConfig& cfg);

Spectrogram stft(const SampleMatrix& signal, const StftConfig& cfg);

/// Weighted overlap-add with squared-window normalization. Output length is
/// (T - 1) * hop + window_len.
SampleMatrix istft(const Spectrogram& spec);

}  // namespace poksvd
