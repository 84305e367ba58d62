#include "poksvd/spectral.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

namespace poksvd {

std::string to_string(Taper taper) {
  switch (taper) {
    case Taper::Hamming:
      return "hamming";
    case Taper::Rectangular:
      return "rect";
  }
  return "unknown";
}

Taper parse_taper(const std::string& name) {
  if (name == "hamming") return Taper::Hamming;
  if (name == "rect" || name == "rectangular") return Taper::Rectangular;
  throw ConfigError("unknown window taper '" + name + "' (expected hamming or rect)");
}

StftConfig StftConfig::defaults_for(std::uint32_t sample_rate) {
  StftConfig cfg;
  cfg.sample_rate = sample_rate;
  auto len = static_cast<Index>(std::lround(0.064 * sample_rate));
  if (len % 2 != 0) ++len;
  cfg.window_len = len;
  cfg.hop = len / 2;
  return cfg;
}

void StftConfig::validate() const {
  if (sample_rate == 0) throw ConfigError("sample_rate must be positive");
  if (window_len < 2 || window_len % 2 != 0)
    throw ConfigError("window_len must be even and >= 2, got " + std::to_string(window_len));
  if (hop <= 0 || hop > window_len)
    throw ConfigError("hop must satisfy 0 < hop <= window_len, got " + std::to_string(hop));
}

std::vector<double> window_coefficients(const StftConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.window_len);
  std::vector<double> w(n, 1.0);
  if (cfg.taper == Taper::Hamming) {
    for (std::size_t i = 0; i < n; ++i)
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(n));
  }
  return w;
}

Spectrogram::Spectrogram(Index channels, Index frames, StftConfig cfg)
    : Spectrogram(channels, ComplexMatrix::Zero(channels * cfg.num_bins(), frames), cfg) {}

Spectrogram::Spectrogram(Index channels, ComplexMatrix values, StftConfig cfg)
    : channels_(channels), values_(std::move(values)), cfg_(cfg) {
  cfg_.validate();
  if (channels_ < 1) throw ContractViolation("Spectrogram: need at least one channel");
  if (values_.rows() != channels_ * cfg_.num_bins())
    throw ContractViolation("Spectrogram: frame length " + std::to_string(values_.rows()) +
                            " != channels * bins = " +
                            std::to_string(channels_ * cfg_.num_bins()));
}

Index frame_count(Index num_samples, const StftConfig& cfg) {
  if (num_samples < cfg.window_len) return 0;
  return (num_samples - cfg.window_len) / cfg.hop + 1;
}

Spectrogram stft(const SampleMatrix& signal, const StftConfig& cfg) {
  cfg.validate();
  if (signal.cols() < 1) throw ContractViolation("stft: signal has no channels");
  if (signal.rows() < cfg.window_len) throw ComputationError("input too short");

  const Index channels = signal.cols();
  const Index frames = frame_count(signal.rows(), cfg);
  const Index bins = cfg.num_bins();
  const auto window = window_coefficients(cfg);
  const auto n = static_cast<std::size_t>(cfg.window_len);

  Spectrogram spec(channels, frames, cfg);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> segment(n);
  std::vector<Complex> spectrum;
  for (Index m = 0; m < channels; ++m) {
    for (Index t = 0; t < frames; ++t) {
      const Index start = t * cfg.hop;
      for (std::size_t i = 0; i < n; ++i)
        segment[i] = window[i] * signal(start + static_cast<Index>(i), m);
      fft.fwd(spectrum, segment);
      for (Index f = 0; f < bins; ++f) spec.at(f, m, t) = spectrum[static_cast<std::size_t>(f)];
    }
  }
  return spec;
}

SampleMatrix istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config();
  cfg.validate();
  const Index frames = spec.frames();
  const Index channels = spec.channels();
  if (frames == 0) return SampleMatrix::Zero(0, channels);

  const Index n = cfg.window_len;
  const Index length = (frames - 1) * cfg.hop + n;
  const auto window = window_coefficients(cfg);

  RealVector norm = RealVector::Zero(length);
  for (Index t = 0; t < frames; ++t)
    for (Index i = 0; i < n; ++i) norm(t * cfg.hop + i) += window[static_cast<std::size_t>(i)] *
                                                           window[static_cast<std::size_t>(i)];
  constexpr double kMinWindowSum = 1e-8;
  for (Index i = n; i <= length - n; ++i)
    if (norm(i) < kMinWindowSum) throw ComputationError("non-invertible config");

  SampleMatrix out = SampleMatrix::Zero(length, channels);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> spectrum(static_cast<std::size_t>(spec.bins()));
  std::vector<double> segment;
  for (Index m = 0; m < channels; ++m) {
    for (Index t = 0; t < frames; ++t) {
      for (Index f = 0; f < spec.bins(); ++f) spectrum[static_cast<std::size_t>(f)] = spec.at(f, m, t);
      fft.inv(segment, spectrum, n);
      const Index start = t * cfg.hop;
      for (Index i = 0; i < n; ++i)
        out(start + i, m) += window[static_cast<std::size_t>(i)] * segment[static_cast<std::size_t>(i)];
    }
  }
  for (Index i = 0; i < length; ++i) {
    if (norm(i) >= kMinWindowSum)
      out.row(i) /= norm(i);
    else
      out.row(i).setZero();
  }
  return out;
}

}  // namespace poksvd
