#pragma once

#include <cstdint>
#include <string>

#include "poksvd/spectral.hpp"

namespace poksvd::io {

enum class SampleFormat { Pcm16, Float32 };

struct WavData {
  /// One column per channel, samples scaled to [-1, 1) for PCM.
  SampleMatrix samples;
  std::uint32_t sample_rate = 0;
  SampleFormat format = SampleFormat::Float32;
};

/// Reads PCM (16/24/32-bit) or IEEE float (32/64-bit) RIFF/WAVE files,
/// including WAVE_FORMAT_EXTENSIBLE. Errors report the byte offset.
WavData read_wav(const std::string& path);
WavData decode_wav(const std::string& bytes);

/// Writes 16-bit PCM or 32-bit float. Float output round-trips bit-exactly
/// for float-representable samples; PCM16 rounds to the nearest code.
void write_wav(const std::string& path, const SampleMatrix& samples, std::uint32_t sample_rate,
               SampleFormat format = SampleFormat::Float32);
std::string encode_wav(const SampleMatrix& samples, std::uint32_t sample_rate, SampleFormat format);

}  // namespace poksvd::io
