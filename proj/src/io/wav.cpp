#include "poksvd/io/wav.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "byte_io.hpp"
#include "poksvd/io/formats.hpp"

namespace poksvd::io {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

[[noreturn]] void malformed(std::size_t offset, const std::string& msg) {
  throw IoError("malformed WAV at byte offset " + std::to_string(offset) + ": " + msg);
}

}  // namespace

WavData decode_wav(const std::string& bytes) {
  detail::Reader in(bytes, "WAV");
  if (bytes.size() < 12) throw IoError("truncated WAV: missing 'RIFF' header");
  if (in.get_bytes(4, "RIFF tag") != "RIFF") malformed(0, "expected 'RIFF'");
  in.get<std::uint32_t>("RIFF size");
  if (in.get_bytes(4, "WAVE tag") != "WAVE") malformed(8, "expected 'WAVE'");

  std::optional<FmtChunk> fmt;
  std::optional<std::pair<std::size_t, std::size_t>> data;  // offset, size
  while (in.remaining() >= 8) {
    const std::size_t chunk_at = in.offset();
    const std::string id = in.get_bytes(4, "chunk id");
    const auto size = in.get<std::uint32_t>("chunk size");
    const std::size_t body = in.offset();
    if (id == "fmt ") {
      if (size < 16) malformed(chunk_at, "'fmt ' chunk shorter than 16 bytes");
      if (in.remaining() < size) throw IoError("truncated WAV: 'fmt ' chunk cut short at byte offset " +
                                               std::to_string(bytes.size()));
      FmtChunk c;
      c.format = in.get<std::uint16_t>("format tag");
      c.channels = in.get<std::uint16_t>("channel count");
      c.sample_rate = in.get<std::uint32_t>("sample rate");
      in.get<std::uint32_t>("byte rate");
      c.block_align = in.get<std::uint16_t>("block align");
      c.bits = in.get<std::uint16_t>("bits per sample");
      if (c.format == kFormatExtensible) {
        if (size < 40) malformed(chunk_at, "extensible 'fmt ' chunk shorter than 40 bytes");
        in.seek(body + 24);
        c.format = in.get<std::uint16_t>("extensible subformat");
      }
      fmt = c;
    } else if (id == "data") {
      const std::size_t available = std::min<std::size_t>(size, in.remaining());
      if (available < size)
        throw IoError("truncated WAV: 'data' chunk declares " + std::to_string(size) +
                      " bytes but only " + std::to_string(available) + " remain at byte offset " +
                      std::to_string(body));
      data = {body, size};
    }
    const std::size_t next = body + size + (size % 2);
    if (next > bytes.size()) break;
    in.seek(next);
  }

  if (!fmt) throw IoError("truncated WAV: missing 'fmt ' chunk");
  if (!data) throw IoError("truncated WAV: missing 'data' chunk");
  if (fmt->channels == 0) malformed(12, "zero channels");
  if (fmt->sample_rate == 0) malformed(12, "zero sample rate");

  const std::size_t width = fmt->bits / 8;
  const bool pcm = fmt->format == kFormatPcm && (fmt->bits == 16 || fmt->bits == 24 || fmt->bits == 32);
  const bool flt = fmt->format == kFormatFloat && (fmt->bits == 32 || fmt->bits == 64);
  if (!pcm && !flt)
    malformed(12, "unsupported encoding (format " + std::to_string(fmt->format) + ", " +
                      std::to_string(fmt->bits) + " bits)");
  if (fmt->block_align != width * fmt->channels) malformed(12, "block align does not match channels * width");

  const std::size_t frame_bytes = fmt->block_align;
  const std::size_t frames = data->second / frame_bytes;
  WavData out;
  out.sample_rate = fmt->sample_rate;
  out.format = flt ? SampleFormat::Float32 : SampleFormat::Pcm16;
  out.samples.resize(static_cast<Index>(frames), fmt->channels);
  in.seek(data->first);
  for (std::size_t i = 0; i < frames; ++i) {
    for (Index c = 0; c < fmt->channels; ++c) {
      double v = 0.0;
      if (flt && fmt->bits == 32) {
        v = in.get_f32("sample");
      } else if (flt) {
        v = in.get_f64("sample");
      } else if (fmt->bits == 16) {
        v = static_cast<std::int16_t>(in.get<std::uint16_t>("sample")) / 32768.0;
      } else if (fmt->bits == 24) {
        std::uint32_t raw = in.get<std::uint16_t>("sample");
        raw |= static_cast<std::uint32_t>(in.get<std::uint8_t>("sample")) << 16;
        const auto s = static_cast<std::int32_t>(raw << 8) >> 8;
        v = s / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(in.get<std::uint32_t>("sample")) / 2147483648.0;
      }
      out.samples(static_cast<Index>(i), c) = v;
    }
  }
  return out;
}

WavData read_wav(const std::string& path) { return decode_wav(read_file(path)); }

std::string encode_wav(const SampleMatrix& samples, std::uint32_t sample_rate, SampleFormat format) {
  if (samples.cols() < 1 || samples.cols() > 0xFFFF)
    throw ContractViolation("write_wav: channel count must be in [1, 65535]");
  if (sample_rate == 0) throw ContractViolation("write_wav: sample rate must be positive");
  const auto channels = static_cast<std::uint16_t>(samples.cols());
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
  const auto block_align = static_cast<std::uint16_t>(channels * bits / 8);
  const std::uint64_t data_size = static_cast<std::uint64_t>(samples.rows()) * block_align;
  if (data_size > 0xFFFFFFFFull - 36) throw ContractViolation("write_wav: data exceeds 4 GiB");

  std::string out;
  out.reserve(static_cast<std::size_t>(44 + data_size));
  out += "RIFF";
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(36 + data_size));
  out += "WAVE";
  out += "fmt ";
  detail::put_le<std::uint32_t>(out, 16);
  detail::put_le<std::uint16_t>(out, format == SampleFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  detail::put_le<std::uint16_t>(out, channels);
  detail::put_le<std::uint32_t>(out, sample_rate);
  detail::put_le<std::uint32_t>(out, sample_rate * block_align);
  detail::put_le<std::uint16_t>(out, block_align);
  detail::put_le<std::uint16_t>(out, bits);
  out += "data";
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data_size));
  for (Index i = 0; i < samples.rows(); ++i) {
    for (Index c = 0; c < samples.cols(); ++c) {
      const double v = samples(i, c);
      if (format == SampleFormat::Float32) {
        detail::put_f32(out, static_cast<float>(v));
      } else {
        const double code = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        detail::put_le<std::int16_t>(out, static_cast<std::int16_t>(code));
      }
    }
  }
  return out;
}

void write_wav(const std::string& path, const SampleMatrix& samples, std::uint32_t sample_rate,
               SampleFormat format) {
  write_file_atomic(path, encode_wav(samples, sample_rate, format));
}

}  // namespace poksvd::io
