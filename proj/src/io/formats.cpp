#include "poksvd/io/formats.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "byte_io.hpp"

namespace poksvd::io {

namespace {

constexpr char kDictionaryMagic[8] = {'P', 'O', 'K', 'S', 'V', 'D', '1', '\0'};
constexpr char kSpectrogramMagic[8] = {'P', 'O', 'S', 'P', 'E', 'C', '1', '\0'};

void put_stft(std::string& out, const StftConfig& cfg) {
  detail::put_le<std::uint64_t>(out, cfg.sample_rate);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(cfg.window_len));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(cfg.hop));
}

StftConfig get_stft(detail::Reader& in, const std::string& source) {
  StftConfig cfg;
  const auto rate = in.get<std::uint64_t>("sample_rate");
  const auto window = in.get<std::uint64_t>("window_len");
  const auto hop = in.get<std::uint64_t>("hop");
  if (rate == 0 || rate > 0xFFFFFFFFull || window > (1ull << 40) || hop > (1ull << 40))
    throw IoError(source + ": implausible STFT provenance in header");
  cfg.sample_rate = static_cast<std::uint32_t>(rate);
  cfg.window_len = static_cast<Index>(window);
  cfg.hop = static_cast<Index>(hop);
  return cfg;
}

Taper taper_from_code(std::uint32_t code, const std::string& source) {
  if (code > 1) throw IoError(source + ": unknown taper code " + std::to_string(code));
  return static_cast<Taper>(code);
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::string encode_dictionary(const DictionaryFile& file) {
  const Dictionary& d = file.dictionary;
  std::string out(kDictionaryMagic, sizeof kDictionaryMagic);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d.channels()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d.bins()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d.size()));
  put_stft(out, file.stft);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.stft.taper));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d.gauge()));
  const ComplexMatrix& atoms = d.atoms();
  for (Index k = 0; k < atoms.cols(); ++k) {
    for (Index i = 0; i < atoms.rows(); ++i) {
      detail::put_f64(out, atoms(i, k).real());
      detail::put_f64(out, atoms(i, k).imag());
    }
  }
  return out;
}

DictionaryFile decode_dictionary(const std::string& bytes, const std::string& source) {
  detail::Reader in(bytes, source);
  if (in.get_bytes(8, "magic") != std::string(kDictionaryMagic, 8))
    throw IoError(source + ": not a dictionary file (bad magic)");
  const auto channels = in.get<std::uint64_t>("M");
  const auto bins = in.get<std::uint64_t>("F");
  const auto atoms = in.get<std::uint64_t>("K");
  StftConfig stft = get_stft(in, source);
  stft.taper = taper_from_code(in.get<std::uint32_t>("taper"), source);
  const auto gauge_code = in.get<std::uint32_t>("gauge");
  if (gauge_code > 1) throw IoError(source + ": unknown gauge code " + std::to_string(gauge_code));
  if (channels == 0 || bins == 0 || channels > (1u << 16) || bins > (1u << 24) || atoms > (1u << 24))
    throw IoError(source + ": implausible dictionary dimensions");
  try {
    stft.validate();
  } catch (const ConfigError& e) {
    throw IoError(source + ": invalid STFT provenance: " + e.what());
  }
  if (static_cast<std::uint64_t>(stft.num_bins()) != bins)
    throw IoError(source + ": bin count " + std::to_string(bins) +
                  " inconsistent with window length " + std::to_string(stft.window_len));

  const std::uint64_t expected = channels * bins * atoms * 16;
  if (in.remaining() != expected)
    throw IoError(source + ": atom payload is " + std::to_string(in.remaining()) +
                  " bytes, expected " + std::to_string(expected));
  ComplexMatrix values(static_cast<Index>(channels * bins), static_cast<Index>(atoms));
  for (Index k = 0; k < values.cols(); ++k) {
    for (Index i = 0; i < values.rows(); ++i) {
      const double re = in.get_f64("atom entry");
      const double im = in.get_f64("atom entry");
      values(i, k) = Complex(re, im);
    }
  }
  try {
    return {Dictionary(static_cast<Index>(channels), static_cast<Index>(bins), std::move(values),
                       static_cast<Gauge>(gauge_code), 1e-8),
            stft};
  } catch (const ContractViolation& e) {
    throw IoError(source + ": " + e.what());
  }
}

void save_dictionary(const std::string& path, const DictionaryFile& file) {
  write_file_atomic(path, encode_dictionary(file));
}

DictionaryFile load_dictionary(const std::string& path) { return decode_dictionary(read_file(path), path); }

std::string encode_spectrogram(const Spectrogram& spec) {
  std::string out(kSpectrogramMagic, sizeof kSpectrogramMagic);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(spec.channels()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(spec.bins()));
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(spec.frames()));
  put_stft(out, spec.config());
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.config().taper));
  detail::put_le<std::uint32_t>(out, 0);
  const ComplexMatrix& v = spec.values();
  for (Index t = 0; t < v.cols(); ++t) {
    for (Index i = 0; i < v.rows(); ++i) {
      detail::put_f64(out, v(i, t).real());
      detail::put_f64(out, v(i, t).imag());
    }
  }
  return out;
}

Spectrogram decode_spectrogram(const std::string& bytes, const std::string& source) {
  detail::Reader in(bytes, source);
  if (in.get_bytes(8, "magic") != std::string(kSpectrogramMagic, 8))
    throw IoError(source + ": not a spectrogram file (bad magic)");
  const auto channels = in.get<std::uint64_t>("M");
  const auto bins = in.get<std::uint64_t>("F");
  const auto frames = in.get<std::uint64_t>("T");
  StftConfig stft = get_stft(in, source);
  stft.taper = taper_from_code(in.get<std::uint32_t>("taper"), source);
  in.get<std::uint32_t>("reserved");
  if (channels == 0 || channels > (1u << 16) || bins > (1u << 24) || frames > (1ull << 32))
    throw IoError(source + ": implausible spectrogram dimensions");
  const std::uint64_t expected = channels * bins * frames * 16;
  if (in.remaining() != expected)
    throw IoError(source + ": payload is " + std::to_string(in.remaining()) + " bytes, expected " +
                  std::to_string(expected));
  ComplexMatrix values(static_cast<Index>(channels * bins), static_cast<Index>(frames));
  for (Index t = 0; t < values.cols(); ++t) {
    for (Index i = 0; i < values.rows(); ++i) {
      const double re = in.get_f64("value");
      const double im = in.get_f64("value");
      values(i, t) = Complex(re, im);
    }
  }
  try {
    return Spectrogram(static_cast<Index>(channels), std::move(values), stft);
  } catch (const std::invalid_argument& e) {
    throw IoError(source + ": " + e.what());
  }
}

void save_spectrogram(const std::string& path, const Spectrogram& spec) {
  write_file_atomic(path, encode_spectrogram(spec));
}

Spectrogram load_spectrogram(const std::string& path) { return decode_spectrogram(read_file(path), path); }

std::string to_key_value(const EvalReport& report) {
  std::ostringstream os;
  os << "sdr_db=" << format_double(report.sdr_db) << '\n';
  if (report.sir_db) os << "sir_db=" << format_double(*report.sir_db) << '\n';
  if (report.support_recovery) os << "support_recovery=" << format_double(*report.support_recovery) << '\n';
  os << "frames=" << report.frame_residual_norms.size() << '\n';
  return os.str();
}

std::string to_json(const EvalReport& report) {
  nlohmann::json j;
  j["sdr_db"] = report.sdr_db;
  j["sir_db"] = report.sir_db ? nlohmann::json(*report.sir_db) : nlohmann::json(nullptr);
  j["support_recovery"] =
      report.support_recovery ? nlohmann::json(*report.support_recovery) : nlohmann::json(nullptr);
  j["frames"] = report.frame_residual_norms.size();
  j["frame_residual_norms"] = report.frame_residual_norms;
  return j.dump(2) + "\n";
}

std::string format_code_line(Index frame, const SparseCode& code, double residual_norm) {
  std::ostringstream os;
  os << "frame=" << frame << " support=";
  for (std::size_t i = 0; i < code.support.size(); ++i) os << (i ? "," : "") << code.support[i];
  os << " gains=";
  for (std::size_t i = 0; i < code.support.size(); ++i)
    os << (i ? "," : "") << format_double(code.gains(code.support[i]));
  os << " residual=" << format_double(residual_norm);
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("error writing '" + path + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at '" + path + "'");
  }
}

}  // namespace poksvd::io
