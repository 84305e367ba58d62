#pragma once

#include <string>
#include <vector>

#include "poksvd/model.hpp"
#include "poksvd/pipeline.hpp"
#include "poksvd/spectral.hpp"

namespace poksvd::io {

/// Binary dictionary file.
///
///   offset  size  field
///   0       8     magic "POKSVD1\0"
///   8       8     M (channels), u64
///   16      8     F (bins), u64
///   24      8     K (atoms), u64
///   32      8     sample_rate, u64
///   40      8     window_len, u64
///   48      8     hop, u64
///   56      4     taper, u32 (0 hamming, 1 rect)
///   60      4     gauge, u32 (0 per-bin, 1 global)
///   64      ...   atoms, atom-major (column-major), each entry f64 re, f64 im
///
/// All integers and floats are little-endian.
struct DictionaryFile {
  Dictionary dictionary;
  StftConfig stft;
};

std::string encode_dictionary(const DictionaryFile& file);
DictionaryFile decode_dictionary(const std::string& bytes, const std::string& source = "<memory>");
void save_dictionary(const std::string& path, const DictionaryFile& file);
DictionaryFile load_dictionary(const std::string& path);

/// Binary spectrogram ("frames") file: magic "POSPEC1\0", u64 M, F, T,
/// sample_rate, window_len, hop, u32 taper, u32 reserved, then T frames of
/// M * F complex values (bin-major, channel-minor) as f64 pairs.
std::string encode_spectrogram(const Spectrogram& spec);
Spectrogram decode_spectrogram(const std::string& bytes, const std::string& source = "<memory>");
void save_spectrogram(const std::string& path, const Spectrogram& spec);
Spectrogram load_spectrogram(const std::string& path);

/// "key=value" lines: sdr_db, sir_db, support_recovery, frames.
std::string to_key_value(const EvalReport& report);
/// JSON object with the same keys plus frame_residual_norms.
std::string to_json(const EvalReport& report);

/// One machine-readable line per coded frame:
/// "frame=<t> support=<k,...> gains=<g,...> residual=<norm>".
std::string format_code_line(Index frame, const SparseCode& code, double residual_norm);

std::string read_file(const std::string& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace poksvd::io
