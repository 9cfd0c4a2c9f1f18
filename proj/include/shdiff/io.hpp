#pragma once

#include <cstdint>
#include <string>

#include "shdiff/tensor.hpp"

namespace shdiff {

/// Shortest decimal string that parses back to exactly `v` ("0.05", "2",
/// "1e+300"). Canonical formatter for config files and CSV reports, so
/// serialize -> parse -> serialize round trips are byte-identical.
std::string fmt_double(double v);

/// Creates the directory (and parents) if missing; errors if the path exists
/// as a non-directory.
void ensure_dir(const std::string& dir);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Little-endian binary batch files ("shdiff-batch 1"): tag, sigma and the
/// row-major payload. Exact round trip.
void save_batch(const std::string& path, const SampleBatch& batch);
SampleBatch load_batch(const std::string& path);

/// FNV-1a over the file bytes, as a fixed-width lowercase hex string. Content
/// fingerprint for run records.
std::string fnv1a_file_hex(const std::string& path);

}  // namespace shdiff
