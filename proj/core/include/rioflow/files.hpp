#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rioflow {

/// Whole-file read. Throws E_IO.
std::string read_file(const std::string &path);
/// Writes to `path.tmp` then renames over `path`. Throws E_IO.
void write_file_atomic(const std::string &path, std::string_view content);

/// 16-bit little-endian signed mono PCM.
std::vector<std::int16_t> read_pcm(const std::string &path);
void write_pcm(const std::string &path, const std::vector<std::int16_t> &samples);
std::string encode_pcm(const std::vector<std::int16_t> &samples);
std::vector<std::int16_t> decode_pcm(std::string_view bytes);

/// Sine of `amplitude` (full scale 1.0) quantized to 16-bit codes.
std::vector<std::int16_t> tone(double freq_hz, double amplitude, std::int64_t rate_hz, std::int64_t n);

} // namespace rioflow
