#include "rioflow/files.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rioflow/diagnostics.hpp"

namespace rioflow {

std::string read_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("E_IO", "cannot read '" + path + "'", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string &path, std::string_view content)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("E_IO", "cannot write '" + tmp + "'", path);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw Error("E_IO", "write to '" + tmp + "' failed", path);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error("E_IO", "cannot rename '" + tmp + "': " + ec.message(), path);
}

std::string encode_pcm(const std::vector<std::int16_t> &samples)
{
    std::string out(samples.size() * 2, '\0');
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto u = static_cast<std::uint16_t>(samples[i]);
        out[2 * i] = static_cast<char>(u & 0xff);
        out[2 * i + 1] = static_cast<char>(u >> 8);
    }
    return out;
}

std::vector<std::int16_t> decode_pcm(std::string_view bytes)
{
    std::vector<std::int16_t> out(bytes.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto lo = static_cast<std::uint8_t>(bytes[2 * i]);
        const auto hi = static_cast<std::uint8_t>(bytes[2 * i + 1]);
        out[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    return out;
}

std::vector<std::int16_t> read_pcm(const std::string &path)
{
    return decode_pcm(read_file(path));
}

void write_pcm(const std::string &path, const std::vector<std::int16_t> &samples)
{
    write_file_atomic(path, encode_pcm(samples));
}

std::vector<std::int16_t> tone(double freq_hz, double amplitude, std::int64_t rate_hz, std::int64_t n)
{
    std::vector<std::int16_t> out;
    out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, n)));
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) /
                                              static_cast<double>(rate_hz));
        const double code = std::clamp(std::nearbyint(x * 32768.0), -32768.0, 32767.0);
        out.push_back(static_cast<std::int16_t>(code));
    }
    return out;
}

} // namespace rioflow
