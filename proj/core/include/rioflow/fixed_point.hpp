#pragma once

#include <cstdint>

#include "rioflow/types.hpp"

// Raw two's-complement helpers shared by the value layer and the primitive
// library. Intermediate results are carried in 128 bits so that products of
// two 64-bit words and alignments of up to 64 fraction bits are exact.

namespace rioflow::fxp {

using wide = __int128;

enum class Overflow : std::uint8_t { Saturate, Wrap };

std::int64_t min_raw(int word_bits);
std::int64_t max_raw(int word_bits);

std::int64_t saturate(wide v, int word_bits);
std::int64_t wrap(wide v, int word_bits);
std::int64_t fit(wide v, int word_bits, Overflow mode);

/// v * 2^-shift rounded half to even (shift may be negative: exact left shift).
wide shift_round(wide v, int shift);

/// Nearest raw code for a real number, ties to even; NaN maps to 0.
std::int64_t from_double(double x, const WireType &type, Overflow mode);
double to_double(std::int64_t raw, const WireType &type);

/// Re-scales a raw word between fixed-point formats.
std::int64_t convert(std::int64_t raw, const WireType &from, const WireType &to, Overflow mode);

/// Type an i32 operand takes when promoted next to a fixed-point operand.
WireType promoted_int32();

/// Result type of Add/Sub: max integer bits and max fraction bits, trimmed
/// to 64 bits by dropping fraction bits.
WireType sum_type(const WireType &a, const WireType &b);
/// Result type of Mul: widths add; above 64 bits fraction bits are dropped.
WireType product_type(const WireType &a, const WireType &b);

} // namespace rioflow::fxp
