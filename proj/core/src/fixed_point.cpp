#include "rioflow/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rioflow::fxp {

std::int64_t min_raw(int word_bits)
{
    if (word_bits >= 64)
        return INT64_MIN;
    return -(std::int64_t{1} << (word_bits - 1));
}

std::int64_t max_raw(int word_bits)
{
    if (word_bits >= 64)
        return INT64_MAX;
    return (std::int64_t{1} << (word_bits - 1)) - 1;
}

std::int64_t saturate(wide v, int word_bits)
{
    const wide lo = min_raw(word_bits);
    const wide hi = max_raw(word_bits);
    return static_cast<std::int64_t>(std::clamp(v, lo, hi));
}

std::int64_t wrap(wide v, int word_bits)
{
    auto u = static_cast<unsigned __int128>(v);
    if (word_bits < 64) {
        const unsigned __int128 mask = (static_cast<unsigned __int128>(1) << word_bits) - 1;
        u &= mask;
        const unsigned __int128 sign = static_cast<unsigned __int128>(1) << (word_bits - 1);
        if (u & sign)
            u |= ~mask;
    }
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(u));
}

std::int64_t fit(wide v, int word_bits, Overflow mode)
{
    return mode == Overflow::Saturate ? saturate(v, word_bits) : wrap(v, word_bits);
}

wide shift_round(wide v, int shift)
{
    if (shift <= 0)
        return v << (-shift);
    if (shift >= 127)
        return 0;
    const wide floor = v >> shift; // arithmetic shift rounds toward -inf
    const wide rem = v - (floor << shift);
    const wide half = wide{1} << (shift - 1);
    if (rem > half || (rem == half && (floor & 1)))
        return floor + 1;
    return floor;
}

std::int64_t from_double(double x, const WireType &type, Overflow mode)
{
    if (std::isnan(x))
        return 0;
    const int w = type.word_bits();
    const double scaled = std::nearbyint(std::ldexp(x, type.fraction_bits()));
    if (mode == Overflow::Saturate) {
        if (scaled >= std::ldexp(1.0, w - 1))
            return max_raw(w);
        if (scaled < -std::ldexp(1.0, w - 1))
            return min_raw(w);
        return static_cast<std::int64_t>(scaled);
    }
    if (std::isinf(scaled))
        return 0;
    // Reduce modulo 2^w exactly; doubles beyond 2^w are multiples of large powers of two.
    const double m = std::fmod(scaled, std::ldexp(1.0, w));
    return wrap(static_cast<wide>(m), w);
}

double to_double(std::int64_t raw, const WireType &type)
{
    return std::ldexp(static_cast<double>(raw), -type.fraction_bits());
}

std::int64_t convert(std::int64_t raw, const WireType &from, const WireType &to, Overflow mode)
{
    const wide v = shift_round(raw, from.fraction_bits() - to.fraction_bits());
    return fit(v, to.word_bits(), mode);
}

WireType promoted_int32() { return WireType::fixed(32, 32); }

WireType sum_type(const WireType &a, const WireType &b)
{
    if (a == b)
        return a;
    const int integer = std::max(a.integer_bits(), b.integer_bits());
    int fraction = std::max(a.fraction_bits(), b.fraction_bits());
    int word = integer + fraction;
    if (word > 64) {
        fraction -= word - 64;
        word = 64;
    }
    if (word < 1)
        word = 1;
    return WireType::fixed(word, std::min(integer, word));
}

WireType product_type(const WireType &a, const WireType &b)
{
    int word = a.word_bits() + b.word_bits();
    int integer = a.integer_bits() + b.integer_bits();
    if (word > 64) {
        word = 64;
        integer = std::clamp(integer, 0, 64);
    }
    // Keep at most 64 fraction bits.
    integer = std::max(integer, word - 64);
    return WireType::fixed(word, integer);
}

} // namespace rioflow::fxp
