#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rioflow {

enum class TypeKind : std::uint8_t { Boolean, Int32, Float64, FixedPoint, Array, Cluster };

/// Static type carried by a wire. Every type has a statically known bit width;
/// strings and variable-length arrays are not representable.
class WireType {
public:
    WireType() = default;

    static WireType boolean();
    static WireType int32();
    static WireType float64();
    /// Throws std::invalid_argument unless 0 < word <= 64 and word - 64 <= integer <= word.
    static WireType fixed(int word_bits, int integer_bits);
    static WireType array(WireType element, std::size_t length);
    static WireType cluster(std::vector<WireType> fields);

    static bool valid_fixed(int word_bits, int integer_bits);

    TypeKind kind() const { return kind_; }
    bool is(TypeKind k) const { return kind_ == k; }
    bool is_scalar() const { return kind_ != TypeKind::Array && kind_ != TypeKind::Cluster; }
    bool is_numeric() const
    {
        return kind_ == TypeKind::Int32 || kind_ == TypeKind::Float64 || kind_ == TypeKind::FixedPoint;
    }

    int word_bits() const { return word_; }
    int integer_bits() const { return integer_; }
    int fraction_bits() const { return word_ - integer_; }

    const WireType &element() const { return children_.front(); }
    std::size_t length() const { return length_; }
    const std::vector<WireType> &fields() const { return children_; }

    /// Innermost scalar type of an array (the type itself for scalars).
    const WireType &scalar() const;
    /// Same shape with the innermost scalar replaced.
    WireType with_scalar(const WireType &s) const;

    std::size_t bit_width() const;
    /// Bytes occupied by one element in a buffer (bits rounded up to bytes).
    std::size_t byte_width() const { return (bit_width() + 7) / 8; }

    /// gtext spelling, e.g. `fxp<16,1>` or `[f64; 64]`.
    std::string to_string() const;

    friend bool operator==(const WireType &, const WireType &) = default;

private:
    TypeKind kind_ = TypeKind::Boolean;
    int word_ = 0;
    int integer_ = 0;
    std::size_t length_ = 0;
    std::vector<WireType> children_;
};

/// An immutable typed value. Scalars keep exact bits: bool and i32 as integers,
/// fixed point as a W-bit two's-complement raw integer scaled by 2^(I-W), and
/// f64 as its IEEE bit pattern. Equality is bitwise.
class Value {
public:
    Value() = default;

    static Value boolean(bool b);
    static Value int32(std::int32_t v);
    static Value float64(double v);
    /// Raw must already lie in the W-bit two's-complement range.
    static Value fixed_raw(const WireType &type, std::int64_t raw);
    static Value array(const WireType &element, std::vector<Value> elements);
    static Value cluster(std::vector<Value> fields);
    /// All-zero value of a type (false, 0, 0.0, empty/zeroed aggregates).
    static Value zero(const WireType &type);

    const WireType &type() const { return type_; }

    bool as_bool() const { return bits_ != 0; }
    std::int32_t as_i32() const { return static_cast<std::int32_t>(bits_); }
    double as_f64() const;
    std::int64_t raw() const { return bits_; }
    const std::vector<Value> &elements() const { return elements_; }

    /// Numeric view of a scalar (bool as 0/1, fixed point descaled).
    double to_double() const;

    /// Literal spelling accepted back by the gtext parser.
    std::string to_string() const;

    friend bool operator==(const Value &, const Value &) = default;

private:
    WireType type_;
    std::int64_t bits_ = 0;
    std::vector<Value> elements_;
};

/// Shortest decimal spelling that reads back to the same double; always has
/// a '.' or exponent, or is nan / inf / -inf.
std::string format_double(double d);

} // namespace rioflow
