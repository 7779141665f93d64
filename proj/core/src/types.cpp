#include "rioflow/types.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "rioflow/fixed_point.hpp"

namespace rioflow {

WireType WireType::boolean()
{
    WireType t;
    t.kind_ = TypeKind::Boolean;
    return t;
}

WireType WireType::int32()
{
    WireType t;
    t.kind_ = TypeKind::Int32;
    return t;
}

WireType WireType::float64()
{
    WireType t;
    t.kind_ = TypeKind::Float64;
    return t;
}

bool WireType::valid_fixed(int word_bits, int integer_bits)
{
    return word_bits > 0 && word_bits <= 64 && integer_bits <= word_bits && integer_bits >= word_bits - 64;
}

WireType WireType::fixed(int word_bits, int integer_bits)
{
    if (!valid_fixed(word_bits, integer_bits))
        throw std::invalid_argument("invalid fixed-point format fxp<" + std::to_string(word_bits) + "," +
                                    std::to_string(integer_bits) + ">");
    WireType t;
    t.kind_ = TypeKind::FixedPoint;
    t.word_ = word_bits;
    t.integer_ = integer_bits;
    return t;
}

WireType WireType::array(WireType element, std::size_t length)
{
    WireType t;
    t.kind_ = TypeKind::Array;
    t.length_ = length;
    t.children_.push_back(std::move(element));
    return t;
}

WireType WireType::cluster(std::vector<WireType> fields)
{
    WireType t;
    t.kind_ = TypeKind::Cluster;
    t.children_ = std::move(fields);
    return t;
}

const WireType &WireType::scalar() const
{
    const WireType *t = this;
    while (t->kind_ == TypeKind::Array)
        t = &t->element();
    return *t;
}

WireType WireType::with_scalar(const WireType &s) const
{
    if (kind_ == TypeKind::Array)
        return array(element().with_scalar(s), length_);
    return s;
}

std::size_t WireType::bit_width() const
{
    switch (kind_) {
    case TypeKind::Boolean:
        return 1;
    case TypeKind::Int32:
        return 32;
    case TypeKind::Float64:
        return 64;
    case TypeKind::FixedPoint:
        return static_cast<std::size_t>(word_);
    case TypeKind::Array:
        return length_ * element().bit_width();
    case TypeKind::Cluster: {
        std::size_t n = 0;
        for (const auto &f : children_)
            n += f.bit_width();
        return n;
    }
    }
    return 0;
}

std::string WireType::to_string() const
{
    switch (kind_) {
    case TypeKind::Boolean:
        return "bool";
    case TypeKind::Int32:
        return "i32";
    case TypeKind::Float64:
        return "f64";
    case TypeKind::FixedPoint:
        return "fxp<" + std::to_string(word_) + "," + std::to_string(integer_) + ">";
    case TypeKind::Array:
        return "[" + element().to_string() + "; " + std::to_string(length_) + "]";
    case TypeKind::Cluster: {
        std::string s = "cluster<";
        for (std::size_t i = 0; i < children_.size(); ++i) {
            if (i)
                s += ", ";
            s += children_[i].to_string();
        }
        return s + ">";
    }
    }
    return "?";
}

Value Value::boolean(bool b)
{
    Value v;
    v.type_ = WireType::boolean();
    v.bits_ = b ? 1 : 0;
    return v;
}

Value Value::int32(std::int32_t i)
{
    Value v;
    v.type_ = WireType::int32();
    v.bits_ = i;
    return v;
}

Value Value::float64(double d)
{
    Value v;
    v.type_ = WireType::float64();
    v.bits_ = std::bit_cast<std::int64_t>(d);
    return v;
}

Value Value::fixed_raw(const WireType &type, std::int64_t raw)
{
    if (!type.is(TypeKind::FixedPoint))
        throw std::invalid_argument("fixed_raw needs a fixed-point type");
    if (raw < fxp::min_raw(type.word_bits()) || raw > fxp::max_raw(type.word_bits()))
        throw std::out_of_range("raw word outside " + type.to_string());
    Value v;
    v.type_ = type;
    v.bits_ = raw;
    return v;
}

Value Value::array(const WireType &element, std::vector<Value> elements)
{
    for (const auto &e : elements)
        if (e.type() != element)
            throw std::invalid_argument("array element type mismatch");
    Value v;
    v.type_ = WireType::array(element, elements.size());
    v.elements_ = std::move(elements);
    return v;
}

Value Value::cluster(std::vector<Value> fields)
{
    std::vector<WireType> types;
    types.reserve(fields.size());
    for (const auto &f : fields)
        types.push_back(f.type());
    Value v;
    v.type_ = WireType::cluster(std::move(types));
    v.elements_ = std::move(fields);
    return v;
}

Value Value::zero(const WireType &type)
{
    switch (type.kind()) {
    case TypeKind::Boolean:
        return boolean(false);
    case TypeKind::Int32:
        return int32(0);
    case TypeKind::Float64:
        return float64(0.0);
    case TypeKind::FixedPoint:
        return fixed_raw(type, 0);
    case TypeKind::Array:
        return array(type.element(), std::vector<Value>(type.length(), zero(type.element())));
    case TypeKind::Cluster: {
        std::vector<Value> fields;
        for (const auto &f : type.fields())
            fields.push_back(zero(f));
        return cluster(std::move(fields));
    }
    }
    return {};
}

double Value::as_f64() const { return std::bit_cast<double>(bits_); }

double Value::to_double() const
{
    switch (type_.kind()) {
    case TypeKind::Boolean:
    case TypeKind::Int32:
        return static_cast<double>(bits_);
    case TypeKind::Float64:
        return as_f64();
    case TypeKind::FixedPoint:
        return fxp::to_double(bits_, type_);
    default:
        throw std::logic_error("to_double on aggregate value");
    }
}

std::string format_double(double d)
{
    if (std::isnan(d))
        return "nan";
    if (std::isinf(d))
        return d > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    std::string s(buf, res.ptr);
    // Keep a float marker so the literal never reads back as an integer.
    if (s.find_first_of(".eE") == std::string::npos)
        s += ".0";
    return s;
}

std::string Value::to_string() const
{
    switch (type_.kind()) {
    case TypeKind::Boolean:
        return bits_ ? "true" : "false";
    case TypeKind::Int32:
        return std::to_string(as_i32());
    case TypeKind::Float64:
        return format_double(as_f64());
    case TypeKind::FixedPoint: {
        const double d = fxp::to_double(bits_, type_);
        const bool exact = bits_ > -(std::int64_t{1} << 53) && bits_ < (std::int64_t{1} << 53);
        if (exact)
            return format_double(d);
        return "raw(" + std::to_string(bits_) + ")";
    }
    case TypeKind::Array:
    case TypeKind::Cluster: {
        const bool arr = type_.is(TypeKind::Array);
        std::string s = arr ? "[" : "(";
        for (std::size_t i = 0; i < elements_.size(); ++i) {
            if (i)
                s += ", ";
            s += elements_[i].to_string();
        }
        return s + (arr ? "]" : ")");
    }
    }
    return "?";
}

} // namespace rioflow
