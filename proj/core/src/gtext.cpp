#include "rioflow/gtext.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "rioflow/ip.hpp"
#include "rioflow/primitives.hpp"
#include "rioflow/validate.hpp"

namespace rioflow {

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok : std::uint8_t { Ident, Number, String, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t line = 1, column = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '/'; }

class Lexer {
public:
    Lexer(std::string_view src, std::string file) : src_(src), file_(std::move(file)) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        while (true) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (ident_start(c)) {
                t.kind = Tok::Ident;
                while (pos_ < src_.size() && ident_char(src_[pos_]))
                    t.text += take();
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                t.kind = Tok::Number;
                lex_number(t.text);
            } else if (c == '"') {
                t.kind = Tok::String;
                take();
                while (pos_ < src_.size() && src_[pos_] != '"' && src_[pos_] != '\n')
                    t.text += take();
                if (pos_ >= src_.size() || src_[pos_] != '"')
                    fail(t, "unterminated string");
                take();
            } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
                t.kind = Tok::Punct;
                t.text = "->";
                take();
                take();
            } else if (std::string_view("{}()[]<>,:;=.-+").find(c) != std::string_view::npos) {
                t.kind = Tok::Punct;
                t.text = std::string(1, take());
            } else {
                fail(t, std::string("unexpected character '") + (std::isprint(static_cast<unsigned char>(c)) ? std::string(1, c) : "\\x" + std::to_string(static_cast<unsigned char>(c))) + "'");
            }
            out.push_back(std::move(t));
        }
    }

private:
    char take()
    {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space()
    {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    take();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                take();
            } else {
                break;
            }
        }
    }

    void lex_number(std::string &s)
    {
        auto digit = [&](bool hex) {
            return pos_ < src_.size() &&
                   (hex ? std::isxdigit(static_cast<unsigned char>(src_[pos_])) : std::isdigit(static_cast<unsigned char>(src_[pos_])));
        };
        if (src_[pos_] == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
            s += take();
            s += take();
            while (digit(true))
                s += take();
            return;
        }
        while (digit(false))
            s += take();
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
            s += take();
            while (digit(false))
                s += take();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t k = pos_ + 1;
            if (k < src_.size() && (src_[k] == '+' || src_[k] == '-'))
                ++k;
            if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                while (pos_ < k)
                    s += take();
                while (digit(false))
                    s += take();
            }
        }
    }

    [[noreturn]] void fail(const Token &t, const std::string &msg)
    {
        throw Error("E_SYNTAX", msg, "", SourceSpan{file_, t.line, t.column, 1});
    }

    std::string_view src_;
    std::string file_;
    std::size_t pos_ = 0, line_ = 1, col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

enum class Scope : std::uint8_t { Vi, While, For, Case, Frame, Sctl };

class Parser {
public:
    Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

    Project project();
    WireType type();
    Value literal(const WireType &t);
    void expect_end()
    {
        if (peek().kind != Tok::End)
            fail("expected end of input");
    }

private:
    const Token &peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token &next()
    {
        const Token &t = toks_[pos_];
        if (pos_ + 1 < toks_.size())
            ++pos_;
        return t;
    }

    SourceSpan span(const Token &t) const
    {
        return SourceSpan{file_, t.line, t.column, std::max<std::size_t>(1, t.text.size())};
    }

    [[noreturn]] void fail(const std::string &expected, const Token *at = nullptr) const
    {
        const Token &t = at ? *at : peek();
        const std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw Error("E_SYNTAX", expected + ", found " + found, "", span(t));
    }

    bool is_punct(std::string_view p, std::size_t k = 0) const
    {
        return peek(k).kind == Tok::Punct && peek(k).text == p;
    }
    bool is_word(std::string_view w, std::size_t k = 0) const
    {
        return peek(k).kind == Tok::Ident && peek(k).text == w;
    }
    void punct(std::string_view p)
    {
        if (!is_punct(p))
            fail("expected '" + std::string(p) + "'");
        next();
    }
    bool accept_punct(std::string_view p)
    {
        if (!is_punct(p))
            return false;
        next();
        return true;
    }
    void word(std::string_view w)
    {
        if (!is_word(w))
            fail("expected '" + std::string(w) + "'");
        next();
    }
    bool accept_word(std::string_view w)
    {
        if (!is_word(w))
            return false;
        next();
        return true;
    }
    const Token &name(const char *what = "a name")
    {
        if (peek().kind != Tok::Ident)
            fail(std::string("expected ") + what);
        return next();
    }

    std::int64_t integer(std::int64_t lo = std::numeric_limits<std::int64_t>::min(),
                         std::int64_t hi = std::numeric_limits<std::int64_t>::max());
    double number();
    Target side();
    std::optional<Target> opt_target();
    Endpoint endpoint(SourceSpan &sp);

    void top_item(Project &p);
    void diagram_item(Diagram &d, Scope scope);
    Node structure(NodeKind kind, const Token &kw);
    Node node_decl(const Token &kw);
    PrimArgs prim_args(const std::string &op, const Token &at);
    void wire_decl(Diagram &d, const Token &kw);

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::string file_;
};

std::int64_t Parser::integer(std::int64_t lo, std::int64_t hi)
{
    const Token &start = peek();
    bool neg = false;
    if (accept_punct("-"))
        neg = true;
    else
        accept_punct("+");
    if (peek().kind != Tok::Number)
        fail("expected an integer");
    const Token &t = next();
    std::string_view s = t.text;
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        s.remove_prefix(2);
        base = 16;
    }
    std::uint64_t mag = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), mag, base);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        fail("expected an integer", &t);
    if (mag > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) + (neg ? 1u : 0u))
        throw Error("E_SYNTAX", "integer out of range", "", span(start));
    const std::int64_t v = neg ? static_cast<std::int64_t>(0 - mag) : static_cast<std::int64_t>(mag);
    if (v < lo || v > hi)
        throw Error("E_SYNTAX", "integer " + std::to_string(v) + " out of range [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]",
                    "", span(start));
    return v;
}

double Parser::number()
{
    bool neg = false;
    if (accept_punct("-"))
        neg = true;
    else
        accept_punct("+");
    if (is_word("nan")) {
        next();
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (is_word("inf")) {
        next();
        return neg ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    }
    if (peek().kind != Tok::Number)
        fail("expected a number");
    const Token &t = next();
    double v = 0;
    if (t.text.size() > 2 && (t.text[1] == 'x' || t.text[1] == 'X')) {
        std::uint64_t mag = 0;
        auto res = std::from_chars(t.text.data() + 2, t.text.data() + t.text.size(), mag, 16);
        if (res.ec != std::errc())
            fail("expected a number", &t);
        v = static_cast<double>(mag);
    } else {
        auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (res.ec == std::errc::result_out_of_range)
            v = std::numeric_limits<double>::infinity();
        else if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
            fail("expected a number", &t);
    }
    return neg ? -v : v;
}

WireType Parser::type()
{
    const Token &t = peek();
    if (accept_punct("[")) {
        WireType elem = type();
        punct(";");
        const auto n = integer(0, 1 << 20);
        punct("]");
        return WireType::array(std::move(elem), static_cast<std::size_t>(n));
    }
    if (t.kind != Tok::Ident)
        fail("expected a type");
    next();
    if (t.text == "bool")
        return WireType::boolean();
    if (t.text == "i32")
        return WireType::int32();
    if (t.text == "f64")
        return WireType::float64();
    if (t.text == "fxp") {
        punct("<");
        const auto w = integer(-1000, 1000);
        punct(",");
        const auto i = integer(-1000, 1000);
        punct(">");
        if (!WireType::valid_fixed(static_cast<int>(w), static_cast<int>(i)))
            throw Error("E_SYNTAX", "invalid fixed-point format fxp<" + std::to_string(w) + "," + std::to_string(i) + ">",
                        "", span(t));
        return WireType::fixed(static_cast<int>(w), static_cast<int>(i));
    }
    if (t.text == "cluster") {
        punct("<");
        std::vector<WireType> fields;
        if (!is_punct(">")) {
            fields.push_back(type());
            while (accept_punct(","))
                fields.push_back(type());
        }
        punct(">");
        return WireType::cluster(std::move(fields));
    }
    fail("expected a type", &t);
}

Value Parser::literal(const WireType &t)
{
    const Token &start = peek();
    switch (t.kind()) {
    case TypeKind::Boolean:
        if (accept_word("true"))
            return Value::boolean(true);
        if (accept_word("false"))
            return Value::boolean(false);
        fail("expected true or false");
    case TypeKind::Int32:
        return Value::int32(static_cast<std::int32_t>(
            integer(std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max())));
    case TypeKind::Float64:
        return Value::float64(number());
    case TypeKind::FixedPoint: {
        if (accept_word("raw")) {
            punct("(");
            const auto r = integer(fxp::min_raw(t.word_bits()), fxp::max_raw(t.word_bits()));
            punct(")");
            return Value::fixed_raw(t, r);
        }
        const double d = number();
        const std::int64_t r = fxp::from_double(d, t, fxp::Overflow::Saturate);
        const double back = fxp::to_double(r, t);
        const double step = std::ldexp(1.0, -t.fraction_bits());
        if (std::isnan(d) || std::fabs(back - d) > step)
            throw Error("E_SYNTAX", "literal out of range for " + t.to_string(), "", span(start));
        return Value::fixed_raw(t, r);
    }
    case TypeKind::Array: {
        punct("[");
        std::vector<Value> elems;
        if (!is_punct("]")) {
            elems.push_back(literal(t.element()));
            while (accept_punct(","))
                elems.push_back(literal(t.element()));
        }
        punct("]");
        if (elems.size() != t.length())
            throw Error("E_SYNTAX", "array literal has " + std::to_string(elems.size()) + " elements, expected " +
                                        std::to_string(t.length()),
                        "", span(start));
        return Value::array(t.element(), std::move(elems));
    }
    case TypeKind::Cluster: {
        punct("(");
        std::vector<Value> fields;
        for (std::size_t i = 0; i < t.fields().size(); ++i) {
            if (i)
                punct(",");
            fields.push_back(literal(t.fields()[i]));
        }
        punct(")");
        return Value::cluster(std::move(fields));
    }
    }
    fail("expected a literal");
}

Target Parser::side()
{
    if (accept_word("host"))
        return Target::Host;
    if (accept_word("fabric"))
        return Target::Fabric;
    fail("expected 'host' or 'fabric'");
}

std::optional<Target> Parser::opt_target()
{
    if (!accept_word("target"))
        return std::nullopt;
    return side();
}

Endpoint Parser::endpoint(SourceSpan &sp)
{
    const Token &a = name("an endpoint");
    sp = span(a);
    if (accept_punct(".")) {
        const Token &b = name("a port name");
        sp.length = b.column + b.text.size() - a.column;
        return Endpoint{a.text, b.text};
    }
    return Endpoint{"", a.text};
}

void Parser::wire_decl(Diagram &d, const Token &kw)
{
    SourceSpan src_span;
    Endpoint src = endpoint(src_span);
    punct("->");
    std::vector<Endpoint> dsts;
    std::vector<SourceSpan> spans;
    do {
        SourceSpan s;
        dsts.push_back(endpoint(s));
        spans.push_back(s);
    } while (accept_punct(","));
    for (auto &w : d.wires) {
        if (w.src == src) {
            w.dsts.insert(w.dsts.end(), dsts.begin(), dsts.end());
            w.dst_spans.insert(w.dst_spans.end(), spans.begin(), spans.end());
            return;
        }
    }
    Wire w;
    w.src = std::move(src);
    w.dsts = std::move(dsts);
    w.dst_spans = std::move(spans);
    w.span = span(kw);
    d.wires.push_back(std::move(w));
}

PrimArgs Parser::prim_args(const std::string &op, const Token &at)
{
    const PrimitiveInfo *info = find_primitive(op);
    PrimArgs a;
    const bool has_parens = accept_punct("(");
    auto need_parens = [&] {
        if (!has_parens)
            fail("expected '(' with arguments for " + op);
    };
    switch (info->cls) {
    case PrimClass::Const:
        need_parens();
        a.type = type();
        punct(",");
        a.value = literal(*a.type);
        break;
    case PrimClass::Convert:
        need_parens();
        a.type = type();
        if (!a.type->is_scalar())
            throw Error("E_SYNTAX", "Convert target must be a scalar type", "", span(at));
        if (accept_punct(",")) {
            if (accept_word("wrap"))
                a.overflow = fxp::Overflow::Wrap;
            else if (accept_word("saturate"))
                a.overflow = fxp::Overflow::Saturate;
            else
                fail("expected 'wrap' or 'saturate'");
        }
        break;
    case PrimClass::ArrayBuild:
        need_parens();
        a.count = integer(0, 4096);
        break;
    case PrimClass::Biquad:
        need_parens();
        for (int k = 0; k < 5; ++k) {
            if (k)
                punct(",");
            a.coefficients.push_back(number());
        }
        break;
    case PrimClass::FifoRead:
    case PrimClass::FifoWrite:
        need_parens();
        a.ref = name("a channel name").text;
        if (accept_punct(","))
            a.timeout = integer(-1, std::numeric_limits<std::int32_t>::max());
        break;
    case PrimClass::RegRead:
    case PrimClass::RegWrite:
    case PrimClass::ScanRead:
    case PrimClass::ScanWrite:
    case PrimClass::AoWrite:
    case PrimClass::Ip:
        need_parens();
        a.ref = name("a name").text;
        break;
    case PrimClass::FileReadPCM:
        need_parens();
        a.ref = name("an input name").text;
        punct(",");
        a.count = integer(0, 1 << 20);
        break;
    default:
        if (has_parens && !is_punct(")"))
            fail("expected ')' (" + op + " takes no arguments)");
        break;
    }
    if (has_parens)
        punct(")");
    return a;
}

Node Parser::node_decl(const Token &kw)
{
    const Token &id = name("a node id");
    punct(":");
    Node n;
    n.id = id.text;
    n.span = span(kw);
    if (accept_word("sub")) {
        n.kind = NodeKind::SubVi;
        n.op = name("a VI name").text;
    } else {
        const Token &op = name("a primitive name");
        if (!find_primitive(op.text))
            throw Error("E_UNKNOWN_PRIMITIVE", "unknown primitive '" + op.text + "'", n.id, span(op));
        PrimArgs args = prim_args(op.text, op);
        Node built = make_primitive(n.id, op.text, std::move(args));
        built.span = n.span;
        n = std::move(built);
    }
    if (auto t = opt_target())
        n.target = *t;
    return n;
}

Node Parser::structure(NodeKind kind, const Token &kw)
{
    Node n;
    n.kind = kind;
    n.span = span(kw);
    n.id = name("a structure name").text;
    if (kind == NodeKind::Sctl) {
        word("clock");
        n.clock = name("a clock name").text;
        n.target = Target::Fabric;
    } else {
        if (kind == NodeKind::WhileLoop || kind == NodeKind::ForLoop) {
            while (is_word("unroll") || is_word("ii")) {
                n.hls.annotated = true;
                if (accept_word("unroll"))
                    n.hls.unroll = integer(1, 1 << 16);
                else {
                    word("ii");
                    n.hls.target_ii = integer(std::numeric_limits<std::int32_t>::min(),
                                              std::numeric_limits<std::int32_t>::max());
                }
            }
        }
        if (auto t = opt_target())
            n.target = *t;
    }
    punct("{");
    if (kind == NodeKind::Case) {
        Diagram header;
        std::vector<Diagram> frames;
        bool saw_default = false;
        while (!is_punct("}")) {
            const Token &k = peek();
            if (is_word("control") || is_word("indicator")) {
                if (!frames.empty())
                    fail("expected 'when' or 'default' (tunnels come before frames)");
                diagram_item(header, Scope::Case);
            } else if (accept_word("when")) {
                if (saw_default)
                    fail("expected '}' (default must be the last frame)", &k);
                n.case_labels.push_back(static_cast<std::int32_t>(
                    integer(std::numeric_limits<std::int32_t>::min(), std::numeric_limits<std::int32_t>::max())));
                punct("{");
                Diagram f;
                while (!is_punct("}"))
                    diagram_item(f, Scope::Frame);
                punct("}");
                frames.push_back(std::move(f));
            } else if (accept_word("default")) {
                if (saw_default)
                    throw Error("E_DUP_NAME", "second default frame", n.id, span(k));
                saw_default = true;
                punct("{");
                Diagram f;
                while (!is_punct("}"))
                    diagram_item(f, Scope::Frame);
                punct("}");
                frames.push_back(std::move(f));
            } else {
                fail("expected 'control', 'indicator', 'when', 'default' or '}'");
            }
        }
        punct("}");
        n.has_default = saw_default;
        for (auto &f : frames) {
            f.controls = header.controls;
            f.indicators = header.indicators;
        }
        n.bodies = std::move(frames);
        sync_structure_ports(n);
        return n;
    }
    Diagram body;
    body.has_index = true;
    body.has_stop = kind == NodeKind::WhileLoop || kind == NodeKind::Sctl;
    const Scope scope = kind == NodeKind::WhileLoop ? Scope::While : kind == NodeKind::ForLoop ? Scope::For : Scope::Sctl;
    while (!is_punct("}"))
        diagram_item(body, scope);
    punct("}");
    n.bodies.push_back(std::move(body));
    sync_structure_ports(n);
    return n;
}

void Parser::diagram_item(Diagram &d, Scope scope)
{
    const Token &kw = peek();
    if (kw.kind != Tok::Ident)
        fail("expected a declaration");
    const std::string k = kw.text;
    auto boundary = [&](std::vector<BoundaryPort> &list) {
        next();
        const Token &nm = name();
        punct(":");
        BoundaryPort p{nm.text, type(), span(nm)};
        list.push_back(std::move(p));
    };
    const bool frame = scope == Scope::Frame;
    const bool header = scope == Scope::Case;
    if (k == "control" && !frame)
        return boundary(d.controls);
    if (k == "indicator" && !frame)
        return boundary(d.indicators);
    if (header)
        fail("expected 'control', 'indicator', 'when', 'default' or '}'");
    if (k == "param" && (scope == Scope::Vi || scope == Scope::Sctl))
        return boundary(d.params);
    if (k == "shift" && (scope == Scope::While || scope == Scope::For || scope == Scope::Sctl))
        return boundary(d.shifts);
    next();
    if (k == "node") {
        d.nodes.push_back(node_decl(kw));
        return;
    }
    if (k == "wire")
        return wire_decl(d, kw);
    if (k == "while")
        return d.nodes.push_back(structure(NodeKind::WhileLoop, kw));
    if (k == "for")
        return d.nodes.push_back(structure(NodeKind::ForLoop, kw));
    if (k == "case")
        return d.nodes.push_back(structure(NodeKind::Case, kw));
    if (k == "sctl")
        return d.nodes.push_back(structure(NodeKind::Sctl, kw));
    fail("expected a declaration (node, wire, while, for, case, sctl, control, indicator, param, shift)", &kw);
}

void Parser::top_item(Project &p)
{
    const Token &kw = peek();
    if (kw.kind != Tok::Ident)
        fail("expected a top-level declaration");
    const std::string k = kw.text;
    next();
    if (k == "clock") {
        const Token &nm = name();
        ClockDecl c{nm.text, integer(1, std::numeric_limits<std::int64_t>::max()), span(nm)};
        word("Hz");
        p.clocks.push_back(std::move(c));
    } else if (k == "channel") {
        ChannelDecl c;
        const Token &nm = name();
        c.name = nm.text;
        c.span = span(nm);
        c.kind = ChannelKind::Fifo;
        word("fifo");
        punct("<");
        c.element = type();
        punct(",");
        c.capacity = integer(1, 1 << 24);
        punct(">");
        c.writer = side();
        punct("->");
        c.reader = side();
        if (accept_word("dma")) {
            DmaModel m;
            m.base_latency = integer(0, 1 << 24);
            m.per_element = integer(1, 1 << 24);
            m.burst = integer(1, 1 << 24);
            c.dma = m;
        }
        p.channels.push_back(std::move(c));
    } else if (k == "register") {
        ChannelDecl c;
        const Token &nm = name();
        c.name = nm.text;
        c.span = span(nm);
        c.kind = ChannelKind::Register;
        c.capacity = 1;
        punct("<");
        c.element = type();
        punct(">");
        if (accept_punct("="))
            c.initial = literal(c.element);
        if (is_word("host") || is_word("fabric")) {
            c.writer = side();
            punct("->");
            c.reader = side();
            c.endpoints_declared = true;
        } else {
            c.endpoints_declared = false;
        }
        p.channels.push_back(std::move(c));
    } else if (k == "scan") {
        if (p.scan)
            throw Error("E_DUP_NAME", "second scan declaration", "scan", span(kw));
        ScanDecl s;
        s.span = span(kw);
        s.period_us = integer(1, std::numeric_limits<std::int32_t>::max());
        word("us");
        punct("{");
        while (!is_punct("}")) {
            ScanChannelDecl c;
            if (accept_word("input"))
                c.output = false;
            else if (accept_word("output"))
                c.output = true;
            else
                fail("expected 'input', 'output' or '}'");
            const Token &nm = name();
            c.name = nm.text;
            c.span = span(nm);
            punct(":");
            c.type = type();
            while (true) {
                if (accept_word("gain"))
                    c.gain = number();
                else if (accept_word("offset"))
                    c.offset = number();
                else if (accept_word("bits"))
                    c.bits = static_cast<int>(integer(2, 32));
                else
                    break;
            }
            s.channels.push_back(std::move(c));
        }
        punct("}");
        p.scan = std::move(s);
    } else if (k == "ao") {
        AoDecl a;
        const Token &nm = name();
        a.name = nm.text;
        a.span = span(nm);
        word("clock");
        a.clock = name("a clock name").text;
        word("rate");
        a.rate_hz = integer(1, std::numeric_limits<std::int64_t>::max());
        word("Hz");
        if (accept_word("gain"))
            a.gain = number();
        p.aos.push_back(std::move(a));
    } else if (k == "ip") {
        const Token &nm = name();
        if (peek().kind != Tok::String)
            fail("expected a quoted path");
        p.ip_decls.push_back(IpDecl{nm.text, next().text, span(nm)});
    } else if (k == "clip") {
        const Token &nm = name();
        punct(":");
        p.clips.push_back(ClipDecl{nm.text, name("an IP name").text, span(nm)});
    } else if (k == "top") {
        p.top = name("a VI name").text;
    } else if (k == "vi") {
        VIGraph vi;
        const Token &nm = name("a VI name");
        vi.name = nm.text;
        vi.span = span(nm);
        if (auto t = opt_target())
            vi.target = *t;
        punct("{");
        while (!is_punct("}"))
            diagram_item(vi.diagram, Scope::Vi);
        punct("}");
        if (p.vis.count(vi.name))
            throw Error("E_DUP_NAME", "duplicate VI '" + vi.name + "'", vi.name, vi.span);
        p.vis.emplace(vi.name, std::move(vi));
    } else {
        fail("expected a top-level declaration (clock, channel, register, scan, ao, ip, clip, top, vi)", &kw);
    }
}

Project Parser::project()
{
    Project p;
    p.file = file_;
    while (peek().kind != Tok::End)
        top_item(p);
    return p;
}

// ---------------------------------------------------------------------------
// Post-parse resolution

template <class F>
void for_each_node(Diagram &d, F &&f)
{
    for (auto &n : d.nodes) {
        f(n);
        for (auto &b : n.bodies)
            for_each_node(b, f);
    }
}

void choose_top(Project &p)
{
    if (!p.top.empty() || p.vis.empty())
        return;
    if (p.vis.size() == 1) {
        p.top = p.vis.begin()->first;
        return;
    }
    std::set<std::string> used;
    for (auto &[name, vi] : p.vis)
        for_each_node(vi.diagram, [&](Node &n) {
            if (n.kind == NodeKind::SubVi)
                used.insert(n.op);
        });
    std::vector<std::string> roots;
    for (const auto &[name, vi] : p.vis)
        if (!used.count(name))
            roots.push_back(name);
    if (roots.size() != 1)
        throw Error("E_NO_TOP", "cannot infer the top-level VI; add `top NAME`", "", SourceSpan{p.file, 1, 1, 1});
    p.top = roots.front();
}

void resolve(Project &p, const ParseOptions &opts)
{
    for (const auto &decl : p.ip_decls) {
        if (p.ips.count(decl.name))
            throw Error("E_DUP_NAME", "duplicate IP '" + decl.name + "'", decl.name, decl.span);
        IpDescriptor d;
        try {
            if (opts.ip_resolver) {
                d = opts.ip_resolver(decl, p);
            } else {
                std::filesystem::path path(decl.path);
                if (path.is_relative() && !opts.base_dir.empty())
                    path = std::filesystem::path(opts.base_dir) / path;
                d = load_ip_file(path.string(), &p);
            }
        } catch (const Error &e) {
            Diagnostic diag = e.diagnostic();
            if (!diag.span.known())
                diag.span = decl.span;
            throw Error(diag);
        }
        d.name = decl.name;
        p.ips.emplace(decl.name, std::move(d));
    }
    for (const auto &c : p.clips) {
        const IpDescriptor *ip = p.find_ip(c.ip);
        if (!ip)
            throw Error("E_UNKNOWN_IP", "IP '" + c.ip + "' is not imported", c.name, c.span);
        if (ip->style != IpStyle::Clip)
            throw Error("E_IP_SCHEMA", "IP '" + c.ip + "' is not a CLIP", c.name, c.span);
    }
    for (auto &[name, vi] : p.vis) {
        for_each_node(vi.diagram, [&](Node &n) {
            if (n.kind == NodeKind::SubVi) {
                auto it = p.vis.find(n.op);
                if (it == p.vis.end())
                    throw Error("E_UNRESOLVED_SUBVI", "sub-VI '" + n.op + "' is not defined", n.id, n.span);
                sync_subvi_ports(n, it->second);
            } else if (n.kind == NodeKind::Primitive && n.op == "Ip") {
                const IpDescriptor *ip = p.find_ip(n.args.ref);
                if (!ip)
                    throw Error("E_UNKNOWN_IP", "IP '" + n.args.ref + "' is not imported", n.id, n.span);
                if (ip->style != IpStyle::Ipin)
                    throw Error("E_IP_SCHEMA", "IP '" + n.args.ref + "' is a CLIP and cannot be placed as a node",
                                n.id, n.span);
                n.in_ports = primitive_inputs(n.op, n.args, ip);
                n.out_ports = primitive_outputs(n.op, n.args, ip);
            }
        });
    }
    choose_top(p);
}

// ---------------------------------------------------------------------------
// Formatter

class Formatter {
public:
    std::string run(const Project &p);

private:
    void line(int depth, const std::string &s)
    {
        out_.append(static_cast<std::size_t>(depth) * 4, ' ');
        out_ += s;
        out_ += '\n';
    }
    void diagram(const Diagram &d, int depth, bool with_boundary);
    void node(const Node &n, int depth);
    static std::string args(const Node &n);

    std::string out_;
};

const char *side_name(Target t) { return t == Target::Fabric ? "fabric" : "host"; }

std::string Formatter::args(const Node &n)
{
    const PrimitiveInfo *info = find_primitive(n.op);
    const PrimArgs &a = n.args;
    if (!info)
        return "";
    switch (info->cls) {
    case PrimClass::Const:
        return "(" + (a.type ? a.type->to_string() : "?") + ", " + (a.value ? a.value->to_string() : "?") + ")";
    case PrimClass::Convert: {
        std::string s = "(" + (a.type ? a.type->to_string() : "?");
        if (a.overflow)
            s += *a.overflow == fxp::Overflow::Wrap ? ", wrap" : ", saturate";
        return s + ")";
    }
    case PrimClass::ArrayBuild:
        return "(" + std::to_string(a.count.value_or(0)) + ")";
    case PrimClass::Biquad: {
        std::string s = "(";
        for (std::size_t i = 0; i < a.coefficients.size(); ++i)
            s += (i ? ", " : "") + format_double(a.coefficients[i]);
        return s + ")";
    }
    case PrimClass::FifoRead:
    case PrimClass::FifoWrite:
        return "(" + a.ref + (a.timeout ? ", " + std::to_string(*a.timeout) : "") + ")";
    case PrimClass::FileReadPCM:
        return "(" + a.ref + ", " + std::to_string(a.count.value_or(0)) + ")";
    case PrimClass::RegRead:
    case PrimClass::RegWrite:
    case PrimClass::ScanRead:
    case PrimClass::ScanWrite:
    case PrimClass::AoWrite:
    case PrimClass::Ip:
        return "(" + a.ref + ")";
    default:
        return "";
    }
}

void Formatter::node(const Node &n, int depth)
{
    const std::string target = n.target == Target::Inherit ? "" : std::string(" target ") + side_name(n.target);
    switch (n.kind) {
    case NodeKind::Primitive:
        line(depth, "node " + n.id + ": " + n.op + args(n) + target);
        return;
    case NodeKind::SubVi:
        line(depth, "node " + n.id + ": sub " + n.op + target);
        return;
    case NodeKind::Sctl:
        line(depth, "sctl " + n.id + " clock " + n.clock + " {");
        if (!n.bodies.empty())
            diagram(n.bodies[0], depth + 1, true);
        line(depth, "}");
        return;
    case NodeKind::WhileLoop:
    case NodeKind::ForLoop: {
        std::string head = (n.kind == NodeKind::WhileLoop ? "while " : "for ") + n.id;
        if (n.hls.annotated) {
            head += " unroll " + std::to_string(n.hls.unroll);
            if (n.hls.target_ii)
                head += " ii " + std::to_string(*n.hls.target_ii);
        }
        line(depth, head + target + " {");
        if (!n.bodies.empty())
            diagram(n.bodies[0], depth + 1, true);
        line(depth, "}");
        return;
    }
    case NodeKind::Case: {
        line(depth, "case " + n.id + target + " {");
        if (!n.bodies.empty()) {
            for (const auto &c : n.bodies[0].controls)
                line(depth + 1, "control " + c.name + ": " + c.type.to_string());
            for (const auto &c : n.bodies[0].indicators)
                line(depth + 1, "indicator " + c.name + ": " + c.type.to_string());
        }
        for (std::size_t i = 0; i < n.bodies.size(); ++i) {
            const bool dflt = i >= n.case_labels.size();
            line(depth + 1, dflt ? "default {" : "when " + std::to_string(n.case_labels[i]) + " {");
            diagram(n.bodies[i], depth + 2, false);
            line(depth + 1, "}");
        }
        line(depth, "}");
        return;
    }
    }
}

void Formatter::diagram(const Diagram &d, int depth, bool with_boundary)
{
    if (with_boundary) {
        for (const auto &p : d.controls)
            line(depth, "control " + p.name + ": " + p.type.to_string());
        for (const auto &p : d.indicators)
            line(depth, "indicator " + p.name + ": " + p.type.to_string());
        for (const auto &p : d.params)
            line(depth, "param " + p.name + ": " + p.type.to_string());
        for (const auto &p : d.shifts)
            line(depth, "shift " + p.name + ": " + p.type.to_string());
    }
    std::vector<std::string> order;
    try {
        order = topo_order(d);
    } catch (const Error &) {
        for (const auto &n : d.nodes)
            order.push_back(n.id);
        std::sort(order.begin(), order.end());
    }
    std::map<std::string, std::size_t> rank;
    for (std::size_t i = 0; i < order.size(); ++i)
        rank.emplace(order[i], i);
    for (const auto &id : order)
        if (const Node *n = d.find_node(id))
            node(*n, depth);

    std::vector<const Wire *> wires;
    for (const auto &w : d.wires)
        wires.push_back(&w);
    auto key = [&](const Wire *w) {
        const std::size_t r = w->src.boundary() ? 0 : 1 + (rank.count(w->src.node) ? rank[w->src.node] : 0);
        return std::make_tuple(r, w->src.node, w->src.port);
    };
    std::stable_sort(wires.begin(), wires.end(), [&](const Wire *a, const Wire *b) { return key(a) < key(b); });
    for (const Wire *w : wires) {
        auto dsts = w->dsts;
        std::sort(dsts.begin(), dsts.end());
        std::string s = "wire " + w->src.to_string() + " -> ";
        for (std::size_t i = 0; i < dsts.size(); ++i)
            s += (i ? ", " : "") + dsts[i].to_string();
        line(depth, s);
    }
}

std::string Formatter::run(const Project &p)
{
    bool any = false;
    for (const auto &c : p.clocks) {
        line(0, "clock " + c.name + " " + std::to_string(c.hz) + " Hz");
        any = true;
    }
    for (const auto &c : p.channels) {
        if (c.kind == ChannelKind::Fifo) {
            std::string s = "channel " + c.name + " fifo<" + c.element.to_string() + ", " + std::to_string(c.capacity) +
                            "> " + side_name(c.writer) + " -> " + side_name(c.reader);
            if (c.dma)
                s += " dma " + std::to_string(c.dma->base_latency) + " " + std::to_string(c.dma->per_element) + " " +
                     std::to_string(c.dma->burst);
            line(0, s);
        } else {
            std::string s = "register " + c.name + " <" + c.element.to_string() + ">";
            if (c.initial)
                s += " = " + c.initial->to_string();
            if (c.endpoints_declared)
                s += std::string(" ") + side_name(c.writer) + " -> " + side_name(c.reader);
            line(0, s);
        }
        any = true;
    }
    if (p.scan) {
        line(0, "scan " + std::to_string(p.scan->period_us) + " us {");
        for (const auto &c : p.scan->channels)
            line(1, std::string(c.output ? "output " : "input ") + c.name + ": " + c.type.to_string() + " gain " +
                        format_double(c.gain) + " offset " + format_double(c.offset) + " bits " +
                        std::to_string(c.bits));
        line(0, "}");
        any = true;
    }
    for (const auto &a : p.aos) {
        line(0, "ao " + a.name + " clock " + a.clock + " rate " + std::to_string(a.rate_hz) + " Hz gain " +
                    format_double(a.gain));
        any = true;
    }
    for (const auto &ip : p.ip_decls) {
        line(0, "ip " + ip.name + " \"" + ip.path + "\"");
        any = true;
    }
    for (const auto &c : p.clips) {
        line(0, "clip " + c.name + ": " + c.ip);
        any = true;
    }
    if (!p.top.empty()) {
        line(0, "top " + p.top);
        any = true;
    }
    for (const auto &[name, vi] : p.vis) {
        if (any)
            out_ += '\n';
        any = true;
        line(0, "vi " + name + (vi.target == Target::Inherit ? "" : std::string(" target ") + side_name(vi.target)) +
                    " {");
        diagram(vi.diagram, 1, true);
        line(0, "}");
    }
    return std::move(out_);
}

} // namespace

Project parse(std::string_view text, const ParseOptions &opts)
{
    Parser parser(Lexer(text, opts.file).run(), opts.file);
    Project p = parser.project();
    resolve(p, opts);
    if (opts.validate) {
        Diagnostics ds = validate(p);
        if (!ds.empty()) {
            for (auto &d : ds)
                if (!d.span.known())
                    d.span = SourceSpan{opts.file, 1, 1, 1};
            throw Error(std::move(ds));
        }
    }
    return p;
}

Project parse_file(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("E_IO", "cannot read '" + path + "'", path);
    std::stringstream ss;
    ss << in.rdbuf();
    ParseOptions opts;
    opts.file = path;
    opts.base_dir = std::filesystem::path(path).parent_path().string();
    return parse(ss.str(), opts);
}

std::string format(const Project &p) { return Formatter().run(p); }

WireType parse_type_text(std::string_view text)
{
    Parser parser(Lexer(text, "").run(), "");
    WireType t = parser.type();
    parser.expect_end();
    return t;
}

Value parse_literal_text(std::string_view text, const WireType &type)
{
    Parser parser(Lexer(text, "").run(), "");
    Value v = parser.literal(type);
    parser.expect_end();
    return v;
}

} // namespace rioflow
