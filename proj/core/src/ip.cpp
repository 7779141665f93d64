#include "rioflow/ip.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rioflow/gtext.hpp"

namespace rioflow {

namespace {

using nlohmann::json;

[[noreturn]] void schema(const std::string &msg, const std::string &subject = {})
{
    throw Error("E_IP_SCHEMA", msg, subject);
}

std::int64_t get_int(const json &j, const char *what)
{
    if (!j.is_number_integer())
        schema(std::string(what) + " must be an integer");
    return j.get<std::int64_t>();
}

std::vector<std::int64_t> int_list(const json &j, const char *what, std::size_t len)
{
    if (!j.is_array() || j.size() != len)
        schema(std::string(what) + " must be a list of " + std::to_string(len) + " integers");
    std::vector<std::int64_t> v;
    for (const auto &e : j)
        v.push_back(get_int(e, what));
    return v;
}

std::vector<std::vector<std::int64_t>> matrix(const json &j, const char *what, std::size_t rows, std::size_t cols)
{
    if (!j.is_array() || j.size() != rows)
        schema(std::string(what) + " must have " + std::to_string(rows) + " rows");
    std::vector<std::vector<std::int64_t>> m;
    for (const auto &r : j)
        m.push_back(int_list(r, what, cols));
    return m;
}

std::int64_t to_raw(const Value &v) { return v.raw(); }

Value from_raw(fxp::wide r, const WireType &t)
{
    switch (t.kind()) {
    case TypeKind::Boolean:
        return Value::boolean(r != 0);
    case TypeKind::Int32:
        return Value::int32(static_cast<std::int32_t>(fxp::wrap(r, 32)));
    default:
        return Value::fixed_raw(t, fxp::wrap(r, t.word_bits()));
    }
}

} // namespace

IpDescriptor import_ip(std::string_view json_text, const Project *project)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        schema(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        schema("descriptor must be a JSON object");

    IpDescriptor d;
    if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty())
        schema("missing string field 'name'");
    d.name = j["name"].get<std::string>();

    if (!j.contains("style") || !j["style"].is_string())
        schema("missing field 'style'", d.name);
    const std::string style = j["style"].get<std::string>();
    if (style == "CLIP")
        d.style = IpStyle::Clip;
    else if (style == "IPIN")
        d.style = IpStyle::Ipin;
    else
        schema("style must be CLIP or IPIN", d.name);

    if (!j.contains("ports") || !j["ports"].is_array())
        schema("missing list 'ports'", d.name);
    std::set<std::string> names;
    for (const auto &p : j["ports"]) {
        if (!p.is_object() || !p.contains("name") || !p["name"].is_string() || !p.contains("dir") ||
            !p["dir"].is_string() || !p.contains("type") || !p["type"].is_string())
            schema("each port needs string fields name, dir and type", d.name);
        IpPort port;
        port.name = p["name"].get<std::string>();
        const std::string dir = p["dir"].get<std::string>();
        if (dir != "in" && dir != "out")
            schema("port direction must be 'in' or 'out'", d.name + "." + port.name);
        port.output = dir == "out";
        try {
            port.type = parse_type_text(p["type"].get<std::string>());
        } catch (const Error &) {
            schema("bad port type '" + p["type"].get<std::string>() + "'", d.name + "." + port.name);
        }
        if (!(port.type.is(TypeKind::Boolean) || port.type.is(TypeKind::Int32) || port.type.is(TypeKind::FixedPoint)))
            schema("IP ports carry bool, i32 or fixed point", d.name + "." + port.name);
        if (!names.insert(port.name).second)
            schema("duplicate port '" + port.name + "'", d.name);
        d.ports.push_back(std::move(port));
    }
    const std::size_t m = d.inputs().size();
    const std::size_t n = d.outputs().size();
    if (n == 0)
        schema("an IP needs at least one output port", d.name);

    if (!j.contains("behavior") || !j["behavior"].is_object())
        schema("missing object 'behavior'", d.name);
    const json &b = j["behavior"];
    const std::string kind = b.value("kind", std::string());
    if (kind == "linear") {
        d.behavior.kind = IpBehavior::Kind::Linear;
        d.behavior.a = b.contains("A") ? matrix(b["A"], "A", n, n)
                                        : std::vector<std::vector<std::int64_t>>(n, std::vector<std::int64_t>(n, 0));
        d.behavior.b = b.contains("B") ? matrix(b["B"], "B", n, m)
                                        : std::vector<std::vector<std::int64_t>>(n, std::vector<std::int64_t>(m, 0));
        d.behavior.c = b.contains("c") ? int_list(b["c"], "c", n) : std::vector<std::int64_t>(n, 0);
        d.behavior.initial_state = b.contains("init") ? int_list(b["init"], "init", n) : std::vector<std::int64_t>(n, 0);
    } else if (kind == "table") {
        d.behavior.kind = IpBehavior::Kind::Table;
        if (!b.contains("entries") || !b["entries"].is_array())
            schema("table behavior needs 'entries'", d.name);
        for (const auto &e : b["entries"]) {
            if (!e.is_object() || !e.contains("in") || !e.contains("out"))
                schema("table entries need 'in' and 'out'", d.name);
            d.behavior.table.emplace_back(int_list(e["in"], "in", m), int_list(e["out"], "out", n));
        }
        d.behavior.table_default = b.contains("default") ? int_list(b["default"], "default", n)
                                                         : std::vector<std::int64_t>(n, 0);
    } else {
        schema("behavior kind must be 'linear' or 'table'", d.name);
    }

    if (d.style == IpStyle::Ipin) {
        d.latency = j.contains("latency") ? get_int(j["latency"], "latency") : 0;
        if (d.latency < 0)
            schema("latency must be >= 0", d.name);
        if (d.latency == 0) {
            if (!j.contains("depth_ns") || !j["depth_ns"].is_number() || j["depth_ns"].get<double>() < 0)
                schema("a latency-0 IPIN needs a non-negative 'depth_ns'", d.name);
        }
        if (j.contains("depth_ns")) {
            if (!j["depth_ns"].is_number())
                schema("depth_ns must be a number", d.name);
            d.depth_ns = j["depth_ns"].get<double>();
        }
    } else {
        if (!j.contains("clock") || !j["clock"].is_string())
            schema("a CLIP must declare its clock", d.name);
        d.clock = j["clock"].get<std::string>();
        if (project && !project->find_clock(d.clock))
            throw Error("E_IP_CLOCK_UNDECLARED", "clock '" + d.clock + "' is not declared in the project", d.name);
    }

    if (j.contains("resources")) {
        const json &r = j["resources"];
        if (!r.is_object())
            schema("resources must be an object", d.name);
        auto field = [&](const char *k) {
            const std::int64_t v = r.contains(k) ? get_int(r[k], k) : 0;
            if (v < 0)
                schema(std::string(k) + " must be >= 0", d.name);
            return v;
        };
        d.resources = {field("lut"), field("ff"), field("dsp"), field("bram")};
    }
    return d;
}

IpDescriptor load_ip_file(const std::string &path, const Project *project)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("E_IP_SCHEMA", "cannot read IP descriptor '" + path + "'", path);
    std::stringstream ss;
    ss << in.rdbuf();
    return import_ip(ss.str(), project);
}

IpInstance::IpInstance(const IpDescriptor &desc) : desc_(desc), ins_(desc.inputs()), outs_(desc.outputs())
{
    reset();
}

void IpInstance::reset()
{
    state_ = desc_.behavior.initial_state;
    state_.resize(outs_.size(), 0);
    pipeline_.clear();
    current_.clear();
    for (const auto &p : outs_)
        current_.push_back(Value::zero(p.type));
    if (desc_.style == IpStyle::Ipin)
        for (std::int64_t k = 0; k < desc_.latency; ++k)
            pipeline_.push_back(current_);
}

std::vector<Value> IpInstance::compute(const std::vector<Value> &inputs)
{
    const IpBehavior &b = desc_.behavior;
    std::vector<Value> out;
    out.reserve(outs_.size());
    if (b.kind == IpBehavior::Kind::Linear) {
        std::vector<std::int64_t> next(outs_.size());
        for (std::size_t r = 0; r < outs_.size(); ++r) {
            fxp::wide acc = b.c[r];
            for (std::size_t k = 0; k < state_.size(); ++k)
                acc += static_cast<fxp::wide>(b.a[r][k]) * state_[k];
            for (std::size_t k = 0; k < ins_.size() && k < inputs.size(); ++k)
                acc += static_cast<fxp::wide>(b.b[r][k]) * to_raw(inputs[k]);
            Value v = from_raw(acc, outs_[r].type);
            next[r] = v.raw();
            out.push_back(std::move(v));
        }
        state_ = std::move(next);
        return out;
    }
    std::vector<std::int64_t> key;
    for (std::size_t k = 0; k < ins_.size() && k < inputs.size(); ++k)
        key.push_back(to_raw(inputs[k]));
    const std::vector<std::int64_t> *row = &b.table_default;
    for (const auto &[in, o] : b.table)
        if (in == key) {
            row = &o;
            break;
        }
    for (std::size_t r = 0; r < outs_.size(); ++r)
        out.push_back(from_raw((*row)[r], outs_[r].type));
    return out;
}

std::vector<Value> IpInstance::step(const std::vector<Value> &inputs)
{
    std::vector<Value> y = compute(inputs);
    if (desc_.style == IpStyle::Ipin && desc_.latency > 0) {
        pipeline_.push_back(std::move(y));
        current_ = std::move(pipeline_.front());
        pipeline_.pop_front();
    } else {
        current_ = std::move(y);
    }
    return current_;
}

} // namespace rioflow
