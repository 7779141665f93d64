#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

std::set<std::string> split_formats(const std::string &s)
{
    std::set<std::string> out;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ','))
        if (!f.empty() && f != "none")
            out.insert(f);
    return out;
}

bool split_kv(const std::string &kv, std::string &k, std::string &v)
{
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        return false;
    k = kv.substr(0, eq);
    v = kv.substr(eq + 1);
    return true;
}

} // namespace

int main(int argc, char **argv)
{
    using namespace rioflow::cli;
    CLI::App app{"rioflow: dataflow projects on a simulated host and FPGA fabric"};
    app.require_subcommand(1);

    Options o;
    std::int64_t ticks = 0;
    std::string trace_formats;
    std::vector<std::string> clocks, params, inputs;

    auto common = [&](CLI::App *c, bool run_opts) {
        c->add_option("project", o.project, "Project file (.gtext)")->required();
        c->add_option("--out", o.out, "Output directory");
        c->add_option("--clock", clocks, "Clock override NAME=HZ");
        c->add_option("--param", params, "Register or control value NAME=VALUE");
        c->add_option("--config", o.config, "Run configuration JSON");
        if (!run_opts)
            return;
        c->add_option("--ticks", ticks, "Tick budget");
        c->add_option("--seed", o.seed, "Scheduler seed");
        c->add_option("--trace", trace_formats, "Trace formats: vcd,csv or none");
        c->add_option("--input", inputs, "PCM input NAME=PATH");
    };

    auto *check = app.add_subcommand("check", "Validate, partition and timing-check a project");
    common(check, false);
    auto *sim = app.add_subcommand("sim", "Run a project on the host or co-simulated with the fabric");
    common(sim, true);
    sim->add_option("--mode", o.mode, "host or cosim")->check(CLI::IsMember({"host", "cosim"}));
    sim->add_option("--stimulus", o.stimulus, "Scan stimulus CSV (tick,channel,raw_value)");
    auto *est = app.add_subcommand("estimate", "Timing and resource report for every SCTL and annotated loop");
    common(est, false);
    auto *demo = app.add_subcommand("demo", "Run the equalizer demo and report DAC timing");
    common(demo, true);
    demo->add_option("--samples", o.samples, "Length of the generated 1 kHz tone when no --input is given");

    std::string tone_path;
    double freq = 1000.0, amp = 0.5;
    std::int64_t rate = 44100, n = 44100;
    auto *tone = app.add_subcommand("tone", "Write a sine tone as 16-bit PCM");
    tone->add_option("path", tone_path, "Output file")->required();
    tone->add_option("--freq", freq, "Frequency in Hz");
    tone->add_option("--amp", amp, "Amplitude, full scale = 1");
    tone->add_option("--rate", rate, "Sample rate in Hz");
    tone->add_option("--samples", n, "Number of samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    if (tone->parsed())
        return cmd_tone(tone_path, freq, amp, rate, n, std::cout, std::cerr);

    for (const auto &kv : clocks) {
        std::string k, v;
        if (!split_kv(kv, k, v)) {
            std::cerr << "error E_USAGE: --clock expects NAME=HZ, got '" << kv << "'\n";
            return kUsage;
        }
        try {
            o.clocks[k] = std::stoll(v);
        } catch (const std::exception &) {
            std::cerr << "error E_USAGE: bad clock rate '" << v << "'\n";
            return kUsage;
        }
    }
    for (const auto &kv : params) {
        std::string k, v;
        if (!split_kv(kv, k, v)) {
            std::cerr << "error E_USAGE: --param expects NAME=VALUE, got '" << kv << "'\n";
            return kUsage;
        }
        o.params[k] = v;
    }
    for (const auto &kv : inputs) {
        std::string k, v;
        if (!split_kv(kv, k, v)) {
            std::cerr << "error E_USAGE: --input expects NAME=PATH, got '" << kv << "'\n";
            return kUsage;
        }
        o.inputs[k] = v;
    }
    if (ticks != 0)
        o.ticks = ticks;
    if (sim->parsed())
        o.trace = trace_formats.empty() ? std::set<std::string>{"vcd", "csv"} : split_formats(trace_formats);
    else
        o.trace = split_formats(trace_formats);
    for (const auto &f : o.trace)
        if (f != "vcd" && f != "csv") {
            std::cerr << "error E_USAGE: unknown trace format '" << f << "'\n";
            return kUsage;
        }

    if (check->parsed())
        return cmd_check(o, std::cout, std::cerr);
    if (sim->parsed())
        return cmd_sim(o, std::cout, std::cerr);
    if (est->parsed())
        return cmd_estimate(o, std::cout, std::cerr);
    return cmd_demo(o, std::cout, std::cerr);
}
