#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace rioflow::cli {

enum Exit : int { kOk = 0, kDesignError = 1, kUsage = 2, kRuntime = 3 };

struct Options {
    std::string project;
    std::string mode = "cosim"; // sim: host | cosim
    std::optional<std::int64_t> ticks;
    std::uint64_t seed = 1;
    std::string out = "rioflow-out";
    std::map<std::string, std::int64_t> clocks;
    std::set<std::string> trace; // vcd, csv
    std::map<std::string, std::string> params; // register or control NAME=VALUE
    std::map<std::string, std::string> inputs; // PCM input NAME=PATH
    std::string stimulus;                      // scan stimulus CSV
    std::string config;                        // JSON: dma overrides, host budget, thresholds
    std::int64_t samples = 10000;              // demo: length of the generated tone
};

int cmd_check(const Options &o, std::ostream &out, std::ostream &err);
int cmd_sim(const Options &o, std::ostream &out, std::ostream &err);
int cmd_estimate(const Options &o, std::ostream &out, std::ostream &err);
int cmd_demo(const Options &o, std::ostream &out, std::ostream &err);

/// Writes a 16-bit little-endian PCM tone.
int cmd_tone(const std::string &path, double freq_hz, double amplitude, std::int64_t rate_hz, std::int64_t samples,
             std::ostream &out, std::ostream &err);

/// Exit code for an error code: E_IO and E_USAGE are usage errors, run-time
/// faults are 3, everything else is a design error.
int exit_code_for(const std::string &code);

} // namespace rioflow::cli
