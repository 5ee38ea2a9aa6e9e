// manifest.hpp — machine-parseable run record: config hash, seed, wall
// clock, and one entry per executed check with its measured value and
// tolerance. Emitted exactly once per run, also on failure.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hsl {

struct CheckResult {
    std::string name;
    std::string status;  // pass | fail | not_applicable
    double measured = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    double wall_clock_sec = 0.0;
    std::string error;  // nonempty when the run aborted
    std::vector<CheckResult> checks;
    std::vector<std::string> outputs;

    void add_check(const std::string& name, bool pass, double measured, double tolerance,
                   const std::string& note = "");
    void add_not_applicable(const std::string& name, const std::string& note);
    bool all_pass() const;

    std::string to_json() const;
    void write(const std::string& path) const;
};

const char* tool_version();

}  // namespace hsl
