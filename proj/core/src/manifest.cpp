#include "hsl/manifest.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

namespace hsl {

const char* tool_version() { return "0.1.0"; }

void RunManifest::add_check(const std::string& name, bool pass, double measured, double tolerance,
                            const std::string& note) {
    checks.push_back({name, pass ? "pass" : "fail", measured, tolerance, note});
}

void RunManifest::add_not_applicable(const std::string& name, const std::string& note) {
    checks.push_back({name, "not_applicable", 0.0, 0.0, note});
}

bool RunManifest::all_pass() const {
    if (!error.empty()) return false;
    for (const CheckResult& c : checks)
        if (c.status == "fail") return false;
    return true;
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["tool"] = "hsl";
    j["version"] = tool_version();
    j["command"] = command;
    char hash_buf[19];
    std::snprintf(hash_buf, sizeof(hash_buf), "0x%016llx",
                  static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash_buf;
    j["seed"] = seed;
    j["threads"] = threads;
    j["wall_clock_sec"] = wall_clock_sec;
    j["status"] = !error.empty() ? "error" : (all_pass() ? "pass" : "fail");
    if (!error.empty()) j["error"] = error;
    nlohmann::json jc = nlohmann::json::array();
    for (const CheckResult& c : checks) {
        nlohmann::json e = {{"name", c.name}, {"status", c.status}};
        if (c.status != "not_applicable") {
            e["measured"] = c.measured;
            e["tolerance"] = c.tolerance;
        }
        if (!c.note.empty()) e["note"] = c.note;
        jc.push_back(std::move(e));
    }
    j["checks"] = std::move(jc);
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << to_json();
}

}  // namespace hsl
