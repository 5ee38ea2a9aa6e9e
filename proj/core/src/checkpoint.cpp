#include "hsl/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace hsl {

namespace {
constexpr char kMagic[8] = {'H', 'S', 'L', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["arch"] = {{"lift_width", ckpt.params.arch.lift_width},
                      {"n_spectral_layers", ckpt.params.arch.n_spectral_layers},
                      {"n_modes_kept", ckpt.params.arch.n_modes_kept},
                      {"time_features", ckpt.params.arch.time_features}};
    header["stats"] = {{"mean_s", ckpt.params.stats.mean_s}, {"sd_s", ckpt.params.stats.sd_s},
                       {"mean_y", ckpt.params.stats.mean_y}, {"sd_y", ckpt.params.stats.sd_y},
                       {"mean_x", ckpt.params.stats.mean_x}, {"sd_x", ckpt.params.stats.sd_x}};
    header["schedule"] = {{"variance_start", ckpt.schedule.variance_start},
                          {"variance_end", ckpt.schedule.variance_end},
                          {"n_steps", ckpt.schedule.n_steps}};
    nlohmann::json sections = nlohmann::json::array();
    ckpt.params.visit_arrays([&sections](const std::string& name, const double*, std::size_t n) {
        sections.push_back({{"name", name}, {"count", n}});
    });
    header["sections"] = std::move(sections);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    const std::string head = header.dump();
    const std::uint64_t head_len = head.size();
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    ckpt.params.visit_arrays([&out](const std::string&, const double* data, std::size_t n) {
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(n * sizeof(double)));
    });
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic (not a checkpoint?): " + path);
    std::uint64_t head_len = 0;
    in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!in) throw std::runtime_error("load_checkpoint: truncated header: " + path);
    const nlohmann::json header = nlohmann::json::parse(head);

    Checkpoint ckpt;
    OperatorArch arch;
    arch.lift_width = header.at("arch").at("lift_width").get<int>();
    arch.n_spectral_layers = header.at("arch").at("n_spectral_layers").get<int>();
    arch.n_modes_kept = header.at("arch").at("n_modes_kept").get<int>();
    arch.time_features = header.at("arch").at("time_features").get<int>();
    ckpt.params = OperatorParams::zeros(arch);
    const auto& st = header.at("stats");
    ckpt.params.stats = {st.at("mean_s"), st.at("sd_s"), st.at("mean_y"),
                         st.at("sd_y"),   st.at("mean_x"), st.at("sd_x")};
    const auto& sc = header.at("schedule");
    ckpt.schedule.variance_start = sc.at("variance_start");
    ckpt.schedule.variance_end = sc.at("variance_end");
    ckpt.schedule.n_steps = sc.at("n_steps");

    const auto& sections = header.at("sections");
    std::size_t idx = 0;
    ckpt.params.visit_arrays([&](const std::string& name, double* data, std::size_t n) {
        if (idx >= sections.size())
            throw std::runtime_error("load_checkpoint: section directory too short");
        const auto& s = sections[idx];
        if (s.at("name").get<std::string>() != name || s.at("count").get<std::size_t>() != n)
            throw std::runtime_error("load_checkpoint: section mismatch at " + name);
        in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
        ++idx;
    });
    if (!in || idx != sections.size())
        throw std::runtime_error("load_checkpoint: truncated payload: " + path);
    return ckpt;
}

}  // namespace hsl
