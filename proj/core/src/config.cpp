#include "hsl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hsl/csv.hpp"

namespace hsl {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
    throw std::invalid_argument("config line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& v, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) bad_line(line, "trailing characters in number '" + v + "'");
        return d;
    } catch (const std::invalid_argument&) {
        bad_line(line, "expected a number, got '" + v + "'");
    } catch (const std::out_of_range&) {
        bad_line(line, "number out of range: '" + v + "'");
    }
}

std::uint64_t parse_uint(const std::string& v, std::size_t line) {
    const double d = parse_double(v, line);
    if (d < 0 || d != std::floor(d)) bad_line(line, "expected a nonnegative integer, got '" + v + "'");
    return static_cast<std::uint64_t>(d);
}

bool parse_bool(const std::string& v, std::size_t line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_line(line, "expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    const std::string last = trim(cur);
    if (!last.empty() || !out.empty()) out.push_back(last);
    return out;
}

std::vector<double> parse_double_list(const std::string& v, std::size_t line) {
    std::vector<double> out;
    for (const std::string& tok : split_list(v)) {
        if (tok.empty()) bad_line(line, "empty element in list");
        out.push_back(parse_double(tok, line));
    }
    return out;
}

std::vector<std::size_t> parse_index_list(const std::string& v, std::size_t line) {
    std::vector<std::size_t> out;
    for (const std::string& tok : split_list(v)) {
        if (tok.empty()) bad_line(line, "empty element in list");
        out.push_back(static_cast<std::size_t>(parse_uint(tok, line)));
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

std::string join(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

// A setter per (section, key); parse walks the file and dispatches.
using Setter = std::function<void(ExperimentConfig&, const std::string&, std::size_t)>;
using KeyTable = std::map<std::string, std::map<std::string, Setter>>;

const KeyTable& key_table() {
    static const KeyTable table = [] {
        KeyTable t;
        auto& problem = t["problem"];
        problem["d"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.problem.d = parse_uint(v, l);
        };
        problem["prior_law"] = [](ExperimentConfig& c, const std::string& v, std::size_t) {
            c.problem.prior_law = v;
        };
        problem["prior_param"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.problem.prior_param = parse_double(v, l);
        };
        problem["diffusion_law"] = [](ExperimentConfig& c, const std::string& v, std::size_t) {
            c.problem.diffusion_law = v;
        };
        problem["diffusion_param"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.problem.diffusion_param = parse_double(v, l);
        };
        problem["observed"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.problem.observed = parse_index_list(v, l);
        };
        problem["sigma_b"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.problem.sigma_b = parse_double(v, l);
        };
        problem["q_target"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.problem.q_target = parse_double(v, l);
        };
        problem["y_observed"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.problem.y_observed = parse_double_list(v, l);
        };
        problem["horizon_t"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.problem.horizon_t = parse_double(v, l);
        };

        auto& sde = t["sde"];
        sde["steps"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sde.steps = parse_uint(v, l);
        };
        sde["t_floor"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sde.t_floor = parse_double(v, l);
        };
        sde["n_paths"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sde.n_paths = parse_uint(v, l);
        };
        sde["seed"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sde.seed = parse_uint(v, l);
        };

        auto& dsm = t["dsm"];
        dsm["n_samples"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.dsm.n_samples = parse_uint(v, l);
        };
        dsm["bins"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.dsm.bins = parse_uint(v, l);
        };
        dsm["export_csv"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.dsm.export_csv = parse_bool(v, l);
        };

        auto& oracle = t["oracle"];
        oracle["prior"] = [](ExperimentConfig& c, const std::string& v, std::size_t) {
            c.oracle.prior = v;
        };
        oracle["psi_param"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.psi_param = parse_double(v, l);
        };
        oracle["k_bound"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.k_bound = parse_double(v, l);
        };
        oracle["l_bound"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.l_bound = parse_double(v, l);
        };
        oracle["quad_nodes"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.quad_nodes = parse_uint(v, l);
        };
        oracle["quad_half_width"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.quad_half_width = parse_double(v, l);
        };
        oracle["mc_samples"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.mc_samples = parse_uint(v, l);
        };
        oracle["t_min"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.t_min = parse_double(v, l);
        };
        oracle["t_count"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.t_count = parse_uint(v, l);
        };
        oracle["lattice_points"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.lattice_points = parse_uint(v, l);
        };
        oracle["lattice_half_width"] = [](ExperimentConfig& c, const std::string& v,
                                          std::size_t l) {
            c.oracle.lattice_half_width = parse_double(v, l);
        };
        oracle["t_lattice"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.oracle.t_lattice = parse_double_list(v, l);
        };

        auto& score_norm = t["score_norm"];
        score_norm["t_list"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.score_norm.t_list = parse_double_list(v, l);
        };
        score_norm["blowup_t_min"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.score_norm.blowup_t_min = parse_double(v, l);
        };
        score_norm["blowup_t_max"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.score_norm.blowup_t_max = parse_double(v, l);
        };
        score_norm["blowup_t_count"] = [](ExperimentConfig& c, const std::string& v,
                                          std::size_t l) {
            c.score_norm.blowup_t_count = parse_uint(v, l);
        };
        score_norm["mc_samples"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.score_norm.mc_samples = parse_uint(v, l);
        };

        auto& train = t["train"];
        train["lift_width"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.lift_width = static_cast<int>(parse_uint(v, l));
        };
        train["layers"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.layers = static_cast<int>(parse_uint(v, l));
        };
        train["modes"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.modes = static_cast<int>(parse_uint(v, l));
        };
        train["time_features"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.time_features = static_cast<int>(parse_uint(v, l));
        };
        train["batch"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.batch = parse_uint(v, l);
        };
        train["steps"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.steps = parse_uint(v, l);
        };
        train["lr_initial"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.lr_initial = parse_double(v, l);
        };
        train["lr_final"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.lr_final = parse_double(v, l);
        };
        train["grid_min"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.grid_min = static_cast<int>(parse_uint(v, l));
        };
        train["grid_max"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.grid_max = static_cast<int>(parse_uint(v, l));
        };
        train["beta_start"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.beta_start = parse_double(v, l);
        };
        train["beta_end"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.beta_end = parse_double(v, l);
        };
        train["schedule_steps"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.train.schedule_steps = static_cast<int>(parse_uint(v, l));
        };
        train["checkpoint"] = [](ExperimentConfig& c, const std::string& v, std::size_t) {
            c.train.checkpoint = v;
        };

        auto& sample = t["sample"];
        sample["checkpoint"] = [](ExperimentConfig& c, const std::string& v, std::size_t) {
            c.sample.checkpoint = v;
        };
        sample["n_samples"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sample.n_samples = parse_uint(v, l);
        };
        sample["grid_sizes"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sample.grid_sizes = parse_index_list(v, l);
        };
        sample["extra_grid"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sample.extra_grid = parse_uint(v, l);
        };
        sample["marginals_at"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sample.marginals_at = parse_double_list(v, l);
        };
        sample["kde_points"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sample.kde_points = parse_uint(v, l);
        };
        sample["hist_bins"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sample.hist_bins = parse_uint(v, l);
        };
        sample["separation_min"] = [](ExperimentConfig& c, const std::string& v, std::size_t l) {
            c.sample.separation_min = parse_double(v, l);
        };

        auto& output = t["output"];
        output["directory"] = [](ExperimentConfig& c, const std::string& v, std::size_t) {
            c.output.directory = v;
        };
        output["formats"] = [](ExperimentConfig& c, const std::string& v, std::size_t) {
            c.output.formats = v;
        };
        return t;
    }();
    return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig config;
    const KeyTable& table = key_table();
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') bad_line(line_no, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (table.find(section) == table.end())
                bad_line(line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) bad_line(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) bad_line(line_no, "key outside any section");
        const auto& keys = table.at(section);
        const auto it = keys.find(key);
        if (it == keys.end())
            bad_line(line_no, "unknown key '" + key + "' in section [" + section + "]");
        it->second(config, value, line_no);
    }
    return config;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "[problem]\n";
    out << "d = " << c.problem.d << "\n";
    out << "prior_law = " << c.problem.prior_law << "\n";
    out << "prior_param = " << format_double(c.problem.prior_param) << "\n";
    out << "diffusion_law = " << c.problem.diffusion_law << "\n";
    out << "diffusion_param = " << format_double(c.problem.diffusion_param) << "\n";
    out << "observed = " << join(c.problem.observed) << "\n";
    out << "sigma_b = " << format_double(c.problem.sigma_b) << "\n";
    out << "q_target = " << format_double(c.problem.q_target) << "\n";
    out << "y_observed = " << join(c.problem.y_observed) << "\n";
    out << "horizon_t = " << format_double(c.problem.horizon_t) << "\n";
    out << "\n[sde]\n";
    out << "steps = " << c.sde.steps << "\n";
    out << "t_floor = " << format_double(c.sde.t_floor) << "\n";
    out << "n_paths = " << c.sde.n_paths << "\n";
    out << "seed = " << c.sde.seed << "\n";
    out << "\n[dsm]\n";
    out << "n_samples = " << c.dsm.n_samples << "\n";
    out << "bins = " << c.dsm.bins << "\n";
    out << "export_csv = " << (c.dsm.export_csv ? "true" : "false") << "\n";
    out << "\n[oracle]\n";
    out << "prior = " << c.oracle.prior << "\n";
    out << "psi_param = " << format_double(c.oracle.psi_param) << "\n";
    out << "k_bound = " << format_double(c.oracle.k_bound) << "\n";
    out << "l_bound = " << format_double(c.oracle.l_bound) << "\n";
    out << "quad_nodes = " << c.oracle.quad_nodes << "\n";
    out << "quad_half_width = " << format_double(c.oracle.quad_half_width) << "\n";
    out << "mc_samples = " << c.oracle.mc_samples << "\n";
    out << "t_min = " << format_double(c.oracle.t_min) << "\n";
    out << "t_count = " << c.oracle.t_count << "\n";
    out << "lattice_points = " << c.oracle.lattice_points << "\n";
    out << "lattice_half_width = " << format_double(c.oracle.lattice_half_width) << "\n";
    out << "t_lattice = " << join(c.oracle.t_lattice) << "\n";
    out << "\n[score_norm]\n";
    out << "t_list = " << join(c.score_norm.t_list) << "\n";
    out << "blowup_t_min = " << format_double(c.score_norm.blowup_t_min) << "\n";
    out << "blowup_t_max = " << format_double(c.score_norm.blowup_t_max) << "\n";
    out << "blowup_t_count = " << c.score_norm.blowup_t_count << "\n";
    out << "mc_samples = " << c.score_norm.mc_samples << "\n";
    out << "\n[train]\n";
    out << "lift_width = " << c.train.lift_width << "\n";
    out << "layers = " << c.train.layers << "\n";
    out << "modes = " << c.train.modes << "\n";
    out << "time_features = " << c.train.time_features << "\n";
    out << "batch = " << c.train.batch << "\n";
    out << "steps = " << c.train.steps << "\n";
    out << "lr_initial = " << format_double(c.train.lr_initial) << "\n";
    out << "lr_final = " << format_double(c.train.lr_final) << "\n";
    out << "grid_min = " << c.train.grid_min << "\n";
    out << "grid_max = " << c.train.grid_max << "\n";
    out << "beta_start = " << format_double(c.train.beta_start) << "\n";
    out << "beta_end = " << format_double(c.train.beta_end) << "\n";
    out << "schedule_steps = " << c.train.schedule_steps << "\n";
    out << "checkpoint = " << c.train.checkpoint << "\n";
    out << "\n[sample]\n";
    out << "checkpoint = " << c.sample.checkpoint << "\n";
    out << "n_samples = " << c.sample.n_samples << "\n";
    out << "grid_sizes = " << join(c.sample.grid_sizes) << "\n";
    out << "extra_grid = " << c.sample.extra_grid << "\n";
    out << "marginals_at = " << join(c.sample.marginals_at) << "\n";
    out << "kde_points = " << c.sample.kde_points << "\n";
    out << "hist_bins = " << c.sample.hist_bins << "\n";
    out << "separation_min = " << format_double(c.sample.separation_min) << "\n";
    out << "\n[output]\n";
    out << "directory = " << c.output.directory << "\n";
    out << "formats = " << c.output.formats << "\n";
    return out.str();
}

ProblemSpec make_problem(const ProblemConfig& p) {
    CovarianceSpectrum prior =
        build_spectrum(decay_law_from_string(p.prior_law), p.prior_param, p.d);
    CovarianceSpectrum diffusion =
        build_spectrum(decay_law_from_string(p.diffusion_law), p.diffusion_param, p.d);
    ObservationModel obs;
    obs.observed_indices = p.observed;
    obs.sigma_b = p.sigma_b;
    if (p.q_target > 0.0) {
        obs.mode_sigmas.resize(p.observed.size());
        for (std::size_t k = 0; k < p.observed.size(); ++k) {
            const double mu = prior.eigenvalues.at(p.observed[k] - 1);
            obs.mode_sigmas[k] = std::sqrt(mu / p.q_target);
        }
    }
    return ProblemSpec(std::move(prior), std::move(diffusion), std::move(obs), p.horizon_t);
}

}  // namespace hsl
