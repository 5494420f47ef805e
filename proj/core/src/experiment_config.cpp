#include "vampce/experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

namespace vampce {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            return parts;
        }
        start = pos + 1;
    }
}

double to_double(std::string_view s, std::string_view what) {
    s = trim(s);
    // from_chars for double is in libstdc++ 11
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError("bad number for " + std::string(what) + ": '" + std::string(s) + "'");
    }
    return v;
}

std::uint64_t to_u64(std::string_view s, std::string_view what) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("bad integer for " + std::string(what) + ": '" + std::string(s) + "'");
    }
    return v;
}

std::size_t to_size(std::string_view s, std::string_view what) {
    return static_cast<std::size_t>(to_u64(s, what));
}

int to_int(std::string_view s, std::string_view what) {
    const auto v = to_u64(s, what);
    if (v > 1000000000ULL) {
        throw ConfigError(std::string(what) + " is too large");
    }
    return static_cast<int>(v);
}

bool to_bool(std::string_view s, std::string_view what) {
    s = trim(s);
    if (s == "1" || s == "true" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "0" || s == "false" || s == "no" || s == "off") {
        return false;
    }
    throw ConfigError("bad boolean for " + std::string(what) + ": '" + std::string(s) + "'");
}

} // namespace

std::vector<double> parse_snr_grid(std::string_view text) {
    text = trim(text);
    if (text.empty()) {
        throw ConfigError("empty SNR grid");
    }
    std::vector<double> grid;
    if (text.find(':') != std::string_view::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) {
            throw ConfigError("SNR range must be start:step:stop");
        }
        const double start = to_double(parts[0], "snr start");
        const double step = to_double(parts[1], "snr step");
        const double stop = to_double(parts[2], "snr stop");
        if (!(step > 0.0) || stop < start) {
            throw ConfigError("SNR range needs step > 0 and stop >= start");
        }
        const double count = std::floor((stop - start) / step + 1e-9);
        if (count > 1e5) {
            throw ConfigError("SNR range has too many points");
        }
        for (int i = 0; i <= static_cast<int>(count); ++i) {
            grid.push_back(start + step * i);
        }
        return grid;
    }
    for (auto p : split(text, ',')) {
        grid.push_back(to_double(p, "snr"));
    }
    return grid;
}

std::vector<std::size_t> parse_size_list(std::string_view text) {
    text = trim(text);
    if (text.empty()) {
        throw ConfigError("empty list");
    }
    std::vector<std::size_t> out;
    for (auto p : split(text, ',')) {
        const auto v = to_size(p, "list entry");
        if (v == 0) {
            throw ConfigError("list entries must be positive");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> parse_name_list(std::string_view text) {
    text = trim(text);
    if (text.empty()) {
        throw ConfigError("empty estimator list");
    }
    std::vector<std::string> out;
    for (auto p : split(text, ',')) {
        if (p.empty()) {
            throw ConfigError("empty estimator name");
        }
        out.emplace_back(p);
    }
    return out;
}

std::vector<Hyperparams> parse_initializations(std::string_view text) {
    std::vector<Hyperparams> out;
    for (auto set : split(trim(text), ';')) {
        const auto v = split(set, '/');
        if (v.size() != 3) {
            throw ConfigError("initialization must be lambda/gamma_h/gamma_w");
        }
        out.push_back({to_double(v[0], "lambda"), to_double(v[1], "gamma_h"), to_double(v[2], "gamma_w")});
    }
    return out;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "K", "N", "M", "L", "N_zp", "n_null", "pilot_pattern", "pilot_scheme", "noise_mode",
        "lambda", "gamma_h", "channel_file", "estimators", "snr", "pilots", "trials", "seed", "out",
        "max_iterations", "xi_threshold", "theta_tolerance", "zeta", "damping", "divergence_streak",
        "sbl_max_iterations", "sbl_prune", "sbl_tolerance", "omp_lambda_guess", "threads", "timing",
        "inits"};
    return keys;
}

void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "K") {
        spec.K = to_size(value, key);
    } else if (key == "N") {
        spec.N = to_size(value, key);
    } else if (key == "M") {
        spec.M = to_size(value, key);
    } else if (key == "L") {
        spec.L = to_size(value, key);
    } else if (key == "N_zp") {
        spec.N_zp = to_size(value, key);
    } else if (key == "n_null") {
        spec.n_null = to_size(value, key);
    } else if (key == "pilot_pattern") {
        spec.pattern = parse_pilot_pattern(value);
    } else if (key == "pilot_scheme") {
        spec.scheme = parse_pilot_scheme(value);
    } else if (key == "noise_mode") {
        if (value == "time_domain") {
            spec.noise_mode = NoiseMode::time_domain;
        } else if (value == "whitened") {
            spec.noise_mode = NoiseMode::whitened;
        } else {
            throw ConfigError("noise_mode must be time_domain or whitened");
        }
    } else if (key == "lambda") {
        spec.channel.lambda = to_double(value, key);
    } else if (key == "gamma_h") {
        spec.channel.gamma_h = to_double(value, key);
    } else if (key == "channel_file") {
        if (value.empty()) {
            spec.channel_file.reset();
        } else {
            spec.channel_file = std::filesystem::path(std::string(value));
        }
    } else if (key == "estimators") {
        spec.estimators = parse_name_list(value);
    } else if (key == "snr") {
        spec.snr_db = parse_snr_grid(value);
    } else if (key == "pilots") {
        spec.pilot_counts = parse_size_list(value);
    } else if (key == "trials") {
        spec.trials = to_size(value, key);
    } else if (key == "seed") {
        spec.seed = to_u64(value, key);
    } else if (key == "out") {
        spec.out = std::string(value);
    } else if (key == "max_iterations") {
        spec.vamp.max_iterations = to_int(value, key);
    } else if (key == "xi_threshold") {
        spec.vamp.xi_threshold = to_double(value, key);
    } else if (key == "theta_tolerance") {
        spec.vamp.theta_tolerance = to_double(value, key);
    } else if (key == "zeta") {
        spec.vamp.zeta = to_double(value, key);
    } else if (key == "damping") {
        spec.vamp.damping = to_double(value, key);
    } else if (key == "divergence_streak") {
        spec.vamp.divergence_streak = to_int(value, key);
    } else if (key == "sbl_max_iterations") {
        spec.sbl.max_iterations = to_int(value, key);
    } else if (key == "sbl_prune") {
        spec.sbl.prune_threshold = to_double(value, key);
    } else if (key == "sbl_tolerance") {
        spec.sbl.tolerance = to_double(value, key);
    } else if (key == "omp_lambda_guess") {
        spec.omp_lambda_guess = to_double(value, key);
    } else if (key == "threads") {
        spec.threads = to_size(value, key);
    } else if (key == "timing") {
        spec.record_wall_time = to_bool(value, key);
    } else {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
}

ConfigFile parse_config(std::istream& in, ExperimentSpec base) {
    ConfigFile cfg;
    cfg.spec = std::move(base);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) {
            s = s.substr(0, hash);
        }
        s = trim(s);
        if (s.empty()) {
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(s.substr(0, eq));
        const auto value = trim(s.substr(eq + 1));
        try {
            if (key == "inits") {
                cfg.initializations = parse_initializations(value);
            } else {
                apply_setting(cfg.spec, key, value);
            }
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ConfigFile load_config(const std::filesystem::path& path, ExperimentSpec base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    return parse_config(in, std::move(base));
}

} // namespace vampce
