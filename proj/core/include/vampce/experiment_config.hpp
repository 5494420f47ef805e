#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "vampce/harness.hpp"

namespace vampce {

/// "start:step:stop" (inclusive) or a comma-separated list of values in dB.
std::vector<double> parse_snr_grid(std::string_view text);
std::vector<std::size_t> parse_size_list(std::string_view text);
std::vector<std::string> parse_name_list(std::string_view text);
/// "lambda/gamma_h/gamma_w;..." starting points.
std::vector<Hyperparams> parse_initializations(std::string_view text);

/// Applies one key=value assignment. Unknown keys and bad values throw ConfigError.
void apply_setting(ExperimentSpec& spec, std::string_view key, std::string_view value);

/// Plain-text experiment file: key = value per line, '#' starts a comment.
/// Also collects an "inits" entry when present.
struct ConfigFile {
    ExperimentSpec spec;
    std::vector<Hyperparams> initializations;
};
ConfigFile parse_config(std::istream& in, ExperimentSpec base = {});
ConfigFile load_config(const std::filesystem::path& path, ExperimentSpec base = {});

/// Keys accepted by apply_setting, for help output.
const std::vector<std::string>& config_keys();

} // namespace vampce
