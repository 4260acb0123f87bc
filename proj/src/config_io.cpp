#include "maqkd/config_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace maqkd::devices {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& value, const std::string& key,
                    const std::string& origin) {
  if (value == "inf" || value == "+inf")
    return std::numeric_limits<double>::infinity();
  try {
    size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing garbage");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(origin + ": field '" + key + "' has invalid value '" +
                      value + "'");
  }
}

}  // namespace

SystemConfig parse_config(std::istream& in, const std::string& origin) {
  SystemConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second)
      throw ConfigError(origin + ": duplicate key '" + key + "'");

    auto num = [&] { return parse_number(value, key, origin); };
    if (key == "name") cfg.name = value;
    else if (key == "scheme") cfg.scheme = scheme_from_string(value);
    else if (key == "nla_reflectivity") cfg.nla_reflectivity = num();
    else if (key == "eta_sps") cfg.source.eta_sps = num();
    else if (key == "p1") cfg.source.p1 = num();
    else if (key == "p2") cfg.source.p2 = num();
    else if (key == "eta_w") cfg.memory.eta_w = num();
    else if (key == "eta_r0") cfg.memory.eta_r0 = num();
    else if (key == "coherence_time") cfg.memory.coherence_time = num();
    else if (key == "interaction_time") cfg.memory.interaction_time = num();
    else if (key == "init_time") cfg.memory.init_time = num();
    else if (key == "n_spectral_modes")
      cfg.memory.n_spectral_modes = static_cast<int>(num());
    else if (key == "max_rep_rate") cfg.memory.max_rep_rate = num();
    else if (key == "length") cfg.channel.length = num();
    else if (key == "attenuation_length")
      cfg.channel.attenuation_length = num();
    else if (key == "eta_fc") cfg.converter.eta_fc = num();
    else if (key == "added_noise") cfg.converter.added_noise = num();
    else if (key == "side_detector_efficiency")
      cfg.side_detector.efficiency = num();
    else if (key == "side_dark_rate") cfg.side_detector.dark_rate = num();
    else if (key == "side_dead_time") cfg.side_detector.dead_time = num();
    else if (key == "middle_detector_efficiency")
      cfg.middle_detector.efficiency = num();
    else if (key == "middle_dark_rate") cfg.middle_detector.dark_rate = num();
    else if (key == "middle_dead_time") cfg.middle_detector.dead_time = num();
    else if (key == "pulse_duration") cfg.pulse_duration = num();
    else if (key == "repetition_period") cfg.repetition_period = num();
    else if (key == "error_correction_inefficiency")
      cfg.error_correction_inefficiency = num();
    else if (key == "mode_mismatch") cfg.mode_mismatch = num();
    else if (key == "side_dark_prob") cfg.side_dark_prob_override = num();
    else
      throw ConfigError(origin + ": unknown key '" + key + "'");
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

}  // namespace maqkd::devices
