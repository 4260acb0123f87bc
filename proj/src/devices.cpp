#include "maqkd/devices.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

#include "maqkd/config_io.hpp"

#ifndef MAQKD_SOURCE_DATA_DIR
#define MAQKD_SOURCE_DATA_DIR "data"
#endif

namespace maqkd::devices {
namespace {

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError(field + ": " + why);
}

bool is_prob(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void SourceModel::validate() const {
  require(is_prob(eta_sps), "eta_sps", "must be in [0,1]");
  require(is_prob(p1), "p1", "must be in [0,1]");
  require(is_prob(p2), "p2", "must be in [0,1]");
  require(std::abs(p1 + p2 - 1.0) <= 1e-12, "p1/p2", "must sum to 1");
}

void MemoryModel::validate() const {
  require(is_prob(eta_w), "eta_w", "must be in [0,1]");
  require(is_prob(eta_r0), "eta_r0", "must be in [0,1]");
  require(coherence_time >= 0.0, "coherence_time", "must be >= 0");
  require(interaction_time >= 0.0, "interaction_time", "must be >= 0");
  require(init_time >= 0.0, "init_time", "must be >= 0");
  require(n_spectral_modes >= 1, "n_spectral_modes", "must be >= 1");
  require(max_rep_rate > 0.0, "max_rep_rate", "must be > 0");
}

void ChannelModel::validate() const {
  require(length >= 0.0, "length", "must be >= 0");
  require(attenuation_length > 0.0, "attenuation_length", "must be > 0");
}

void ConverterModel::validate() const {
  require(eta_fc >= 0.0 && eta_fc <= 1.0, "eta_fc", "must be in [0,1]");
  require(added_noise >= 0.0 && added_noise < 1.0, "added_noise",
          "must be in [0,1)");
}

void DetectorSpec::validate() const {
  require(is_prob(efficiency), "detector efficiency", "must be in [0,1]");
  require(dark_rate >= 0.0, "dark_rate", "must be >= 0");
  require(dead_time >= 0.0, "dead_time", "must be >= 0");
}

std::string to_string(Scheme s) {
  return s == Scheme::Nla ? "nla" : "quasi_epr";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "nla") return Scheme::Nla;
  if (s == "quasi_epr") return Scheme::QuasiEpr;
  throw ConfigError("scheme: unknown value '" + s + "'");
}

void SystemConfig::validate() const {
  source.validate();
  memory.validate();
  channel.validate();
  converter.validate();
  side_detector.validate();
  middle_detector.validate();
  require(is_prob(nla_reflectivity), "nla_reflectivity", "must be in [0,1]");
  require(pulse_duration > 0.0, "pulse_duration", "must be > 0");
  require(repetition_period > 0.0, "repetition_period", "must be > 0");
  require(pulse_duration <= repetition_period * (1.0 + 1e-12),
          "pulse_duration", "must not exceed the repetition period");
  require(rep_rate() <= memory.max_rep_rate * (1.0 + 1e-12),
          "repetition_period", "repetition rate exceeds memory max_rep_rate");
  require(error_correction_inefficiency >= 1.0,
          "error_correction_inefficiency", "must be >= 1");
  require(is_prob(mode_mismatch), "mode_mismatch", "must be in [0,1]");
  require(side_dark_prob_override < 1.0, "side_dark_prob",
          "must be below 1");
}

fock::DensityMatrix sps_emit(const SourceModel& src, int cutoff,
                             int max_total) {
  src.validate();
  if (cutoff < 2) throw ConfigError("sps_emit: cutoff must be >= 2");
  auto state = fock::vacuum_state(1, cutoff, max_total);
  fock::Matrix rho = state.amplitudes();
  const auto& basis = state.basis();
  rho(basis.index({0}), basis.index({0})) = 1.0 - src.eta_sps;
  rho(basis.index({1}), basis.index({1})) = src.eta_sps * src.p1;
  const int idx2 = basis.index({2});
  if (idx2 >= 0)
    rho(idx2, idx2) = src.eta_sps * src.p2;
  else if (src.p2 > 0.0)
    throw ConfigError("sps_emit: basis cannot hold the two-photon emission");
  return fock::DensityMatrix(state.basis_ptr(), std::move(rho));
}

double arm_transmissivity(const ChannelModel& ch) {
  return std::exp(-ch.length / (2.0 * ch.attenuation_length));
}

double channel_transmissivity(const ChannelModel& ch) {
  return std::exp(-ch.length / ch.attenuation_length);
}

double memory_read_efficiency(const MemoryModel& mem, double t) {
  if (t < 0.0) throw ConfigError("memory_read_efficiency: t must be >= 0");
  if (t == 0.0) return mem.eta_r0;
  return mem.eta_r0 * std::exp(-t / mem.coherence_time);
}

double dark_count_prob(const DetectorSpec& det, double pulse_duration,
                       const ConverterModel& conv, bool at_side) {
  double d = det.dark_rate * pulse_duration;
  if (at_side) d += conv.added_noise;
  return d;
}

fock::DetectorModel realize_detector(const SystemConfig& cfg, bool at_side) {
  const DetectorSpec& spec = at_side ? cfg.side_detector : cfg.middle_detector;
  fock::DetectorModel det;
  det.efficiency = spec.efficiency;
  det.dead_time = spec.dead_time;
  if (at_side && cfg.side_dark_prob_override >= 0.0)
    det.dark_prob = cfg.side_dark_prob_override;
  else
    det.dark_prob =
        dark_count_prob(spec, cfg.pulse_duration, cfg.converter, at_side);
  return det;
}

std::vector<std::string> preset_names() {
  return {"ideal",  "WV1",    "WV2",    "WV3",    "WV4",   "CA1",
          "CA2",    "CA3",    "REIC1",  "REIC2",  "REIC3", "REIC4",
          "REIC5",  "ExC",    "EnC",    "EnE",    "CA2+BW", "CA2+MI",
          "CA3+BW", "CA1+BW", "Eu+DD",  "Eu+MM",  "Pr+DD", "Pr+MM",
          "no-memory-baseline"};
}

std::string data_dir() {
  if (const char* env = std::getenv("MAQKD_DATA_DIR")) return env;
  namespace fs = std::filesystem;
  if (fs::exists(fs::path(MAQKD_SOURCE_DATA_DIR) / "presets"))
    return MAQKD_SOURCE_DATA_DIR;
  return "data";
}

SystemConfig load_preset(const std::string& name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw ConfigError("unknown preset '" + name + "'");
  namespace fs = std::filesystem;
  const fs::path path = fs::path(data_dir()) / "presets" / (name + ".cfg");
  SystemConfig cfg = load_config_file(path.string());
  if (cfg.name != name)
    throw ConfigError("preset file " + path.string() +
                      " carries mismatched name '" + cfg.name + "'");
  return cfg;
}

}  // namespace maqkd::devices
