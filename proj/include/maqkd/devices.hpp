#pragma once

#include <string>
#include <vector>

#include "maqkd/fock.hpp"

// Parameterized hardware models and named presets for the experiment
// configurations used by the rate pipeline.
namespace maqkd::devices {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Probabilistic single-photon source: vacuum with probability 1 - eta_sps,
// otherwise a mixture of one- and two-photon emission.
struct SourceModel {
  double eta_sps = 1.0;
  double p1 = 1.0;
  double p2 = 0.0;
  void validate() const;
};

struct MemoryModel {
  double eta_w = 1.0;            // writing efficiency
  double eta_r0 = 1.0;           // reading efficiency right after loading
  double coherence_time = 0.0;   // T_r, seconds (may be +inf)
  double interaction_time = 0.0; // tau_int, seconds
  double init_time = 0.0;        // tau_init, seconds
  int n_spectral_modes = 1;      // N
  double max_rep_rate = 0.0;     // Hz (may be +inf)
  void validate() const;
};

struct ChannelModel {
  double length = 0.0;              // L, km
  double attenuation_length = 17.3; // L_att, km
  void validate() const;
};

struct ConverterModel {
  double eta_fc = 1.0;       // conversion efficiency
  double added_noise = 0.0;  // extra per-pulse background at side detectors
  void validate() const;
};

// Detector described by its rate-level parameters; the per-pulse dark
// probability follows from the gate duration.
struct DetectorSpec {
  double efficiency = 1.0;
  double dark_rate = 0.0;   // gamma_dc, counts per second
  double dead_time = 1e-9;  // tau_M, seconds
  void validate() const;
};

enum class Scheme { Nla, QuasiEpr };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SystemConfig {
  std::string name;
  Scheme scheme = Scheme::QuasiEpr;
  double nla_reflectivity = 0.2;  // eta, NLA splitting only
  SourceModel source;
  MemoryModel memory;
  ChannelModel channel;
  ConverterModel converter;
  DetectorSpec side_detector;
  DetectorSpec middle_detector;
  double pulse_duration = 1e-9;      // tau_p, seconds
  double repetition_period = 1e-9;   // T = 1/R_S, seconds
  double error_correction_inefficiency = 1.16;  // f
  double mode_mismatch = 0.0;  // effective distinguishability loss
  // Per-pulse dark probability override for side detectors (< 0: derive
  // from side_detector.dark_rate * pulse_duration). Used by dark-count
  // sweeps, where the quoted number absorbs converter and memory noise.
  double side_dark_prob_override = -1.0;

  double rep_rate() const { return 1.0 / repetition_period; }
  void validate() const;
};

// Single-mode SPS output state:
// (1-eta_sps)|0><0| + eta_sps (p1 |1><1| + p2 |2><2|).
fock::DensityMatrix sps_emit(const SourceModel& src, int cutoff,
                             int max_total = -1);

// Per-arm transmissivity exp(-L / (2 L_att)); users sit at L/2 from the
// middle node.
double arm_transmissivity(const ChannelModel& ch);

// End-to-end transmissivity exp(-L / L_att).
double channel_transmissivity(const ChannelModel& ch);

// eta_r0 * exp(-t / T_r).
double memory_read_efficiency(const MemoryModel& mem, double t);

// gamma_dc * tau_p, plus the converter background when at a side BSM.
double dark_count_prob(const DetectorSpec& det, double pulse_duration,
                       const ConverterModel& conv, bool at_side);

// DetectorModel for the Fock-space POVM, with the dark probability
// realized for the given gate.
fock::DetectorModel realize_detector(const SystemConfig& cfg, bool at_side);

std::vector<std::string> preset_names();
SystemConfig load_preset(const std::string& name);

// Directory holding the preset files. Resolution order: MAQKD_DATA_DIR
// environment variable, then the compiled-in source-tree path, then
// "./data".
std::string data_dir();

}  // namespace maqkd::devices
