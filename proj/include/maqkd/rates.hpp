#pragma once

#include <functional>
#include <vector>

#include "maqkd/devices.hpp"
#include "maqkd/protocols.hpp"

// Assembles per-round probabilities into secret key rate versus distance:
// loading statistics of the two sides, decoherence averaging over the
// waiting time, the repeaterless bound and the no-memory baseline.
namespace maqkd::rates {

// Shannon binary entropy in bits, with 0 log 0 := 0.
double binary_entropy(double q);

// Law of Delta = |N_A - N_B| for independent geometric(p) loading times.
struct WaitingDistribution {
  double p = 1.0;
  double p_zero() const { return p / (2.0 - p); }
  double p_delta(int k) const;  // k >= 1
};

struct LoadingStatistics {
  // E[max(N_A, N_B)] = 2/p - 1/(2p - p^2).
  double expected_rounds = 1.0;
  WaitingDistribution waiting;
  // Throughput interpretation: successful loads of both sides per round.
  double p_sbsm() const { return 1.0 / expected_rounds; }
};

LoadingStatistics loading_statistics(double p);

// E[exp(-Delta T / T_r)] over the waiting distribution, closed form.
// Multiplies the earlier-loaded side's reading efficiency.
double decay_factor(const devices::MemoryModel& mem, double repetition_period,
                    double p);

struct TimingModel {
  double tau_w = 0.0;  // writing: interaction + measurement
  double tau_r = 0.0;  // reading: interaction + measurement + re-init
  double period = 0.0;
  static TimingModel from_config(const devices::SystemConfig& cfg);
};

struct RatePoint {
  double length_km = 0.0;
  double p_sbsm = 0.0;
  double p_mbsm = 0.0;
  double y11 = 0.0;
  double e_x = 0.0;
  double e_z = 0.0;
  double r_per_pulse = 0.0;   // clamped at 0
  double r_per_second = 0.0;  // clamped at 0
  // Raw key fraction 1 - h(e_X) - f h(e_Z), possibly negative.
  double key_fraction_raw = 0.0;
  double expected_rounds = 1.0;
};

RatePoint secret_key_rate(const devices::SystemConfig& cfg, double length_km);

// Repeaterless bound -log2(1 - exp(-L/L_att)), bits per pulse.
double plob_bound(double length_km, double attenuation_length);

struct NoMemoryPoint {
  double length_km = 0.0;
  double yield = 0.0;
  double e_x = 0.0;
  double e_z = 0.0;
  double r_per_pulse = 0.0;
  double r_per_second = 0.0;
};

// Direct MDI-QKD with the two users' photons meeting at the middle BSM.
NoMemoryPoint no_memory_rate(const devices::SystemConfig& cfg,
                             double length_km);

// Asymptotic yield proportionality (up to a constant): (1-eta)^2 e^{-L/L_att}
// for the amplifier scheme, e^{-L/(2 L_att)} for the interfered-pair scheme.
double asymptotic_yield(devices::Scheme scheme, double eta, double length_km,
                        double attenuation_length);

// Bisection on sign changes of rate_a - rate_b, to +-0.5 km. Throws
// ConfigError when the endpoints do not bracket a crossing.
double crossover_distance(const std::function<double(double)>& rate_a,
                          const std::function<double(double)>& rate_b,
                          double lo_km, double hi_km);

// Grid search over the amplifier splitting ratio; returns the best value
// found (no optimality claim beyond the grid).
double best_nla_reflectivity(const devices::SystemConfig& cfg,
                             double length_km,
                             const std::vector<double>& grid);

}  // namespace maqkd::rates
