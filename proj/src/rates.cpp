#include "maqkd/rates.hpp"

#include <algorithm>
#include <cmath>

namespace maqkd::rates {

namespace dv = maqkd::devices;
namespace pr = maqkd::protocols;

double binary_entropy(double q) {
  if (q < 0.0 || q > 1.0)
    throw dv::ConfigError("binary_entropy: argument outside [0,1]");
  if (q == 0.0 || q == 1.0) return 0.0;
  return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

double WaitingDistribution::p_delta(int k) const {
  if (k <= 0) return k == 0 ? p_zero() : 0.0;
  return 2.0 * p * std::pow(1.0 - p, k) / (2.0 - p);
}

LoadingStatistics loading_statistics(double p) {
  if (p <= 0.0 || p > 1.0)
    throw dv::ConfigError("loading_statistics: p must be in (0,1]");
  LoadingStatistics ls;
  ls.expected_rounds = 2.0 / p - 1.0 / (2.0 * p - p * p);
  ls.waiting.p = p;
  return ls;
}

double decay_factor(const devices::MemoryModel& mem, double repetition_period,
                    double p) {
  if (p <= 0.0 || p > 1.0)
    throw dv::ConfigError("decay_factor: p must be in (0,1]");
  // E[x^Delta] with x = exp(-T/T_r); geometric series summed in closed form.
  const double x = mem.coherence_time == 0.0
                       ? 0.0
                       : std::exp(-repetition_period / mem.coherence_time);
  return (p + 2.0 * p * (1.0 - p) * x / (1.0 - (1.0 - p) * x)) / (2.0 - p);
}

TimingModel TimingModel::from_config(const devices::SystemConfig& cfg) {
  TimingModel t;
  const double tau_m = cfg.middle_detector.dead_time;
  t.tau_w = cfg.memory.interaction_time + tau_m;
  t.tau_r = cfg.memory.interaction_time + tau_m + cfg.memory.init_time;
  t.period = cfg.repetition_period;
  return t;
}

RatePoint secret_key_rate(const devices::SystemConfig& cfg, double length_km) {
  auto local = cfg;
  local.channel.length = length_km;

  // Loading probability depends on the side stage only; get it first so the
  // waiting-time decoherence can be folded into the readout efficiencies.
  double p_side = 0.0;
  for (const auto& input : pr::kAllInputs)
    p_side += pr::side_bsm_round(local, input).p_success / 4.0;

  RatePoint pt;
  pt.length_km = length_km;
  if (p_side <= 0.0) return pt;

  const auto ls = loading_statistics(p_side);
  const auto timing = TimingModel::from_config(local);
  // Both sides decay over the write offset; the earlier-loaded side decays
  // additionally over the waiting rounds, averaged in closed form.
  const double eta_late =
      dv::memory_read_efficiency(local.memory, timing.tau_w);
  const double eta_early =
      eta_late * decay_factor(local.memory, timing.period, p_side);

  const auto stats =
      pr::qber_and_yield_conditionals(local, length_km, eta_early, eta_late);

  pt.p_sbsm = ls.p_sbsm();
  pt.p_mbsm = stats.p_mbsm;
  pt.y11 = pt.p_sbsm * pt.p_mbsm;
  pt.e_x = stats.e_x;
  pt.e_z = stats.e_z;
  pt.expected_rounds = ls.expected_rounds;
  pt.key_fraction_raw = 1.0 - binary_entropy(pt.e_x) -
                        cfg.error_correction_inefficiency *
                            binary_entropy(pt.e_z);
  const double key_fraction = std::max(0.0, pt.key_fraction_raw);
  pt.r_per_pulse = pt.y11 * key_fraction;
  pt.r_per_second = cfg.memory.n_spectral_modes * pt.p_mbsm * key_fraction /
                    (ls.expected_rounds * timing.period + timing.tau_w +
                     timing.tau_r);
  return pt;
}

double plob_bound(double length_km, double attenuation_length) {
  const double transmissivity = std::exp(-length_km / attenuation_length);
  // log1p keeps precision when the transmissivity underflows 1 - t.
  return -std::log1p(-transmissivity) / std::log(2.0);
}

NoMemoryPoint no_memory_rate(const devices::SystemConfig& cfg,
                             double length_km) {
  const auto stats = pr::no_memory_round(cfg, length_km);
  NoMemoryPoint pt;
  pt.length_km = length_km;
  pt.yield = stats.yield;
  pt.e_x = stats.e_x;
  pt.e_z = stats.e_z;
  const double key_fraction =
      std::max(0.0, 1.0 - binary_entropy(stats.e_x) -
                        cfg.error_correction_inefficiency *
                            binary_entropy(stats.e_z));
  pt.r_per_pulse = stats.yield * key_fraction;
  pt.r_per_second = pt.r_per_pulse * cfg.rep_rate();
  return pt;
}

double asymptotic_yield(devices::Scheme scheme, double eta, double length_km,
                        double attenuation_length) {
  if (scheme == dv::Scheme::Nla)
    return (1.0 - eta) * (1.0 - eta) *
           std::exp(-length_km / attenuation_length);
  return std::exp(-length_km / (2.0 * attenuation_length));
}

double crossover_distance(const std::function<double(double)>& rate_a,
                          const std::function<double(double)>& rate_b,
                          double lo_km, double hi_km) {
  if (!(lo_km < hi_km))
    throw dv::ConfigError("crossover_distance: empty range");
  auto diff = [&](double l) { return rate_a(l) - rate_b(l); };
  double f_lo = diff(lo_km);
  double f_hi = diff(hi_km);
  if ((f_lo > 0.0) == (f_hi > 0.0))
    throw dv::ConfigError("crossover_distance: no crossing in range");
  double lo = lo_km, hi = hi_km;
  while (hi - lo > 0.5) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = diff(mid);
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double best_nla_reflectivity(const devices::SystemConfig& cfg,
                             double length_km,
                             const std::vector<double>& grid) {
  if (grid.empty())
    throw dv::ConfigError("best_nla_reflectivity: empty grid");
  double best_eta = grid.front();
  double best_rate = -1.0;
  for (double eta : grid) {
    auto local = cfg;
    local.nla_reflectivity = eta;
    const double r = secret_key_rate(local, length_km).r_per_pulse;
    if (r > best_rate) {
      best_rate = r;
      best_eta = eta;
    }
  }
  return best_eta;
}

}  // namespace maqkd::rates
