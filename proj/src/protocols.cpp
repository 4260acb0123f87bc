#include "maqkd/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

namespace maqkd::protocols {

namespace fk = maqkd::fock;
namespace dv = maqkd::devices;

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;

// Conditional error ratios can pick up roundoff of order the machine
// epsilon of the much larger success sums; keep them inside [0,1].
double error_ratio(double error, double success) {
  if (success <= 0.0) return 0.0;
  return std::clamp(error / success, 0.0, 1.0);
}

int source_photon_cap(const dv::SourceModel& src) { return src.p2 > 0.0 ? 2 : 1; }

// Two SPS emissions over [A1, A2] tensored with vacuum photonic arms.
fk::DensityMatrix two_source_input(const dv::SourceModel& src, int cutoff) {
  const int cap = source_photon_cap(src);
  const auto s1 = dv::sps_emit(src, cutoff, cap);
  const auto s2 = dv::sps_emit(src, cutoff, cap);
  const auto pair = fk::tensor(s1, s2);
  const auto vac = fk::vacuum_state(2, cutoff, 0);
  return fk::tensor(pair, vac);
}

// Measures the four detector modes of a two-rail BSM stage and collects the
// joint probability and subnormalized leftover state for every click
// pattern. `modes` lists the detector modes in the order their bits appear
// in the pattern index, most significant first; they are measured from the
// highest mode index down so earlier indices stay valid.
struct StagePattern {
  double prob = 0.0;
  std::optional<fk::DensityMatrix> state;
};

std::array<StagePattern, 16> detect_four(const fk::DensityMatrix& input,
                                         const std::array<int, 4>& modes,
                                         const fk::DetectorModel& det,
                                         bool keep_states) {
  // Measurement order: descending mode index.
  std::array<int, 4> order{0, 1, 2, 3};
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return modes[a] > modes[b]; });
  std::array<StagePattern, 16> out;
  const int n_left = input.n_modes() - 4;

  std::function<void(const fk::DensityMatrix&, int, int)> rec =
      [&](const fk::DensityMatrix& st, int depth, int idx) {
        const int bit_pos = order[depth];
        const int weight = 8 >> bit_pos;
        // Only higher-index modes were traced out so far, so the current
        // mode index is still valid.
        const int mode = modes[bit_pos];
        for (int o = 0; o < 2; ++o) {
          const auto outcome = o ? fk::Outcome::Click : fk::Outcome::NoClick;
          const int next = idx + (o ? weight : 0);
          if (depth == 3 && n_left == 0) {
            out[next].prob = fk::threshold_probability(st, mode, det, outcome);
            continue;
          }
          auto [p, post] = fk::measure_threshold(st, mode, det, outcome);
          (void)p;
          if (depth == 3) {
            out[next].prob = post.trace();
            if (keep_states) out[next].state = std::move(post);
          } else {
            rec(post, depth + 1, next);
          }
        }
      };
  rec(input, 0, 0);
  return out;
}

}  // namespace

int photon_budget(const devices::SystemConfig& cfg) {
  return 2 * source_photon_cap(cfg.source) + 1;
}

fock::DensityMatrix bb84_state(BB84Input input, int cutoff, int max_total) {
  std::vector<std::pair<fk::Occupation, fk::Complex>> amps;
  if (input.basis == Basis::Z) {
    amps.emplace_back(input.bit ? fk::Occupation{0, 1} : fk::Occupation{1, 0},
                      1.0);
  } else {
    amps.emplace_back(fk::Occupation{1, 0}, kSqrtHalf);
    amps.emplace_back(fk::Occupation{0, 1},
                      input.bit ? -kSqrtHalf : kSqrtHalf);
  }
  return fk::pure_state(2, cutoff, amps, max_total);
}

fock::DensityMatrix quasi_epr_source(const devices::SourceModel& src_a,
                                     const devices::SourceModel& src_b,
                                     int cutoff) {
  if (std::abs(src_a.p2 - src_b.p2) > 0.0 ||
      std::abs(src_a.eta_sps - src_b.eta_sps) > 0.0 ||
      std::abs(src_a.p1 - src_b.p1) > 0.0) {
    // Only matched sources are meaningful here; reuse the common path with
    // the first model after ruling out mismatches.
    throw dv::ConfigError("quasi_epr_source: sources must be identical");
  }
  const int cap = source_photon_cap(src_a);
  if (cutoff < 0) cutoff = 2 * cap;
  auto state = two_source_input(src_a, cutoff);
  state = fk::apply_beam_splitter(state, 0, 1, 0.5);  // HOM interference
  state = fk::apply_beam_splitter(state, 0, 2, 0.5);
  state = fk::apply_beam_splitter(state, 1, 3, 0.5);
  return state;
}

fock::DensityMatrix nla_prepare_pair(const devices::SystemConfig& cfg,
                                     int cutoff) {
  const int cap = source_photon_cap(cfg.source);
  if (cutoff < 0) cutoff = 2 * cap;
  auto state = two_source_input(cfg.source, cutoff);
  const double eta = cfg.nla_reflectivity;
  state = fk::apply_beam_splitter(state, 0, 2, eta);
  state = fk::apply_beam_splitter(state, 1, 3, eta);
  return state;
}

SideDistribution side_pattern_distribution(const devices::SystemConfig& cfg,
                                           BB84Input input) {
  const int budget = photon_budget(cfg);
  auto ent = cfg.scheme == dv::Scheme::QuasiEpr
                 ? quasi_epr_source(cfg.source, cfg.source, budget)
                 : nla_prepare_pair(cfg, budget);
  // Photonic arms: interference mismatch with the user's photon, then
  // frequency conversion, both as plain loss.
  for (int m : {2, 3}) {
    if (cfg.mode_mismatch > 0.0)
      ent = fk::apply_loss(ent, m, 1.0 - cfg.mode_mismatch);
    if (cfg.converter.eta_fc < 1.0)
      ent = fk::apply_loss(ent, m, cfg.converter.eta_fc);
  }

  auto user = bb84_state(input, budget, 1);
  const double t_arm = dv::arm_transmissivity(cfg.channel);
  if (t_arm < 1.0) {
    user = fk::apply_loss(user, 0, t_arm);
    user = fk::apply_loss(user, 1, t_arm);
  }

  auto full = fk::tensor(ent, user);  // [A1, A2, P1, P2, U1, U2]
  full = fk::apply_beam_splitter(full, 4, 2, 0.5);
  full = fk::apply_beam_splitter(full, 5, 3, 0.5);

  const auto det = dv::realize_detector(cfg, true);
  // Pattern bits (msb first): U1', P1', U2', P2' at modes 4, 2, 5, 3.
  auto stage = detect_four(full, {4, 2, 5, 3}, det, true);

  SideDistribution dist;
  dist.states.reserve(16);
  for (int i = 0; i < 16; ++i) {
    dist.prob[i] = stage[i].prob;
    dist.states.push_back(std::move(*stage[i].state));
  }
  return dist;
}

SideResult side_bsm_round(const devices::SystemConfig& cfg, BB84Input input) {
  auto dist = side_pattern_distribution(cfg, input);
  SideResult res;
  res.input = input;
  res.conditional_states.reserve(4);
  double pop00 = 0.0;
  for (int q = 0; q < 4; ++q) {
    const auto pat = BsmPattern::from_index(q);
    const int idx = success_pattern_to_index(pat);
    auto state = std::move(dist.states[idx]);
    if (cfg.memory.eta_w < 1.0) {
      state = fk::apply_loss(state, 0, cfg.memory.eta_w);
      state = fk::apply_loss(state, 1, cfg.memory.eta_w);
    }
    res.p_success += state.trace();
    pop00 += state.population({0, 0});
    res.conditional_states.push_back(std::move(state));
  }
  if (res.p_success > 0.0) {
    res.ground_weight = pop00 / res.p_success;
    res.signal_weight = 1.0 - res.ground_weight;
  }
  return res;
}

std::array<double, 16> middle_pattern_distribution(
    const devices::SystemConfig& cfg, const fock::DensityMatrix& joint,
    double eta_read_a, double eta_read_b) {
  if (joint.n_modes() != 4)
    throw fk::FockError("middle BSM expects a four-mode state");
  // Conditional inputs can be subnormalized by many orders of magnitude;
  // work on the normalized state so the support tolerances stay meaningful
  // and scale the resulting probabilities back.
  const double weight = joint.trace();
  if (weight <= 1e-300) return {};
  auto normalized = fk::DensityMatrix(joint.basis_ptr(),
                                      joint.amplitudes() / weight,
                                      joint.mode_labels());
  // Shrink to the populated photon sector; the interference can pile a
  // rail's photons onto one detector, so the per-mode cutoff has to cover
  // the full support total. The tolerance sits far below the default one:
  // the loaded-loaded component of a normalized joint state can be ~1e-14
  // at long distance and still carry all of the key rate.
  constexpr double kTinySupport = 1e-18;
  const int top = std::max(1, fk::support_max_photons(normalized, kTinySupport));
  auto state = fk::rebase(normalized, top, top, kTinySupport);
  if (eta_read_a < 1.0) {
    state = fk::apply_loss(state, 0, eta_read_a);
    state = fk::apply_loss(state, 1, eta_read_a);
  }
  if (eta_read_b < 1.0) {
    state = fk::apply_loss(state, 2, eta_read_b);
    state = fk::apply_loss(state, 3, eta_read_b);
  }
  state = fk::apply_beam_splitter(state, 0, 2, 0.5);
  state = fk::apply_beam_splitter(state, 1, 3, 0.5);
  const auto det = dv::realize_detector(cfg, false);
  // Pattern bits (msb first): A1', A2', B1', B2' at modes 0, 1, 2, 3.
  auto stage = detect_four(state, {0, 1, 2, 3}, det, false);
  std::array<double, 16> out{};
  for (int i = 0; i < 16; ++i) out[i] = weight * stage[i].prob;
  return out;
}

MiddleResult middle_bsm_joint(const devices::SystemConfig& cfg,
                              const fock::DensityMatrix& joint,
                              double eta_read_a, double eta_read_b) {
  const auto dist =
      middle_pattern_distribution(cfg, joint, eta_read_a, eta_read_b);
  MiddleResult res;
  for (int q = 0; q < 4; ++q) {
    const auto pat = BsmPattern::from_index(q);
    // Rail 1 is the (A1', B1') detector pair, rail 2 the (A2', B2') pair.
    const int idx = (pat.rail1 ? 2 : 8) | (pat.rail2 ? 1 : 4);
    res.pattern_prob[q] = dist[idx];
    res.p_success += dist[idx];
  }
  return res;
}

MiddleResult middle_bsm(const devices::SystemConfig& cfg,
                        const fock::DensityMatrix& rho_a,
                        const fock::DensityMatrix& rho_b,
                        double storage_time_a, double storage_time_b) {
  const double eta_a =
      dv::memory_read_efficiency(cfg.memory, storage_time_a);
  const double eta_b =
      dv::memory_read_efficiency(cfg.memory, storage_time_b);
  return middle_bsm_joint(cfg, fk::tensor(rho_a, rho_b), eta_a, eta_b);
}

int expected_parity(Basis basis, BsmPattern side_a, BsmPattern side_b,
                    BsmPattern middle) {
  if (basis == Basis::Z) return 1;
  return side_a.class_bit() ^ side_b.class_bit() ^ middle.class_bit();
}

RoundStats qber_and_yield_conditionals(const devices::SystemConfig& cfg,
                                       double length_km, double eta_read_a,
                                       double eta_read_b) {
  auto local = cfg;
  local.channel.length = length_km;

  std::vector<SideResult> sides;
  sides.reserve(4);
  for (const auto& input : kAllInputs)
    sides.push_back(side_bsm_round(local, input));

  RoundStats stats;
  for (const auto& s : sides) stats.p_side += s.p_success / 4.0;

  for (const Basis basis : {Basis::Z, Basis::X}) {
    double loaded = 0.0, success = 0.0, error = 0.0;
    for (int bit_a = 0; bit_a < 2; ++bit_a) {
      for (int bit_b = 0; bit_b < 2; ++bit_b) {
        const auto& side_a = sides[(basis == Basis::Z ? 0 : 2) + bit_a];
        const auto& side_b = sides[(basis == Basis::Z ? 0 : 2) + bit_b];
        for (int qa = 0; qa < 4; ++qa) {
          for (int qb = 0; qb < 4; ++qb) {
            const auto& rho_a = side_a.conditional_states[qa];
            const auto& rho_b = side_b.conditional_states[qb];
            loaded += rho_a.trace() * rho_b.trace();
            const auto mid = middle_bsm_joint(local, fk::tensor(rho_a, rho_b),
                                              eta_read_a, eta_read_b);
            for (int qm = 0; qm < 4; ++qm) {
              const double p = mid.pattern_prob[qm];
              success += p;
              const int want = expected_parity(
                  basis, BsmPattern::from_index(qa), BsmPattern::from_index(qb),
                  BsmPattern::from_index(qm));
              if (want != (bit_a ^ bit_b)) error += p;
            }
          }
        }
      }
    }
    const double e = error_ratio(error, success);
    if (basis == Basis::Z) {
      stats.e_z = e;
      stats.p_mbsm = loaded > 0.0 ? success / loaded : 0.0;
    } else {
      stats.e_x = e;
    }
  }
  return stats;
}

RoundStats qber_and_yield_conditionals(const devices::SystemConfig& cfg,
                                       double length_km) {
  return qber_and_yield_conditionals(cfg, length_km, cfg.memory.eta_r0,
                                     cfg.memory.eta_r0);
}

NoMemoryStats no_memory_round(const devices::SystemConfig& cfg,
                              double length_km) {
  auto local = cfg;
  local.channel.length = length_km;
  const double t_arm = dv::arm_transmissivity(local.channel);
  const auto det = dv::realize_detector(local, false);

  NoMemoryStats stats;
  for (const Basis basis : {Basis::Z, Basis::X}) {
    double success = 0.0, error = 0.0;
    for (int bit_a = 0; bit_a < 2; ++bit_a) {
      for (int bit_b = 0; bit_b < 2; ++bit_b) {
        auto user_a = bb84_state({basis, bit_a}, 2, 1);
        auto user_b = bb84_state({basis, bit_b}, 2, 1);
        for (int m : {0, 1}) {
          user_a = fk::apply_loss(user_a, m, t_arm);
          user_b = fk::apply_loss(user_b, m, t_arm);
        }
        auto joint = fk::tensor(user_a, user_b);  // [A1, A2, B1, B2]
        joint = fk::apply_beam_splitter(joint, 0, 2, 0.5);
        joint = fk::apply_beam_splitter(joint, 1, 3, 0.5);
        auto stage = detect_four(joint, {0, 1, 2, 3}, det, false);
        for (int qm = 0; qm < 4; ++qm) {
          const auto pat = BsmPattern::from_index(qm);
          const int idx = (pat.rail1 ? 2 : 8) | (pat.rail2 ? 1 : 4);
          const double p = stage[idx].prob;
          success += p;
          const int want = basis == Basis::Z ? 1 : pat.class_bit();
          if (want != (bit_a ^ bit_b)) error += p;
        }
      }
    }
    const double e = error_ratio(error, success);
    if (basis == Basis::Z) {
      stats.yield = success / 4.0;
      stats.e_z = e;
    } else {
      stats.e_x = e;
    }
  }
  return stats;
}

}  // namespace maqkd::protocols
