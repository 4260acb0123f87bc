#include "maqkd/oracle.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <unordered_map>

namespace maqkd::oracle {

namespace dv = maqkd::devices;
namespace pr = maqkd::protocols;

namespace {

using Complex = std::complex<double>;

// Occupation keys: 4 bits per mode, up to 16 modes per key.
using Amps = std::unordered_map<std::uint64_t, Complex>;

int occ_of(std::uint64_t key, int mode) { return (key >> (4 * mode)) & 0xF; }

std::uint64_t with_occ(std::uint64_t key, int mode, int n) {
  const std::uint64_t mask = std::uint64_t(0xF) << (4 * mode);
  return (key & ~mask) | (std::uint64_t(n) << (4 * mode));
}

double fact(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return fact(n) / (fact(k) * fact(n - k));
}

// Beam splitter on a sparse pure state, creation-operator convention
//   a_i^dag -> c a_i^dag + s a_j^dag,  a_j^dag -> s a_i^dag - c a_j^dag
// with c = sqrt(1-r), s = sqrt(r).
void apply_bs(Amps& state, int mode_i, int mode_j, double r) {
  const double c = std::sqrt(1.0 - r);
  const double s = std::sqrt(r);
  Amps next;
  next.reserve(2 * state.size());
  for (const auto& [key, amp] : state) {
    const int m = occ_of(key, mode_i);
    const int n = occ_of(key, mode_j);
    const int total = m + n;
    if (total == 0) {
      next[key] += amp;
      continue;
    }
    std::vector<double> out(total + 1, 0.0);
    for (int k = 0; k <= m; ++k) {
      for (int l = 0; l <= n; ++l) {
        out[k + l] += choose(m, k) * choose(n, l) * std::pow(c, k) *
                      std::pow(s, m - k) * std::pow(s, l) *
                      std::pow(-c, n - l);
      }
    }
    for (int p = 0; p <= total; ++p) {
      if (out[p] == 0.0) continue;
      const double norm =
          std::sqrt(fact(p) * fact(total - p) / (fact(m) * fact(n)));
      const std::uint64_t nk =
          with_occ(with_occ(key, mode_i, p), mode_j, total - p);
      next[nk] += amp * out[p] * norm;
    }
  }
  state = std::move(next);
}

// Loss as a beam splitter into a vacuum environment mode that stays in the
// state vector.
void apply_env_loss(Amps& state, int mode, double transmissivity,
                    int env_mode) {
  if (transmissivity >= 1.0) return;
  apply_bs(state, mode, env_mode, 1.0 - transmissivity);
}

// Side-circuit mode layout (one side):
//   0 A1, 1 A2, 2 P1, 3 P2, 4 U1, 5 U2,
//   6/7 mismatch env, 8/9 converter env, 10/11 channel env,
//   12/13 writing env, 14/15 readout env.
struct Sector {
  std::array<double, 16> pattern_prob{};          // side detectors only
  std::vector<std::pair<std::uint8_t, Complex>> mem;  // (A1<<4|A2, amp)
};

struct SideBranch {
  double weight = 0.0;
  std::vector<Sector> sectors;
};

std::array<double, 16> click_probs(const fock::DetectorModel& det,
                                   const std::array<int, 4>& occ) {
  std::array<double, 4> q;  // no-click probability per detector
  for (int d = 0; d < 4; ++d)
    q[d] = (1.0 - det.dark_prob) *
           std::pow(1.0 - det.efficiency, occ[d]);
  std::array<double, 16> f;
  for (int pat = 0; pat < 16; ++pat) {
    double p = 1.0;
    for (int d = 0; d < 4; ++d) {
      const bool click = pat & (8 >> d);
      p *= click ? 1.0 - q[d] : q[d];
    }
    f[pat] = p;
  }
  return f;
}

std::vector<SideBranch> evolve_side(const dv::SystemConfig& cfg,
                                    pr::BB84Input input, double eta_read) {
  const double t_arm = dv::arm_transmissivity(cfg.channel);
  const auto det = dv::realize_detector(cfg, true);
  const double kSqrtHalf = std::sqrt(0.5);

  // Source mixture components and their weights.
  std::vector<std::pair<int, double>> source;
  const auto& src = cfg.source;
  if (src.eta_sps < 1.0) source.emplace_back(0, 1.0 - src.eta_sps);
  if (src.p1 > 0.0) source.emplace_back(1, src.eta_sps * src.p1);
  if (src.p2 > 0.0) source.emplace_back(2, src.eta_sps * src.p2);

  std::vector<SideBranch> branches;
  for (const auto& [n1, w1] : source) {
    for (const auto& [n2, w2] : source) {
      Amps state;
      std::uint64_t base = with_occ(with_occ(0, 0, n1), 1, n2);
      if (input.basis == pr::Basis::Z) {
        state[with_occ(base, input.bit ? 5 : 4, 1)] = 1.0;
      } else {
        state[with_occ(base, 4, 1)] = kSqrtHalf;
        state[with_occ(base, 5, 1)] = input.bit ? -kSqrtHalf : kSqrtHalf;
      }

      if (cfg.scheme == dv::Scheme::QuasiEpr) {
        apply_bs(state, 0, 1, 0.5);
        apply_bs(state, 0, 2, 0.5);
        apply_bs(state, 1, 3, 0.5);
      } else {
        apply_bs(state, 0, 2, cfg.nla_reflectivity);
        apply_bs(state, 1, 3, cfg.nla_reflectivity);
      }
      apply_env_loss(state, 2, 1.0 - cfg.mode_mismatch, 6);
      apply_env_loss(state, 3, 1.0 - cfg.mode_mismatch, 7);
      apply_env_loss(state, 2, cfg.converter.eta_fc, 8);
      apply_env_loss(state, 3, cfg.converter.eta_fc, 9);
      apply_env_loss(state, 4, t_arm, 10);
      apply_env_loss(state, 5, t_arm, 11);
      apply_bs(state, 4, 2, 0.5);
      apply_bs(state, 5, 3, 0.5);
      apply_env_loss(state, 0, cfg.memory.eta_w, 12);
      apply_env_loss(state, 1, cfg.memory.eta_w, 13);
      apply_env_loss(state, 0, eta_read, 14);
      apply_env_loss(state, 1, eta_read, 15);

      // Group amplitudes by everything except the memory modes; the
      // middle interference only mixes those, so each group evolves
      // coherently and distinct groups add incoherently.
      std::unordered_map<std::uint64_t, std::size_t> sector_of;
      SideBranch branch;
      branch.weight = w1 * w2;
      for (const auto& [key, amp] : state) {
        const std::uint64_t sec_key = with_occ(with_occ(key, 0, 0), 1, 0);
        auto [it, fresh] =
            sector_of.try_emplace(sec_key, branch.sectors.size());
        if (fresh) {
          Sector sec;
          sec.pattern_prob =
              click_probs(det, {occ_of(key, 4), occ_of(key, 2),
                                occ_of(key, 5), occ_of(key, 3)});
          branch.sectors.push_back(std::move(sec));
        }
        const std::uint8_t mem =
            static_cast<std::uint8_t>((occ_of(key, 0) << 4) | occ_of(key, 1));
        branch.sectors[it->second].mem.emplace_back(mem, amp);
      }
      branches.push_back(std::move(branch));
    }
  }
  return branches;
}

}  // namespace

std::vector<double> exact_enumerate(const devices::SystemConfig& cfg,
                                    double length_km,
                                    protocols::BB84Input input_a,
                                    protocols::BB84Input input_b) {
  auto local = cfg;
  local.channel.length = length_km;
  const int budget = pr::photon_budget(local);
  if (2 * budget > 12)
    throw dv::ConfigError("exact_enumerate: photon budget too large");

  const double eta_read = local.memory.eta_r0;
  const auto branches_a = evolve_side(local, input_a, eta_read);
  const auto branches_b = evolve_side(local, input_b, eta_read);
  const auto mid_det = dv::realize_detector(local, false);

  std::vector<double> out(4096, 0.0);
  for (const auto& br_a : branches_a) {
    for (const auto& br_b : branches_b) {
      const double weight = br_a.weight * br_b.weight;
      for (const auto& sec_a : br_a.sectors) {
        for (const auto& sec_b : br_b.sectors) {
          // Joint memory amplitudes on mini-keys [A1, A2, B1, B2].
          Amps mini;
          for (const auto& [ma, aa] : sec_a.mem) {
            for (const auto& [mb, ab] : sec_b.mem) {
              std::uint64_t key = 0;
              key = with_occ(key, 0, ma >> 4);
              key = with_occ(key, 1, ma & 0xF);
              key = with_occ(key, 2, mb >> 4);
              key = with_occ(key, 3, mb & 0xF);
              mini[key] += aa * ab;
            }
          }
          apply_bs(mini, 0, 2, 0.5);
          apply_bs(mini, 1, 3, 0.5);
          std::array<double, 16> g{};
          for (const auto& [key, amp] : mini) {
            const double w = std::norm(amp);
            if (w == 0.0) continue;
            const auto f = click_probs(mid_det,
                                       {occ_of(key, 0), occ_of(key, 1),
                                        occ_of(key, 2), occ_of(key, 3)});
            for (int k = 0; k < 16; ++k) g[k] += w * f[k];
          }
          for (int i = 0; i < 16; ++i) {
            const double wi = weight * sec_a.pattern_prob[i];
            if (wi == 0.0) continue;
            for (int j = 0; j < 16; ++j) {
              const double wij = wi * sec_b.pattern_prob[j];
              double* row = out.data() + i * 256 + j * 16;
              for (int k = 0; k < 16; ++k) row[k] += wij * g[k];
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<double> pipeline_joint_distribution(
    const devices::SystemConfig& cfg, double length_km,
    protocols::BB84Input input_a, protocols::BB84Input input_b) {
  auto local = cfg;
  local.channel.length = length_km;
  const double eta_read = local.memory.eta_r0;

  auto prepare = [&](pr::BB84Input input) {
    auto dist = pr::side_pattern_distribution(local, input);
    for (auto& state : dist.states) {
      state = fock::apply_loss(state, 0, local.memory.eta_w);
      state = fock::apply_loss(state, 1, local.memory.eta_w);
    }
    return dist;
  };
  const auto dist_a = prepare(input_a);
  const auto dist_b = prepare(input_b);

  std::vector<double> out(4096, 0.0);
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      const auto joint = fock::tensor(dist_a.states[i], dist_b.states[j]);
      const auto mid = pr::middle_pattern_distribution(local, joint, eta_read,
                                                       eta_read);
      for (int k = 0; k < 16; ++k) out[i * 256 + j * 16 + k] = mid[k];
    }
  }
  return out;
}

TimingSample sample_timing(double p, double repetition_period,
                           double coherence_time, long long n_trials,
                           std::uint64_t seed) {
  if (p <= 0.0 || p > 1.0)
    throw dv::ConfigError("sample_timing: p must be in (0,1]");
  if (n_trials < 10000)
    throw dv::ConfigError("sample_timing: need at least 1e4 trials");

  const double x = coherence_time == 0.0
                       ? 0.0
                       : std::exp(-repetition_period / coherence_time);
  std::mt19937_64 rng(seed);
  std::geometric_distribution<long long> failures(p);

  double sum_max = 0.0, sum_max_sq = 0.0;
  double sum_dec = 0.0, sum_dec_sq = 0.0;
  for (long long t = 0; t < n_trials; ++t) {
    const long long na = failures(rng) + 1;
    const long long nb = failures(rng) + 1;
    const double mx = static_cast<double>(std::max(na, nb));
    const long long delta = std::llabs(na - nb);
    const double dec = delta == 0 ? 1.0 : std::pow(x, delta);
    sum_max += mx;
    sum_max_sq += mx * mx;
    sum_dec += dec;
    sum_dec_sq += dec * dec;
  }
  const double n = static_cast<double>(n_trials);
  TimingSample res;
  res.expected_rounds = sum_max / n;
  res.decay = sum_dec / n;
  res.expected_rounds_se = std::sqrt(
      std::max(0.0, sum_max_sq / n - res.expected_rounds * res.expected_rounds) /
      n);
  res.decay_se = std::sqrt(
      std::max(0.0, sum_dec_sq / n - res.decay * res.decay) / n);
  return res;
}

}  // namespace maqkd::oracle
