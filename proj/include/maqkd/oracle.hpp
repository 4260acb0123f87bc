#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maqkd/devices.hpp"
#include "maqkd/protocols.hpp"

// Independent validation path. States are sparse occupation->amplitude
// dictionaries evolved as pure states, with every loss realized as a beam
// splitter into a kept environment mode -- no density matrices and no
// intermediate tracing, so agreement with the fock-core pipeline checks
// two genuinely different computations against each other.
namespace maqkd::oracle {

inline constexpr const char* kRngAlgorithm = "mt19937_64";

// Joint click-pattern distribution over (side A, side B, middle) for one
// input pair, at readout efficiency eta_r0 (zero storage time). Each stage
// uses the 16-pattern indexing of `protocols`; the flat index is
// side_a * 256 + side_b * 16 + middle. Probabilities over the 4096
// outcomes sum to 1.
std::vector<double> exact_enumerate(const devices::SystemConfig& cfg,
                                    double length_km,
                                    protocols::BB84Input input_a,
                                    protocols::BB84Input input_b);

// The same 4096-outcome surface computed through the density-matrix
// pipeline, for cross-path equivalence tests.
std::vector<double> pipeline_joint_distribution(
    const devices::SystemConfig& cfg, double length_km,
    protocols::BB84Input input_a, protocols::BB84Input input_b);

struct TimingSample {
  double expected_rounds = 0.0;
  double expected_rounds_se = 0.0;
  double decay = 0.0;
  double decay_se = 0.0;
  std::string rng = kRngAlgorithm;
};

// Samples geometric loading times for the two sides and returns empirical
// E[max(N_A, N_B)] and E[exp(-|N_A-N_B| T / T_r)] with standard errors.
TimingSample sample_timing(double p, double repetition_period,
                           double coherence_time, long long n_trials,
                           std::uint64_t seed);

}  // namespace maqkd::oracle
