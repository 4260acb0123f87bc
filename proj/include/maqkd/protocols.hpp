#pragma once

#include <array>
#include <vector>

#include "maqkd/devices.hpp"
#include "maqkd/fock.hpp"

// Entangling circuits, BB84 encodings and the two Bell-measurement layers.
//
// Mode conventions. One side of the setup uses modes [A1, A2, P1, P2, U1,
// U2]: A are the memory arms, P the photonic arms entering the side BSM, U
// the user's dual rail. Rail k interferes U_k with P_k; the "plus" port of
// the rail beam splitter is the one carrying (in + companion)/sqrt(2) of
// the first-listed input. The middle BSM interferes A_k of one side with
// the matching arm of the other.
namespace maqkd::protocols {

enum class Basis { Z, X };

struct BB84Input {
  Basis basis = Basis::Z;
  int bit = 0;
};

inline constexpr std::array<BB84Input, 4> kAllInputs = {
    BB84Input{Basis::Z, 0}, BB84Input{Basis::Z, 1}, BB84Input{Basis::X, 0},
    BB84Input{Basis::X, 1}};

enum class BellClass { PsiPlus, PsiMinus };

// A success pattern of a two-rail BSM: which detector of each rail pair
// clicked (0 = plus port, 1 = minus port). Exactly one click per rail.
struct BsmPattern {
  int rail1 = 0;
  int rail2 = 0;

  // Same-port clicks project onto the symmetric (psi+) combination under
  // the beam-splitter convention used throughout.
  BellClass bell_class() const {
    return rail1 == rail2 ? BellClass::PsiPlus : BellClass::PsiMinus;
  }
  int class_bit() const { return rail1 ^ rail2; }
  static BsmPattern from_index(int q) { return {q >> 1, q & 1}; }
  int index() const { return 2 * rail1 + rail2; }
};

// Total photons a circuit for the given configuration can hold: two source
// emissions plus the user's photon.
int photon_budget(const devices::SystemConfig& cfg);

// Pure single-photon dual-rail BB84 state on two modes.
fock::DensityMatrix bb84_state(BB84Input input, int cutoff = 1,
                               int max_total = -1);

// Four-mode entangler output over [A1, A2, P1, P2]: two sources interfere
// on a 50:50 beam splitter and each output splits 50:50 into a memory arm
// and a photonic arm.
fock::DensityMatrix quasi_epr_source(const devices::SourceModel& src_a,
                                     const devices::SourceModel& src_b,
                                     int cutoff = -1);

// Four-mode entangler output over [A1, A2, P1, P2]: one source photon per
// memory split on a reflectivity-eta beam splitter, photonic share eta.
fock::DensityMatrix nla_prepare_pair(const devices::SystemConfig& cfg,
                                     int cutoff = -1);

// One-side round, all 16 click patterns of the four side detectors.
// Index bits, most significant first: (U1' clicked, P1' clicked,
// U2' clicked, P2' clicked). States are the subnormalized two-memory-mode
// conditionals, before writing loss.
struct SideDistribution {
  std::array<double, 16> prob{};
  std::vector<fock::DensityMatrix> states;  // 16 entries
};

SideDistribution side_pattern_distribution(const devices::SystemConfig& cfg,
                                           BB84Input input);

inline int success_pattern_to_index(BsmPattern p) {
  return (p.rail1 ? 4 : 8) | (p.rail2 ? 1 : 2);
}

struct SideResult {
  BB84Input input;
  double p_success = 0.0;
  // Indexed by BsmPattern::index(); subnormalized, writing loss applied.
  std::vector<fock::DensityMatrix> conditional_states;
  double ground_weight = 0.0;  // alpha: |00> share of the heralded state
  double signal_weight = 0.0;  // beta = 1 - alpha
};

SideResult side_bsm_round(const devices::SystemConfig& cfg, BB84Input input);

// Middle BSM on the joint four-mode state [A1, A2, B1, B2]. Readout is a
// loss with the given efficiency on each memory arm. Probabilities of the
// four success patterns, indexed by BsmPattern::index().
struct MiddleResult {
  std::array<double, 4> pattern_prob{};
  double p_success = 0.0;
};

MiddleResult middle_bsm_joint(const devices::SystemConfig& cfg,
                              const fock::DensityMatrix& joint,
                              double eta_read_a, double eta_read_b);

MiddleResult middle_bsm(const devices::SystemConfig& cfg,
                        const fock::DensityMatrix& rho_a,
                        const fock::DensityMatrix& rho_b,
                        double storage_time_a, double storage_time_b);

// All 16 middle click patterns, for completeness checks; index bits
// (A1', A2', B1', B2'), most significant first.
std::array<double, 16> middle_pattern_distribution(
    const devices::SystemConfig& cfg, const fock::DensityMatrix& joint,
    double eta_read_a, double eta_read_b);

// Expected bit parity (bit_A xor bit_B) heralded by a success triple. In Z
// any success heralds anticorrelated bits; in X the three Bell classes
// combine.
int expected_parity(Basis basis, BsmPattern side_a, BsmPattern side_b,
                    BsmPattern middle);

// Sifted per-round statistics at a given distance, with fixed effective
// readout efficiencies (decay averaging is the rate layer's business).
struct RoundStats {
  double p_side = 0.0;  // one side loading per round
  double p_mbsm = 0.0;  // middle success given both sides loaded
  double e_x = 0.0;
  double e_z = 0.0;
};

RoundStats qber_and_yield_conditionals(const devices::SystemConfig& cfg,
                                       double length_km, double eta_read_a,
                                       double eta_read_b);
RoundStats qber_and_yield_conditionals(const devices::SystemConfig& cfg,
                                       double length_km);

// Direct no-memory MDI round: both users' photons meet at the middle BSM.
struct NoMemoryStats {
  double yield = 0.0;
  double e_x = 0.0;
  double e_z = 0.0;
};

NoMemoryStats no_memory_round(const devices::SystemConfig& cfg,
                              double length_km);

}  // namespace maqkd::protocols
