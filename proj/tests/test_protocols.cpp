#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "maqkd/devices.hpp"
#include "maqkd/protocols.hpp"

using namespace maqkd;
namespace dv = maqkd::devices;
namespace pr = maqkd::protocols;

namespace {

// All device imperfections switched off; the scheme and channel length stay
// configurable.
dv::SystemConfig lossless_config(dv::Scheme scheme, double length_km) {
  auto cfg = dv::load_preset("ideal");
  cfg.scheme = scheme;
  cfg.channel.length = length_km;
  cfg.source.eta_sps = 1.0;
  cfg.converter.eta_fc = 1.0;
  cfg.side_detector = dv::DetectorSpec{1.0, 0.0, 0.0};
  cfg.middle_detector = dv::DetectorSpec{1.0, 0.0, 0.0};
  return cfg;
}

double side_success(const dv::SystemConfig& cfg) {
  double p = 0.0;
  for (const auto& input : pr::kAllInputs)
    p += pr::side_bsm_round(cfg, input).p_success / 4.0;
  return p;
}

}  // namespace

TEST_CASE("amplifier pair state amplitudes") {
  auto cfg = lossless_config(dv::Scheme::Nla, 0.0);
  cfg.nla_reflectivity = 0.2;
  const double eta = 0.2;
  auto st = pr::nla_prepare_pair(cfg);

  // Mode order [A1, A2, P1, P2]; desired terms carry one photon in a memory
  // arm and one in the other rail's photonic arm.
  CHECK(st.population({1, 0, 0, 1}) ==
        doctest::Approx(eta * (1 - eta)).epsilon(1e-12));
  CHECK(st.population({0, 1, 1, 0}) ==
        doctest::Approx(eta * (1 - eta)).epsilon(1e-12));
  // Both photons on the photonic side: loss-independent click hazard.
  CHECK(st.population({0, 0, 1, 1}) ==
        doctest::Approx(eta * eta).epsilon(1e-12));
  // Both photons stored: double-excitation hazard.
  CHECK(st.population({1, 1, 0, 0}) ==
        doctest::Approx((1 - eta) * (1 - eta)).epsilon(1e-12));
  // Algebraic identity: the four weights add to one.
  CHECK(st.trace() == doctest::Approx(1.0).epsilon(1e-12));
  // Coherence between the desired terms has magnitude eta(1-eta).
  CHECK(std::abs(st.element({1, 0, 0, 1}, {0, 1, 1, 0})) ==
        doctest::Approx(eta * (1 - eta)).epsilon(1e-12));
}

TEST_CASE("interfered-pair source amplitudes") {
  auto cfg = lossless_config(dv::Scheme::QuasiEpr, 0.0);
  auto st = pr::quasi_epr_source(cfg.source, cfg.source);

  // Desired entangled part: amplitude 1/2 per term, 1/2 total weight.
  CHECK(st.population({1, 0, 1, 0}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(st.population({0, 1, 0, 1}) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(st.element({1, 0, 1, 0}, {0, 1, 0, 1})) ==
        doctest::Approx(0.25).epsilon(1e-12));
  // Bunched terms: amplitude 1/(2 sqrt 2) each, i.e. 1/8 weight.
  CHECK(st.population({2, 0, 0, 0}) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(st.population({0, 2, 0, 0}) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(st.population({0, 0, 2, 0}) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(st.population({0, 0, 0, 2}) == doctest::Approx(0.125).epsilon(1e-12));
  // No |11> component across the photonic arms: at most one
  // background-induced click when the user's photon is lost.
  CHECK(st.population({0, 0, 1, 1}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(st.trace() == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("vacuum emission gives vacuum output") {
    auto dead = cfg.source;
    dead.eta_sps = 0.0;
    auto off = pr::quasi_epr_source(dead, dead);
    CHECK(off.population({0, 0, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("loss-independent-click discriminator") {
  SUBCASE("interfered pair: success scales with the arm transmissivity") {
    auto cfg = lossless_config(dv::Scheme::QuasiEpr, 0.0);
    double ref = 0.0;
    for (double L : {100.0, 200.0, 300.0, 400.0, 500.0}) {
      cfg.channel.length = L;
      const double ratio =
          side_success(cfg) / std::exp(-L / (2.0 * 17.3));
      if (ref == 0.0)
        ref = ratio;
      else
        CHECK(std::abs(ratio / ref - 1.0) < 1e-9);
    }
  }
  SUBCASE("amplifier: success approaches a loss-independent floor") {
    auto cfg = lossless_config(dv::Scheme::Nla, 1000.0);
    const double eta = cfg.nla_reflectivity;
    const double c = side_success(cfg) / (eta * eta);
    cfg.channel.length = 10000.0;
    const double floor = side_success(cfg);
    CHECK(std::abs(floor / (c * eta * eta) - 1.0) < 0.01);
    CHECK(floor > 0.0);
  }
  SUBCASE("interfered pair: success vanishes when the user photon is lost") {
    auto cfg = lossless_config(dv::Scheme::QuasiEpr, 2000.0);
    CHECK(side_success(cfg) < 1e-20);
  }
  SUBCASE("amplifier heralds leave the memories empty at long distance") {
    auto cfg = lossless_config(dv::Scheme::Nla, 10000.0);
    auto res = pr::side_bsm_round(cfg, {pr::Basis::X, 0});
    CHECK(res.p_success > 0.0);
    CHECK(res.ground_weight > 1.0 - 1e-6);
  }
}

TEST_CASE("side success decomposes over source emission sectors") {
  // Emission is an incoherent mixture, so p(eta) = 2 eta (1-eta) A + eta^2 B
  // exactly: A is the single-emission herald channel (user photon plus one
  // source photon), B the two-emission sector.
  auto cfg = lossless_config(dv::Scheme::QuasiEpr, 100.0);
  cfg.source.eta_sps = 1.0;
  const double p_full = side_success(cfg);  // = B
  cfg.source.eta_sps = 0.5;
  const double p_half = side_success(cfg);
  const double a = 2.0 * (p_half - 0.25 * p_full);  // solve the half point
  CHECK(a > 0.0);
  cfg.source.eta_sps = 0.25;
  const double predicted = 2.0 * 0.25 * 0.75 * a + 0.0625 * p_full;
  CHECK(side_success(cfg) == doctest::Approx(predicted).epsilon(1e-9));
  // The two-emission sector dominates the single-emission channel.
  CHECK(p_full > a);
}

TEST_CASE("middle measurement on known states") {
  auto cfg = lossless_config(dv::Scheme::QuasiEpr, 0.0);

  SUBCASE("Bell states: psi-type always heralds, phi-type never") {
    auto psi = fock::pure_state(
        4, 2,
        {{{1, 0, 0, 1}, std::sqrt(0.5)}, {{0, 1, 1, 0}, std::sqrt(0.5)}}, 2);
    CHECK(pr::middle_bsm_joint(cfg, psi, 1.0, 1.0).p_success ==
          doctest::Approx(1.0).epsilon(1e-10));
    // phi-type terms put both photons into one rail, which coalesce into a
    // single click: the Bell-basis average success is therefore 1/2.
    auto phi = fock::pure_state(
        4, 2,
        {{{1, 0, 1, 0}, std::sqrt(0.5)}, {{0, 1, 0, 1}, std::sqrt(0.5)}}, 2);
    CHECK(pr::middle_bsm_joint(cfg, phi, 1.0, 1.0).p_success ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("empty memories never succeed without dark counts") {
    auto vac = fock::vacuum_state(4, 1, 2);
    auto res = pr::middle_bsm_joint(cfg, vac, 1.0, 1.0);
    CHECK(res.p_success == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("empty memories succeed at second order in the dark probability") {
    const double d = 1e-4;
    cfg.middle_detector.dark_rate = d / cfg.pulse_duration;
    auto vac = fock::vacuum_state(4, 1, 2);
    auto res = pr::middle_bsm_joint(cfg, vac, 1.0, 1.0);
    for (double p : res.pattern_prob)
      CHECK(p == doctest::Approx(d * d * (1 - d) * (1 - d)).epsilon(1e-6));
  }
  SUBCASE("pattern probabilities sum to the input trace") {
    auto bell = fock::pure_state(
        4, 2,
        {{{1, 0, 0, 1}, std::sqrt(0.4)}, {{0, 1, 1, 0}, std::sqrt(0.4)}}, 2);
    cfg.middle_detector = dv::DetectorSpec{0.7, 1e-3 / cfg.pulse_duration, 0.0};
    auto dist = pr::middle_pattern_distribution(cfg, bell, 0.9, 0.8);
    double sum = 0.0;
    for (double p : dist) sum += p;
    CHECK(sum == doctest::Approx(bell.trace()).epsilon(1e-10));
  }
}

TEST_CASE("error rates of the assembled round") {
  SUBCASE("no errors with perfect devices") {
    for (auto scheme : {dv::Scheme::QuasiEpr, dv::Scheme::Nla}) {
      auto cfg = lossless_config(scheme, 50.0);
      auto stats = pr::qber_and_yield_conditionals(cfg, 50.0);
      CHECK(stats.e_x == doctest::Approx(0.0).epsilon(1e-10));
      CHECK(stats.e_z == doctest::Approx(0.0).epsilon(1e-10));
      CHECK(stats.p_mbsm > 0.0);
    }
  }
  SUBCASE("amplifier errors approach random at long distance") {
    auto cfg = lossless_config(dv::Scheme::Nla, 800.0);
    cfg.middle_detector.dark_rate = 1e-6 / cfg.pulse_duration;
    auto stats = pr::qber_and_yield_conditionals(cfg, 800.0);
    CHECK(stats.e_x > 0.4);
    CHECK(stats.e_x <= 0.5 + 1e-12);
  }
  SUBCASE("error rates stay inside [0, 1/2]") {
    for (const char* name : {"ideal", "WV2", "ExC"}) {
      auto cfg = dv::load_preset(name);
      for (double L : {50.0, 400.0}) {
        auto stats = pr::qber_and_yield_conditionals(cfg, L);
        CHECK(stats.e_x >= 0.0);
        CHECK(stats.e_x <= 0.5 + 1e-9);
        CHECK(stats.e_z >= 0.0);
        CHECK(stats.e_z <= 0.5 + 1e-9);
      }
    }
  }
}

TEST_CASE("side pattern distribution is a distribution") {
  auto cfg = dv::load_preset("ideal");
  cfg.channel.length = 80.0;
  for (const auto& input : pr::kAllInputs) {
    auto dist = pr::side_pattern_distribution(cfg, input);
    double sum = 0.0;
    for (double p : dist.prob) {
      CHECK(p >= -1e-12);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("no-memory round reference values") {
  auto cfg = lossless_config(dv::Scheme::QuasiEpr, 200.0);
  auto stats = pr::no_memory_round(cfg, 200.0);
  CHECK(stats.yield ==
        doctest::Approx(0.5 * std::exp(-200.0 / 17.3)).epsilon(1e-9));
  CHECK(stats.e_z == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(stats.e_x == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pattern bookkeeping") {
  for (int q = 0; q < 4; ++q) {
    auto p = pr::BsmPattern::from_index(q);
    CHECK(p.index() == q);
    CHECK(p.class_bit() == (p.rail1 ^ p.rail2));
  }
  CHECK(pr::BsmPattern{0, 0}.bell_class() == pr::BellClass::PsiPlus);
  CHECK(pr::BsmPattern{0, 1}.bell_class() == pr::BellClass::PsiMinus);
  // Z-basis successes always herald anticorrelated bits.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int m = 0; m < 4; ++m)
        CHECK(pr::expected_parity(pr::Basis::Z, pr::BsmPattern::from_index(a),
                                  pr::BsmPattern::from_index(b),
                                  pr::BsmPattern::from_index(m)) == 1);
}
