#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "maqkd/devices.hpp"
#include "maqkd/rates.hpp"

using namespace maqkd;
namespace dv = maqkd::devices;
namespace rt = maqkd::rates;

TEST_CASE("binary entropy reference values") {
  CHECK(rt::binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rt::binary_entropy(0.0) == 0.0);
  CHECK(rt::binary_entropy(1.0) == 0.0);
  CHECK(rt::binary_entropy(0.11) ==
        doctest::Approx(0.499915958164528).epsilon(1e-14));
  CHECK_THROWS_AS(rt::binary_entropy(-0.1), dv::ConfigError);
  CHECK_THROWS_AS(rt::binary_entropy(1.1), dv::ConfigError);
}

TEST_CASE("loading statistics of two geometric clocks") {
  auto ls = rt::loading_statistics(0.01);
  CHECK(ls.expected_rounds ==
        doctest::Approx(149.748743718592965).epsilon(1e-14));
  CHECK(ls.p_sbsm() == doctest::Approx(1.0 / 149.748743718592965));

  CHECK(rt::loading_statistics(0.5).expected_rounds ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-15));
  CHECK(rt::loading_statistics(1.0).expected_rounds ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(rt::loading_statistics(0.0), dv::ConfigError);

  SUBCASE("waiting-time distribution is normalized") {
    rt::WaitingDistribution w{0.2};
    CHECK(w.p_zero() == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
    double sum = w.p_zero();
    for (int k = 1; k < 400; ++k) sum += w.p_delta(k);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.p_delta(-1) == 0.0);
  }
}

TEST_CASE("waiting-time decay factor") {
  dv::MemoryModel mem;
  mem.coherence_time = 1.5e-6;
  CHECK(rt::decay_factor(mem, 1e-9, 0.01) ==
        doctest::Approx(0.9377946333345844).epsilon(1e-14));
  // Infinite coherence: no decay regardless of the waiting time.
  mem.coherence_time = std::numeric_limits<double>::infinity();
  CHECK(rt::decay_factor(mem, 1e-9, 0.01) ==
        doctest::Approx(1.0).epsilon(1e-14));
  // Deterministic loading: the two sides never wait on each other.
  mem.coherence_time = 1.5e-6;
  CHECK(rt::decay_factor(mem, 1e-9, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
  // Zero coherence: only simultaneous loads survive.
  mem.coherence_time = 0.0;
  CHECK(rt::decay_factor(mem, 1e-9, 0.2) ==
        doctest::Approx(1.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("repeaterless bound") {
  CHECK(rt::plob_bound(700.0, 17.3) ==
        doctest::Approx(3.8598057130751004e-18).epsilon(1e-12));
  // At L = L_att ln 2 the transmissivity is 1/2, so the bound is 1 bit.
  CHECK(rt::plob_bound(17.3 * std::log(2.0), 17.3) ==
        doctest::Approx(1.0).epsilon(1e-12));
  // Large-distance limit: bound ~ transmissivity / ln 2.
  const double t = std::exp(-500.0 / 17.3);
  CHECK(rt::plob_bound(500.0, 17.3) ==
        doctest::Approx(t / std::log(2.0)).epsilon(1e-10));
  CHECK(rt::plob_bound(0.0, 17.3) ==
        std::numeric_limits<double>::infinity());
}

TEST_CASE("secret key rate composition and clamping") {
  auto cfg = dv::load_preset("ideal");

  SUBCASE("internal consistency at a working distance") {
    auto pt = rt::secret_key_rate(cfg, 100.0);
    CHECK(pt.p_sbsm > 0.0);
    CHECK(pt.p_mbsm > 0.0);
    CHECK(pt.y11 == doctest::Approx(pt.p_sbsm * pt.p_mbsm).epsilon(1e-12));
    CHECK(pt.key_fraction_raw ==
          doctest::Approx(1.0 - rt::binary_entropy(pt.e_x) -
                          1.16 * rt::binary_entropy(pt.e_z))
              .epsilon(1e-12));
    CHECK(pt.r_per_pulse ==
          doctest::Approx(pt.y11 * pt.key_fraction_raw).epsilon(1e-12));
    CHECK(pt.r_per_second > 0.0);
    CHECK(pt.p_sbsm == doctest::Approx(1.0 / pt.expected_rounds));
  }
  SUBCASE("rate clamps at zero once errors kill the key fraction") {
    auto pt = rt::secret_key_rate(cfg, 680.0);
    CHECK(pt.key_fraction_raw < 0.0);
    CHECK(pt.r_per_pulse == 0.0);
    CHECK(pt.r_per_second == 0.0);
  }
  SUBCASE("rate decreases with distance") {
    double prev = std::numeric_limits<double>::infinity();
    for (double L : {50.0, 150.0, 250.0, 350.0}) {
      const double r = rt::secret_key_rate(cfg, L).r_per_pulse;
      CHECK(r < prev);
      CHECK(r >= 0.0);
      prev = r;
    }
  }
}

TEST_CASE("no-memory baseline") {
  auto cfg = dv::load_preset("no-memory-baseline");
  auto pt = rt::no_memory_rate(cfg, 200.0);
  CHECK(pt.yield > 0.0);
  CHECK(pt.r_per_second ==
        doctest::Approx(pt.r_per_pulse * 1e9).epsilon(1e-12));
  // With ideal devices and no dark counts the yield is exactly half the
  // end-to-end transmissivity.
  cfg.side_detector = dv::DetectorSpec{1.0, 0.0, 0.0};
  cfg.middle_detector = dv::DetectorSpec{1.0, 0.0, 0.0};
  cfg.source.eta_sps = 1.0;
  cfg.converter.eta_fc = 1.0;
  pt = rt::no_memory_rate(cfg, 200.0);
  CHECK(pt.yield ==
        doctest::Approx(0.5 * std::exp(-200.0 / 17.3)).epsilon(1e-9));
  CHECK(pt.r_per_pulse == doctest::Approx(pt.yield).epsilon(1e-9));
}

TEST_CASE("asymptotic yield shapes") {
  CHECK(rt::asymptotic_yield(dv::Scheme::QuasiEpr, 0.2, 346.0, 17.3) ==
        doctest::Approx(std::exp(-10.0)).epsilon(1e-12));
  CHECK(rt::asymptotic_yield(dv::Scheme::Nla, 0.2, 173.0, 17.3) ==
        doctest::Approx(0.64 * std::exp(-10.0)).epsilon(1e-12));
}

TEST_CASE("crossover search on analytic curves") {
  auto a = [](double l) { return std::exp(-l / 100.0); };
  auto b = [](double l) { return 1e-3; };
  const double expected = 100.0 * std::log(1000.0);
  CHECK(std::abs(rt::crossover_distance(a, b, 10.0, 2000.0) - expected) <=
        0.5);
  CHECK_THROWS_AS(rt::crossover_distance(a, b, 10.0, 20.0), dv::ConfigError);
  CHECK_THROWS_AS(rt::crossover_distance(a, b, 50.0, 50.0), dv::ConfigError);
}

TEST_CASE("timing model from configuration") {
  auto cfg = dv::load_preset("WV2");
  auto t = rt::TimingModel::from_config(cfg);
  CHECK(t.period == doctest::Approx(cfg.repetition_period));
  CHECK(t.tau_w == doctest::Approx(cfg.memory.interaction_time +
                                   cfg.middle_detector.dead_time));
  CHECK(t.tau_r == doctest::Approx(cfg.memory.interaction_time +
                                   cfg.middle_detector.dead_time +
                                   cfg.memory.init_time));
}

TEST_CASE("reflectivity grid search returns a grid member") {
  auto cfg = dv::load_preset("ideal");
  cfg.scheme = dv::Scheme::Nla;
  const std::vector<double> grid{0.1, 0.2, 0.3};
  const double best = rt::best_nla_reflectivity(cfg, 100.0, grid);
  CHECK((best == 0.1 || best == 0.2 || best == 0.3));
  CHECK_THROWS_AS(rt::best_nla_reflectivity(cfg, 100.0, {}), dv::ConfigError);
}
