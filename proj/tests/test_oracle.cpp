#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "maqkd/devices.hpp"
#include "maqkd/oracle.hpp"

using namespace maqkd;
namespace dv = maqkd::devices;
namespace pr = maqkd::protocols;
namespace oc = maqkd::oracle;

namespace {

dv::SystemConfig matrix_config(dv::Scheme scheme, double dark_prob,
                               double p2) {
  auto cfg = dv::load_preset("ideal");
  cfg.scheme = scheme;
  cfg.converter.added_noise = 0.0;
  cfg.side_detector.dark_rate = dark_prob / cfg.pulse_duration;
  cfg.middle_detector.dark_rate = dark_prob / cfg.pulse_duration;
  cfg.source.p2 = p2;
  cfg.source.p1 = 1.0 - p2;
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("pure-state enumeration matches the density-matrix pipeline") {
  const pr::BB84Input in_a{pr::Basis::X, 0};
  const pr::BB84Input in_b{pr::Basis::X, 1};
  struct Variant {
    double dark_prob;
    double p2;
  };
  const Variant variants[] = {{0.0, 0.0}, {1e-6, 0.0}, {0.0, 0.01}};

  for (auto scheme : {dv::Scheme::QuasiEpr, dv::Scheme::Nla}) {
    for (const auto& v : variants) {
      auto cfg = matrix_config(scheme, v.dark_prob, v.p2);
      for (double L : {50.0, 300.0}) {
        CAPTURE(static_cast<int>(scheme));
        CAPTURE(v.dark_prob);
        CAPTURE(v.p2);
        CAPTURE(L);
        const auto exact = oc::exact_enumerate(cfg, L, in_a, in_b);
        const auto pipeline =
            oc::pipeline_joint_distribution(cfg, L, in_a, in_b);
        REQUIRE(exact.size() == 4096);
        REQUIRE(pipeline.size() == 4096);
        double sum_exact = 0.0, sum_pipeline = 0.0, max_diff = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i) {
          sum_exact += exact[i];
          sum_pipeline += pipeline[i];
          max_diff = std::max(max_diff, std::abs(exact[i] - pipeline[i]));
        }
        CHECK(max_diff < 1e-9);
        CHECK(sum_exact == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(sum_pipeline == doctest::Approx(1.0).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("sampled timing statistics") {
  SUBCASE("deterministic loading") {
    auto s = oc::sample_timing(1.0, 1e-9, 1.5e-6, 10000, 7);
    CHECK(s.expected_rounds == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.decay == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("empirical mean matches the closed form within three sigma") {
    auto s = oc::sample_timing(0.01, 1e-9, 1.5e-6, 1000000, 20240811);
    CHECK(s.expected_rounds_se > 0.0);
    CHECK(std::abs(s.expected_rounds - 149.748743718592965) <
          3.0 * s.expected_rounds_se);
    CHECK(std::abs(s.decay - 0.9377946333345844) <
          std::max(3.0 * s.decay_se, 1e-6));
  }
  SUBCASE("infinite coherence gives no decay") {
    auto s = oc::sample_timing(0.05, 1e-9,
                               std::numeric_limits<double>::infinity(), 10000,
                               3);
    CHECK(s.decay == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("seeded runs reproduce exactly") {
    auto a = oc::sample_timing(0.02, 1e-9, 1.5e-6, 50000, 42);
    auto b = oc::sample_timing(0.02, 1e-9, 1.5e-6, 50000, 42);
    CHECK(a.expected_rounds == b.expected_rounds);
    CHECK(a.decay == b.decay);
    auto c = oc::sample_timing(0.02, 1e-9, 1.5e-6, 50000, 43);
    CHECK(a.expected_rounds != c.expected_rounds);
    CHECK(a.rng == std::string("mt19937_64"));
  }
}
