// Batch front-end: parameter sweeps to CSV, crossover search, preset
// listing and self-verification.
//
// Exit codes: 0 success, 2 configuration error, 3 verification failure.
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "maqkd/config_io.hpp"
#include "maqkd/devices.hpp"
#include "maqkd/fock.hpp"
#include "maqkd/oracle.hpp"
#include "maqkd/protocols.hpp"
#include "maqkd/rates.hpp"

namespace dv = maqkd::devices;
namespace pr = maqkd::protocols;
namespace rt = maqkd::rates;
namespace fk = maqkd::fock;

namespace {

constexpr const char* kCsvHeader =
    "L_km, P_SBSM, P_MBSM, Y11, eX, eZ, R_per_pulse, R_per_second, "
    "PLOB_per_pulse, nomem_per_second";

struct SweepSpec {
  std::string preset;
  std::string config_path;
  std::string var = "L";
  double from = 0.0;
  double to = 0.0;
  int steps = 0;
  bool log_grid = false;
  std::string per = "both";
  std::string baselines = "plob,nomem";
};

dv::SystemConfig resolve_config(const std::string& preset,
                                const std::string& config_path) {
  if (!preset.empty() && !config_path.empty())
    throw dv::ConfigError("use either --preset or --config, not both");
  if (!preset.empty()) return dv::load_preset(preset);
  if (!config_path.empty()) return dv::load_config_file(config_path);
  throw dv::ConfigError("one of --preset or --config is required");
}

std::vector<double> make_grid(double from, double to, int steps, bool log) {
  if (!(from < to)) throw dv::ConfigError("sweep range: need from < to");
  if (steps < 2) throw dv::ConfigError("sweep range: need at least 2 steps");
  if (log && from <= 0.0)
    throw dv::ConfigError("sweep range: log grid needs from > 0");
  std::vector<double> grid(steps);
  for (int i = 0; i < steps; ++i) {
    const double f = static_cast<double>(i) / (steps - 1);
    grid[i] = log ? from * std::pow(to / from, f) : from + f * (to - from);
  }
  return grid;
}

// The sweep variable names accepted by --var.
dv::SystemConfig apply_variable(dv::SystemConfig cfg, const std::string& var,
                                double value) {
  if (var == "L") {
    cfg.channel.length = value;
  } else if (var == "dark_count") {
    // Per-gate dark probability applied to all detectors.
    cfg.side_detector.dark_rate = value / cfg.pulse_duration;
    cfg.middle_detector.dark_rate = value / cfg.pulse_duration;
    cfg.converter.added_noise = 0.0;
  } else if (var == "p2") {
    cfg.source.p2 = value;
    cfg.source.p1 = 1.0 - value;
  } else if (var == "eta_NLA") {
    cfg.nla_reflectivity = value;
  } else if (var == "coherence_time") {
    cfg.memory.coherence_time = value;
  } else {
    throw dv::ConfigError("unknown sweep variable '" + var +
                          "' (expected L, dark_count, p2, eta_NLA or "
                          "coherence_time)");
  }
  cfg.validate();
  return cfg;
}

std::string format_row(const std::vector<double>& cols) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < cols.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g", cols[i]);
    if (i) out += ", ";
    out += buf;
  }
  return out;
}

int run_sweep(const SweepSpec& spec, const std::string& out_path,
              int threads) {
  const auto base = resolve_config(spec.preset, spec.config_path);
  const auto grid = make_grid(spec.from, spec.to, spec.steps, spec.log_grid);
  const bool want_pulse = spec.per == "pulse" || spec.per == "both";
  const bool want_second = spec.per == "second" || spec.per == "both";
  if (!want_pulse && !want_second)
    throw dv::ConfigError("--per must be pulse, second or both");
  const bool want_plob = spec.baselines.find("plob") != std::string::npos;
  const bool want_nomem = spec.baselines.find("nomem") != std::string::npos;

  const auto nomem_cfg = dv::load_preset("no-memory-baseline");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::string> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) break;
      const auto cfg = apply_variable(base, spec.var, grid[i]);
      const double length = cfg.channel.length;
      const auto pt = rt::secret_key_rate(cfg, length);
      rows[i] = format_row(
          {length, pt.p_sbsm, pt.p_mbsm, pt.y11, pt.e_x, pt.e_z,
           want_pulse ? pt.r_per_pulse : nan,
           want_second ? pt.r_per_second : nan,
           want_plob ? rt::plob_bound(length, cfg.channel.attenuation_length)
                     : nan,
           want_nomem ? rt::no_memory_rate(nomem_cfg, length).r_per_second
                      : nan});
    }
  };
  const int n_threads = std::max(
      1, std::min<int>(threads, static_cast<int>(grid.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << kCsvHeader << "\n";
  for (const auto& row : rows) csv << row << "\n";
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw dv::ConfigError("cannot open output file " + out_path);
    out << csv.str();
  }
  return 0;
}

SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dv::ConfigError("cannot open sweep spec " + path);
  SweepSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r\n");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r\n");
      return s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw dv::ConfigError(path + ":" + std::to_string(lineno) +
                            ": expected 'key = value'");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "preset") spec.preset = value;
    else if (key == "config")
      // Config paths are relative to the spec file's directory.
      spec.config_path =
          (std::filesystem::path(path).parent_path() / value).string();
    else if (key == "var") spec.var = value;
    else if (key == "from") spec.from = std::stod(value);
    else if (key == "to") spec.to = std::stod(value);
    else if (key == "steps") spec.steps = std::stoi(value);
    else if (key == "log") spec.log_grid = value == "true" || value == "1";
    else if (key == "per") spec.per = value;
    else if (key == "baselines") spec.baselines = value;
    else
      throw dv::ConfigError(path + ": unknown key '" + key + "'");
  }
  return spec;
}

int run_crossover(const std::string& preset, const std::string& config_path,
                  const std::string& baseline, double from, double to,
                  int steps) {
  const auto cfg = resolve_config(preset, config_path);
  const auto nomem_cfg = dv::load_preset("no-memory-baseline");
  std::function<double(double)> rate, ref;
  if (baseline == "plob") {
    rate = [cfg](double l) { return rt::secret_key_rate(cfg, l).r_per_pulse; };
    ref = [cfg](double l) {
      return rt::plob_bound(l, cfg.channel.attenuation_length);
    };
  } else if (baseline == "nomem") {
    rate = [cfg](double l) {
      return rt::secret_key_rate(cfg, l).r_per_second;
    };
    ref = [nomem_cfg](double l) {
      return rt::no_memory_rate(nomem_cfg, l).r_per_second;
    };
  } else {
    throw dv::ConfigError("--baseline must be plob or nomem");
  }

  const auto grid = make_grid(from, to, steps, false);
  double prev = grid.front();
  double prev_diff = rate(prev) - ref(prev);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double diff = rate(grid[i]) - ref(grid[i]);
    if ((prev_diff > 0.0) != (diff > 0.0)) {
      const double km = rt::crossover_distance(rate, ref, prev, grid[i]);
      std::printf("crossover at %.1f km (+/- 0.5 km) vs %s\n", km,
                  baseline.c_str());
      return 0;
    }
    prev = grid[i];
    prev_diff = diff;
  }
  std::printf("none in range [%g, %g] km vs %s\n", from, to,
              baseline.c_str());
  return 0;
}

int run_presets() {
  for (const auto& name : dv::preset_names()) std::printf("%s\n", name.c_str());
  return 0;
}

bool verify_presets() {
  bool ok = true;
  for (const auto& name : dv::preset_names()) {
    try {
      dv::load_preset(name).validate();
    } catch (const dv::ConfigError& e) {
      std::printf("FAIL preset %s: %s\n", name.c_str(), e.what());
      ok = false;
    }
  }
  if (ok) std::printf("ok: %zu presets load and validate\n",
                      dv::preset_names().size());
  return ok;
}

bool verify_invariants(int n_trials) {
  std::mt19937_64 rng(20240811);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  fk::DetectorModel det{0.7, 1e-3, 0.0};
  double worst = 0.0;
  for (int trial = 0; trial < n_trials; ++trial) {
    fk::FockBasis shape(3, 2, 2);
    std::vector<std::pair<fk::Occupation, fk::Complex>> amps;
    double norm2 = 0.0;
    for (int i = 0; i < shape.dim(); ++i) {
      fk::Complex a(gauss(rng), gauss(rng));
      norm2 += std::norm(a);
      amps.emplace_back(shape.occupation(i), a);
    }
    for (auto& [occ, a] : amps) a /= std::sqrt(norm2);
    auto st = fk::pure_state(3, 2, amps, 2);
    st = fk::apply_loss(st, trial % 3, unit(rng));
    st = fk::apply_beam_splitter(st, 0, 1, unit(rng));
    worst = std::max(worst, std::abs(st.trace() - 1.0));
    worst = std::max(worst, std::max(0.0, -st.min_eigenvalue()));
    const double pc = fk::threshold_probability(st, 2, det, fk::Outcome::Click);
    const double pn =
        fk::threshold_probability(st, 2, det, fk::Outcome::NoClick);
    worst = std::max(worst, std::abs(pc + pn - 1.0));
  }
  const bool ok = worst < 1e-9;
  std::printf("%s: state invariants on %d randomized states "
              "(worst violation %.3e)\n",
              ok ? "ok" : "FAIL", n_trials, worst);
  return ok;
}

bool verify_oracle(bool full) {
  const pr::BB84Input in_a{pr::Basis::X, 0};
  const pr::BB84Input in_b{pr::Basis::X, 1};
  double max_diff = 0.0;
  const std::vector<std::pair<double, double>> variants =
      full ? std::vector<std::pair<double, double>>{{0.0, 0.0},
                                                    {1e-6, 0.0},
                                                    {0.0, 0.01}}
           : std::vector<std::pair<double, double>>{{0.0, 0.0}};
  const std::vector<double> lengths =
      full ? std::vector<double>{50.0, 300.0} : std::vector<double>{50.0};
  for (auto scheme : {dv::Scheme::QuasiEpr, dv::Scheme::Nla}) {
    for (const auto& [dark, p2] : variants) {
      auto cfg = dv::load_preset("ideal");
      cfg.scheme = scheme;
      cfg.converter.added_noise = 0.0;
      cfg.side_detector.dark_rate = dark / cfg.pulse_duration;
      cfg.middle_detector.dark_rate = dark / cfg.pulse_duration;
      cfg.source.p2 = p2;
      cfg.source.p1 = 1.0 - p2;
      for (double length : lengths) {
        const auto exact =
            maqkd::oracle::exact_enumerate(cfg, length, in_a, in_b);
        const auto pipe = maqkd::oracle::pipeline_joint_distribution(
            cfg, length, in_a, in_b);
        for (std::size_t i = 0; i < exact.size(); ++i)
          max_diff = std::max(max_diff, std::abs(exact[i] - pipe[i]));
      }
    }
  }
  const bool ok = max_diff < 1e-9;
  std::printf("%s: cross-path equivalence, %zu configurations "
              "(max |delta p| %.3e)\n",
              ok ? "ok" : "FAIL", 2 * variants.size() * lengths.size(),
              max_diff);
  return ok;
}

bool verify_timing(std::uint64_t seed) {
  const auto t = maqkd::oracle::sample_timing(0.01, 1e-9, 1.5e-6, 1000000,
                                              seed);
  const auto ls = rt::loading_statistics(0.01);
  dv::MemoryModel mem;
  mem.coherence_time = 1.5e-6;
  const double decay = rt::decay_factor(mem, 1e-9, 0.01);
  const double z1 =
      std::abs(t.expected_rounds - ls.expected_rounds) / t.expected_rounds_se;
  const double z2 = std::abs(t.decay - decay) / std::max(t.decay_se, 1e-12);
  const bool ok = z1 < 3.0 && z2 < 3.0;
  std::printf("%s: sampled timing vs closed form (rng %s, z-scores "
              "%.2f / %.2f)\n",
              ok ? "ok" : "FAIL", t.rng.c_str(), z1, z2);
  return ok;
}

int run_verify(const std::string& level, std::uint64_t seed) {
  if (level != "quick" && level != "full")
    throw dv::ConfigError("--level must be quick or full");
  const bool full = level == "full";
  bool ok = verify_presets();
  ok = verify_invariants(full ? 1000 : 100) && ok;
  ok = verify_oracle(full) && ok;
  if (full) ok = verify_timing(seed) && ok;
  std::printf("verification %s\n", ok ? "passed" : "FAILED");
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-assisted MDI-QKD rate calculator"};
  app.require_subcommand(1);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Sweep a variable, emit CSV");
  SweepSpec spec;
  std::string spec_path, out_path;
  std::uint64_t seed = 0;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  sweep->add_option("--preset", spec.preset, "Named preset");
  sweep->add_option("--config", spec.config_path, "Config file path");
  sweep->add_option("--spec", spec_path,
                    "Sweep spec file (overrides the sweep options)");
  sweep->add_option("--var", spec.var,
                    "L | dark_count | p2 | eta_NLA | coherence_time");
  sweep->add_option("--from", spec.from, "Range start");
  sweep->add_option("--to", spec.to, "Range end");
  sweep->add_option("--steps", spec.steps, "Number of grid points");
  sweep->add_flag("--log", spec.log_grid, "Logarithmic grid");
  sweep->add_option("--per", spec.per, "pulse | second | both");
  sweep->add_option("--baselines", spec.baselines,
                    "Comma list of plob,nomem");
  sweep->add_option("--out", out_path, "Output file (default stdout)");
  sweep->add_option("--seed", seed,
                    "Recorded for reproducibility; the analytic path is "
                    "deterministic");
  sweep->add_option("--threads", threads, "Worker pool size");

  // crossover
  auto* crossover =
      app.add_subcommand("crossover", "Locate a baseline crossing");
  std::string x_preset, x_config, x_baseline = "plob";
  double x_from = 10.0, x_to = 700.0;
  int x_steps = 70;
  crossover->add_option("--preset", x_preset, "Named preset");
  crossover->add_option("--config", x_config, "Config file path");
  crossover->add_option("--baselines,--baseline", x_baseline,
                        "plob | nomem");
  crossover->add_option("--from", x_from, "Range start, km");
  crossover->add_option("--to", x_to, "Range end, km");
  crossover->add_option("--steps", x_steps, "Scan resolution");

  // presets
  auto* presets = app.add_subcommand("presets", "List available presets");

  // verify
  auto* verify = app.add_subcommand("verify", "Run the self-check suites");
  std::string level = "quick";
  std::uint64_t v_seed = 20240811;
  verify->add_option("--level", level, "quick | full");
  verify->add_option("--seed", v_seed, "Sampling seed for the full level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sweep->parsed()) {
      if (!spec_path.empty()) {
        auto loaded = load_sweep_spec(spec_path);
        loaded.per = sweep->count("--per") ? spec.per : loaded.per;
        loaded.baselines =
            sweep->count("--baselines") ? spec.baselines : loaded.baselines;
        spec = loaded;
      }
      return run_sweep(spec, out_path, threads);
    }
    if (crossover->parsed())
      return run_crossover(x_preset, x_config, x_baseline, x_from, x_to,
                           x_steps);
    if (presets->parsed()) return run_presets();
    if (verify->parsed()) return run_verify(level, v_seed);
  } catch (const dv::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
