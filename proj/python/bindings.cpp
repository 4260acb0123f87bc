// Python bindings for the main operations: preset loading, key-rate and
// baseline evaluation, crossover search and the validation oracle.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdlib>

#include "maqkd/config_io.hpp"
#include "maqkd/devices.hpp"
#include "maqkd/oracle.hpp"
#include "maqkd/protocols.hpp"
#include "maqkd/rates.hpp"

namespace py = pybind11;
namespace dv = maqkd::devices;
namespace pr = maqkd::protocols;
namespace rt = maqkd::rates;

PYBIND11_MODULE(maqkd, m) {
  m.doc() = "Memory-assisted MDI-QKD simulator and key-rate calculator";

  py::register_exception<dv::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<dv::Scheme>(m, "Scheme")
      .value("NLA", dv::Scheme::Nla)
      .value("QUASI_EPR", dv::Scheme::QuasiEpr);

  py::class_<dv::DetectorSpec>(m, "DetectorSpec")
      .def_readwrite("efficiency", &dv::DetectorSpec::efficiency)
      .def_readwrite("dark_rate", &dv::DetectorSpec::dark_rate)
      .def_readwrite("dead_time", &dv::DetectorSpec::dead_time);

  py::class_<dv::SourceModel>(m, "SourceModel")
      .def_readwrite("eta_sps", &dv::SourceModel::eta_sps)
      .def_readwrite("p1", &dv::SourceModel::p1)
      .def_readwrite("p2", &dv::SourceModel::p2);

  py::class_<dv::MemoryModel>(m, "MemoryModel")
      .def_readwrite("eta_w", &dv::MemoryModel::eta_w)
      .def_readwrite("eta_r0", &dv::MemoryModel::eta_r0)
      .def_readwrite("coherence_time", &dv::MemoryModel::coherence_time)
      .def_readwrite("interaction_time", &dv::MemoryModel::interaction_time)
      .def_readwrite("init_time", &dv::MemoryModel::init_time)
      .def_readwrite("n_spectral_modes", &dv::MemoryModel::n_spectral_modes)
      .def_readwrite("max_rep_rate", &dv::MemoryModel::max_rep_rate);

  py::class_<dv::ChannelModel>(m, "ChannelModel")
      .def_readwrite("length", &dv::ChannelModel::length)
      .def_readwrite("attenuation_length",
                     &dv::ChannelModel::attenuation_length);

  py::class_<dv::ConverterModel>(m, "ConverterModel")
      .def_readwrite("eta_fc", &dv::ConverterModel::eta_fc)
      .def_readwrite("added_noise", &dv::ConverterModel::added_noise);

  py::class_<dv::SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("name", &dv::SystemConfig::name)
      .def_readwrite("scheme", &dv::SystemConfig::scheme)
      .def_readwrite("nla_reflectivity", &dv::SystemConfig::nla_reflectivity)
      .def_readwrite("source", &dv::SystemConfig::source)
      .def_readwrite("memory", &dv::SystemConfig::memory)
      .def_readwrite("channel", &dv::SystemConfig::channel)
      .def_readwrite("converter", &dv::SystemConfig::converter)
      .def_readwrite("side_detector", &dv::SystemConfig::side_detector)
      .def_readwrite("middle_detector", &dv::SystemConfig::middle_detector)
      .def_readwrite("pulse_duration", &dv::SystemConfig::pulse_duration)
      .def_readwrite("repetition_period",
                     &dv::SystemConfig::repetition_period)
      .def_readwrite("error_correction_inefficiency",
                     &dv::SystemConfig::error_correction_inefficiency)
      .def_readwrite("mode_mismatch", &dv::SystemConfig::mode_mismatch)
      .def("validate", &dv::SystemConfig::validate);

  py::class_<rt::RatePoint>(m, "RatePoint")
      .def_readonly("length_km", &rt::RatePoint::length_km)
      .def_readonly("p_sbsm", &rt::RatePoint::p_sbsm)
      .def_readonly("p_mbsm", &rt::RatePoint::p_mbsm)
      .def_readonly("y11", &rt::RatePoint::y11)
      .def_readonly("e_x", &rt::RatePoint::e_x)
      .def_readonly("e_z", &rt::RatePoint::e_z)
      .def_readonly("r_per_pulse", &rt::RatePoint::r_per_pulse)
      .def_readonly("r_per_second", &rt::RatePoint::r_per_second)
      .def_readonly("key_fraction_raw", &rt::RatePoint::key_fraction_raw)
      .def_readonly("expected_rounds", &rt::RatePoint::expected_rounds);

  py::class_<rt::NoMemoryPoint>(m, "NoMemoryPoint")
      .def_readonly("length_km", &rt::NoMemoryPoint::length_km)
      .def_readonly("yield_", &rt::NoMemoryPoint::yield)
      .def_readonly("e_x", &rt::NoMemoryPoint::e_x)
      .def_readonly("e_z", &rt::NoMemoryPoint::e_z)
      .def_readonly("r_per_pulse", &rt::NoMemoryPoint::r_per_pulse)
      .def_readonly("r_per_second", &rt::NoMemoryPoint::r_per_second);

  py::class_<maqkd::oracle::TimingSample>(m, "TimingSample")
      .def_readonly("expected_rounds",
                    &maqkd::oracle::TimingSample::expected_rounds)
      .def_readonly("expected_rounds_se",
                    &maqkd::oracle::TimingSample::expected_rounds_se)
      .def_readonly("decay", &maqkd::oracle::TimingSample::decay)
      .def_readonly("decay_se", &maqkd::oracle::TimingSample::decay_se)
      .def_readonly("rng", &maqkd::oracle::TimingSample::rng);

  m.def("preset_names", &dv::preset_names);
  m.def("load_preset", &dv::load_preset, py::arg("name"));
  m.def("load_config_file", &dv::load_config_file, py::arg("path"));
  m.def("set_data_dir", [](const std::string& path) {
    setenv("MAQKD_DATA_DIR", path.c_str(), 1);
  }, py::arg("path"), "Point preset loading at a data directory");

  m.def("secret_key_rate", &rt::secret_key_rate, py::arg("config"),
        py::arg("length_km"));
  m.def("no_memory_rate", &rt::no_memory_rate, py::arg("config"),
        py::arg("length_km"));
  m.def("plob_bound", &rt::plob_bound, py::arg("length_km"),
        py::arg("attenuation_length"));
  m.def("binary_entropy", &rt::binary_entropy, py::arg("q"));
  m.def("crossover_distance", &rt::crossover_distance, py::arg("rate_a"),
        py::arg("rate_b"), py::arg("lo_km"), py::arg("hi_km"));
  m.def("asymptotic_yield", &rt::asymptotic_yield, py::arg("scheme"),
        py::arg("eta"), py::arg("length_km"), py::arg("attenuation_length"));
  m.def("sample_timing", &maqkd::oracle::sample_timing, py::arg("p"),
        py::arg("repetition_period"), py::arg("coherence_time"),
        py::arg("n_trials"), py::arg("seed"));
}
