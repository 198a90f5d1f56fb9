#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "viliq/io.hpp"
#include "viliq/scene.hpp"

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace viliq;

namespace {

std::pair<std::vector<double>, std::vector<double>> trace_arrays(const VibrationTrace& t) {
    std::vector<double> ts, vs;
    ts.reserve(t.size());
    vs.reserve(t.size());
    for (const auto& s : t.samples) {
        ts.push_back(s.t);
        vs.push_back(s.value);
    }
    return {ts, vs};
}

} // namespace

PYBIND11_MODULE(_viliq, m) {
    m.doc() = "vibration-to-viscosity estimation pipeline";

    py::register_exception<Error>(m, "ViliqError");

    py::class_<Viscosity>(m, "Viscosity")
        .def(py::init([](double cp) { return Viscosity::from_centipoise(cp); }), py::arg("cp"))
        .def_readonly("pa_s", &Viscosity::pa_s)
        .def_property_readonly("cp", &Viscosity::centipoise)
        .def("__repr__", [](const Viscosity& v) {
            return "Viscosity(" + std::to_string(v.centipoise()) + " cP)";
        });

    py::class_<OscillatorParams>(m, "OscillatorParams")
        .def(py::init([](double m_, double beta, double k, double f0, double omega) {
                 return OscillatorParams{m_, beta, k, f0, omega};
             }),
             py::arg("m"), py::arg("beta"), py::arg("k"), py::arg("f0"), py::arg("omega"))
        .def_readwrite("m", &OscillatorParams::m)
        .def_readwrite("beta", &OscillatorParams::beta)
        .def_readwrite("k", &OscillatorParams::k)
        .def_readwrite("f0", &OscillatorParams::f0)
        .def_readwrite("omega", &OscillatorParams::omega);

    py::class_<SteadyState>(m, "SteadyState")
        .def_readonly("amplitude", &SteadyState::amplitude)
        .def_readonly("phase", &SteadyState::phase);

    py::class_<DecaySolution>(m, "DecaySolution")
        .def_readonly("rate", &DecaySolution::rate)
        .def_readonly("omega_d", &DecaySolution::omega_d)
        .def_readonly("t_d", &DecaySolution::t_d);

    m.def("shear_force",
          [](double eta_cp, double gamma) {
              return shear_force(Viscosity::from_centipoise(eta_cp),
                                 GeometryParams::from_gain(gamma));
          },
          py::arg("eta_cp"), py::arg("gamma"));
    m.def("steady_state", &steady_state, py::arg("params"), py::arg("f_tau"));
    m.def("decay_solution", &decay_solution, py::arg("params"), py::arg("a0") = 1.0,
          py::arg("theta") = 0.0);
    m.def("log_decrement", &log_decrement);
    m.def("beta_from_decrement", &beta_from_decrement, py::arg("lambda_"), py::arg("t_d"),
          py::arg("m"));
    m.def("estimate_viscosity",
          [](double amplitude, double lambda, double t_d, const OscillatorParams& p,
             double gamma) {
              return estimate_viscosity(amplitude, lambda, t_d, p,
                                        GeometryParams::from_gain(gamma))
                  .centipoise();
          },
          py::arg("amplitude"), py::arg("lambda_"), py::arg("t_d"), py::arg("params"),
          py::arg("gamma"));
    m.def("stokes_layer",
          [](double eta_cp, double rho, double omega) {
              return stokes_layer(Viscosity::from_centipoise(eta_cp), rho, omega);
          },
          py::arg("eta_cp"), py::arg("rho"), py::arg("omega"));

    m.def("nonuniform_dtft",
          [](const std::vector<double>& t, const std::vector<double>& x,
             const std::vector<double>& f) {
              const Spectrum s = nonuniform_dtft(t, x, f);
              return py::make_tuple(s.freqs_hz, s.mags);
          },
          py::arg("times"), py::arg("values"), py::arg("freqs_hz"));

    m.def("coupled_resonance", &coupled_resonance, py::arg("kc"), py::arg("mc"),
          py::arg("alpha_load"), py::arg("volume_ml"));

    m.def("omp_solve",
          [](const std::vector<std::vector<double>>& dict_rows, const std::vector<double>& y,
             int max_atoms, double tol_rel) {
              const Eigen::Index m_rows = static_cast<Eigen::Index>(dict_rows.size());
              const Eigen::Index n_cols =
                  m_rows > 0 ? static_cast<Eigen::Index>(dict_rows[0].size()) : 0;
              Eigen::MatrixXd D(m_rows, n_cols);
              for (Eigen::Index r = 0; r < m_rows; ++r)
                  for (Eigen::Index c = 0; c < n_cols; ++c)
                      D(r, c) = dict_rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
              Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
              for (std::size_t i = 0; i < y.size(); ++i)
                  yv[static_cast<Eigen::Index>(i)] = y[i];
              const SparseSolution sol = omp(yv, D, OmpStop{max_atoms, tol_rel});
              std::vector<double> coeffs(sol.coeffs.data(),
                                         sol.coeffs.data() + sol.coeffs.size());
              return py::make_tuple(sol.support, coeffs, sol.residual_norm);
          },
          py::arg("dictionary"), py::arg("y"), py::arg("max_atoms") = 10,
          py::arg("tol_rel") = 1e-3);

    py::class_<LiquidDb>(m, "LiquidDb")
        .def(py::init<>())
        .def("add",
             [](LiquidDb& db, const std::string& label, double eta_cp) {
                 db.add({label, Viscosity::from_centipoise(eta_cp), std::nullopt});
             })
        .def_static("from_json_file", [](const std::string& path) {
            return liquid_db_from_json(read_json(path));
        });
    m.def("identify",
          [](double eta_cp, const LiquidDb& db) {
              const auto r = identify(Viscosity::from_centipoise(eta_cp), db);
              return py::make_tuple(r.label, r.distance);
          },
          py::arg("eta_cp"), py::arg("db"));

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_readwrite("drive_freq_hz", &PipelineConfig::drive_freq_hz)
        .def_readwrite("api_rate_hz", &PipelineConfig::api_rate_hz)
        .def_readwrite("use_srr", &PipelineConfig::use_srr)
        .def_readwrite("use_omp", &PipelineConfig::use_omp)
        .def_readwrite("use_sspi", &PipelineConfig::use_sspi)
        .def_readwrite("use_volume", &PipelineConfig::use_volume)
        .def_readwrite("seed", &PipelineConfig::seed);

    py::class_<DeviceModel>(m, "DeviceModel")
        .def_static("default", &DeviceModel::make_default)
        .def_readwrite("gamma", &DeviceModel::gamma_n_per_pas)
        .def("resonance_hz", &DeviceModel::resonance_hz);

    py::class_<VibrationTrace>(m, "VibrationTrace")
        .def_property_readonly("arrays", &trace_arrays)
        .def_property_readonly("n_samples", &VibrationTrace::size)
        .def_property_readonly("ground_truth_eta_cp", [](const VibrationTrace& t) {
            return t.ground_truth ? t.ground_truth->eta.centipoise() : 0.0;
        });

    m.def("simulate_scene",
          [](double eta_cp, double volume_ml, double noise_frac, double jitter_std_s,
             std::uint64_t seed, bool dense) {
              const DeviceModel device = DeviceModel::make_default();
              SceneSpec scene;
              scene.eta_cp = eta_cp;
              scene.volume_ml = volume_ml;
              scene.noise_frac = noise_frac;
              scene.jitter_std_s = jitter_std_s;
              scene.seed = seed;
              PipelineConfig cfg;
              return dense ? make_dense_trace(device, scene, cfg)
                           : make_api_trace(device, scene, cfg);
          },
          py::arg("eta_cp"), py::arg("volume_ml") = 500.0, py::arg("noise_frac") = 1e-4,
          py::arg("jitter_std_s") = 0.0, py::arg("seed") = 1, py::arg("dense") = false);

    m.def("run_pipeline",
          [](double eta_cp, double volume_ml, double noise_frac, std::uint64_t seed) {
              const DeviceModel device = DeviceModel::make_default();
              PipelineConfig cfg;
              const SspiTemplate sspi = make_sspi_template(device, cfg);
              const VolumeDb volumes =
                  make_volume_db(device, cfg, {100, 200, 300, 400, 500}, &sspi);
              PipelineContext ctx;
              ctx.sspi = &sspi;
              ctx.volumes = &volumes;

              std::vector<CalibrationPoint> points;
              const GeometryParams geom = device.geometry();
              for (double cal_cp : {1.0, 1.06, 1.16, 1.68}) {
                  for (double v : {100.0, 200.0, 400.0, 500.0}) {
                      const Viscosity eta = Viscosity::from_centipoise(cal_cp);
                      const OscillatorParams p = device.params_for(eta);
                      const SteadyState s = steady_state(p, shear_force(eta, geom));
                      const DecaySolution d = decay_solution(p, 1.0, 0.0);
                      points.push_back({eta, v, s.amplitude, log_decrement(d), d.t_d});
                  }
              }
              CalibrateOptions opts;
              opts.omega = device.omega();
              opts.reference_mass = device.mass_kg;
              const CalibratedSystem system = calibrate(points, opts);

              SceneSpec scene;
              scene.eta_cp = eta_cp;
              scene.volume_ml = volume_ml;
              scene.noise_frac = noise_frac;
              scene.seed = seed;
              const auto trace = make_api_trace(device, scene, cfg);
              const auto est = estimate_trace(trace, system, cfg, ctx);
              return py::make_tuple(est.eta.centipoise(), est.beyond_boundary);
          },
          py::arg("eta_cp"), py::arg("volume_ml") = 500.0, py::arg("noise_frac") = 1e-4,
          py::arg("seed") = 1);
}
