#include "viliq/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace viliq {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

json schedule_to_json(const BurstSchedule& s) {
    return json{{"active_s", s.active_s},
                {"base_pause_s", s.base_pause_s},
                {"t_wait_s", s.t_wait_s},
                {"n_bursts", s.n_bursts}};
}

BurstSchedule schedule_from_json(const json& j) {
    BurstSchedule s;
    s.active_s = j.at("active_s");
    s.base_pause_s = j.at("base_pause_s");
    s.t_wait_s = j.at("t_wait_s");
    s.n_bursts = j.at("n_bursts");
    return s;
}

} // namespace

json to_json(const PipelineConfig& c) {
    return json{{"drive_freq_hz", c.drive_freq_hz},
                {"api_rate_hz", c.api_rate_hz},
                {"dense_rate_hz", c.dense_rate_hz},
                {"schedule", schedule_to_json(c.schedule)},
                {"transient_cutoff_s", c.transient_cutoff_s},
                {"grid", {{"f_min_hz", c.grid.f_min_hz},
                          {"f_max_hz", c.grid.f_max_hz},
                          {"step_hz", c.grid.step_hz}}},
                {"order", c.order == CompensationOrder::sspi_first ? "sspi_first" : "volume_first"},
                {"n_harmonics", c.n_harmonics},
                {"motor_band_hz", c.motor_band_hz},
                {"alpha_harmonic", c.alpha_harmonic},
                {"alpha_band_hz", c.alpha_band_hz},
                {"decay_band_lo_hz", c.decay_band_lo_hz},
                {"decay_band_hi_hz", c.decay_band_hi_hz},
                {"boundary_cp", c.boundary_cp},
                {"use_srr", c.use_srr},
                {"use_omp", c.use_omp},
                {"use_sspi", c.use_sspi},
                {"use_volume", c.use_volume},
                {"seed", c.seed}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig c;
    c.drive_freq_hz = j.at("drive_freq_hz");
    c.api_rate_hz = j.at("api_rate_hz");
    c.dense_rate_hz = j.at("dense_rate_hz");
    c.schedule = schedule_from_json(j.at("schedule"));
    c.transient_cutoff_s = j.at("transient_cutoff_s");
    c.grid.f_min_hz = j.at("grid").at("f_min_hz");
    c.grid.f_max_hz = j.at("grid").at("f_max_hz");
    c.grid.step_hz = j.at("grid").at("step_hz");
    c.order = j.at("order") == "sspi_first" ? CompensationOrder::sspi_first
                                            : CompensationOrder::volume_first;
    c.n_harmonics = j.at("n_harmonics");
    c.motor_band_hz = j.at("motor_band_hz");
    c.alpha_harmonic = j.at("alpha_harmonic");
    c.alpha_band_hz = j.at("alpha_band_hz");
    c.decay_band_lo_hz = j.at("decay_band_lo_hz");
    c.decay_band_hi_hz = j.at("decay_band_hi_hz");
    c.boundary_cp = j.at("boundary_cp");
    c.use_srr = j.at("use_srr");
    c.use_omp = j.at("use_omp");
    c.use_sspi = j.at("use_sspi");
    c.use_volume = j.at("use_volume");
    c.seed = j.at("seed");
    return c;
}

std::string config_hash(const PipelineConfig& config) {
    std::ostringstream hex;
    hex << std::hex << fnv1a(to_json(config).dump());
    return hex.str();
}

json to_json(const VibrationTrace& trace, const PipelineConfig& config) {
    json samples = json::array();
    for (const auto& s : trace.samples) samples.push_back(json::array({s.t, s.value, s.burst}));
    json j{{"format", "viliq-trace/1"},
           {"config_hash", config_hash(config)},
           {"drive_freq_hz", trace.drive_freq_hz},
           {"schedule", schedule_to_json(trace.schedule)},
           {"sample_rate_hz", trace.config.sample_rate_hz},
           {"jitter_std_s", trace.config.jitter_std_s},
           {"noise_std", trace.config.noise_std},
           {"transient_s", trace.config.transient_s},
           {"sign_flips", trace.config.sign_flips},
           {"seed", trace.config.seed},
           {"samples", samples}};
    if (trace.ground_truth) {
        const auto& g = *trace.ground_truth;
        j["ground_truth"] = json{{"eta_cp", g.eta.centipoise()},
                                 {"m", g.params.m},
                                 {"beta", g.params.beta},
                                 {"k", g.params.k},
                                 {"f0", g.params.f0},
                                 {"omega", g.params.omega},
                                 {"gamma", g.gamma},
                                 {"steady_amplitude", g.steady_amplitude},
                                 {"lambda", g.lambda},
                                 {"t_d", g.t_d},
                                 {"volume_ml", g.volume_ml}};
    }
    return j;
}

VibrationTrace trace_from_json(const json& j) {
    if (j.value("format", "") != "viliq-trace/1") throw IoError("not a viliq trace file");
    VibrationTrace trace;
    trace.drive_freq_hz = j.at("drive_freq_hz");
    trace.schedule = schedule_from_json(j.at("schedule"));
    trace.config.sample_rate_hz = j.at("sample_rate_hz");
    trace.config.jitter_std_s = j.at("jitter_std_s");
    trace.config.noise_std = j.at("noise_std");
    trace.config.transient_s = j.at("transient_s");
    trace.config.sign_flips = j.at("sign_flips").get<std::vector<int>>();
    trace.config.seed = j.at("seed");
    for (const auto& s : j.at("samples"))
        trace.samples.push_back({s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<int>()});
    if (j.contains("ground_truth")) {
        const auto& g = j.at("ground_truth");
        TraceGroundTruth gt;
        gt.eta = Viscosity::from_centipoise(g.at("eta_cp"));
        gt.params.m = g.at("m");
        gt.params.beta = g.at("beta");
        gt.params.k = g.at("k");
        gt.params.f0 = g.at("f0");
        gt.params.omega = g.at("omega");
        gt.gamma = g.at("gamma");
        gt.steady_amplitude = g.at("steady_amplitude");
        gt.lambda = g.at("lambda");
        gt.t_d = g.at("t_d");
        gt.volume_ml = g.at("volume_ml");
        trace.ground_truth = gt;
    }
    return trace;
}

std::string trace_to_csv(const VibrationTrace& trace) {
    std::ostringstream out;
    out << "timestamp_s,value,burst_index\r\n";
    out.precision(17);
    for (const auto& s : trace.samples) out << s.t << "," << s.value << "," << s.burst << "\r\n";
    return out.str();
}

json to_json(const Spectrum& spectrum) {
    return json{{"freqs_hz", spectrum.freqs_hz}, {"mags", spectrum.mags}};
}

Spectrum spectrum_from_json(const json& j) {
    Spectrum s;
    s.freqs_hz = j.at("freqs_hz").get<std::vector<double>>();
    s.mags = j.at("mags").get<std::vector<double>>();
    return s;
}

json to_json(const SspiTemplate& tmpl) {
    return json{{"format", "viliq-sspi/1"},
                {"window_s", tmpl.window_s},
                {"n_windows", tmpl.n_windows},
                {"n_recordings", tmpl.n_recordings},
                {"spectrum", to_json(tmpl.spectrum)}};
}

SspiTemplate sspi_from_json(const json& j) {
    if (j.value("format", "") != "viliq-sspi/1") throw IoError("not an SSPI template file");
    SspiTemplate t;
    t.window_s = j.at("window_s");
    t.n_windows = j.at("n_windows");
    t.n_recordings = j.at("n_recordings");
    t.spectrum = spectrum_from_json(j.at("spectrum"));
    return t;
}

json to_json(const VolumeWeights& weights) {
    return json{{"freqs_hz", weights.freqs_hz},
                {"weights", weights.weights},
                {"volume_ml", weights.volume_ml},
                {"ref_volume_ml", weights.ref_volume_ml}};
}

VolumeWeights volume_weights_from_json(const json& j) {
    VolumeWeights w;
    w.freqs_hz = j.at("freqs_hz").get<std::vector<double>>();
    w.weights = j.at("weights").get<std::vector<double>>();
    w.volume_ml = j.at("volume_ml");
    w.ref_volume_ml = j.at("ref_volume_ml");
    return w;
}

json to_json(const VolumeDb& db) {
    json entries = json::array();
    for (const auto& e : db.entries)
        entries.push_back(json{{"volume_ml", e.volume_ml},
                               {"reference", to_json(e.reference)},
                               {"weights", to_json(e.weights)}});
    return json{{"format", "viliq-volume-db/1"}, {"entries", entries}};
}

VolumeDb volume_db_from_json(const json& j) {
    if (j.value("format", "") != "viliq-volume-db/1") throw IoError("not a volume db file");
    VolumeDb db;
    for (const auto& e : j.at("entries")) {
        VolumeDbEntry entry;
        entry.volume_ml = e.at("volume_ml");
        entry.reference = spectrum_from_json(e.at("reference"));
        entry.weights = volume_weights_from_json(e.at("weights"));
        db.add(std::move(entry));
    }
    return db;
}

json to_json(const LiquidDb& db) {
    json entries = json::array();
    for (const auto& e : db.entries) {
        json entry{{"label", e.label}, {"viscosity_cp", e.eta.centipoise()}};
        if (e.std_cp) entry["std_cp"] = *e.std_cp;
        entries.push_back(entry);
    }
    return json{{"format", "viliq-liquids/1"}, {"entries", entries}};
}

LiquidDb liquid_db_from_json(const json& j) {
    if (j.value("format", "") != "viliq-liquids/1") throw IoError("not a liquid db file");
    LiquidDb db;
    for (const auto& e : j.at("entries")) {
        LiquidEntry entry;
        entry.label = e.at("label");
        entry.eta = Viscosity::from_centipoise(e.at("viscosity_cp"));
        if (e.contains("std_cp")) entry.std_cp = e.at("std_cp").get<double>();
        db.add(std::move(entry));
    }
    return db;
}

json to_json(const ObservationModel& model) {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(model.matrix.size()));
    for (Eigen::Index r = 0; r < model.matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < model.matrix.cols(); ++c)
            values.push_back(model.matrix(r, c));
    return json{{"format", "viliq-observation/1"},
                {"m", model.m},
                {"n", model.n},
                {"values_row_major", values},
                {"basis_freqs_hz", model.basis.freqs_hz},
                {"fit_residual", model.fit_residual}};
}

ObservationModel observation_model_from_json(const json& j) {
    if (j.value("format", "") != "viliq-observation/1") throw IoError("not an observation model");
    ObservationModel model;
    model.m = j.at("m");
    model.n = j.at("n");
    model.basis.freqs_hz = j.at("basis_freqs_hz").get<std::vector<double>>();
    model.fit_residual = j.at("fit_residual");
    const auto values = j.at("values_row_major").get<std::vector<double>>();
    if (static_cast<int>(values.size()) != model.m * model.n)
        throw IoError("observation matrix size mismatch");
    model.matrix.resize(model.m, model.n);
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < model.matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < model.matrix.cols(); ++c)
            model.matrix(r, c) = values[idx++];
    return model;
}

json to_json(const CalibrationBundle& bundle) {
    json points = json::array();
    for (const auto& p : bundle.points)
        points.push_back(json{{"eta_cp", p.known_eta.centipoise()},
                              {"volume_ml", p.volume_ml},
                              {"amplitude", p.amplitude},
                              {"lambda", p.lambda},
                              {"t_d", p.t_d}});
    return json{{"format", "viliq-calibration/1"},
                {"config", to_json(bundle.config)},
                {"config_hash", config_hash(bundle.config)},
                {"system", {{"m", bundle.system.params.m},
                            {"k", bundle.system.params.k},
                            {"f0", bundle.system.params.f0},
                            {"omega", bundle.system.params.omega},
                            {"gamma", bundle.system.geom.gamma},
                            {"fit_residual", bundle.system.fit_residual}}},
                {"points", points},
                {"sspi", to_json(bundle.sspi)},
                {"volume_db", to_json(bundle.volumes)}};
}

CalibrationBundle calibration_bundle_from_json(const json& j) {
    if (j.value("format", "") != "viliq-calibration/1") throw IoError("not a calibration file");
    CalibrationBundle b;
    b.config = pipeline_config_from_json(j.at("config"));
    b.hash = j.at("config_hash");
    if (b.hash != config_hash(b.config))
        throw ConfigHashMismatch("calibration file hash does not match its config");
    const auto& sys = j.at("system");
    b.system.params.m = sys.at("m");
    b.system.params.k = sys.at("k");
    b.system.params.f0 = sys.at("f0");
    b.system.params.omega = sys.at("omega");
    b.system.params.beta = 0.0;
    b.system.geom = GeometryParams::from_gain(sys.at("gamma"));
    b.system.fit_residual = sys.at("fit_residual");
    for (const auto& p : j.at("points")) {
        CalibrationPoint point;
        point.known_eta = Viscosity::from_centipoise(p.at("eta_cp"));
        point.volume_ml = p.at("volume_ml");
        point.amplitude = p.at("amplitude");
        point.lambda = p.at("lambda");
        point.t_d = p.at("t_d");
        b.points.push_back(point);
    }
    b.sspi = sspi_from_json(j.at("sspi"));
    b.volumes = volume_db_from_json(j.at("volume_db"));
    return b;
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

json read_json(const std::string& path) {
    return json::parse(read_text(path));
}

} // namespace viliq
