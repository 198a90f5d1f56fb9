#include "viliq/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace viliq {

DeviceModel DeviceModel::make_default() {
    DeviceModel d;
    d.stiffness_n_per_m = d.mass_kg * d.omega() * d.omega() + 1.0e4;
    // kc such that f_r spans ~160 Hz (100 mL) down to ~110 Hz (500 mL)
    d.kc = std::pow(2.0 * kPi * 110.0, 2) * (d.mc + d.alpha_load * 500.0);
    return d;
}

OscillatorParams DeviceModel::params_for(const Viscosity& eta) const {
    OscillatorParams p;
    p.m = mass_kg;
    p.k = stiffness_n_per_m;
    p.f0 = motor_force_n;
    p.omega = omega();
    p.beta = beta_of(eta);
    return p;
}

double DeviceModel::beta_of(const Viscosity& eta) const {
    return beta_coef * std::sqrt(eta.pa_s);
}

double DeviceModel::resonance_hz(double volume_ml) const {
    return coupled_resonance(kc, mc, alpha_load, volume_ml);
}

double DeviceModel::mode_gain(double f_hz, double volume_ml) const {
    const double fr = resonance_hz(volume_ml);
    const double detune = fr * fr - f_hz * f_hz;
    const double damp = fr * f_hz / envelope_q;
    return 1.0 / std::sqrt(detune * detune + damp * damp);
}

double DeviceModel::envelope(double f_hz, double volume_ml) const {
    return mode_gain(f_hz, volume_ml) / mode_gain(f_hz, ref_volume_ml);
}

namespace {

std::vector<int> draw_signs(int n_bursts, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5349474eULL);
    std::bernoulli_distribution flip(0.5);
    std::vector<int> signs(static_cast<std::size_t>(n_bursts), 1);
    for (auto& s : signs) s = flip(rng) ? -1 : 1;
    return signs;
}

} // namespace

VibrationTrace make_dense_trace(const DeviceModel& device, const SceneSpec& scene,
                                const PipelineConfig& config) {
    const Viscosity eta = Viscosity::from_centipoise(scene.eta_cp);
    const OscillatorParams params = device.params_for(eta);
    const GeometryParams geom = device.geometry();
    const double f_tau = shear_force(eta, geom);
    const SteadyState steady = steady_state(params, f_tau);
    const double env = device.envelope(device.drive_freq_hz, scene.volume_ml);

    TraceConfig cfg;
    cfg.sample_rate_hz = config.dense_rate_hz;
    cfg.transient_s = config.transient_cutoff_s;
    cfg.noise_std = scene.noise_frac * steady.amplitude * env;
    cfg.seed = scene.seed;
    cfg.liquid_scale = env;
    cfg.sign_flips = scene.sign_flips.empty()
                         ? draw_signs(config.schedule.n_bursts, scene.seed)
                         : scene.sign_flips;

    if (scene.with_interference) {
        for (const auto& tone : device.interference) {
            // in-phase with the liquid response at the fundamental
            const double phase = tone.harmonic == 1 ? -steady.phase : 0.37 * tone.harmonic;
            cfg.extra_tones.push_back(
                {device.drive_freq_hz * tone.harmonic, tone.amplitude, phase, 0.0, true});
        }
    }
    if (scene.with_ring) {
        const double fr = device.resonance_hz(scene.volume_ml);
        cfg.extra_tones.push_back({fr, device.ring_amplitude, device.ring_phase,
                                   kPi * fr / device.ring_q, false});
    }

    VibrationTrace trace = synthesize(params, eta, geom, config.schedule, cfg);
    if (trace.ground_truth) trace.ground_truth->volume_ml = scene.volume_ml;
    return trace;
}

VibrationTrace make_api_trace(const DeviceModel& device, const SceneSpec& scene,
                              const PipelineConfig& config) {
    const VibrationTrace dense = make_dense_trace(device, scene, config);
    TraceConfig api;
    api.sample_rate_hz = config.api_rate_hz;
    api.jitter_std_s = scene.jitter_std_s;
    api.seed = scene.seed ^ 0x4a49545445524aULL;
    return resample_api(dense, api);
}

std::vector<VibrationTrace> make_airborne_recordings(const DeviceModel& device,
                                                     const PipelineConfig& config,
                                                     int n_recordings, double noise_std,
                                                     std::uint64_t seed) {
    std::vector<VibrationTrace> recs;
    recs.reserve(static_cast<std::size_t>(n_recordings));
    for (int i = 0; i < n_recordings; ++i) {
        TraceConfig cfg;
        cfg.sample_rate_hz = config.dense_rate_hz;
        cfg.noise_std = noise_std;
        cfg.seed = derive_seed(seed, 0xA12B, static_cast<std::uint64_t>(i));
        for (const auto& tone : device.interference)
            cfg.extra_tones.push_back(
                {device.drive_freq_hz * tone.harmonic, tone.amplitude,
                 tone.harmonic == 1 ? 0.0 : 0.37 * tone.harmonic, 0.0, false});
        recs.push_back(synthesize_airborne(device.drive_freq_hz, 0.35, cfg));
    }
    return recs;
}

SspiTemplate make_sspi_template(const DeviceModel& device, const PipelineConfig& config,
                                int n_recordings, double noise_std, std::uint64_t seed) {
    return build_sspi(make_airborne_recordings(device, config, n_recordings, noise_std, seed),
                      config.grid.make());
}

VolumeDb make_volume_db(const DeviceModel& device, const PipelineConfig& config,
                        const std::vector<double>& volumes_ml, const SspiTemplate* sspi,
                        double eta_cal_cp, std::uint64_t seed) {
    std::vector<std::pair<VibrationTrace, double>> refs;
    for (std::size_t i = 0; i < volumes_ml.size(); ++i) {
        SceneSpec scene;
        scene.eta_cp = eta_cal_cp;
        scene.volume_ml = volumes_ml[i];
        scene.noise_frac = 0.0;
        scene.jitter_std_s = 0.0;
        scene.seed = derive_seed(seed, 0xDB, i);
        scene.with_interference = sspi != nullptr;
        scene.sign_flips.assign(static_cast<std::size_t>(config.schedule.n_bursts), 1);
        refs.emplace_back(make_api_trace(device, scene, config), volumes_ml[i]);
    }
    return build_volume_db_from_traces(refs, config, sspi, device.ref_volume_ml);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t rep) {
    // splitmix64 over the mixed words
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (cell + 1) + 0xbf58476d1ce4e5b9ULL * (rep + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace viliq
