#pragma once

// Synthetic device model and scene builder: one self-consistent parameter set
// for the phone+container stand-in, volume-dependent spectral envelope via a
// coupled container resonance, straight-path interference tones, and a
// structural ring localized in the startup transient.

#include <cstdint>

#include "viliq/pipeline.hpp"

namespace viliq {

struct InterferenceTone {
    int harmonic = 1;     // multiple of the drive frequency
    double amplitude = 0.0;
};

struct DeviceModel {
    // reduced-order oscillator constants (beta is liquid-dependent)
    double mass_kg = 0.1;
    double stiffness_n_per_m = 120090.0; // k - w^2 m = +1e4 at 167 Hz
    double motor_force_n = 45.0;
    double drive_freq_hz = 167.0;
    double gamma_n_per_pas = 13.0;
    // damping law beta(eta) = beta_coef * sqrt(eta) [N*s/m, eta in Pa*s]
    double beta_coef = 8.7;

    // coupled container resonance: f_r(V) = (1/2pi) sqrt(kc/(mc + a V))
    double kc = 0.0;             // derived in make_default()
    double mc = 0.2585;
    double alpha_load = 0.001;   // kg per mL
    double envelope_q = 30.0;
    double ref_volume_ml = 500.0;

    // straight-path interference, in-phase with the liquid response
    std::vector<InterferenceTone> interference{{1, 0.12}, {2, 0.036}, {3, 0.018}};

    // structural ring excited by the burst onset; its time constant keeps it
    // inside the discarded transient window
    double ring_amplitude = 0.015;
    double ring_q = 5.0;
    double ring_phase = 0.3;

    static DeviceModel make_default();

    double omega() const { return 2.0 * kPi * drive_freq_hz; }
    OscillatorParams params_for(const Viscosity& eta) const;
    GeometryParams geometry() const { return GeometryParams::from_gain(gamma_n_per_pas); }
    double beta_of(const Viscosity& eta) const;
    double resonance_hz(double volume_ml) const;
    // |H_V(f)| of the container mode, and the envelope ratio against 500 mL
    double mode_gain(double f_hz, double volume_ml) const;
    double envelope(double f_hz, double volume_ml) const;
};

struct SceneSpec {
    double eta_cp = 1.0;
    double volume_ml = 500.0;
    double noise_frac = 1e-4;   // Gaussian noise std relative to the steady amplitude
    double jitter_std_s = 0.0;
    std::uint64_t seed = 1;
    bool with_interference = true;
    bool with_ring = true;
    std::vector<int> sign_flips; // empty: drawn from the seed
};

// Dense (feasibility-rig rate) trace of the scene.
VibrationTrace make_dense_trace(const DeviceModel& device, const SceneSpec& scene,
                                const PipelineConfig& config);

// API-rate trace: dense synthesis followed by jittered nearest-instant
// decimation with nominal reported timestamps.
VibrationTrace make_api_trace(const DeviceModel& device, const SceneSpec& scene,
                              const PipelineConfig& config);

// Interference-only recordings of the suspended phone (template calibration).
std::vector<VibrationTrace> make_airborne_recordings(const DeviceModel& device,
                                                     const PipelineConfig& config,
                                                     int n_recordings, double noise_std,
                                                     std::uint64_t seed);

// Template + volume database built from synthetic calibration recordings of
// one reference liquid across fill levels.
SspiTemplate make_sspi_template(const DeviceModel& device, const PipelineConfig& config,
                                int n_recordings = 30, double noise_std = 0.0,
                                std::uint64_t seed = 99);
// Calibration recordings carry the interference; the weights are taken from
// the post-subtraction line spectra so they hold the pure volume envelope.
VolumeDb make_volume_db(const DeviceModel& device, const PipelineConfig& config,
                        const std::vector<double>& volumes_ml, const SspiTemplate* sspi,
                        double eta_cal_cp = 1.0, std::uint64_t seed = 1234);

// Derived per-cell seed for sweeps; deterministic mixing of (seed, cell, rep).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t rep);

} // namespace viliq
