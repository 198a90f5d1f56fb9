#pragma once

// Synthetic measurement source standing in for the phone: burst-excited
// traces (onset transient, steady stage, free decay), optional additive
// interference tones, Gaussian sample noise, and API-rate resampling with
// timestamp jitter. Pure given a seed.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "viliq/core_model.hpp"

namespace viliq {

struct BurstSchedule {
    double active_s = 0.5;      // forcing duration per burst
    double base_pause_s = 0.5;  // minimum pause
    double t_wait_s = 0.0025;   // per-burst extra wait
    int n_bursts = 4;

    void validate() const;
    // Pause after burst i (1-indexed): base_pause_s + i * t_wait_s.
    double pause_after(int burst_index_1) const;
    double burst_start(int burst_index_0) const;
    double cycle_end() const; // end of the last pause
};

// One additive tone, per burst, in burst-local time. decay_rate = 0 keeps it
// sustained for the active window; positive rates model a rung structure mode.
struct ToneComponent {
    double freq_hz = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;       // radians, value = amp * sin(2*pi*f*t + phase)
    double decay_rate = 0.0;  // [1/s], envelope exp(-decay_rate * t_local)
    bool apply_onset = true;  // multiply by the motor spin-up envelope
};

struct TraceConfig {
    double sample_rate_hz = 1600.0;
    double jitter_std_s = 0.0;
    double noise_std = 0.0;     // additive Gaussian, sample units
    double transient_s = 0.2;   // startup transient length (discarded downstream)
    std::vector<int> sign_flips; // +-1 per burst; empty means all +1
    double liquid_scale = 1.0;   // spectral-envelope scale applied to the liquid response
    std::vector<ToneComponent> extra_tones;
    std::uint64_t seed = 0;

    void validate(int n_bursts) const;
    int sign_of_burst(int burst_index_0) const;
};

struct TraceGroundTruth {
    Viscosity eta;
    OscillatorParams params;
    double gamma = 0.0;
    double steady_amplitude = 0.0; // synthesized motor-band amplitude (envelope applied)
    double lambda = 0.0;
    double t_d = 0.0;
    double volume_ml = 0.0;
};

struct TraceSample {
    double t = 0.0;
    double value = 0.0;
    int burst = 0;
};

struct VibrationTrace {
    std::vector<TraceSample> samples;
    BurstSchedule schedule;
    TraceConfig config;
    double drive_freq_hz = 0.0;
    std::optional<TraceGroundTruth> ground_truth;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
};

// Dense burst-excited trace. Per burst (burst-local time tau):
//   forcing window:  onset(tau) * A * sin(w*tau - phi) * liquid_scale + extra tones
//   pause window:    free decay continued from the steady state at cutoff
// Per-burst sign applied to the whole burst; Gaussian noise added last.
VibrationTrace synthesize(const OscillatorParams& params, const Viscosity& eta,
                          const GeometryParams& geom, const BurstSchedule& sched,
                          const TraceConfig& cfg);

// Overload taking an interference template: dominant template bins above
// 10% of the peak are injected as sustained tones (in-phase with the drive).
struct SspiTemplate;
VibrationTrace synthesize(const OscillatorParams& params, const Viscosity& eta,
                          const GeometryParams& geom, const BurstSchedule& sched,
                          const TraceConfig& cfg, const SspiTemplate& sspi);

// Interference-only recording (clamp-suspended phone): tones + noise, one burst.
VibrationTrace synthesize_airborne(double drive_freq_hz, double duration_s,
                                   const TraceConfig& cfg);

// Nearest-instant decimation of a dense trace to cfg.sample_rate_hz. Sampling
// instants get Gaussian jitter; reported timestamps stay nominal, which is the
// mismatch a learned observation model absorbs. Deterministic under cfg.seed.
VibrationTrace resample_api(const VibrationTrace& trace, const TraceConfig& cfg);

} // namespace viliq
