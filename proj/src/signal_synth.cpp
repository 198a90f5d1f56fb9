#include "viliq/signal_synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "viliq/interference_volume.hpp"

namespace viliq {

void BurstSchedule::validate() const {
    if (!(active_s > 0.0)) throw InvalidParameter("active_s must be positive");
    if (!(base_pause_s > 0.0)) throw InvalidParameter("base_pause_s must be positive");
    if (t_wait_s < 0.0) throw InvalidParameter("t_wait_s must be non-negative");
    if (n_bursts < 1) throw InvalidParameter("need at least one burst");
}

double BurstSchedule::pause_after(int burst_index_1) const {
    return base_pause_s + static_cast<double>(burst_index_1) * t_wait_s;
}

double BurstSchedule::burst_start(int burst_index_0) const {
    double t = 0.0;
    for (int i = 0; i < burst_index_0; ++i) t += active_s + pause_after(i + 1);
    return t;
}

double BurstSchedule::cycle_end() const {
    return burst_start(n_bursts - 1) + active_s + pause_after(n_bursts);
}

void TraceConfig::validate(int n_bursts) const {
    if (!(sample_rate_hz > 0.0)) throw InvalidParameter("sample_rate_hz must be positive");
    if (transient_s < 0.0) throw InvalidParameter("transient_s must be non-negative");
    if (!sign_flips.empty() && static_cast<int>(sign_flips.size()) != n_bursts)
        throw InvalidParameter("sign_flips length must equal n_bursts");
    for (int s : sign_flips)
        if (s != 1 && s != -1) throw InvalidParameter("sign flips must be +-1");
}

int TraceConfig::sign_of_burst(int burst_index_0) const {
    if (sign_flips.empty()) return 1;
    return sign_flips[static_cast<std::size_t>(burst_index_0)];
}

namespace {

struct DecayStart {
    double a0 = 0.0;
    double theta = 0.0;
};

// Continuity of displacement and velocity at the forcing cutoff.
DecayStart decay_from_steady(const SteadyState& steady, const OscillatorParams& params,
                             double cutoff_tau, double rate, double omega_d, double scale) {
    const double A = steady.amplitude * scale;
    const double arg = params.omega * cutoff_tau - steady.phase;
    const double x0 = A * std::sin(arg);
    const double v0 = A * params.omega * std::cos(arg);
    const double c = (v0 + rate * x0) / omega_d;
    DecayStart d;
    d.a0 = std::sqrt(x0 * x0 + c * c);
    d.theta = std::atan2(x0, c);
    return d;
}

} // namespace

VibrationTrace synthesize(const OscillatorParams& params, const Viscosity& eta,
                          const GeometryParams& geom, const BurstSchedule& sched,
                          const TraceConfig& cfg) {
    params.validate();
    sched.validate();
    cfg.validate(sched.n_bursts);

    const double f_tau = shear_force(eta, geom);
    OscillatorParams p = params;
    p.beta = std::max(params.beta, 0.0);
    const SteadyState steady = steady_state(p, f_tau);
    const DecaySolution decay = decay_solution(p, 0.0, 0.0);
    const DecayStart start =
        decay_from_steady(steady, p, sched.active_s, decay.rate, decay.omega_d, cfg.liquid_scale);

    // Onset time constant sized so the default 200 ms discard removes >99%.
    const double tau_rise = cfg.transient_s > 0.0 ? cfg.transient_s / 5.0 : 0.0;

    VibrationTrace trace;
    trace.schedule = sched;
    trace.config = cfg;
    trace.drive_freq_hz = p.omega / (2.0 * kPi);
    TraceGroundTruth gt;
    gt.eta = eta;
    gt.params = p;
    gt.gamma = geom.gamma;
    gt.steady_amplitude = steady.amplitude * cfg.liquid_scale;
    gt.lambda = log_decrement(decay);
    gt.t_d = decay.t_d;
    trace.ground_truth = gt;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    const double dt = 1.0 / cfg.sample_rate_hz;
    const double t_end = sched.cycle_end();
    const std::size_t n = static_cast<std::size_t>(std::floor(t_end / dt)) + 1;
    trace.samples.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        int burst = sched.n_bursts - 1;
        for (int b = 0; b < sched.n_bursts; ++b) {
            const double next = (b + 1 < sched.n_bursts) ? sched.burst_start(b + 1) : t_end + dt;
            if (t < next) {
                burst = b;
                break;
            }
        }
        const double tau = t - sched.burst_start(burst);
        double value = 0.0;
        if (tau < sched.active_s) {
            const double onset = tau_rise > 0.0 ? 1.0 - std::exp(-tau / tau_rise) : 1.0;
            value = onset * cfg.liquid_scale * steady.amplitude *
                    std::sin(p.omega * tau - steady.phase);
            for (const auto& tone : cfg.extra_tones) {
                double env = std::exp(-tone.decay_rate * tau);
                if (tone.apply_onset) env *= onset;
                value += tone.amplitude * env * std::sin(2.0 * kPi * tone.freq_hz * tau + tone.phase);
            }
        } else {
            const double td = tau - sched.active_s;
            value = start.a0 * std::exp(-decay.rate * td) * std::sin(decay.omega_d * td + start.theta);
        }
        value *= static_cast<double>(cfg.sign_of_burst(burst));
        if (cfg.noise_std > 0.0) value += cfg.noise_std * noise(rng);
        trace.samples.push_back({t, value, burst});
    }
    return trace;
}

VibrationTrace synthesize(const OscillatorParams& params, const Viscosity& eta,
                          const GeometryParams& geom, const BurstSchedule& sched,
                          const TraceConfig& cfg, const SspiTemplate& sspi) {
    TraceConfig with_tones = cfg;
    const auto& spec = sspi.spectrum;
    double peak = 0.0;
    for (double m : spec.mags) peak = std::max(peak, m);
    for (std::size_t i = 0; i < spec.freqs_hz.size(); ++i) {
        const bool is_local_max =
            i > 0 && i + 1 < spec.mags.size() && spec.mags[i] > spec.mags[i - 1] &&
            spec.mags[i] > spec.mags[i + 1];
        if (is_local_max && spec.mags[i] >= 0.1 * peak)
            with_tones.extra_tones.push_back({spec.freqs_hz[i], spec.mags[i], 0.0, 0.0, true});
    }
    return synthesize(params, eta, geom, sched, with_tones);
}

VibrationTrace synthesize_airborne(double drive_freq_hz, double duration_s,
                                   const TraceConfig& cfg) {
    if (!(duration_s > 0.0)) throw InvalidParameter("duration must be positive");
    cfg.validate(1);
    VibrationTrace trace;
    trace.drive_freq_hz = drive_freq_hz;
    trace.config = cfg;
    trace.schedule.active_s = duration_s;
    trace.schedule.n_bursts = 1;

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const double dt = 1.0 / cfg.sample_rate_hz;
    const std::size_t n = static_cast<std::size_t>(std::floor(duration_s / dt)) + 1;
    trace.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        double value = 0.0;
        for (const auto& tone : cfg.extra_tones)
            value += tone.amplitude * std::exp(-tone.decay_rate * t) *
                     std::sin(2.0 * kPi * tone.freq_hz * t + tone.phase);
        if (cfg.noise_std > 0.0) value += cfg.noise_std * noise(rng);
        trace.samples.push_back({t, value, 0});
    }
    return trace;
}

VibrationTrace resample_api(const VibrationTrace& trace, const TraceConfig& cfg) {
    if (trace.empty()) throw EmptyTrace("cannot resample an empty trace");
    // Dense enough to stand in for the continuous signal: the 1600 Hz rig
    // rate against the 167 Hz drive is the reference configuration.
    if (trace.config.sample_rate_hz < 10.0 * cfg.sample_rate_hz ||
        trace.config.sample_rate_hz < 5.0 * trace.drive_freq_hz)
        throw TraceTooSparse("input trace too sparse to decimate");
    if (!(cfg.sample_rate_hz > 0.0) || cfg.sample_rate_hz > trace.config.sample_rate_hz)
        throw InvalidParameter("target rate must be positive and below the dense rate");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> jitter(0.0, 1.0);

    VibrationTrace out;
    out.schedule = trace.schedule;
    out.drive_freq_hz = trace.drive_freq_hz;
    out.ground_truth = trace.ground_truth;
    out.config = trace.config;
    out.config.sample_rate_hz = cfg.sample_rate_hz;
    out.config.jitter_std_s = cfg.jitter_std_s;
    out.config.seed = cfg.seed;

    const auto& dense = trace.samples;
    const double t_last = dense.back().t;
    const double step = 1.0 / cfg.sample_rate_hz;
    const double dense_dt = 1.0 / trace.config.sample_rate_hz;
    const std::size_t count = static_cast<std::size_t>(std::floor(t_last / step)) + 1;
    out.samples.reserve(count);

    for (std::size_t k = 0; k < count; ++k) {
        const double nominal = static_cast<double>(k) * step;
        double instant = nominal;
        if (cfg.jitter_std_s > 0.0) instant += cfg.jitter_std_s * jitter(rng);
        instant = std::clamp(instant, 0.0, t_last);
        // Linear interpolation on the dense grid; exact decimation when the
        // instant falls on a grid point (jitter 0 with commensurate rates).
        const double idx = instant / dense_dt;
        std::size_t lo = std::min(static_cast<std::size_t>(idx), dense.size() - 1);
        double frac = idx - static_cast<double>(lo);
        if (frac > 1.0 - 1e-9 && lo + 1 < dense.size()) {
            ++lo;
            frac = 0.0;
        } else if (frac < 1e-9) {
            frac = 0.0;
        }
        const std::size_t hi = std::min(lo + 1, dense.size() - 1);
        const double value = dense[lo].value + frac * (dense[hi].value - dense[lo].value);
        const std::size_t burst_src = std::min(static_cast<std::size_t>(nominal / dense_dt),
                                               dense.size() - 1);
        out.samples.push_back({nominal, value, dense[burst_src].burst});
    }
    return out;
}

} // namespace viliq
