#include <doctest.h>

#include <cmath>
#include <numeric>

#include "viliq/reconstruction.hpp"
#include "viliq/scene.hpp"

using namespace viliq;

namespace {

OscillatorParams test_params(double beta = 0.5) {
    OscillatorParams p;
    p.m = 0.1;
    p.omega = 2.0 * kPi * 167.0;
    p.k = p.m * p.omega * p.omega + 1.0e4;
    p.f0 = 45.0;
    p.beta = beta;
    return p;
}

} // namespace

TEST_CASE("burst schedule timing") {
    BurstSchedule sched; // 0.5 active, 0.5 base pause, 2.5 ms wait, 4 bursts
    CHECK(sched.burst_start(0) == 0.0);
    CHECK(sched.burst_start(1) == doctest::Approx(1.0025));
    CHECK(sched.burst_start(2) == doctest::Approx(2.0075));
    CHECK(sched.burst_start(3) == doctest::Approx(3.015));
    CHECK(sched.pause_after(2) == doctest::Approx(0.505));

    BurstSchedule degenerate;
    degenerate.n_bursts = 1;
    degenerate.t_wait_s = 0.0;
    CHECK(degenerate.cycle_end() == doctest::Approx(1.0));

    BurstSchedule bad;
    bad.n_bursts = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("dense synthesis reproduces the closed-form steady amplitude") {
    const OscillatorParams p = test_params();
    const GeometryParams geom = GeometryParams::from_gain(13.0);
    const Viscosity eta = Viscosity::from_centipoise(1.16);
    BurstSchedule sched;
    TraceConfig cfg;
    cfg.sample_rate_hz = 1600.0;
    cfg.noise_std = 0.0;

    const VibrationTrace trace = synthesize(p, eta, geom, sched, cfg);
    REQUIRE(trace.ground_truth.has_value());
    const double a_true = trace.ground_truth->steady_amplitude;
    const SteadyState s = steady_state(p, shear_force(eta, geom));
    CHECK(a_true == doctest::Approx(s.amplitude));

    // steady-segment peak equals the closed-form amplitude within 0.5%
    double peak = 0.0;
    for (const auto& smp : trace.samples) {
        const double tau = smp.t - sched.burst_start(smp.burst);
        if (tau > 0.3 && tau < sched.active_s) peak = std::max(peak, std::abs(smp.value));
    }
    CHECK(peak == doctest::Approx(a_true).epsilon(0.005));
}

TEST_CASE("100 Hz sampling of the 167 Hz drive advances 0.67 period per sample") {
    const double period = 1.0 / 167.0;
    const double step = std::fmod(0.01, period) / period;
    CHECK(step == doctest::Approx(0.67).epsilon(1e-6));
}

TEST_CASE("decay segment is continuous at the forcing cutoff") {
    const OscillatorParams p = test_params(2.0);
    const GeometryParams geom = GeometryParams::from_gain(13.0);
    BurstSchedule sched;
    sched.n_bursts = 1;
    TraceConfig cfg;
    cfg.sample_rate_hz = 16000.0;
    cfg.transient_s = 0.2;
    const VibrationTrace trace = synthesize(p, Viscosity::from_centipoise(2.0), geom, sched, cfg);
    // the largest jump between adjacent samples around the cutoff stays at the
    // scale of one dense step of the waveform
    double max_jump = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const double tau = trace.samples[i].t - sched.burst_start(trace.samples[i].burst);
        if (std::abs(tau - sched.active_s) < 0.003)
            max_jump = std::max(max_jump,
                                std::abs(trace.samples[i].value - trace.samples[i - 1].value));
    }
    const double slope_bound = trace.ground_truth->steady_amplitude * p.omega / 16000.0;
    CHECK(max_jump < 1.5 * slope_bound);
}

TEST_CASE("synthesis is deterministic under a seed") {
    const DeviceModel device = DeviceModel::make_default();
    PipelineConfig cfg;
    SceneSpec scene;
    scene.eta_cp = 1.16;
    scene.noise_frac = 0.01;
    scene.jitter_std_s = 1e-4;
    scene.seed = 99;
    const VibrationTrace a = make_api_trace(device, scene, cfg);
    const VibrationTrace b = make_api_trace(device, scene, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.samples[i].t == b.samples[i].t);
        CHECK(a.samples[i].value == b.samples[i].value);
    }
    scene.seed = 100;
    const VibrationTrace c = make_api_trace(device, scene, cfg);
    bool any_differs = false;
    for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i)
        any_differs = any_differs || a.samples[i].value != c.samples[i].value;
    CHECK(any_differs);
}

TEST_CASE("resample_api decimates 16x and keeps nominal timestamps") {
    const OscillatorParams p = test_params();
    const GeometryParams geom = GeometryParams::from_gain(13.0);
    BurstSchedule sched;
    TraceConfig dense_cfg;
    dense_cfg.sample_rate_hz = 1600.0;
    const VibrationTrace dense = synthesize(p, Viscosity::from_centipoise(1.0), geom, sched,
                                            dense_cfg);
    TraceConfig api;
    api.sample_rate_hz = 100.0;
    api.jitter_std_s = 0.0;
    const VibrationTrace out = resample_api(dense, api);
    CHECK(std::abs(static_cast<double>(dense.size()) / static_cast<double>(out.size()) - 16.0) <
          0.05);
    // jitter 0: exact decimation
    for (std::size_t k = 0; k < out.size(); ++k) {
        CHECK(out.samples[k].t == doctest::Approx(0.01 * static_cast<double>(k)));
        CHECK(out.samples[k].value == dense.samples[k * 16].value);
    }
}

TEST_CASE("jittered resampling stays within the burst-stability bound") {
    // mirrors the dense-vs-API variance check: < 2% after alignment
    const OscillatorParams p = test_params();
    const GeometryParams geom = GeometryParams::from_gain(13.0);
    BurstSchedule sched;
    TraceConfig dense_cfg;
    dense_cfg.sample_rate_hz = 1600.0;
    const VibrationTrace dense = synthesize(p, Viscosity::from_centipoise(1.0), geom, sched,
                                            dense_cfg);
    TraceConfig api;
    api.sample_rate_hz = 100.0;
    api.jitter_std_s = 1e-4;
    api.seed = 4;
    const VibrationTrace out = resample_api(dense, api);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const std::size_t di = k * 16;
        if (di >= dense.size()) break;
        const double tau = out.samples[k].t - sched.burst_start(out.samples[k].burst);
        if (tau < 0.2 || tau >= sched.active_s) continue; // steady stage only
        const double diff = out.samples[k].value - dense.samples[di].value;
        num += diff * diff;
        den += dense.samples[di].value * dense.samples[di].value;
    }
    REQUIRE(den > 0.0);
    CHECK(num / den < 0.02);
}

TEST_CASE("resample preconditions") {
    const DeviceModel device = DeviceModel::make_default();
    PipelineConfig cfg;
    SceneSpec scene;
    scene.noise_frac = 0.0;
    const VibrationTrace api = make_api_trace(device, scene, cfg);
    TraceConfig again;
    again.sample_rate_hz = 50.0;
    CHECK_THROWS_AS(resample_api(api, again), TraceTooSparse);
}

TEST_CASE("steady envelope is stationary and decay envelope non-increasing") {
    const DeviceModel device = DeviceModel::make_default();
    PipelineConfig cfg;
    SceneSpec scene;
    scene.eta_cp = 3.65;
    scene.noise_frac = 0.001;
    scene.seed = 8;
    scene.sign_flips = {1, 1, 1, 1};
    const VibrationTrace dense = make_dense_trace(device, scene, cfg);

    // windowed RMS over the post-transient steady stage of burst 0; windows
    // span whole drive periods so the multi-tone content integrates out
    std::vector<double> rms;
    const double win = 8.0 / 167.0;
    for (double lo = 0.25; lo + win <= 0.5; lo += win) {
        double acc = 0.0;
        int n = 0;
        for (const auto& s : dense.samples) {
            if (s.burst == 0 && s.t >= lo && s.t < lo + win) {
                acc += s.value * s.value;
                ++n;
            }
        }
        rms.push_back(std::sqrt(acc / n));
    }
    for (std::size_t i = 1; i < rms.size(); ++i)
        CHECK(std::abs(rms[i] - rms[0]) / rms[0] < 0.01);

    // burst-0 decay envelope: per-period peak magnitudes non-increasing
    std::vector<double> peaks;
    const double t_stop = 0.5;
    for (double lo = t_stop + 0.002; lo + 0.006 < 1.0; lo += 0.006) {
        double peak = 0.0;
        for (const auto& s : dense.samples)
            if (s.burst == 0 && s.t >= lo && s.t < lo + 0.006)
                peak = std::max(peak, std::abs(s.value));
        if (peak > 20.0 * dense.config.noise_std) peaks.push_back(peak);
    }
    REQUIRE(peaks.size() >= 5);
    for (std::size_t i = 1; i < peaks.size(); ++i) CHECK(peaks[i] <= peaks[i - 1] * 1.02);
}

TEST_CASE("template-driven synthesis injects the dominant template tones") {
    SspiTemplate tmpl;
    tmpl.spectrum.freqs_hz = make_grid();
    tmpl.spectrum.mags.assign(tmpl.spectrum.freqs_hz.size(), 0.0);
    tmpl.spectrum.mags[tmpl.spectrum.bin_of(167.0)] = 0.1;
    tmpl.spectrum.mags[tmpl.spectrum.bin_of(334.0)] = 0.04;

    const OscillatorParams p = test_params();
    const GeometryParams geom = GeometryParams::from_gain(13.0);
    BurstSchedule sched;
    sched.n_bursts = 1;
    TraceConfig cfg;
    cfg.sample_rate_hz = 1600.0;
    const VibrationTrace with = synthesize(p, Viscosity::from_centipoise(1.0), geom, sched,
                                           cfg, tmpl);
    const VibrationTrace without = synthesize(p, Viscosity::from_centipoise(1.0), geom, sched,
                                              cfg);
    auto steady_rms = [&](const VibrationTrace& t) {
        double acc = 0.0;
        int n = 0;
        for (const auto& s : t.samples)
            if (s.t > 0.3 && s.t < 0.5) {
                acc += s.value * s.value;
                ++n;
            }
        return std::sqrt(acc / n);
    };
    CHECK(steady_rms(with) > 2.0 * steady_rms(without));
}
