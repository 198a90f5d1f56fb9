#include "viliq/pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace viliq {

namespace {

struct HarmonicFit {
    std::vector<double> freqs;
    std::vector<double> amp;
    std::vector<double> phase; // value = amp * sin(2 pi f t + phase)
};

std::vector<double> harmonic_freqs(const PipelineConfig& cfg) {
    std::vector<double> f;
    for (int h = 1; h <= cfg.n_harmonics; ++h) {
        const double fh = cfg.drive_freq_hz * h;
        if (fh <= cfg.grid.f_max_hz) f.push_back(fh);
    }
    return f;
}

// Amplitude/phase of the motor harmonics on the folded waveform, via OMP. The
// dictionary holds the harmonic cos/sin atoms plus onset-tail correction
// atoms (the spin-up envelope is not fully gone at the transient cutoff and
// its residue would bias the amplitudes). A supplied learned model replaces
// the ideal dictionary.
HarmonicFit fit_harmonics_omp(const FoldedWaveform& folded, const PipelineConfig& cfg,
                              const ObservationModel* learned) {
    std::vector<double> times(folded.phases.size());
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = folded.phases[i] * folded.period_s;

    Eigen::VectorXd y(static_cast<Eigen::Index>(folded.values.size()));
    for (std::size_t i = 0; i < folded.values.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = folded.values[i];

    const std::vector<double> freqs = harmonic_freqs(cfg);
    ObservationModel model;
    if (learned) {
        model = *learned;
    } else {
        model = ObservationModel::ideal(FourierBasis{freqs}, times);
        if (folded.source_times.size() == folded.values.size() &&
            cfg.transient_cutoff_s > 0.0) {
            const double tau_rise = cfg.transient_cutoff_s / 5.0;
            Eigen::MatrixXd aug(model.matrix.rows(),
                                model.matrix.cols() + static_cast<Eigen::Index>(2 * freqs.size()));
            aug.leftCols(model.matrix.cols()) = model.matrix;
            for (std::size_t j = 0; j < freqs.size(); ++j) {
                const double w = 2.0 * kPi * freqs[j];
                for (std::size_t i = 0; i < folded.source_times.size(); ++i) {
                    const double tail = -std::exp(-folded.source_times[i] / tau_rise);
                    const Eigen::Index r = static_cast<Eigen::Index>(i);
                    aug(r, model.matrix.cols() + static_cast<Eigen::Index>(2 * j)) =
                        tail * std::cos(w * times[i]);
                    aug(r, model.matrix.cols() + static_cast<Eigen::Index>(2 * j + 1)) =
                        tail * std::sin(w * times[i]);
                }
            }
            model.matrix = aug;
            model.n = static_cast<int>(aug.cols());
        }
    }

    OmpStop stop;
    stop.max_atoms = std::min<int>(model.n, static_cast<int>(y.size()));
    stop.residual_tol_rel = 1e-10;
    const SparseSolution sol = omp(y, model.matrix, stop);

    HarmonicFit fit;
    fit.freqs = freqs;
    fit.amp.assign(fit.freqs.size(), 0.0);
    fit.phase.assign(fit.freqs.size(), 0.0);
    std::vector<double> a(fit.freqs.size(), 0.0), b(fit.freqs.size(), 0.0);
    const int n_plain = 2 * static_cast<int>(model.basis.freqs_hz.size());
    for (std::size_t k = 0; k < sol.support.size(); ++k) {
        const int atom = sol.support[k];
        if (atom >= n_plain) continue; // onset-tail corrections carry no amplitude
        const double freq = model.basis.freqs_hz[static_cast<std::size_t>(atom / 2)];
        for (std::size_t j = 0; j < fit.freqs.size(); ++j) {
            if (std::abs(freq - fit.freqs[j]) < 0.5) {
                if (atom % 2 == 0)
                    a[j] += sol.coeffs[static_cast<Eigen::Index>(k)];
                else
                    b[j] += sol.coeffs[static_cast<Eigen::Index>(k)];
            }
        }
    }
    for (std::size_t j = 0; j < fit.freqs.size(); ++j) {
        fit.amp[j] = std::hypot(a[j], b[j]);
        fit.phase[j] = std::atan2(a[j], b[j]); // a cos + b sin = amp sin(. + atan2(a, b))
    }
    return fit;
}

// Fallback without OMP: harmonic amplitude/phase read directly from the
// folded-waveform transform.
HarmonicFit fit_harmonics_dtft(const FoldedWaveform& folded, const PipelineConfig& cfg) {
    std::vector<double> times(folded.phases.size());
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = folded.phases[i] * folded.period_s;
    HarmonicFit fit;
    fit.freqs = harmonic_freqs(cfg);
    const auto spec = nonuniform_dtft_complex(times, folded.values, fit.freqs);
    const double scale = 2.0 / static_cast<double>(times.size());
    for (std::size_t j = 0; j < fit.freqs.size(); ++j) {
        fit.amp.push_back(std::abs(spec[j]) * scale);
        fit.phase.push_back(std::arg(spec[j]) + kPi / 2.0);
    }
    return fit;
}

Spectrum line_spectrum(const HarmonicFit& fit, const std::vector<double>& grid) {
    Spectrum s;
    s.freqs_hz = grid;
    s.mags.assign(grid.size(), 0.0);
    for (std::size_t j = 0; j < fit.freqs.size(); ++j) s.mags[s.bin_of(fit.freqs[j])] = fit.amp[j];
    return s;
}

// Mean of the top-quartile local-maxima magnitudes of the reconstructed
// one-period waveform.
double peak_amplitude(const HarmonicFit& fit, const Spectrum& cleaned, double period_s) {
    std::vector<double> amps(fit.freqs.size());
    for (std::size_t j = 0; j < fit.freqs.size(); ++j)
        amps[j] = cleaned.mags[cleaned.bin_of(fit.freqs[j])];

    const int n_dense = 4096;
    std::vector<double> x(n_dense);
    for (int i = 0; i < n_dense; ++i) {
        const double t = period_s * static_cast<double>(i) / n_dense;
        double v = 0.0;
        for (std::size_t j = 0; j < fit.freqs.size(); ++j)
            v += amps[j] * std::sin(2.0 * kPi * fit.freqs[j] * t + fit.phase[j]);
        x[i] = std::abs(v);
    }
    std::vector<double> peaks;
    for (int i = 0; i < n_dense; ++i) {
        const double prev = x[(i + n_dense - 1) % n_dense];
        const double next = x[(i + 1) % n_dense];
        if (x[i] > prev && x[i] >= next) peaks.push_back(x[i]);
    }
    if (peaks.empty()) return 0.0;
    std::sort(peaks.rbegin(), peaks.rend());
    const std::size_t take = std::max<std::size_t>(1, (peaks.size() + 3) / 4);
    double sum = 0.0;
    for (std::size_t i = 0; i < take; ++i) sum += peaks[i];
    return sum / static_cast<double>(take);
}

struct DecayFeatures {
    double lambda = 0.0;
    double t_d = 0.0;
    int peaks_used = 0;
};

// Composite decay: burst-relative post-cutoff samples overlaid across bursts,
// reconstructed densely from a damped-sinusoid fit (variable projection on
// rate and frequency), then peak ratios and zero crossings.
DecayFeatures decay_features(const VibrationTrace& decay, const std::vector<int>& signs,
                             const PipelineConfig& cfg) {
    std::vector<double> tau, val;
    tau.reserve(decay.size());
    val.reserve(decay.size());
    for (const auto& s : decay.samples) {
        const double t_rel =
            s.t - decay.schedule.burst_start(s.burst) - decay.schedule.active_s;
        if (t_rel < 0.0) continue;
        const int sign = signs.empty() ? 1 : signs[static_cast<std::size_t>(s.burst)];
        tau.push_back(t_rel);
        val.push_back(s.value * sign);
    }
    if (tau.size() < 8) throw TooFewDecayPeaks("not enough decay samples");

    std::vector<std::size_t> order(tau.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return tau[a] < tau[b]; });
    std::vector<double> ts(tau.size()), xs_in(tau.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        ts[i] = tau[order[i]];
        xs_in[i] = val[order[i]];
    }

    // coarse line location, then envelope slope for the rate seed
    std::vector<double> coarse_grid;
    for (double f = cfg.decay_band_lo_hz; f <= cfg.decay_band_hi_hz + 1e-9; f += 1.0)
        coarse_grid.push_back(f);
    const Spectrum coarse = nonuniform_dtft(ts, xs_in, coarse_grid);
    const std::size_t peak_bin = static_cast<std::size_t>(
        std::max_element(coarse.mags.begin(), coarse.mags.end()) - coarse.mags.begin());
    double omega_hat = 2.0 * kPi * coarse.freqs_hz[peak_bin];

    double rate_hat = 1.0;
    {
        const std::size_t block = 8;
        std::vector<double> bt, blv;
        for (std::size_t b = 0; b + block <= ts.size(); b += block) {
            double mean_abs = 0.0, mean_t = 0.0;
            for (std::size_t i = b; i < b + block; ++i) {
                mean_abs += std::abs(xs_in[i]);
                mean_t += ts[i];
            }
            mean_abs /= block;
            mean_t /= block;
            if (!blv.empty() && mean_abs < blv.front() * 1e-3) break;
            if (mean_abs > 0.0) {
                bt.push_back(mean_t);
                blv.push_back(std::log(mean_abs));
            }
        }
        if (bt.size() >= 2) {
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < bt.size(); ++i) {
                sx += bt[i];
                sy += blv[i];
                sxx += bt[i] * bt[i];
                sxy += bt[i] * blv[i];
            }
            const double n = static_cast<double>(bt.size());
            const double slope = (n * sxy - sx * sy) / std::max(n * sxx - sx * sx, 1e-12);
            rate_hat = std::clamp(-slope, 0.01, 2000.0);
        }
    }

    // variable projection: amplitude/phase solved linearly per (rate, omega)
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs_in.size()));
    for (std::size_t i = 0; i < xs_in.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs_in[i];
    double c_cos = 0.0, c_sin = 0.0;
    const auto solve_linear = [&](double rate, double omega, double* sse_out) {
        Eigen::MatrixXd A(v.size(), 2);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double env = std::exp(-rate * ts[static_cast<std::size_t>(i)]);
            A(i, 0) = env * std::cos(omega * ts[static_cast<std::size_t>(i)]);
            A(i, 1) = env * std::sin(omega * ts[static_cast<std::size_t>(i)]);
        }
        const Eigen::Vector2d c = A.colPivHouseholderQr().solve(v);
        if (sse_out) *sse_out = (v - A * c).squaredNorm();
        c_cos = c[0];
        c_sin = c[1];
    };
    double sse = 0.0;
    solve_linear(rate_hat, omega_hat, &sse);
    for (int it = 0; it < 60; ++it) {
        const double dr = std::max(1e-6, rate_hat * 1e-5);
        const double dw = std::max(1e-6, omega_hat * 1e-7);
        double sse_r = 0.0, sse_w = 0.0;
        solve_linear(rate_hat + dr, omega_hat, &sse_r);
        solve_linear(rate_hat, omega_hat + dw, &sse_w);
        const double g_r = (sse_r - sse) / dr;
        const double g_w = (sse_w - sse) / dw;
        // crude curvature from one-sided second differences
        double sse_r2 = 0.0, sse_w2 = 0.0;
        solve_linear(rate_hat - dr, omega_hat, &sse_r2);
        solve_linear(rate_hat, omega_hat - dw, &sse_w2);
        const double h_r = std::max((sse_r + sse_r2 - 2.0 * sse) / (dr * dr), 1e-12);
        const double h_w = std::max((sse_w + sse_w2 - 2.0 * sse) / (dw * dw), 1e-12);
        double step_r = -g_r / h_r;
        double step_w = -g_w / h_w;
        step_r = std::clamp(step_r, -0.5 * rate_hat - 1.0, rate_hat + 1.0);
        step_w = std::clamp(step_w, -0.02 * omega_hat, 0.02 * omega_hat);
        double scale = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 12; ++ls) {
            const double r_try = std::max(rate_hat + scale * step_r, 0.0);
            const double w_try = omega_hat + scale * step_w;
            double sse_try = 0.0;
            solve_linear(r_try, w_try, &sse_try);
            if (sse_try < sse) {
                rate_hat = r_try;
                omega_hat = w_try;
                const double gain = sse - sse_try;
                sse = sse_try;
                improved = true;
                if (gain < 1e-18 + 1e-14 * sse) it = 1000;
                break;
            }
            scale *= 0.5;
        }
        if (!improved) break;
    }
    solve_linear(rate_hat, omega_hat, &sse);
    const double fit_rms = std::sqrt(sse / static_cast<double>(v.size()));

    const double t_max = std::min(ts.back(), 0.45);
    const double dt = 1.0 / 20000.0;
    const int n_dense = static_cast<int>(t_max / dt);
    if (n_dense < 10) throw TooFewDecayPeaks("decay window too short");
    auto eval = [&](double t) {
        const double env = std::exp(-rate_hat * t);
        return env * (c_cos * std::cos(omega_hat * t) + c_sin * std::sin(omega_hat * t));
    };
    std::vector<double> xs(static_cast<std::size_t>(n_dense));
    for (int i = 0; i < n_dense; ++i) xs[static_cast<std::size_t>(i)] = eval(0.002 + i * dt);

    // positive local maxima with parabolic vertex refinement
    std::vector<double> peak_v, peak_t;
    for (int i = 1; i + 1 < n_dense; ++i) {
        const double a = xs[i - 1], b = xs[i], c = xs[i + 1];
        if (b > 0.0 && b >= a && b > c) {
            const double denom = a - 2.0 * b + c;
            double vv = b, tt = 0.002 + i * dt;
            if (denom < 0.0) {
                const double delta = 0.5 * (a - c) / denom;
                vv = b - 0.25 * (a - c) * delta;
                tt += delta * dt;
            }
            peak_v.push_back(vv);
            peak_t.push_back(tt);
        }
    }
    // keep the leading run of peaks above the fit noise floor
    const double floor_v = std::max(5.0 * fit_rms, peak_v.empty() ? 0.0 : peak_v.front() * 1e-4);
    std::size_t count = 0;
    while (count < peak_v.size() && peak_v[count] > floor_v) ++count;
    if (count < 3) throw TooFewDecayPeaks("fewer than three usable decay peaks");

    DecayFeatures out;
    out.peaks_used = static_cast<int>(count);
    out.lambda = std::pow(peak_v[0] / peak_v[count - 1], 1.0 / static_cast<double>(count - 1));

    // damped period from upward zero crossings across the usable window
    std::vector<double> crossings;
    for (int i = 1; i < n_dense; ++i) {
        const double t_here = 0.002 + i * dt;
        if (t_here > peak_t[count - 1] + 0.002) break;
        if (xs[i - 1] < 0.0 && xs[i] >= 0.0) {
            const double f = xs[i - 1] / (xs[i - 1] - xs[i]);
            crossings.push_back(0.002 + (i - 1 + f) * dt);
        }
    }
    if (crossings.size() >= 2) {
        out.t_d = (crossings.back() - crossings.front()) /
                  static_cast<double>(crossings.size() - 1);
    } else {
        out.t_d = (peak_t[count - 1] - peak_t[0]) / static_cast<double>(count - 1);
    }
    return out;
}

VibrationTrace first_burst_only(const VibrationTrace& trace) {
    VibrationTrace out = trace;
    out.samples.clear();
    for (const auto& s : trace.samples)
        if (s.burst == 0) out.samples.push_back(s);
    return out;
}

} // namespace

Features extract_features(const VibrationTrace& trace, const PipelineConfig& config,
                          const PipelineContext& context) {
    if (trace.empty()) throw EmptyTrace("cannot extract features from an empty trace");

    const double period = config.drive_period_s();
    const VibrationTrace working = config.use_srr ? trace : first_burst_only(trace);
    const VibrationTrace trimmed = discard_transient(working, config.transient_cutoff_s);
    const VibrationTrace steady = steady_window(trimmed);
    const VibrationTrace decay = decay_window(trimmed);
    if (steady.empty()) throw BurstTooShort("no steady samples after the transient cutoff");

    Features feats;

    FoldedWaveform folded;
    if (config.use_srr && working.schedule.n_bursts > 1) {
        folded = select_reordering(steady, period);
    } else {
        folded = fold(steady, period, {});
    }
    feats.signs = folded.chosen_signs;

    const HarmonicFit fit = config.use_omp
                                ? fit_harmonics_omp(folded, config, context.observation)
                                : fit_harmonics_dtft(folded, config);

    const std::vector<double> grid = config.grid.make();
    Spectrum spectrum = line_spectrum(fit, grid);

    // Transient-window spectrum (burst-relative, sign-corrected) for volume
    // lookup. The onset-modulated motor harmonics are projected out first:
    // they and their sub-Nyquist images would otherwise bury the container
    // ring that carries the volume signature.
    std::vector<double> tr_t, tr_v;
    for (const auto& s : working.samples) {
        const double t_rel = s.t - working.schedule.burst_start(s.burst);
        if (t_rel < config.transient_cutoff_s && t_rel < working.schedule.active_s) {
            const int sign = feats.signs.empty()
                                 ? 1
                                 : feats.signs[static_cast<std::size_t>(s.burst)];
            tr_t.push_back(t_rel);
            tr_v.push_back(s.value * sign);
        }
    }
    if (!tr_t.empty()) {
        const std::vector<double> motor = harmonic_freqs(config);
        const double tau_rise = config.transient_cutoff_s / 5.0;
        const Eigen::Index n_atoms = static_cast<Eigen::Index>(4 * motor.size());
        if (static_cast<Eigen::Index>(tr_t.size()) > n_atoms + 4) {
            Eigen::MatrixXd atoms(static_cast<Eigen::Index>(tr_t.size()), n_atoms);
            for (std::size_t j = 0; j < motor.size(); ++j) {
                const double w = 2.0 * kPi * motor[j];
                for (std::size_t i = 0; i < tr_t.size(); ++i) {
                    const double onset =
                        tau_rise > 0.0 ? 1.0 - std::exp(-tr_t[i] / tau_rise) : 1.0;
                    const Eigen::Index r = static_cast<Eigen::Index>(i);
                    atoms(r, static_cast<Eigen::Index>(4 * j)) = std::cos(w * tr_t[i]);
                    atoms(r, static_cast<Eigen::Index>(4 * j + 1)) = std::sin(w * tr_t[i]);
                    atoms(r, static_cast<Eigen::Index>(4 * j + 2)) = onset * std::cos(w * tr_t[i]);
                    atoms(r, static_cast<Eigen::Index>(4 * j + 3)) = onset * std::sin(w * tr_t[i]);
                }
            }
            Eigen::VectorXd v(static_cast<Eigen::Index>(tr_v.size()));
            for (std::size_t i = 0; i < tr_v.size(); ++i) v[static_cast<Eigen::Index>(i)] = tr_v[i];
            const Eigen::VectorXd coef = atoms.colPivHouseholderQr().solve(v);
            const Eigen::VectorXd res = v - atoms * coef;
            for (std::size_t i = 0; i < tr_v.size(); ++i) tr_v[i] = res[static_cast<Eigen::Index>(i)];
        }
        feats.wideband = amplitude_spectrum(tr_t, tr_v, grid);
    }

    const VolumeWeights* weights = nullptr;
    if (config.use_volume && context.volumes && !context.volumes->empty()) {
        double volume = 0.0;
        if (context.known_volume_ml) {
            volume = *context.known_volume_ml;
        } else {
            if (feats.wideband.mags.empty())
                throw EmptyTrace("no transient window available for volume estimation");
            volume = estimate_volume(
                band_limit(feats.wideband, config.volume_band_lo_hz, config.volume_band_hi_hz),
                *context.volumes);
        }
        feats.volume_ml = volume;
        weights = &context.volumes->entry_for(volume).weights;
    }

    const auto compensate = [&](const Spectrum& in) {
        return weights ? apply_volume_compensation(in, *weights) : in;
    };
    const auto subtract = [&](const Spectrum& in) {
        if (!(config.use_sspi && context.sspi)) return in;
        const double anchor = config.drive_freq_hz * config.alpha_harmonic;
        try {
            feats.alpha = estimate_alpha(in, *context.sspi, anchor, config.alpha_band_hz);
        } catch (const TemplateZeroInBand&) {
            feats.alpha = estimate_alpha(in, *context.sspi, config.drive_freq_hz,
                                         config.motor_band_hz);
        }
        return subtract_sspi(in, *context.sspi, feats.alpha);
    };
    if (config.order == CompensationOrder::volume_first)
        spectrum = subtract(compensate(spectrum));
    else
        spectrum = compensate(subtract(spectrum));
    feats.motor_spectrum = spectrum;

    feats.amplitude = peak_amplitude(fit, spectrum, period);

    const DecayFeatures dec = decay_features(decay, feats.signs, config);
    feats.lambda = dec.lambda;
    feats.t_d = dec.t_d;
    feats.decay_peaks_used = dec.peaks_used;
    return feats;
}

Estimate estimate_trace(const VibrationTrace& trace, const CalibratedSystem& system,
                        const PipelineConfig& config, const PipelineContext& context) {
    Estimate est;
    est.features = extract_features(trace, config, context);
    est.eta = system.estimate_point(est.features.amplitude, est.features.lambda,
                                    est.features.t_d);
    est.beyond_boundary = est.eta.centipoise() > config.boundary_cp;
    return est;
}

VolumeDb build_volume_db_from_traces(const std::vector<std::pair<VibrationTrace, double>>& refs,
                                     const PipelineConfig& config, const SspiTemplate* sspi,
                                     double ref_volume_ml) {
    PipelineConfig cfg = config;
    cfg.use_sspi = sspi != nullptr;
    cfg.use_volume = false;
    PipelineContext ctx;
    ctx.sspi = sspi;

    struct Entry {
        double volume;
        Spectrum transient;
        Spectrum steady_lines;
    };
    std::vector<Entry> raw;
    for (const auto& [trace, volume] : refs) {
        const Features f = extract_features(trace, cfg, ctx);
        raw.push_back({volume,
                       band_limit(f.wideband, config.volume_band_lo_hz,
                                  config.volume_band_hi_hz),
                       f.motor_spectrum});
    }
    const auto ref_it = std::find_if(raw.begin(), raw.end(),
                                     [&](const Entry& e) { return e.volume == ref_volume_ml; });
    if (ref_it == raw.end())
        throw InvalidParameter("volume references must include the reference volume");

    VolumeDb db;
    for (const auto& e : raw) {
        VolumeDbEntry entry;
        entry.volume_ml = e.volume;
        entry.reference = e.transient;
        entry.weights = volume_weights(ref_it->steady_lines, e.steady_lines, e.volume,
                                       ref_volume_ml);
        db.add(std::move(entry));
    }
    return db;
}

BatchEstimate estimate_batch(const std::vector<VibrationTrace>& traces,
                             const CalibratedSystem& system, const PipelineConfig& config,
                             const PipelineContext& context) {
    if (traces.empty()) throw InvalidParameter("no traces to estimate");
    BatchEstimate batch;
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& t : traces) {
        Estimate e = estimate_trace(t, system, config, context);
        sum += e.eta.centipoise();
        sum_sq += e.eta.centipoise() * e.eta.centipoise();
        batch.beyond_boundary = batch.beyond_boundary || e.beyond_boundary;
        batch.per_trace.push_back(std::move(e));
    }
    const double n = static_cast<double>(traces.size());
    batch.mean_cp = sum / n;
    batch.std_cp = traces.size() > 1
                       ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)))
                       : 0.0;
    return batch;
}

} // namespace viliq
