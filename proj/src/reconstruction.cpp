#include "viliq/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace viliq {

bool Spectrum::same_grid(const Spectrum& other, double tol) const {
    if (freqs_hz.size() != other.freqs_hz.size()) return false;
    for (std::size_t i = 0; i < freqs_hz.size(); ++i)
        if (std::abs(freqs_hz[i] - other.freqs_hz[i]) > tol) return false;
    return true;
}

std::size_t Spectrum::bin_of(double f_hz) const {
    const auto it = std::lower_bound(freqs_hz.begin(), freqs_hz.end(), f_hz);
    if (it == freqs_hz.end()) return freqs_hz.size() - 1;
    std::size_t i = static_cast<std::size_t>(it - freqs_hz.begin());
    if (i > 0 && std::abs(freqs_hz[i - 1] - f_hz) < std::abs(freqs_hz[i] - f_hz)) --i;
    return i;
}

std::vector<double> make_grid(double f_min_hz, double f_max_hz, double step_hz) {
    std::vector<double> grid;
    const int n = static_cast<int>(std::round((f_max_hz - f_min_hz) / step_hz)) + 1;
    grid.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) grid.push_back(f_min_hz + step_hz * i);
    return grid;
}

Spectrum band_limit(const Spectrum& spec, double lo_hz, double hi_hz) {
    Spectrum out;
    for (std::size_t i = 0; i < spec.freqs_hz.size(); ++i) {
        if (spec.freqs_hz[i] >= lo_hz && spec.freqs_hz[i] <= hi_hz) {
            out.freqs_hz.push_back(spec.freqs_hz[i]);
            out.mags.push_back(spec.mags[i]);
        }
    }
    return out;
}

VibrationTrace discard_transient(const VibrationTrace& trace, double cutoff_s) {
    if (trace.empty()) throw EmptyTrace();
    if (trace.schedule.active_s <= cutoff_s)
        throw BurstTooShort("burst active window shorter than the transient cutoff");
    if (cutoff_s <= 0.0) return trace;
    VibrationTrace out = trace;
    out.samples.clear();
    for (const auto& s : trace.samples) {
        const double tau = s.t - trace.schedule.burst_start(s.burst);
        if (tau >= cutoff_s) out.samples.push_back(s);
    }
    if (out.samples.empty()) throw BurstTooShort("no samples survive the transient cutoff");
    return out;
}

VibrationTrace steady_window(const VibrationTrace& trace) {
    VibrationTrace out = trace;
    out.samples.clear();
    for (const auto& s : trace.samples) {
        const double tau = s.t - trace.schedule.burst_start(s.burst);
        if (tau < trace.schedule.active_s) out.samples.push_back(s);
    }
    return out;
}

VibrationTrace decay_window(const VibrationTrace& trace) {
    VibrationTrace out = trace;
    out.samples.clear();
    for (const auto& s : trace.samples) {
        const double tau = s.t - trace.schedule.burst_start(s.burst);
        if (tau >= trace.schedule.active_s) out.samples.push_back(s);
    }
    return out;
}

FoldedWaveform fold(const VibrationTrace& trace, double period_s,
                    const std::vector<int>& signs) {
    if (trace.empty()) throw EmptyTrace("fold needs at least one sample");
    if (!(period_s > 0.0)) throw InvalidParameter("fold period must be positive");
    if (!signs.empty() && static_cast<int>(signs.size()) != trace.schedule.n_bursts)
        throw InvalidParameter("one sign per burst required");

    struct Entry {
        double phase;
        double t;
        double tau;
        double value;
    };
    std::vector<Entry> entries;
    entries.reserve(trace.size());
    for (const auto& s : trace.samples) {
        const double tau = s.t - trace.schedule.burst_start(s.burst);
        double phase = std::fmod(tau / period_s, 1.0);
        if (phase < 0.0) phase += 1.0;
        const int sign = signs.empty() ? 1 : signs[static_cast<std::size_t>(s.burst)];
        entries.push_back({phase, s.t, tau, s.value * sign});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.phase != b.phase) return a.phase < b.phase;
        return a.t < b.t;
    });

    FoldedWaveform folded;
    folded.period_s = period_s;
    folded.chosen_signs = signs.empty() ? std::vector<int>(trace.schedule.n_bursts, 1) : signs;
    folded.phases.reserve(entries.size());
    folded.values.reserve(entries.size());
    folded.source_times.reserve(entries.size());
    for (const auto& e : entries) {
        folded.phases.push_back(e.phase);
        folded.values.push_back(e.value);
        folded.source_times.push_back(e.tau);
    }
    return folded;
}

std::vector<std::complex<double>> nonuniform_dtft_complex(const std::vector<double>& times,
                                                          const std::vector<double>& values,
                                                          const std::vector<double>& freqs_hz) {
    if (times.empty() || times.size() != values.size())
        throw InvalidParameter("dtft needs matching, non-empty times and values");
    std::vector<std::complex<double>> out(freqs_hz.size());
    for (std::size_t k = 0; k < freqs_hz.size(); ++k) {
        const double w = 2.0 * kPi * freqs_hz[k];
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < times.size(); ++n) {
            const double a = w * times[n];
            re += values[n] * std::cos(a);
            im -= values[n] * std::sin(a);
        }
        out[k] = {re, im};
    }
    return out;
}

Spectrum nonuniform_dtft(const std::vector<double>& times, const std::vector<double>& values,
                         const std::vector<double>& freqs_hz) {
    Spectrum spec;
    spec.freqs_hz = freqs_hz;
    spec.mags.reserve(freqs_hz.size());
    for (const auto& c : nonuniform_dtft_complex(times, values, freqs_hz))
        spec.mags.push_back(std::abs(c));
    return spec;
}

Spectrum amplitude_spectrum(const std::vector<double>& times, const std::vector<double>& values,
                            const std::vector<double>& freqs_hz) {
    Spectrum spec = nonuniform_dtft(times, values, freqs_hz);
    const double scale = 2.0 / static_cast<double>(times.size());
    for (double& m : spec.mags) m *= scale;
    return spec;
}

namespace {

struct Peak {
    double freq;
    double mag;
};

std::vector<Peak> local_maxima(const Spectrum& spec) {
    std::vector<Peak> peaks;
    for (std::size_t i = 1; i + 1 < spec.mags.size(); ++i)
        if (spec.mags[i] > spec.mags[i - 1] && spec.mags[i] > spec.mags[i + 1])
            peaks.push_back({spec.freqs_hz[i], spec.mags[i]});
    return peaks;
}

} // namespace

double dominance_ratio(const Spectrum& spec, double min_freq_hz) {
    if (spec.mags.empty()) throw InvalidParameter("empty spectrum");
    const auto peaks = local_maxima(spec);
    const Peak* best = nullptr;
    for (const auto& p : peaks)
        if (p.freq > min_freq_hz && (!best || p.mag > best->mag)) best = &p;
    if (!best) throw NoPeakAboveMinFreq("no spectral peak above the minimum frequency");
    double runner_up = 0.0;
    for (const auto& p : peaks)
        if (&p != best) runner_up = std::max(runner_up, p.mag);
    if (runner_up == 0.0) return std::numeric_limits<double>::infinity();
    return best->mag / runner_up;
}

FoldedWaveform select_reordering(const VibrationTrace& trace, double period_s,
                                 int score_periods) {
    const int n = trace.schedule.n_bursts;
    if (n > 16) throw InvalidParameter("exhaustive sign search limited to 16 bursts");
    if (score_periods < 1) throw InvalidParameter("score_periods must be positive");
    if (trace.empty()) throw EmptyTrace();

    const std::vector<double> grid = make_grid();
    const double score_window = period_s * score_periods;
    const std::size_t n_classes = std::size_t{1} << (n - 1);

    double best_score = -1.0, second_score = -1.0;
    std::vector<int> best_signs;
    for (std::size_t code = 0; code < n_classes; ++code) {
        std::vector<int> signs(static_cast<std::size_t>(n), 1);
        for (int b = 1; b < n; ++b)
            if (code & (std::size_t{1} << (b - 1))) signs[static_cast<std::size_t>(b)] = -1;
        const FoldedWaveform folded = fold(trace, score_window, signs);
        std::vector<double> fold_times(folded.phases.size());
        for (std::size_t i = 0; i < folded.phases.size(); ++i)
            fold_times[i] = folded.phases[i] * score_window;
        double score = 0.0;
        try {
            score = dominance_ratio(nonuniform_dtft(fold_times, folded.values, grid));
        } catch (const NoPeakAboveMinFreq&) {
            score = 0.0;
        }
        if (score > best_score) {
            second_score = best_score;
            best_score = score;
            best_signs = signs;
        } else if (score > second_score) {
            second_score = score;
        }
    }

    if (n_classes >= 2) {
        const bool both_inf = std::isinf(best_score) && std::isinf(second_score);
        if (both_inf || (std::isfinite(best_score) &&
                         best_score - second_score < 0.01 * best_score))
            throw AmbiguousReordering("top two sign assignments score within 1%");
    }
    return fold(trace, period_s, best_signs);
}

} // namespace viliq
