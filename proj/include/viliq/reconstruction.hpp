#pragma once

// Supersampling Rate Reconstruction: transient discard, phase folding of
// multi-burst sub-Nyquist samples into one motor period, nonuniform DTFT,
// and the spectral-dominance sign re-ordering search.

#include <complex>
#include <vector>

#include "viliq/signal_synth.hpp"

namespace viliq {

struct Spectrum {
    std::vector<double> freqs_hz; // non-negative, increasing
    std::vector<double> mags;

    bool same_grid(const Spectrum& other, double tol = 1e-9) const;
    // Index of the bin nearest to f (grid assumed uniform enough for lookup).
    std::size_t bin_of(double f_hz) const;
};

// Uniform grid [f_min, f_max] at step_hz. Pipeline default: 1..800 at 1 Hz.
std::vector<double> make_grid(double f_min_hz = 1.0, double f_max_hz = 800.0,
                              double step_hz = 1.0);

// Sub-spectrum restricted to [lo, hi].
Spectrum band_limit(const Spectrum& spec, double lo_hz, double hi_hz);

struct FoldedWaveform {
    std::vector<double> phases; // sorted fractions in [0,1)
    std::vector<double> values;
    double period_s = 0.0;
    std::vector<int> chosen_signs;
    std::vector<double> source_times; // burst-relative time of each folded sample
};

// Removes the first cutoff_s of every burst, preserving timestamps.
VibrationTrace discard_transient(const VibrationTrace& trace, double cutoff_s = 0.2);

// Keep only the forcing (steady) window of each burst, or only the pause.
VibrationTrace steady_window(const VibrationTrace& trace);
VibrationTrace decay_window(const VibrationTrace& trace);

// Phase folding over burst-local time: phase = ((t - burst_start) mod T) / T.
// The drive restarts with each burst, so folding is burst-relative; values are
// multiplied by the per-burst sign. Output sorted by phase, ties by timestamp.
FoldedWaveform fold(const VibrationTrace& trace, double period_s,
                    const std::vector<int>& signs);

// Raw Eq.-style transform: X(f) = sum_n x[n] exp(-i 2 pi f t_n).
std::vector<std::complex<double>> nonuniform_dtft_complex(const std::vector<double>& times,
                                                          const std::vector<double>& values,
                                                          const std::vector<double>& freqs_hz);
Spectrum nonuniform_dtft(const std::vector<double>& times, const std::vector<double>& values,
                         const std::vector<double>& freqs_hz);

// Amplitude-normalized magnitude spectrum: 2|X(f)| / N (a pure tone maps to
// its amplitude at its own bin).
Spectrum amplitude_spectrum(const std::vector<double>& times, const std::vector<double>& values,
                            const std::vector<double>& freqs_hz);

// Largest local maximum above min_freq_hz divided by the next largest local
// maximum anywhere. Returns +inf when no competing peak exists.
double dominance_ratio(const Spectrum& spec, double min_freq_hz = 150.0);

// Exhaustive sign search over 2^(n-1) classes (global sign fixed on burst 0),
// scored by dominance_ratio on the spectrum of a score_periods-long fold
// (single-period windows are too coarse to resolve the motor line). Returns
// the single-period fold of the winning assignment. Throws
// AmbiguousReordering when the top two scores are within 1%.
FoldedWaveform select_reordering(const VibrationTrace& trace, double period_s,
                                 int score_periods = 8);

} // namespace viliq
