#pragma once

// Straight-path interference template construction, scaled spectral
// subtraction, volume weight vectors, resonance-based volume estimation and
// spectrum compensation.

#include <vector>

#include "viliq/reconstruction.hpp"

namespace viliq {

struct SspiTemplate {
    Spectrum spectrum;       // averaged magnitude spectrum
    double window_s = 0.05;
    int n_windows = 6;
    int n_recordings = 0;
};

struct VolumeWeights {
    std::vector<double> freqs_hz;
    std::vector<double> weights; // per-bin ratio a_vol / a_ref, all > 0
    double volume_ml = 0.0;
    double ref_volume_ml = 500.0;
};

struct VolumeDbEntry {
    double volume_ml = 0.0;
    Spectrum reference; // matching key for estimate_volume
    VolumeWeights weights;
};

struct VolumeDb {
    std::vector<VolumeDbEntry> entries; // unique volumes, ascending

    void add(VolumeDbEntry entry);
    const VolumeDbEntry& entry_for(double volume_ml) const;
    bool empty() const { return entries.empty(); }
};

// Average the magnitude spectra of n_windows 50 ms windows per recording on
// the given grid. Motor-line amplitudes are fitted per window (leakage-free);
// the remaining bins carry the window-DTFT magnitude of the fit residual.
// Each recording must provide window_s * n_windows seconds of steady signal.
SspiTemplate build_sspi(const std::vector<VibrationTrace>& recordings,
                        const std::vector<double>& grid = make_grid(),
                        double window_s = 0.05, int n_windows = 6,
                        double motor_freq_hz = 167.0, int n_lines = 3);

// Least-squares template scale on the motor band, clamped at 0.
double estimate_alpha(const Spectrum& meas, const SspiTemplate& tmpl,
                      double motor_freq_hz = 167.0, double band_hz = 2.0);

// Per-bin max(0, meas - alpha * template) on magnitudes.
Spectrum subtract_sspi(const Spectrum& meas, const SspiTemplate& tmpl, double alpha);

// weights_i = a_vol_i / max(a_ref_i, eps) with eps = 1e-9 * max(ref).
VolumeWeights volume_weights(const Spectrum& ref, const Spectrum& vol, double volume_ml,
                             double ref_volume_ml = 500.0);

// Per-bin division; maps a measurement onto the reference-volume envelope.
Spectrum apply_volume_compensation(const Spectrum& meas, const VolumeWeights& w);

// f_r = (1/2pi) sqrt(kc / (mc + alpha_load * V))
double coupled_resonance(double kc, double mc, double alpha_load_kg_per_ml, double volume_ml);

// Volume of the db entry maximizing normalized cross-correlation with meas.
// Ties break toward the smaller volume.
double estimate_volume(const Spectrum& meas, const VolumeDb& db);

} // namespace viliq
