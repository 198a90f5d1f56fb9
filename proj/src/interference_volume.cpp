#include "viliq/interference_volume.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace viliq {

void VolumeDb::add(VolumeDbEntry entry) {
    for (const auto& e : entries)
        if (e.volume_ml == entry.volume_ml)
            throw InvalidParameter("duplicate volume in VolumeDb");
    entries.push_back(std::move(entry));
    std::sort(entries.begin(), entries.end(),
              [](const VolumeDbEntry& a, const VolumeDbEntry& b) {
                  return a.volume_ml < b.volume_ml;
              });
}

const VolumeDbEntry& VolumeDb::entry_for(double volume_ml) const {
    for (const auto& e : entries)
        if (e.volume_ml == volume_ml) return e;
    throw InvalidParameter("volume not present in VolumeDb");
}

SspiTemplate build_sspi(const std::vector<VibrationTrace>& recordings,
                        const std::vector<double>& grid, double window_s, int n_windows,
                        double motor_freq_hz, int n_lines) {
    if (recordings.empty()) throw InvalidParameter("need at least one recording");
    SspiTemplate tmpl;
    tmpl.window_s = window_s;
    tmpl.n_windows = n_windows;
    tmpl.n_recordings = static_cast<int>(recordings.size());
    tmpl.spectrum.freqs_hz = grid;
    tmpl.spectrum.mags.assign(grid.size(), 0.0);

    std::vector<double> lines;
    for (int h = 1; h <= n_lines; ++h)
        if (motor_freq_hz * h <= grid.back()) lines.push_back(motor_freq_hz * h);

    int total_windows = 0;
    const double needed = window_s * n_windows;
    for (const auto& rec : recordings) {
        if (rec.empty() || rec.samples.back().t - rec.samples.front().t < needed - 1e-12)
            throw RecordingTooShort("recording shorter than the analysis windows");
        const double t0 = rec.samples.front().t;
        for (int w = 0; w < n_windows; ++w) {
            const double lo = t0 + w * window_s;
            const double hi = lo + window_s;
            std::vector<double> times, values;
            for (const auto& s : rec.samples) {
                if (s.t >= lo && s.t < hi) {
                    times.push_back(s.t - lo);
                    values.push_back(s.value);
                }
            }
            if (times.size() < 2 * lines.size() + 2)
                throw RecordingTooShort("analysis window carries too few samples");

            // per-window motor-line fit; rectangular-window DTFT magnitudes
            // would leak line energy across harmonics
            Eigen::MatrixXd atoms(static_cast<Eigen::Index>(times.size()),
                                  static_cast<Eigen::Index>(2 * lines.size()));
            for (std::size_t j = 0; j < lines.size(); ++j) {
                const double wl = 2.0 * kPi * lines[j];
                for (std::size_t i = 0; i < times.size(); ++i) {
                    atoms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * j)) =
                        std::cos(wl * times[i]);
                    atoms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * j + 1)) =
                        std::sin(wl * times[i]);
                }
            }
            Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
            for (std::size_t i = 0; i < values.size(); ++i)
                v[static_cast<Eigen::Index>(i)] = values[i];
            const Eigen::VectorXd coef = atoms.colPivHouseholderQr().solve(v);
            const Eigen::VectorXd residual = v - atoms * coef;

            std::vector<double> res_values(residual.data(), residual.data() + residual.size());
            const Spectrum floor_spec = amplitude_spectrum(times, res_values, grid);
            Spectrum ws = floor_spec;
            for (std::size_t j = 0; j < lines.size(); ++j) {
                const double amp = std::hypot(coef[static_cast<Eigen::Index>(2 * j)],
                                              coef[static_cast<Eigen::Index>(2 * j + 1)]);
                ws.mags[ws.bin_of(lines[j])] = amp;
            }
            for (std::size_t i = 0; i < grid.size(); ++i) tmpl.spectrum.mags[i] += ws.mags[i];
            ++total_windows;
        }
    }
    for (double& m : tmpl.spectrum.mags) m /= static_cast<double>(total_windows);
    return tmpl;
}

double estimate_alpha(const Spectrum& meas, const SspiTemplate& tmpl, double motor_freq_hz,
                      double band_hz) {
    if (!meas.same_grid(tmpl.spectrum)) throw GridMismatch("alpha fit needs a shared bin grid");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < meas.freqs_hz.size(); ++i) {
        if (std::abs(meas.freqs_hz[i] - motor_freq_hz) <= band_hz) {
            num += meas.mags[i] * tmpl.spectrum.mags[i];
            den += tmpl.spectrum.mags[i] * tmpl.spectrum.mags[i];
        }
    }
    if (den <= 0.0) throw TemplateZeroInBand("template carries no energy in the motor band");
    return std::max(0.0, num / den);
}

Spectrum subtract_sspi(const Spectrum& meas, const SspiTemplate& tmpl, double alpha) {
    if (!meas.same_grid(tmpl.spectrum)) throw GridMismatch("subtraction needs a shared bin grid");
    Spectrum out = meas;
    for (std::size_t i = 0; i < out.mags.size(); ++i)
        out.mags[i] = std::max(0.0, meas.mags[i] - alpha * tmpl.spectrum.mags[i]);
    return out;
}

VolumeWeights volume_weights(const Spectrum& ref, const Spectrum& vol, double volume_ml,
                             double ref_volume_ml) {
    if (!ref.same_grid(vol)) throw GridMismatch("weight vector needs a shared bin grid");
    double ref_max = 0.0;
    for (double m : ref.mags) ref_max = std::max(ref_max, m);
    const double eps = 1e-9 * ref_max;
    if (!(eps > 0.0)) throw InvalidParameter("reference spectrum is identically zero");
    // The envelope ratio is only measurable where both spectra carry energy;
    // bins without it stay neutral instead of feeding division blow-ups.
    const double live = 1e-6 * ref_max;

    VolumeWeights w;
    w.freqs_hz = ref.freqs_hz;
    w.volume_ml = volume_ml;
    w.ref_volume_ml = ref_volume_ml;
    w.weights.reserve(ref.mags.size());
    for (std::size_t i = 0; i < ref.mags.size(); ++i) {
        const bool measurable = ref.mags[i] >= live && vol.mags[i] >= live;
        w.weights.push_back(measurable ? vol.mags[i] / std::max(ref.mags[i], eps) : 1.0);
    }
    return w;
}

Spectrum apply_volume_compensation(const Spectrum& meas, const VolumeWeights& w) {
    if (meas.freqs_hz.size() != w.freqs_hz.size())
        throw GridMismatch("compensation needs a shared bin grid");
    for (std::size_t i = 0; i < w.freqs_hz.size(); ++i)
        if (std::abs(meas.freqs_hz[i] - w.freqs_hz[i]) > 1e-9)
            throw GridMismatch("compensation needs a shared bin grid");
    Spectrum out = meas;
    for (std::size_t i = 0; i < out.mags.size(); ++i) {
        if (!(w.weights[i] > 0.0)) throw ZeroWeight("non-positive volume weight");
        out.mags[i] = meas.mags[i] / w.weights[i];
    }
    return out;
}

double coupled_resonance(double kc, double mc, double alpha_load_kg_per_ml, double volume_ml) {
    if (!(kc > 0.0) || !(mc > 0.0) || !(alpha_load_kg_per_ml > 0.0) || volume_ml < 0.0)
        throw InvalidParameter("coupled resonance inputs must be positive");
    return std::sqrt(kc / (mc + alpha_load_kg_per_ml * volume_ml)) / (2.0 * kPi);
}

double estimate_volume(const Spectrum& meas, const VolumeDb& db) {
    if (db.empty()) throw EmptyDb("volume database is empty");
    double meas_norm = 0.0;
    for (double m : meas.mags) meas_norm += m * m;
    meas_norm = std::sqrt(meas_norm);
    if (meas_norm == 0.0) throw EmptyCorrelation("all-zero measurement spectrum");

    double best_corr = -1.0;
    double best_volume = db.entries.front().volume_ml;
    for (const auto& e : db.entries) {
        if (!meas.same_grid(e.reference)) throw GridMismatch("db entry grid differs");
        double dot = 0.0, ref_norm = 0.0;
        for (std::size_t i = 0; i < meas.mags.size(); ++i) {
            dot += meas.mags[i] * e.reference.mags[i];
            ref_norm += e.reference.mags[i] * e.reference.mags[i];
        }
        if (ref_norm == 0.0) continue;
        const double corr = dot / (meas_norm * std::sqrt(ref_norm));
        if (corr > best_corr) { // strict: ties keep the smaller volume
            best_corr = corr;
            best_volume = e.volume_ml;
        }
    }
    if (best_corr < 0.0) throw EmptyCorrelation("no db entry with energy");
    return best_volume;
}

} // namespace viliq
