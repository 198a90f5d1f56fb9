#pragma once

// End-to-end measurement pipeline: transient discard, SRR fold + sign search,
// OMP harmonic refinement, volume compensation, SSPI subtraction, and the
// time-domain feature extraction feeding the closed-form estimator.

#include <optional>
#include <string>
#include <vector>

#include "viliq/calibration.hpp"
#include "viliq/interference_volume.hpp"
#include "viliq/sparse_recovery.hpp"

namespace viliq {

struct GridSpec {
    double f_min_hz = 1.0;
    double f_max_hz = 800.0;
    double step_hz = 1.0;

    std::vector<double> make() const { return make_grid(f_min_hz, f_max_hz, step_hz); }
};

enum class CompensationOrder { volume_first, sspi_first };

struct PipelineConfig {
    double drive_freq_hz = 167.0;
    double api_rate_hz = 100.0;
    double dense_rate_hz = 1600.0;
    BurstSchedule schedule{};
    double transient_cutoff_s = 0.2;
    GridSpec grid{};
    // Subtraction first: the template scale is anchored on a harmonic bin the
    // liquid does not excite, and volume weights are built interference-free.
    CompensationOrder order = CompensationOrder::sspi_first;
    int n_harmonics = 3;
    double motor_band_hz = 2.0;
    int alpha_harmonic = 2;     // anchor bin for the pipeline's alpha fit
    double alpha_band_hz = 0.0; // exact-bin fit
    double decay_band_lo_hz = 100.0;
    double decay_band_hi_hz = 199.0;
    // volume lookup matches below the motor line, where the container mode
    // lives and motor leakage is common-mode
    double volume_band_lo_hz = 40.0;
    double volume_band_hi_hz = 160.0;
    double boundary_cp = 2500.0;
    bool use_srr = true;
    bool use_omp = true;
    bool use_sspi = true;
    bool use_volume = true;
    std::uint64_t seed = 0;

    double drive_period_s() const { return 1.0 / drive_freq_hz; }
};

struct PipelineContext {
    const SspiTemplate* sspi = nullptr;
    const VolumeDb* volumes = nullptr;
    const ObservationModel* observation = nullptr; // optional learned model
    std::optional<double> known_volume_ml;
};

struct Features {
    double amplitude = 0.0;
    double lambda = 0.0;
    double t_d = 0.0;
    std::optional<double> volume_ml;
    double alpha = 0.0;
    std::vector<int> signs;
    Spectrum motor_spectrum;   // cleaned line spectrum on the pipeline grid
    Spectrum wideband;         // transient-window spectrum used for volume lookup
    int decay_peaks_used = 0;
};

Features extract_features(const VibrationTrace& trace, const PipelineConfig& config,
                          const PipelineContext& context = {});

struct Estimate {
    Viscosity eta;
    bool beyond_boundary = false;
    Features features;
};

Estimate estimate_trace(const VibrationTrace& trace, const CalibratedSystem& system,
                        const PipelineConfig& config, const PipelineContext& context = {});

struct BatchEstimate {
    double mean_cp = 0.0;
    double std_cp = 0.0;
    bool beyond_boundary = false;
    std::vector<Estimate> per_trace;
};

BatchEstimate estimate_batch(const std::vector<VibrationTrace>& traces,
                             const CalibratedSystem& system, const PipelineConfig& config,
                             const PipelineContext& context = {});

// Build the volume database from reference recordings of one liquid across
// fill levels. The matching key is the transient-window spectrum; the weight
// vector comes from the post-subtraction steady line spectra so it carries
// the pure volume envelope. The reference volume must be present.
VolumeDb build_volume_db_from_traces(const std::vector<std::pair<VibrationTrace, double>>& refs,
                                     const PipelineConfig& config, const SspiTemplate* sspi,
                                     double ref_volume_ml = 500.0);

} // namespace viliq
