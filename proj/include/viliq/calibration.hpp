#pragma once

// Four-parameter least-squares calibration against known-viscosity points,
// 1-NN liquid identification, and viscosity-to-concentration curves.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "viliq/core_model.hpp"

namespace viliq {

struct CalibrationPoint {
    Viscosity known_eta;
    double volume_ml = 0.0;
    double amplitude = 0.0; // measured steady amplitude A
    double lambda = 0.0;    // measured decrement
    double t_d = 0.0;       // measured damped period [s]
};

struct CalibratedSystem {
    OscillatorParams params; // beta = 0; damping is per-measurement
    GeometryParams geom;
    double fit_residual = 0.0; // sum of squared viscosity errors [Pa*s]^2
    std::string source;

    Viscosity estimate_point(double amplitude, double lambda, double t_d) const;
};

struct CalibrateOptions {
    double omega = 2.0 * kPi * 167.0; // drive angular frequency [rad/s]
    // The viscosity residuals are invariant under a joint scaling of
    // (k, m, f0, gamma); reference_mass pins that scale.
    double reference_mass = 0.1;
    int n_starts = 8;
    int max_iterations = 200;
    std::uint64_t seed = 7;
};

// Multistart damped Gauss-Newton over the three identifiable log-ratios
// (k/m, f0/m, gamma/m), minimizing sum_i (eta_i - E(A_i, Lambda_i, T_di))^2.
// The detuning-sign twin solution is resolved by damped-period consistency.
CalibratedSystem calibrate(const std::vector<CalibrationPoint>& points,
                           const CalibrateOptions& opts = {});

struct LiquidEntry {
    std::string label;
    Viscosity eta;
    std::optional<double> std_cp;
};

struct LiquidDb {
    std::vector<LiquidEntry> entries; // unique labels, positive viscosities

    void add(LiquidEntry entry);
    bool empty() const { return entries.empty(); }
};

struct Identification {
    std::string label;
    double distance = 0.0; // |ln eta - ln eta_entry|
};

// 1-nearest-neighbor in log-viscosity; ties break to the lexicographically
// smaller label.
Identification identify(const Viscosity& eta, const LiquidDb& db);

struct ConcentrationCurve {
    struct Knot {
        double concentration = 0.0;
        Viscosity eta;
    };
    std::vector<Knot> knots; // strictly monotone viscosity

    static ConcentrationCurve from_knots(std::vector<Knot> knots);
};

struct ConcentrationResult {
    double concentration = 0.0;
    bool clamped = false; // query fell outside the knot viscosity range
};

// Piecewise-linear inverse interpolation on the monotone curve.
ConcentrationResult concentration_from_viscosity(const Viscosity& eta,
                                                 const ConcentrationCurve& curve);

} // namespace viliq
