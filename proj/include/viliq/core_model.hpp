#pragma once

// Closed-form physics of the coupled wall-liquid oscillator:
//   m x'' + beta x' + k x = (f0 - f_tau) sin(w t)
// Shear load, steady state, free decay, logarithmic decrement, the
// closed-form viscosity estimator and a fixed-step RK4 oracle.

#include <optional>
#include <vector>

#include "viliq/errors.hpp"

namespace viliq {

inline constexpr double kPi = 3.14159265358979323846;

// Dynamic viscosity. Pa*s internally; centipoise only at I/O boundaries.
struct Viscosity {
    double pa_s = 0.0;

    static Viscosity from_centipoise(double cp) { return {cp * 1e-3}; }
    double centipoise() const { return pa_s * 1e3; }
};

struct OscillatorParams {
    double m = 0.0;     // effective hydrodynamic mass [kg]
    double beta = 0.0;  // damping coefficient [N*s/m]
    double k = 0.0;     // effective stiffness [N/m]
    double f0 = 0.0;    // motor force amplitude [N]
    double omega = 0.0; // drive angular frequency [rad/s]

    void validate() const;
};

// Shear geometry. gamma = S0*v/d so that f_tau = gamma * eta.
struct GeometryParams {
    double gamma = 0.0; // shear gain [N per Pa*s]
    std::optional<double> S0;  // contact area [m^2]
    std::optional<double> d;   // shear depth [m]
    std::optional<double> v;   // wall velocity [m/s]
    std::optional<double> rho; // liquid density [kg/m^3]

    static GeometryParams from_gain(double gamma_value);
    static GeometryParams from_geometry(double S0, double v, double d,
                                        std::optional<double> rho = std::nullopt);
    void validate() const;
};

struct SteadyState {
    double amplitude = 0.0; // displacement amplitude A [m]
    double phase = 0.0;     // lag phi in (-pi, pi]
};

struct DecaySolution {
    double a0 = 0.0;      // initial amplitude A0 [m]
    double rate = 0.0;    // beta / 2m [1/s]
    double omega_d = 0.0; // damped natural frequency [rad/s]
    double theta = 0.0;   // initial phase [rad]
    double t_d = 0.0;     // damped period 2*pi/omega_d [s]
};

// f_tau = gamma * eta
double shear_force(const Viscosity& eta, const GeometryParams& geom);

// A = (f0 - f_tau) / sqrt((k - w^2 m)^2 + (beta w)^2), phi = atan2(beta w, k - m w^2).
// Throws NetForceNonPositive when f_tau >= f0 (beyond measurable range).
SteadyState steady_state(const OscillatorParams& params, double f_tau);

// omega_d = sqrt(k/m - (beta/2m)^2); throws Overdamped outside the oscillatory regime.
DecaySolution decay_solution(const OscillatorParams& params, double a0, double theta);

// Lambda = exp(T_d * rate) >= 1
double log_decrement(const DecaySolution& sol);

// beta = (2m / T_d) ln(Lambda); exact inverse of log_decrement on the rate.
double beta_from_decrement(double lambda, double t_d, double m);

// Closed-form estimator: recover beta from (Lambda, T_d), then
// f_tau = f0 - A sqrt((k - w^2 m)^2 + (beta w)^2) and eta = f_tau / gamma.
// params.beta is ignored (beta is per-measurement).
Viscosity estimate_viscosity(double amplitude, double lambda, double t_d,
                             const OscillatorParams& params_without_beta,
                             const GeometryParams& geom);

// Stokes boundary layer delta = sqrt(2 eta / (rho omega)).
double stokes_layer(const Viscosity& eta, double rho, double omega);

// m ~ rho * S0 * delta
double effective_mass(double rho, double S0, double delta);

// One RK4-integrated sample stream: forced for forcing_s seconds from rest,
// then free decay for tail_s. Oracle only; accuracy over speed.
struct OdeTrace {
    double dt = 0.0;
    double forcing_s = 0.0;
    std::vector<double> t;
    std::vector<double> x;
};

OdeTrace simulate_ode(const OscillatorParams& params, double f_tau, double forcing_s,
                      double dt, double tail_s = 0.0);

} // namespace viliq
