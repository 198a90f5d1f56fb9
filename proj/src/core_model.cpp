#include "viliq/core_model.hpp"

#include <cmath>

namespace viliq {

void OscillatorParams::validate() const {
    if (!(m > 0.0)) throw InvalidParameter("oscillator mass must be positive");
    if (!(k > 0.0)) throw InvalidParameter("oscillator stiffness must be positive");
    if (beta < 0.0) throw InvalidParameter("damping must be non-negative");
    if (!(f0 > 0.0)) throw InvalidParameter("motor force must be positive");
    if (!(omega > 0.0)) throw InvalidParameter("drive frequency must be positive");
}

GeometryParams GeometryParams::from_gain(double gamma_value) {
    GeometryParams g;
    g.gamma = gamma_value;
    g.validate();
    return g;
}

GeometryParams GeometryParams::from_geometry(double S0, double v, double d,
                                             std::optional<double> rho) {
    GeometryParams g;
    g.S0 = S0;
    g.v = v;
    g.d = d;
    g.rho = rho;
    if (!(S0 > 0.0) || !(v > 0.0) || !(d > 0.0))
        throw InvalidParameter("S0, v, d must be positive");
    g.gamma = S0 * v / d;
    g.validate();
    return g;
}

void GeometryParams::validate() const {
    if (!(gamma > 0.0)) throw InvalidParameter("shear gain gamma must be positive");
    if (S0 && d && v) {
        const double derived = *S0 * *v / *d;
        if (std::abs(derived - gamma) > 1e-12 * std::abs(gamma))
            throw InvalidParameter("gamma inconsistent with S0*v/d");
    }
    if (rho && !(*rho > 0.0)) throw InvalidParameter("density must be positive");
}

double shear_force(const Viscosity& eta, const GeometryParams& geom) {
    if (!(eta.pa_s > 0.0)) throw InvalidParameter("viscosity must be positive");
    geom.validate();
    return geom.gamma * eta.pa_s;
}

namespace {

double response_denominator(const OscillatorParams& p) {
    const double detune = p.k - p.omega * p.omega * p.m;
    const double damp = p.beta * p.omega;
    return std::sqrt(detune * detune + damp * damp);
}

} // namespace

SteadyState steady_state(const OscillatorParams& params, double f_tau) {
    params.validate();
    if (f_tau >= params.f0)
        throw NetForceNonPositive("shear load reaches the motor force; beyond measurable range");
    SteadyState s;
    s.amplitude = (params.f0 - f_tau) / response_denominator(params);
    // atan2 keeps the branch correct when k < m w^2.
    s.phase = std::atan2(params.beta * params.omega,
                         params.k - params.m * params.omega * params.omega);
    return s;
}

DecaySolution decay_solution(const OscillatorParams& params, double a0, double theta) {
    params.validate();
    const double rate = params.beta / (2.0 * params.m);
    const double disc = params.k / params.m - rate * rate;
    if (!(disc > 0.0))
        throw Overdamped("viscosity beyond the oscillatory regime of the model");
    DecaySolution d;
    d.a0 = a0;
    d.theta = theta;
    d.rate = rate;
    d.omega_d = std::sqrt(disc);
    d.t_d = 2.0 * kPi / d.omega_d;
    return d;
}

double log_decrement(const DecaySolution& sol) {
    return std::exp(sol.t_d * sol.rate);
}

double beta_from_decrement(double lambda, double t_d, double m) {
    if (lambda < 1.0) throw InvalidDecrement("decrement below 1 has no physical damping");
    if (!(t_d > 0.0) || !(m > 0.0)) throw InvalidParameter("t_d and m must be positive");
    return 2.0 * m / t_d * std::log(lambda);
}

Viscosity estimate_viscosity(double amplitude, double lambda, double t_d,
                             const OscillatorParams& params_without_beta,
                             const GeometryParams& geom) {
    if (!(amplitude > 0.0)) throw InvalidParameter("amplitude must be positive");
    geom.validate();
    OscillatorParams p = params_without_beta;
    p.beta = beta_from_decrement(lambda, t_d, p.m);
    p.validate();
    const double rate = p.beta / (2.0 * p.m);
    if (!(p.k / p.m - rate * rate > 0.0))
        throw Overdamped("reconstructed damping leaves the oscillatory regime");
    const double f_tau = p.f0 - amplitude * response_denominator(p);
    if (f_tau <= 0.0)
        throw NegativeShear("amplitude inconsistent with calibration (non-positive shear)");
    return Viscosity{f_tau / geom.gamma};
}

double stokes_layer(const Viscosity& eta, double rho, double omega) {
    if (!(eta.pa_s > 0.0) || !(rho > 0.0) || !(omega > 0.0))
        throw InvalidParameter("stokes_layer inputs must be positive");
    return std::sqrt(2.0 * eta.pa_s / (rho * omega));
}

double effective_mass(double rho, double S0, double delta) {
    return rho * S0 * delta;
}

OdeTrace simulate_ode(const OscillatorParams& params, double f_tau, double forcing_s,
                      double dt, double tail_s) {
    params.validate();
    const double period = 2.0 * kPi / params.omega;
    if (dt > period / 50.0)
        throw StepTooCoarse("dt must be at most one fiftieth of the drive period");

    const double drive = params.f0 - f_tau;
    const auto accel = [&](double t, double x, double v, bool forced) {
        const double f = forced ? drive * std::sin(params.omega * t) : 0.0;
        return (f - params.beta * v - params.k * x) / params.m;
    };

    OdeTrace trace;
    trace.dt = dt;
    trace.forcing_s = forcing_s;
    const std::size_t n_forced = static_cast<std::size_t>(std::llround(forcing_s / dt));
    const std::size_t n_total = n_forced + static_cast<std::size_t>(std::llround(tail_s / dt));
    trace.t.reserve(n_total + 1);
    trace.x.reserve(n_total + 1);

    double x = 0.0, v = 0.0;
    for (std::size_t i = 0; i <= n_total; ++i) {
        const double t = static_cast<double>(i) * dt;
        trace.t.push_back(t);
        trace.x.push_back(x);
        if (i == n_total) break;
        const bool forced = i < n_forced;
        const double k1x = v;
        const double k1v = accel(t, x, v, forced);
        const double k2x = v + 0.5 * dt * k1v;
        const double k2v = accel(t + 0.5 * dt, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, forced);
        const double k3x = v + 0.5 * dt * k2v;
        const double k3v = accel(t + 0.5 * dt, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, forced);
        const double k4x = v + dt * k3v;
        const double k4v = accel(t + dt, x + dt * k3x, v + dt * k3v, forced);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return trace;
}

} // namespace viliq
