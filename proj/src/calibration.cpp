#include "viliq/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace viliq {

Viscosity CalibratedSystem::estimate_point(double amplitude, double lambda, double t_d) const {
    return estimate_viscosity(amplitude, lambda, t_d, params, geom);
}

namespace {

// Estimator in gauge-free ratios: kappa = k/m, phi = f0/m, g = gamma/m.
//   rate = ln(Lambda) / T_d,  beta/m = 2 * rate
//   eta = (phi - A sqrt((kappa - w^2)^2 + (2 rate w)^2)) / g
// The viscosity residuals alone cannot pin kappa when the calibration liquids
// cluster in a narrow viscosity range (the paper's water/sucrose set does),
// so the measured damped periods enter as weighted consistency residuals:
//   T_pred = 2 pi / sqrt(kappa - rate^2)
struct RatioModel {
    double omega;
    double period_weight;

    double predict(const Eigen::Vector3d& u, const CalibrationPoint& p) const {
        const double kappa = std::exp(u[0]);
        const double phi = std::exp(u[1]);
        const double g = std::exp(u[2]);
        const double beta_over_m = 2.0 * std::log(p.lambda) / p.t_d;
        const double detune = kappa - omega * omega;
        const double damp = beta_over_m * omega;
        return (phi - p.amplitude * std::sqrt(detune * detune + damp * damp)) / g;
    }

    Eigen::VectorXd residuals(const Eigen::Vector3d& u,
                              const std::vector<CalibrationPoint>& pts) const {
        const double kappa = std::exp(u[0]);
        Eigen::VectorXd r(static_cast<Eigen::Index>(2 * pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) {
            r[static_cast<Eigen::Index>(i)] = pts[i].known_eta.pa_s - predict(u, pts[i]);
            const double rate = std::log(pts[i].lambda) / pts[i].t_d;
            const double disc = kappa - rate * rate;
            const double t_pred = disc > 0.0 ? 2.0 * kPi / std::sqrt(disc) : 1e6;
            r[static_cast<Eigen::Index>(pts.size() + i)] =
                period_weight * (t_pred - pts[i].t_d) / pts[i].t_d;
        }
        return r;
    }

    Eigen::MatrixXd jacobian(const Eigen::Vector3d& u,
                             const std::vector<CalibrationPoint>& pts) const {
        Eigen::MatrixXd J(static_cast<Eigen::Index>(2 * pts.size()), 3);
        const double h = 1e-7;
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d up = u, dn = u;
            up[c] += h;
            dn[c] -= h;
            const Eigen::VectorXd rp = residuals(up, pts);
            const Eigen::VectorXd rn = residuals(dn, pts);
            J.col(c) = (rp - rn) / (2.0 * h);
        }
        return J;
    }
};

struct FitResult {
    Eigen::Vector3d u;
    double sse = std::numeric_limits<double>::infinity();
    bool ok = false;
};

FitResult levenberg_marquardt(const RatioModel& model, const std::vector<CalibrationPoint>& pts,
                              Eigen::Vector3d u, int max_iter) {
    FitResult fit;
    double lambda_lm = 1e-3;
    Eigen::VectorXd r = model.residuals(u, pts);
    double sse = r.squaredNorm();
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXd J = model.jacobian(u, pts);
        const Eigen::Matrix3d JtJ = J.transpose() * J;
        const Eigen::Vector3d Jtr = J.transpose() * r;
        Eigen::Matrix3d H = JtJ;
        H.diagonal() += lambda_lm * JtJ.diagonal().cwiseMax(1e-12);
        const Eigen::Vector3d step = H.ldlt().solve(-Jtr);
        if (!step.allFinite()) break;
        const Eigen::Vector3d u_new = u + step;
        const Eigen::VectorXd r_new = model.residuals(u_new, pts);
        const double sse_new = r_new.squaredNorm();
        if (sse_new < sse) {
            u = u_new;
            r = r_new;
            const double improvement = sse - sse_new;
            sse = sse_new;
            lambda_lm = std::max(lambda_lm * 0.3, 1e-14);
            if (improvement < 1e-30 + 1e-18 * sse) break;
        } else {
            lambda_lm *= 10.0;
            if (lambda_lm > 1e14) break;
        }
    }
    fit.u = u;
    fit.sse = sse;
    fit.ok = std::isfinite(sse);
    return fit;
}

double period_consistency(const Eigen::Vector3d& u, const std::vector<CalibrationPoint>& pts) {
    const double kappa = std::exp(u[0]);
    double sse = 0.0;
    for (const auto& p : pts) {
        const double rate = std::log(p.lambda) / p.t_d;
        const double disc = kappa - rate * rate;
        if (!(disc > 0.0)) return std::numeric_limits<double>::infinity();
        const double t_pred = 2.0 * kPi / std::sqrt(disc);
        sse += (t_pred - p.t_d) * (t_pred - p.t_d);
    }
    return sse;
}

} // namespace

CalibratedSystem calibrate(const std::vector<CalibrationPoint>& points,
                           const CalibrateOptions& opts) {
    if (points.size() < 4)
        throw NonIdentifiable("calibration needs at least four points");
    for (const auto& p : points) {
        if (!(p.known_eta.pa_s > 0.0) || !(p.amplitude > 0.0) || !(p.t_d > 0.0))
            throw InvalidParameter("calibration point fields must be positive");
        if (p.lambda < 1.0) throw InvalidDecrement("calibration decrement below 1");
    }

    double eta_max = 0.0, eta_mean = 0.0;
    for (const auto& p : points) {
        eta_max = std::max(eta_max, p.known_eta.pa_s);
        eta_mean += p.known_eta.pa_s;
    }
    eta_mean /= static_cast<double>(points.size());
    const RatioModel model{opts.omega, std::max(1.0, 10.0 * eta_mean)};
    const double w2 = opts.omega * opts.omega;

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    std::uniform_real_distribution<double> detune_scale(-2.0, 1.0);

    // kappa seed straight from the measured periods
    double kappa_seed = 0.0;
    for (const auto& p : points) {
        const double rate = std::log(p.lambda) / p.t_d;
        kappa_seed += std::pow(2.0 * kPi / p.t_d, 2) + rate * rate;
    }
    kappa_seed /= static_cast<double>(points.size());

    FitResult best;
    for (int s = 0; s < std::max(1, opts.n_starts); ++s) {
        Eigen::Vector3d u0;
        const bool seeded = s % 2 == 0;
        const double detune = w2 * std::pow(10.0, detune_scale(rng));
        u0[0] = seeded ? std::log(kappa_seed) : std::log(w2 + detune);
        const double denom0 = std::abs(std::exp(u0[0]) - w2) + 1.0;
        double a_mean = 0.0;
        for (const auto& p : points) a_mean += p.amplitude;
        a_mean /= static_cast<double>(points.size());
        const double phi0 = 2.0 * a_mean * denom0 * std::pow(4.0, jitter(rng));
        u0[1] = std::log(std::max(phi0, 1e-20));
        u0[2] = std::log(std::max(phi0 / (eta_max * 4.0), 1e-20));

        FitResult fit = levenberg_marquardt(model, points, u0, opts.max_iterations);
        if (fit.ok && fit.sse < best.sse) best = fit;
    }
    if (!best.ok) throw FitDiverged("no calibration start converged");

    // (kappa - w^2)^2 admits a mirrored solution; pick the branch whose
    // implied damped period matches the measured periods.
    const double kappa = std::exp(best.u[0]);
    const double mirrored = 2.0 * w2 - kappa;
    if (mirrored > 0.0) {
        Eigen::Vector3d u_mirror = best.u;
        u_mirror[0] = std::log(mirrored);
        FitResult fit_mirror = levenberg_marquardt(model, points, u_mirror, opts.max_iterations);
        if (fit_mirror.ok && fit_mirror.sse <= best.sse * (1.0 + 1e-6)) {
            if (period_consistency(fit_mirror.u, points) < period_consistency(best.u, points))
                best = fit_mirror;
        }
    }

    // Identifiability check on the reduced Jacobian at the optimum.
    {
        const Eigen::MatrixXd J = model.jacobian(best.u, points);
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
        const auto& sv = svd.singularValues();
        if (sv[0] <= 0.0 || sv[sv.size() - 1] / sv[0] < 1e-10)
            throw NonIdentifiable("rank-deficient Jacobian at the calibration optimum");
    }

    CalibratedSystem sys;
    sys.params.m = opts.reference_mass;
    sys.params.k = std::exp(best.u[0]) * opts.reference_mass;
    sys.params.f0 = std::exp(best.u[1]) * opts.reference_mass;
    sys.params.beta = 0.0;
    sys.params.omega = opts.omega;
    sys.geom = GeometryParams::from_gain(std::exp(best.u[2]) * opts.reference_mass);
    // reported residual: viscosity errors only
    double eta_sse = 0.0;
    for (const auto& p : points) {
        const double r = p.known_eta.pa_s - model.predict(best.u, p);
        eta_sse += r * r;
    }
    sys.fit_residual = eta_sse;
    return sys;
}

void LiquidDb::add(LiquidEntry entry) {
    if (!(entry.eta.pa_s > 0.0)) throw InvalidParameter("db viscosity must be positive");
    for (const auto& e : entries)
        if (e.label == entry.label) throw InvalidParameter("duplicate liquid label");
    entries.push_back(std::move(entry));
}

Identification identify(const Viscosity& eta, const LiquidDb& db) {
    if (db.empty()) throw EmptyDb("liquid database is empty");
    if (!(eta.pa_s > 0.0)) throw InvalidParameter("query viscosity must be positive");
    const double q = std::log(eta.pa_s);
    Identification best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& e : db.entries) {
        const double d = std::abs(q - std::log(e.eta.pa_s));
        if (d < best_d || (d == best_d && e.label < best.label)) {
            best_d = d;
            best.label = e.label;
            best.distance = d;
        }
    }
    return best;
}

ConcentrationCurve ConcentrationCurve::from_knots(std::vector<Knot> knots) {
    if (knots.size() < 2) throw NonMonotoneCurve("curve needs at least two knots");
    std::sort(knots.begin(), knots.end(),
              [](const Knot& a, const Knot& b) { return a.eta.pa_s < b.eta.pa_s; });
    for (std::size_t i = 1; i < knots.size(); ++i)
        if (!(knots[i].eta.pa_s > knots[i - 1].eta.pa_s))
            throw NonMonotoneCurve("knot viscosities must be strictly monotone");
    ConcentrationCurve c;
    c.knots = std::move(knots);
    return c;
}

ConcentrationResult concentration_from_viscosity(const Viscosity& eta,
                                                 const ConcentrationCurve& curve) {
    if (curve.knots.size() < 2) throw NonMonotoneCurve("curve needs at least two knots");
    const auto& ks = curve.knots;
    if (eta.pa_s <= ks.front().eta.pa_s) {
        return {ks.front().concentration, eta.pa_s < ks.front().eta.pa_s};
    }
    if (eta.pa_s >= ks.back().eta.pa_s) {
        return {ks.back().concentration, eta.pa_s > ks.back().eta.pa_s};
    }
    for (std::size_t i = 1; i < ks.size(); ++i) {
        if (eta.pa_s <= ks[i].eta.pa_s) {
            const double f =
                (eta.pa_s - ks[i - 1].eta.pa_s) / (ks[i].eta.pa_s - ks[i - 1].eta.pa_s);
            return {ks[i - 1].concentration + f * (ks[i].concentration - ks[i - 1].concentration),
                    false};
        }
    }
    return {ks.back().concentration, false};
}

} // namespace viliq
