#include "viliq/sparse_recovery.hpp"

#include <cmath>

namespace viliq {

SparseSolution omp(const Eigen::VectorXd& y, const Eigen::MatrixXd& dict,
                   const OmpStop& stop) {
    const Eigen::Index m = dict.rows();
    const Eigen::Index n = dict.cols();
    if (y.size() != m) throw InvalidParameter("observation length must match dictionary rows");
    if (stop.max_atoms > m) throw InvalidParameter("cannot select more atoms than observations");

    Eigen::VectorXd col_norms(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        col_norms[j] = dict.col(j).norm();
        if (col_norms[j] == 0.0) throw ZeroColumn("dictionary contains a zero column");
    }

    SparseSolution sol;
    const double y_norm = y.norm();
    Eigen::VectorXd residual = y;
    sol.residual_norm = y_norm;
    if (y_norm == 0.0) return sol; // zero input, empty support

    const double tol = stop.residual_tol_rel * y_norm;
    std::vector<bool> used(static_cast<std::size_t>(n), false);

    while (static_cast<int>(sol.support.size()) < stop.max_atoms && sol.residual_norm > tol) {
        // normalized-correlation selection, lowest index wins ties
        Eigen::Index best = -1;
        double best_corr = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double c = std::abs(dict.col(j).dot(residual)) / col_norms[j];
            if (c > best_corr) {
                best_corr = c;
                best = j;
            }
        }
        if (best < 0 || best_corr == 0.0) {
            if (sol.support.empty())
                throw NoProgress("no atom correlates with the observation");
            break;
        }
        used[static_cast<std::size_t>(best)] = true;
        sol.support.push_back(static_cast<int>(best));

        Eigen::MatrixXd sub(m, static_cast<Eigen::Index>(sol.support.size()));
        for (std::size_t k = 0; k < sol.support.size(); ++k)
            sub.col(static_cast<Eigen::Index>(k)) = dict.col(sol.support[k]);
        sol.coeffs = sub.colPivHouseholderQr().solve(y);
        residual = y - sub * sol.coeffs;
        const double r = residual.norm();
        if (!sol.residual_history.empty() && r >= sol.residual_history.back()) {
            // stalled least-squares update; undo the selection and stop
            sol.support.pop_back();
            Eigen::MatrixXd prev(m, static_cast<Eigen::Index>(sol.support.size()));
            for (std::size_t k = 0; k < sol.support.size(); ++k)
                prev.col(static_cast<Eigen::Index>(k)) = dict.col(sol.support[k]);
            sol.coeffs = sol.support.empty() ? Eigen::VectorXd()
                                             : prev.colPivHouseholderQr().solve(y).eval();
            break;
        }
        sol.residual_history.push_back(r);
        sol.residual_norm = r;
    }
    return sol;
}

Eigen::MatrixXd FourierBasis::evaluate(const std::vector<double>& times) const {
    Eigen::MatrixXd atoms(static_cast<Eigen::Index>(times.size()),
                          static_cast<Eigen::Index>(n_atoms()));
    for (std::size_t j = 0; j < freqs_hz.size(); ++j) {
        const double w = 2.0 * kPi * freqs_hz[j];
        for (std::size_t i = 0; i < times.size(); ++i) {
            atoms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * j)) =
                std::cos(w * times[i]);
            atoms(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 * j + 1)) =
                std::sin(w * times[i]);
        }
    }
    return atoms;
}

Eigen::VectorXd FourierBasis::project(const std::vector<double>& times,
                                      const std::vector<double>& values) const {
    const Eigen::MatrixXd atoms = evaluate(times);
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
    return atoms.colPivHouseholderQr().solve(v);
}

ObservationModel ObservationModel::ideal(const FourierBasis& basis,
                                         const std::vector<double>& observation_times) {
    ObservationModel model;
    model.basis = basis;
    model.matrix = basis.evaluate(observation_times);
    model.m = static_cast<int>(observation_times.size());
    model.n = basis.n_atoms();
    return model;
}

ObservationModel learn_observation_model(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y,
                                         const FourierBasis& basis, const LearnOptions& opts) {
    const Eigen::Index n = F.rows();
    const Eigen::Index N = F.cols();
    const Eigen::Index m = Y.rows();
    if (Y.cols() != N) throw InvalidParameter("pair counts differ between F and Y");
    if (m <= 0 || n <= 0 || N <= 0) throw InvalidParameter("empty learning problem");
    const Eigen::Index needed = (n + m - 1) / m;
    if (N < needed)
        throw UnderdeterminedFit("fewer pairs than n/m; observation map not identifiable");

    Eigen::MatrixXd gram = F * F.transpose();
    const double lambda = opts.ridge_scale * gram.trace() / static_cast<double>(n);
    gram.diagonal().array() += lambda;
    // M = Y F^T (F F^T + lambda I)^-1, solved via LDLT on the symmetric Gram.
    Eigen::MatrixXd Mt = gram.ldlt().solve(F * Y.transpose());

    ObservationModel model;
    model.basis = basis;
    model.matrix = Mt.transpose();
    model.m = static_cast<int>(m);
    model.n = static_cast<int>(n);
    model.fit_residual = (Y - model.matrix * F).norm();
    return model;
}

HighRateReconstruction reconstruct_highrate(const Eigen::VectorXd& y,
                                            const ObservationModel& model,
                                            const std::vector<double>& eval_times,
                                            const OmpStop& stop) {
    if (y.size() != model.matrix.rows())
        throw InvalidParameter("observation length must equal model.m");
    HighRateReconstruction rec;
    rec.solution = omp(y, model.matrix, stop);
    rec.x.assign(eval_times.size(), 0.0);
    for (std::size_t k = 0; k < rec.solution.support.size(); ++k) {
        const int atom = rec.solution.support[k];
        const double coeff = rec.solution.coeffs[static_cast<Eigen::Index>(k)];
        const double f = model.basis.freqs_hz[static_cast<std::size_t>(atom / 2)];
        const double w = 2.0 * kPi * f;
        const bool is_cos = (atom % 2) == 0;
        for (std::size_t i = 0; i < eval_times.size(); ++i)
            rec.x[i] += coeff * (is_cos ? std::cos(w * eval_times[i]) : std::sin(w * eval_times[i]));
    }
    return rec;
}

} // namespace viliq
