#pragma once

// OMP-based refinement: greedy sparse recovery over a Fourier dictionary and
// learning an empirical observation matrix from paired low/high-rate data.

#include <Eigen/Dense>
#include <vector>

#include "viliq/reconstruction.hpp"

namespace viliq {

struct OmpStop {
    int max_atoms = 10;
    double residual_tol_rel = 1e-3; // stop when ||r|| <= tol_rel * ||y||
};

struct SparseSolution {
    std::vector<int> support;       // selected atom indices
    Eigen::VectorXd coeffs;         // coefficients in original column scale
    double residual_norm = 0.0;
    std::vector<double> residual_history; // per-iteration, strictly decreasing
};

// Standard OMP: pick the column with max |correlation| against the residual
// (columns normalized for selection only), re-solve least squares on the
// support, update the residual; stop at max_atoms or residual_tol.
SparseSolution omp(const Eigen::VectorXd& y, const Eigen::MatrixXd& dict,
                   const OmpStop& stop = {});

// Real Fourier dictionary descriptor: one cos and one sin atom per frequency.
struct FourierBasis {
    std::vector<double> freqs_hz;

    int n_atoms() const { return 2 * static_cast<int>(freqs_hz.size()); }
    // atoms evaluated at the given times: column 2j = cos(2 pi f_j t),
    // column 2j+1 = sin(2 pi f_j t)
    Eigen::MatrixXd evaluate(const std::vector<double>& times) const;
    // project a densely sampled signal onto the basis (least squares)
    Eigen::VectorXd project(const std::vector<double>& times,
                            const std::vector<double>& values) const;
};

struct ObservationModel {
    Eigen::MatrixXd matrix; // m x n map from basis coefficients to observations
    FourierBasis basis;
    int n = 0;
    int m = 0;
    double fit_residual = 0.0;

    // Ideal (nominal-timing) model: atoms evaluated at the observation times.
    static ObservationModel ideal(const FourierBasis& basis,
                                  const std::vector<double>& observation_times);
};

struct LearnOptions {
    double ridge_scale = 1e-8; // lambda = ridge_scale * trace(F F^T) / n
};

// Least-squares fit of M minimizing sum_i ||y_i - M f_i||^2 with a small ridge.
// F is n x N (one basis-projected high-rate vector per column), Y is m x N.
ObservationModel learn_observation_model(const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y,
                                         const FourierBasis& basis,
                                         const LearnOptions& opts = {});

struct HighRateReconstruction {
    std::vector<double> x; // time-domain waveform at eval_times
    SparseSolution solution;
};

// f := omp(y, model.matrix); x := basis atoms weighted by f at eval_times.
HighRateReconstruction reconstruct_highrate(const Eigen::VectorXd& y,
                                            const ObservationModel& model,
                                            const std::vector<double>& eval_times,
                                            const OmpStop& stop = {});

} // namespace viliq
