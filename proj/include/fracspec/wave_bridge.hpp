#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fracspec/forward_solver.hpp"
#include "fracspec/recovery.hpp"

namespace fracspec {

/// Sine kernels s_k(t) of the wave equation for a set of distinct eigenvalues.
struct WaveKernelSet {
    std::vector<double> lambda;

    /// t for lambda = 0, sin(sqrt(lambda) t) / sqrt(lambda) otherwise.
    static double kernel(double lambda, double t);
    double operator()(int k, double t) const { return kernel(lambda.at(k), t); }
    int size() const { return static_cast<int>(lambda.size()); }
};

WaveKernelSet wave_kernels(const SpectralData& d);

/// sum_k int_0^t s_k(t - tau) R_k p(tau) dtau with trapezoidal weights; the
/// eigenvalues are the entries' lambda. Throws InvalidParameter on empty data.
MeasurementRecord hyp_apply(const SpectralData& d, const SpaceTimeSource& p, Execution exec = Execution::Parallel);

/// Energy 0.5 (v^2 + lambda (1 - lambda dt^2 / 4) w^2), conserved exactly by
/// the velocity Verlet step of w'' + lambda w = 0.
double verlet_energy(double w, double v, double lambda, double dt);

struct WaveModes {
    TimeGrid grid;
    Eigen::MatrixXd w;  // grid.size() x n_modes
    Eigen::MatrixXd v;
};

/// Velocity Verlet for w_k'' + lambda_k w_k = p_k from rest. Throws
/// InvalidParameter when dt sqrt(lambda_max) > 2.
WaveModes wave_modes(const SpaceTimeSource& p, Execution exec = Execution::Parallel);

/// wave_modes synthesized and restricted to the source's patch.
MeasurementRecord wave_oracle(const SpaceTimeSource& p, Execution exec = Execution::Parallel);

struct HypComparison {
    double l2_relative = 0.0;
    std::vector<double> window_edges;  // n_windows + 1 times
    std::vector<double> window_relative;
};

/// ||a - b|| / max(||a||, ||b||) in L2(V x [0, T]) (trapezoid in time, patch
/// weights in space; uniform when weights is empty), overall and per window.
HypComparison compare_hyp(const MeasurementRecord& a, const MeasurementRecord& b,
                          const Eigen::VectorXd& weights = {}, int n_windows = 8);

}  // namespace fracspec
