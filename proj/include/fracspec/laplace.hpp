#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fracspec/forward_solver.hpp"

namespace fracspec {

enum class TailPolicy {
    Auto,       // None if decayed, Plateau for alpha = 1, Algebraic otherwise
    None,       // record must have decayed below decay_floor
    Plateau,    // constant tail c e^{-s t_max} / s
    Algebraic,  // fitted t^{alpha-1}, t^{-alpha-1}, ... tail
};

struct LaplaceOptions {
    TailPolicy tail = TailPolicy::Auto;
    double alpha = 1.0;
    /// Largest admissible tail bound as a fraction of the transform norm.
    double tail_fraction = 1e-8;
    double decay_floor = 1e-10;
};

struct LaplaceValue {
    Eigen::VectorXd value;
    double tail = 0.0;        // norm of the tail contribution
    double tail_bound = 0.0;  // uncertainty of the tail contribution
    TailPolicy used = TailPolicy::None;
};

/// Node weights w_i(s) with int_0^{t_max} e^{-st} y(t) dt ~ sum_i w_i y_i for
/// piecewise-cubic interpolation of y (6-point Gauss per cell).
Eigen::VectorXd laplace_weights(const TimeGrid& g, double s, int n_nodes = -1);

/// int_0^inf e^{-st} rec(t) dt per V-grid point. Throws ToleranceError when the
/// tail bound exceeds tail_fraction of the result norm.
LaplaceValue laplace_of_record(const MeasurementRecord& rec, double s, const LaplaceOptions& opt = {});

/// Sampler over a fixed abscissa set, validated positive and distinct.
class LaplaceSampler {
public:
    LaplaceSampler(std::vector<double> abscissae, LaplaceOptions opt = {});

    const std::vector<double>& abscissae() const { return s_; }
    const LaplaceOptions& options() const { return opt_; }

    /// One column per abscissa.
    Eigen::MatrixXd transform(const MeasurementRecord& rec) const;
    /// Largest tail_bound / |value| seen by the last transform call.
    double worst_tail_ratio() const { return worst_; }

private:
    std::vector<double> s_;
    LaplaceOptions opt_;
    mutable double worst_ = 0.0;
};

/// int_0^inf e^{-st} a(t) dt for a profile supported in [lo, hi].
double laplace_of_profile(const TimeProfile& a, double lo, double hi, double s);

}  // namespace fracspec
