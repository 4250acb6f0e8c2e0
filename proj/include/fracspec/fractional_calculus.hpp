#pragma once

#include <array>
#include <functional>
#include <vector>

#include "fracspec/errors.hpp"

namespace fracspec {

/// Uniform grid t_i = i * dt on [0, t_max], i = 0..n_steps.
struct TimeGrid {
    double t_max = 1.0;
    int n_steps = 1;

    double dt() const { return t_max / n_steps; }
    double t(int i) const { return t_max * i / n_steps; }
    int size() const { return n_steps + 1; }
    bool operator==(const TimeGrid&) const = default;
};

void validate(const TimeGrid& g);

struct ScalarSignal {
    TimeGrid grid;
    std::vector<double> values;

    static ScalarSignal sample(const TimeGrid& g, const std::function<double(double)>& f);
};

/// Caputo derivative of order alpha in (0, 1] by the L1 scheme (alpha < 1)
/// or second-order finite differences (alpha = 1). Entry 0 is set to 0 for
/// alpha < 1.
ScalarSignal caputo_l1(const ScalarSignal& y, double alpha);

/// Riemann-Liouville derivative: caputo_l1(y - y_0) + y_0 t^{-alpha}/Gamma(1-alpha).
/// Entry 0 is NaN when y_0 != 0 and alpha < 1.
ScalarSignal rl_derivative(const ScalarSignal& y, double alpha);

/// Fourth-order product-integration weights for
///   y_i = int_0^{t_i} F(t_i - tau) b(tau) dtau,
/// F(t) = t^{alpha-1} E_{alpha,alpha}(-lam t^alpha), on one grid.
///
/// b is interpolated by local cubics; kernel moments over each cell are
/// exact in the cell adjacent to t_i and Gauss-Legendre elsewhere. The
/// stencils never reach past t_i, so row i depends on b_0..b_i only and,
/// away from the first cell, the weights depend on i - j only.
class ConvolutionKernel {
public:
    ConvolutionKernel(double alpha, double lam, const TimeGrid& grid);

    const TimeGrid& grid() const { return grid_; }
    double alpha() const { return alpha_; }
    double lambda() const { return lam_; }

    /// out[i] for i = 0..n_steps; b and out have grid().size() entries.
    void apply(const double* b, double* out) const;
    std::vector<double> apply(const std::vector<double>& b) const;

private:
    double alpha_;
    double lam_;
    TimeGrid grid_;
    // moments_[m][q] = dt int_0^1 F((m - theta) dt) theta^q dtheta, m >= 1
    std::vector<std::array<double, 4>> moments_;
    std::vector<std::array<double, 4>> centered_;  // m >= 2, nodes j-1..j+2
    std::vector<std::array<double, 4>> forward_;   // first cell, nodes 0..3
    std::array<double, 4> backward_{};             // m = 1, nodes j-2..j+1
    std::array<double, 2> row1_{};                 // i = 1, linear
    std::array<double, 3> row2_{};                 // i = 2, quadratic on 0..2
};

/// Solution of d^alpha y + lam y = b, y(0) = 0, as the convolution of b with
/// F_lam. Requires b_0 = 0.
ScalarSignal solve_scalar_fde(double alpha, double lam, const ScalarSignal& b);

}  // namespace fracspec
