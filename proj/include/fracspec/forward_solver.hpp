#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracspec/fractional_calculus.hpp"
#include "fracspec/spectral_manifold.hpp"

namespace fracspec {

enum class Execution { Serial, Parallel };

using TimeProfile = std::function<double(double)>;

/// One separable term a(t) xi(x) of a source on V.
struct SourceTerm {
    TimeProfile a;
    TimeProfile a_dot;  // optional; finite differences when empty
    Eigen::VectorXd xi;  // V-grid function
};

/// Source on V x [0, t_max]: a sum of separable terms with exact time
/// callbacks, plus optional dense samples for sources given only on the grid.
class SpaceTimeSource {
public:
    SpaceTimeSource(Patch patch, TimeGrid grid);

    static SpaceTimeSource from_samples(Patch patch, TimeGrid grid, Eigen::MatrixXd values);

    SpaceTimeSource& add_term(SourceTerm term);

    const Patch& patch() const { return patch_; }
    const TimeGrid& grid() const { return grid_; }
    const std::vector<SourceTerm>& terms() const { return terms_; }
    bool has_dense() const { return dense_.size() > 0; }
    const Eigen::MatrixXd& dense() const { return dense_; }

    /// Values on the grid: grid.size() x patch.size().
    Eigen::MatrixXd sample() const;
    /// Time derivative on the grid, exact where callbacks are available.
    Eigen::MatrixXd sample_derivative() const;

    /// Modal loads b_k(t_i) = <f(t_i), phi_k>: grid.size() x n_modes.
    Eigen::MatrixXd modal() const;
    Eigen::MatrixXd modal_derivative() const;

    /// Throws InvalidParameter unless the source vanishes at the first and
    /// last grid nodes.
    void validate() const;

    std::string hash() const;

private:
    Patch patch_;
    TimeGrid grid_;
    std::vector<SourceTerm> terms_;
    Eigen::MatrixXd dense_;
};

struct ModalSolution {
    std::shared_ptr<const SpectralManifold> manifold;
    TimeGrid grid;
    double alpha = 1.0;
    double beta = 1.0;
    Eigen::MatrixXd coeffs;  // grid.size() x n_modes
    std::string source_hash;

    /// Full-manifold samples at node i.
    Eigen::VectorXd synthesize(int i) const;
};

struct RecordMeta {
    double alpha = 1.0;
    double beta = 1.0;
    std::string manifold_hash;
    std::string patch_hash;
    std::string source_hash;
    bool operator==(const RecordMeta&) const = default;
};

/// Sampled L_V f: one row per time node, one column per V-grid point.
struct MeasurementRecord {
    TimeGrid grid;
    Eigen::MatrixXd values;
    RecordMeta meta;

    /// Number of retained time nodes (truncated records keep a prefix).
    int n_nodes() const { return static_cast<int>(values.rows()); }
};

/// Precomputed convolution kernels for every distinct eigenvalue of a
/// manifold. Reused across sources that share alpha, beta and grid.
class ForwardSolver {
public:
    ForwardSolver(std::shared_ptr<const SpectralManifold> m, double alpha, double beta, TimeGrid grid,
                  Execution exec = Execution::Parallel);

    const SpectralManifold& manifold() const { return *manifold_; }
    const SpectrumGroups& groups() const { return groups_; }
    const TimeGrid& grid() const { return grid_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    ModalSolution solve(const SpaceTimeSource& f) const;

    /// Modal solve from loads b (grid.size() x n_modes).
    Eigen::MatrixXd solve_loads(const Eigen::MatrixXd& b) const;

    /// Scalar response of group g to time samples a.
    std::vector<double> group_response(int g, const std::vector<double>& a) const;

private:
    std::shared_ptr<const SpectralManifold> manifold_;
    double alpha_;
    double beta_;
    TimeGrid grid_;
    Execution exec_;
    SpectrumGroups groups_;
    std::vector<ConvolutionKernel> kernels_;
};

ModalSolution solve_modes(std::shared_ptr<const SpectralManifold> m, double alpha, double beta, const SpaceTimeSource& f,
                          Execution exec = Execution::Parallel);

MeasurementRecord lss_apply(const ModalSolution& sol, const Patch& p);

/// Keeps the nodes t_i < T (and t_0 always).
MeasurementRecord lss_truncate(const MeasurementRecord& rec, double T);

/// Constant of the uniform bound sup_t ||u(t)||^2 <= C int_0^T ||f'||^2 for
/// sources supported in (0, T).
double sup_bound_constant(double alpha, double beta, double T, double lambda2);

}  // namespace fracspec
