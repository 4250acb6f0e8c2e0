#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracspec/errors.hpp"

namespace fracspec {

enum class ManifoldKind { FlatTorus2D, Sphere2D };

struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::FlatTorus2D;
    double period1 = 6.283185307179586;  // torus side lengths
    double period2 = 6.283185307179586;
    double radius = 1.0;                 // sphere
    int n_modes = 1;
    /// Quadrature grid: torus n1 x n2 uniform; sphere n1 Gauss-Legendre
    /// latitudes x n2 uniform longitudes. Zero selects the smallest grid
    /// that integrates products of retained eigenfunctions exactly.
    int grid1 = 0;
    int grid2 = 0;
};

/// Closed model manifold with closed-form Laplace-Beltrami eigendata.
///
/// Points use coordinates (x, y) on the torus and (theta, phi) on the
/// sphere. Eigenfunctions are real and L2(M)-orthonormal; the sampled
/// matrix `basis()` has one column per mode.
class SpectralManifold {
public:
    ManifoldKind kind() const { return spec_.kind; }
    const ManifoldSpec& spec() const { return spec_; }
    int n_modes() const { return static_cast<int>(eigenvalues_.size()); }
    int n_points() const { return static_cast<int>(weights_.size()); }
    const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::MatrixXd& points() const { return points_; }  // n_points x 2
    const Eigen::MatrixXd& basis() const { return basis_; }    // n_points x n_modes
    double volume() const;

    /// phi_k at an arbitrary coordinate point.
    double eval(int k, double c1, double c2) const;

    /// Relative residual of Delta phi_k + lambda_k phi_k on the grid, with
    /// Delta applied by fourth-order central differences in coordinates.
    double eigen_residual(int k, double step = 1e-3) const;

    /// Content hash of spec, eigenvalues and grid.
    const std::string& hash() const { return hash_; }

    friend SpectralManifold build_manifold(const ManifoldSpec& spec);

private:
    struct ModeLabel {
        int i1;  // torus: m;       sphere: l
        int i2;  // torus: n;       sphere: m
        int trig;  // 0 constant/cos-like, 1 sin-like
    };
    ManifoldSpec spec_;
    std::vector<double> eigenvalues_;
    std::vector<ModeLabel> labels_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd points_;
    Eigen::MatrixXd basis_;
    std::string hash_;
};

SpectralManifold build_manifold(const ManifoldSpec& spec);

/// Partition of the modes into groups sharing one eigenvalue.
struct SpectrumGroups {
    std::vector<double> values;  // strictly increasing
    std::vector<int> first;      // first mode index of each group
    std::vector<int> count;      // multiplicity
    int size() const { return static_cast<int>(values.size()); }
};

/// Groups modes whose consecutive eigenvalue gap is <= tol * (1 + lambda).
/// A negative tol selects the default 1e-9. Gaps between tol and 1e3 * tol
/// (relative) are reported as ambiguous.
SpectrumGroups group_distinct(const SpectralManifold& m, double tol = -1.0);

struct RegionSpec {
    enum class Kind { Rectangle, Ball, Full };
    Kind kind = Kind::Full;
    /// Half-open coordinate rectangle [lo1, hi1) x [lo2, hi2).
    double lo1 = 0.0, hi1 = 0.0, lo2 = 0.0, hi2 = 0.0;
    /// Open geodesic ball around coordinate point (c1, c2).
    double c1 = 0.0, c2 = 0.0, radius = 0.0;
    /// Required to accept Kind::Full.
    bool allow_full = false;
};

/// Observation set V with its quadrature and restriction/extension maps.
class Patch {
public:
    const SpectralManifold& manifold() const { return *manifold_; }
    std::shared_ptr<const SpectralManifold> manifold_ptr() const { return manifold_; }
    const RegionSpec& region() const { return region_; }
    int size() const { return static_cast<int>(indices_.size()); }
    bool is_full() const { return region_.kind == RegionSpec::Kind::Full; }
    const std::vector<int>& indices() const { return indices_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    /// Eigenfunctions restricted to V: size() x n_modes.
    const Eigen::MatrixXd& basis() const { return basis_; }
    double measure() const { return weights_.sum(); }

    Eigen::VectorXd restrict_to(const Eigen::VectorXd& u_m) const;
    Eigen::VectorXd extend(const Eigen::VectorXd& u_v) const;
    double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

    const std::string& hash() const { return hash_; }

    friend Patch make_patch(std::shared_ptr<const SpectralManifold> m, const RegionSpec& region);

private:
    std::shared_ptr<const SpectralManifold> manifold_;
    RegionSpec region_;
    std::vector<int> indices_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd basis_;
    std::string hash_;
};

Patch make_patch(std::shared_ptr<const SpectralManifold> m, const RegionSpec& region);

/// Restricted eigenspace projection P_{V,k} u = B_k B_k^T diag(w_V) u.
///
/// For a proper patch this is the compression of the orthogonal projection
/// P_k to L2(V); it is self-adjoint and positive semidefinite in the
/// weighted inner product but idempotent only when V = M.
struct RestrictedProjection {
    int group = 0;
    Eigen::MatrixXd factor;  // B_k: columns phi_j|_V, j in group
    Eigen::VectorXd weights;

    Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
    Eigen::MatrixXd matrix() const;
    /// Smallest singular value of diag(sqrt(w_V)) B_k.
    double smallest_singular_value() const;
};

/// Smallest admissible singular value of a restricted group factor.
inline constexpr double kUniqueContinuationFloor = 1e-3;

RestrictedProjection restricted_projection(const Patch& p, const SpectrumGroups& g, int k);

Eigen::VectorXd apply_projection(const Patch& p, const SpectrumGroups& g, int k, const Eigen::VectorXd& u);

}  // namespace fracspec
