#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fracspec/forward_solver.hpp"

namespace fracspec {

enum class BumpKind { Exp, Poly };

/// Nonnegative bump n supported in (-1, 1) with derivatives and the
/// constants m_k = max_{l <= k} sup |n^(l)|.
///
/// Exp: n(t) = exp(-1/(1 - t^2)), smooth. Poly: (1 - t^2)^8, only C^7 across
/// t = +-1; derivatives are those of the polynomial inside the interval.
class BumpProfile {
public:
    BumpKind kind() const { return kind_; }
    /// Highest derivative order that is continuous on the real line; -1 for C^infinity.
    int smoothness() const { return kind_ == BumpKind::Exp ? -1 : 7; }
    int max_order() const { return static_cast<int>(sup_.size()) - 1; }

    double value(double t) const { return derivative(0, t); }
    double derivative(int l, double t) const;
    /// sup_t |n^(l)(t)|.
    double sup_derivative(int l) const;
    double m(int k) const;
    /// int n over (-1, 1).
    double integral() const { return integral_; }

    friend BumpProfile build_bump(BumpKind kind, int max_order);

private:
    BumpKind kind_ = BumpKind::Exp;
    // Exp: n^(l) = n Q_l / (1 - t^2)^{2l}. Poly: n^(l) is polys_[l] itself.
    std::vector<std::vector<double>> polys_;
    std::vector<double> sup_;
    double integral_ = 0.0;
};

BumpProfile build_bump(BumpKind kind = BumpKind::Exp, int max_order = 16);

/// k-th entry (1-based) of 1, 1, 2, 1, 2, 3, 1, 2, 3, 4, ...
int diagonal_index(int k);

/// W_V-orthonormal basis of the V-grid space obtained by Gram-Schmidt on the
/// restricted eigenfunctions.
std::vector<Eigen::VectorXd> default_psi(const Patch& p);

struct SourceHParams {
    double T = 1.0;
    double S = 0.5;
    int K_terms = 8;
};

/// Finite realization h = sum_{k <= K} h_k(t) psi_{r(k)} of the single
/// measurement source, with
///   h_k(t) = S^k / (2^{k(k+2)} m_k) n(2^{k+1}(t/S - 1) + 3),
/// supported in ((1 - 2^{1-k}) S, (1 - 2^{-k}) S).
class SourceH {
public:
    SourceH(BumpProfile bump, SourceHParams params, std::vector<Eigen::VectorXd> psi);

    double T() const { return params_.T; }
    double S() const { return params_.S; }
    int K() const { return params_.K_terms; }
    const BumpProfile& bump() const { return bump_; }
    const std::vector<Eigen::VectorXd>& psi() const { return psi_; }

    double coefficient(int k) const;
    std::pair<double, double> support(int k) const;
    /// l-th time derivative of h_k.
    double h_k(int k, double t, int l = 0) const;
    /// Time-amplitude envelope sum_{k <= K} |h_k(t)|.
    double envelope(double t) const;
    /// int h_k.
    double integral(int k) const;
    int r(int k) const { return diagonal_index(k); }

    SourceTerm term(int k) const;
    /// sum_{k = first..last} h_k psi_{r(k)} on the given patch and grid.
    SpaceTimeSource source(const Patch& p, const TimeGrid& g, int first = 1, int last = -1) const;

    /// Throws InvalidParameter when a term's support holds fewer than
    /// kMinNodesPerSupport grid nodes or the grid ends before T.
    void validate_resolution(const TimeGrid& g) const;
    static constexpr int kMinNodesPerSupport = 16;

    std::string hash() const;

private:
    BumpProfile bump_;
    SourceHParams params_;
    std::vector<Eigen::VectorXd> psi_;
};

SourceH build_h(const BumpProfile& bump, SourceHParams params, std::vector<Eigen::VectorXd> psi);

/// d_k(t) = h_k(t + S) / int h_k.
struct MollifierDk {
    int k = 1;
    double S = 1.0;
    double scale = 1.0;  // coefficient(k) / integral(k)
    BumpProfile bump;

    double operator()(double t) const { return derivative(t, 0); }
    double derivative(double t, int l = 1) const;
    std::pair<double, double> support() const;
};

MollifierDk build_mollifier(const SourceH& src, int k);

/// Scalar time profile with derivative and a support interval.
struct ScalarProfile {
    TimeProfile f;
    TimeProfile df;
    double lo = 0.0;
    double hi = 0.0;
};

/// b_m(t) = (1/m) sum_j a(j/m) d_k(t - j/m).
ScalarProfile build_riemann_sum(const ScalarProfile& a, const MollifierDk& d, int m);

}  // namespace fracspec
