#include "fracspec/laplace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "fracspec/errors.hpp"

namespace fracspec {

namespace {

constexpr int kGauss = 6;

struct CellRule {
    std::array<double, kGauss> theta{};
    std::array<double, kGauss> omega{};
    // basis[q][r]: cubic Lagrange basis r at theta_q for stencils starting at
    // offsets 0 (forward), -1 (centered), -2 (backward).
    std::array<std::array<std::array<double, 4>, kGauss>, 3> basis{};
};

double lagrange(int r, double x, int first) {
    double v = 1.0;
    for (int m = 0; m < 4; ++m) {
        if (m == r) continue;
        v *= (x - (first + m)) / static_cast<double>(r - m);
    }
    return v;
}

const CellRule& cell_rule() {
    static const CellRule rule = [] {
        CellRule c;
        using G = boost::math::quadrature::gauss<double, kGauss>;
        const auto& x = G::abscissa();
        const auto& w = G::weights();
        int q = 0;
        // Boost stores the nonnegative half; expand symmetrically.
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double xi = x[i];
            if (xi == 0.0) {
                c.theta[q] = 0.5;
                c.omega[q++] = 0.5 * w[i];
                continue;
            }
            c.theta[q] = 0.5 * (1.0 - xi);
            c.omega[q++] = 0.5 * w[i];
            c.theta[q] = 0.5 * (1.0 + xi);
            c.omega[q++] = 0.5 * w[i];
        }
        const int firsts[3] = {0, -1, -2};
        for (int k = 0; k < 3; ++k)
            for (int qq = 0; qq < kGauss; ++qq)
                for (int r = 0; r < 4; ++r) c.basis[k][qq][r] = lagrange(r, c.theta[qq], firsts[k]);
        return c;
    }();
    return rule;
}

double tail_power(double s, double T, double p) {
    boost::math::quadrature::exp_sinh<double> es;
    // e^{-sT} int_0^inf e^{-su} (T + u)^p du
    const double v = es.integrate([&](double u) { return std::exp(-s * u) * std::pow(T + u, p); }, 0.0,
                                  std::numeric_limits<double>::infinity());
    return std::exp(-s * T) * v;
}

std::vector<double> tail_exponents(double alpha) {
    std::vector<double> out;
    for (double p : {alpha - 1.0, -alpha - 1.0, alpha - 2.0, -2.0 * alpha - 1.0, -alpha - 2.0}) {
        bool dup = false;
        for (double q : out) dup = dup || std::fabs(p - q) < 1e-9;
        if (!dup) out.push_back(p);
    }
    return out;
}

// Least-squares power-law fit of the record on the last fifth of its nodes,
// integrated to infinity; returns the tail for the first `terms` exponents.
// The fit and integral are folded into node weights u = A (A^T A)^{-1} integ,
// so the tail is linear in the data with data-independent weights.
Eigen::VectorXd algebraic_tail(const MeasurementRecord& rec, double s, double alpha, int terms) {
    const auto p = tail_exponents(alpha);
    terms = std::min<int>(terms, static_cast<int>(p.size()));
    const int n = rec.n_nodes();
    const double T = rec.grid.t(n - 1);
    const int i0 = std::max(1, static_cast<int>(std::floor(0.8 * (n - 1))));
    const int rows = n - i0;
    Eigen::MatrixXd A(rows, terms);
    for (int i = 0; i < rows; ++i) {
        const double t = rec.grid.t(i0 + i) / T;
        for (int c = 0; c < terms; ++c) A(i, c) = std::pow(t, p[c]);
    }
    Eigen::VectorXd integ(terms);
    for (int c = 0; c < terms; ++c) integ(c) = tail_power(s, T, p[c]) / std::pow(T, p[c]);
    const Eigen::VectorXd u = A.transpose().completeOrthogonalDecomposition().solve(integ);
    return rec.values.middleRows(i0, rows).transpose() * u;
}

}  // namespace

Eigen::VectorXd laplace_weights(const TimeGrid& g, double s, int n_nodes) {
    validate(g);
    if (!(s > 0.0)) throw InvalidParameter("laplace: abscissa must be positive");
    if (n_nodes < 0) n_nodes = g.size();
    if (n_nodes < 2 || n_nodes > g.size()) throw InvalidParameter("laplace: node count out of range");
    const int cells = n_nodes - 1;
    const double dt = g.dt();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n_nodes);
    const CellRule& c = cell_rule();
    for (int j = 0; j < cells; ++j) {
        if (cells < 3) {
            // Linear interpolation only.
            for (int q = 0; q < kGauss; ++q) {
                const double e = dt * c.omega[q] * std::exp(-s * (g.t(j) + c.theta[q] * dt));
                w(j) += e * (1.0 - c.theta[q]);
                w(j + 1) += e * c.theta[q];
            }
            continue;
        }
        int kind = 1;
        int start = j - 1;
        if (j == 0) {
            kind = 0;
            start = 0;
        } else if (j == cells - 1) {
            kind = 2;
            start = j - 2;
        }
        for (int q = 0; q < kGauss; ++q) {
            const double e = dt * c.omega[q] * std::exp(-s * (g.t(j) + c.theta[q] * dt));
            if (e == 0.0) continue;
            for (int r = 0; r < 4; ++r) w(start + r) += e * c.basis[kind][q][r];
        }
    }
    return w;
}

LaplaceValue laplace_of_record(const MeasurementRecord& rec, double s, const LaplaceOptions& opt) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameter("laplace: abscissa must be positive");
    const int n = rec.n_nodes();
    if (n < 2) throw InvalidParameter("laplace: record needs at least two nodes");
    const Eigen::VectorXd w = laplace_weights(rec.grid, s, n);
    LaplaceValue out;
    out.value = rec.values.transpose() * w;

    const double T = rec.grid.t(n - 1);
    const double peak = rec.values.cwiseAbs().maxCoeff();
    const Eigen::VectorXd last = rec.values.row(n - 1).transpose();
    const double decay = std::exp(-s * T) / s;
    TailPolicy pol = opt.tail;
    if (pol == TailPolicy::Auto) {
        if (peak == 0.0 || last.cwiseAbs().maxCoeff() <= opt.decay_floor * peak)
            pol = TailPolicy::None;
        else
            pol = opt.alpha == 1.0 ? TailPolicy::Plateau : TailPolicy::Algebraic;
    }
    out.used = pol;
    switch (pol) {
    case TailPolicy::None:
    case TailPolicy::Auto:
        out.tail_bound = last.norm() * decay;
        break;
    case TailPolicy::Plateau: {
        const int i9 = static_cast<int>(std::floor(0.9 * (n - 1)));
        const Eigen::VectorXd tail = last * decay;
        out.value += tail;
        out.tail = tail.norm();
        out.tail_bound = (last - rec.values.row(i9).transpose()).norm() * decay;
        break;
    }
    case TailPolicy::Algebraic: {
        if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw InvalidParameter("laplace: algebraic tail needs 0 < alpha < 1");
        const Eigen::VectorXd full = algebraic_tail(rec, s, opt.alpha, 5);
        const Eigen::VectorXd reduced = algebraic_tail(rec, s, opt.alpha, 3);
        out.value += full;
        out.tail = full.norm();
        out.tail_bound = (full - reduced).norm();
        break;
    }
    }
    const double vn = out.value.norm();
    if (out.tail_bound > opt.tail_fraction * vn && out.tail_bound > 0.0)
        throw ToleranceError("laplace: tail bound " + std::to_string(out.tail_bound / std::max(vn, 1e-300)) +
                             " of the transform exceeds the declared fraction at s = " + std::to_string(s) +
                             "; lengthen the record or raise s");
    return out;
}

LaplaceSampler::LaplaceSampler(std::vector<double> abscissae, LaplaceOptions opt)
    : s_(std::move(abscissae)), opt_(opt) {
    if (s_.empty()) throw InvalidParameter("laplace sampler: no abscissae");
    std::vector<double> sorted = s_;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (!(sorted[i] > 0.0) || !std::isfinite(sorted[i]))
            throw InvalidParameter("laplace sampler: abscissae must be positive");
        if (i > 0 && sorted[i] == sorted[i - 1]) throw InvalidParameter("laplace sampler: abscissae must be distinct");
    }
}

Eigen::MatrixXd LaplaceSampler::transform(const MeasurementRecord& rec) const {
    Eigen::MatrixXd out(rec.values.cols(), s_.size());
    worst_ = 0.0;
    for (std::size_t j = 0; j < s_.size(); ++j) {
        const LaplaceValue v = laplace_of_record(rec, s_[j], opt_);
        out.col(j) = v.value;
        const double vn = v.value.norm();
        if (vn > 0.0) worst_ = std::max(worst_, v.tail_bound / vn);
    }
    return out;
}

double laplace_of_profile(const TimeProfile& a, double lo, double hi, double s) {
    if (!(hi > lo)) throw InvalidParameter("laplace: empty profile support");
    // Fixed composite rule: the result is exactly homogeneous in a.
    using G = boost::math::quadrature::gauss<double, 20>;
    constexpr int panels = 64;
    const double h = (hi - lo) / panels;
    double acc = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double a0 = lo + k * h;
        acc += G::integrate([&](double t) { return std::exp(-s * t) * a(t); }, a0, a0 + h);
    }
    return acc;
}

}  // namespace fracspec
