#include "fracspec/source_factory.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>

#include "fracspec/hash.hpp"

namespace fracspec {

namespace {

double horner(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
    return v;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> d(c.size() - 1);
    for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = static_cast<double>(i) * c[i];
    return d;
}

std::vector<double> poly_add(std::vector<double> a, const std::vector<double>& b) {
    if (a.size() < b.size()) a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

}  // namespace

double BumpProfile::derivative(int l, double t) const {
    if (l < 0 || l > max_order()) throw InvalidParameter("bump derivative order out of range");
    if (!(std::fabs(t) < 1.0)) return 0.0;
    const double q = 1.0 - t * t;
    if (kind_ == BumpKind::Poly) return horner(polys_[l], t);
    const double e = std::exp(-1.0 / q);
    if (e == 0.0) return 0.0;
    return e * horner(polys_[l], t) / std::pow(q, 2 * l);
}

double BumpProfile::sup_derivative(int l) const {
    if (l < 0 || l > max_order()) throw InvalidParameter("bump derivative order out of range");
    return sup_[l];
}

double BumpProfile::m(int k) const {
    if (k < 0 || k > max_order()) throw InvalidParameter("m_k requested beyond the precomputed derivative order");
    return *std::max_element(sup_.begin(), sup_.begin() + k + 1);
}

BumpProfile build_bump(BumpKind kind, int max_order) {
    if (max_order < 0) throw InvalidParameter("build_bump: max_order must be >= 0");
    BumpProfile b;
    b.kind_ = kind;
    if (kind == BumpKind::Exp) {
        // Q_{l+1} = -2t Q_l + (1 - t^2)^2 Q_l' + 4 l t (1 - t^2) Q_l
        std::vector<double> q{1.0};
        const std::vector<double> one_m_t2{1.0, 0.0, -1.0};
        const std::vector<double> one_m_t2_sq{1.0, 0.0, -2.0, 0.0, 1.0};
        b.polys_.push_back(q);
        for (int l = 0; l < max_order; ++l) {
            auto a = poly_mul({0.0, -2.0}, q);
            auto c = poly_mul(one_m_t2_sq, poly_derivative(q));
            auto d = poly_mul(poly_mul({0.0, 4.0 * l}, one_m_t2), q);
            q = poly_add(poly_add(a, c), d);
            b.polys_.push_back(q);
        }
    } else {
        std::vector<double> p{1.0};
        for (int i = 0; i < 8; ++i) p = poly_mul(p, {1.0, 0.0, -1.0});
        b.polys_.push_back(p);
        for (int l = 0; l < max_order; ++l) b.polys_.push_back(poly_derivative(b.polys_.back()));
    }
    b.sup_.assign(max_order + 1, 0.0);
    // Dense sampling, then Brent refinement around the best sample.
    const int n = 20000;
    for (int l = 0; l <= max_order; ++l) {
        int best = 0;
        double bv = 0.0;
        for (int i = 1; i < n; ++i) {
            const double v = std::fabs(b.derivative(l, -1.0 + 2.0 * i / n));
            if (v > bv) {
                bv = v;
                best = i;
            }
        }
        const double lo = -1.0 + 2.0 * (best - 1) / n;
        const double hi = -1.0 + 2.0 * (best + 1) / n;
        auto neg = [&](double t) { return -std::fabs(b.derivative(l, t)); };
        const auto r = boost::math::tools::brent_find_minima(neg, lo, hi, 50);
        b.sup_[l] = std::max(bv, -r.second);
    }
    boost::math::quadrature::tanh_sinh<double> ts;
    b.integral_ = ts.integrate([&](double t) { return b.value(t); }, -1.0, 1.0);
    return b;
}

int diagonal_index(int k) {
    if (k < 1) throw InvalidParameter("diagonal_index: k must be >= 1");
    int n = 1;
    while (n * (n + 1) / 2 < k) ++n;
    return k - n * (n - 1) / 2;
}

std::vector<Eigen::VectorXd> default_psi(const Patch& p) {
    const Eigen::MatrixXd& B = p.basis();
    const Eigen::VectorXd& w = p.weights();
    std::vector<Eigen::VectorXd> out;
    for (int j = 0; j < B.cols() && static_cast<int>(out.size()) < p.size(); ++j) {
        Eigen::VectorXd v = B.col(j);
        const double n0 = std::sqrt(p.inner(v, v));
        // Two passes of modified Gram-Schmidt.
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : out) v -= p.inner(q, v) * q;
        const double nv = std::sqrt((v.array().square() * w.array()).sum());
        if (nv <= 1e-8 * n0) continue;
        out.push_back(v / nv);
    }
    return out;
}

SourceH::SourceH(BumpProfile bump, SourceHParams params, std::vector<Eigen::VectorXd> psi)
    : bump_(std::move(bump)), params_(params), psi_(std::move(psi)) {
    if (!(params_.S > 0.0) || !(params_.S < params_.T))
        throw InvalidParameter("source h: require 0 < S < T");
    if (params_.K_terms < 1) throw InvalidParameter("source h: K_terms must be >= 1");
    if (params_.K_terms > bump_.max_order())
        throw InvalidParameter("source h: K_terms exceeds the bump's precomputed derivative order");
    if (psi_.empty()) throw InvalidParameter("source h: spatial sequence is empty");
    for (int k = 1; k <= params_.K_terms; ++k)
        if (r(k) > static_cast<int>(psi_.size()))
            throw InvalidParameter("source h: spatial sequence shorter than the diagonal index r(K_terms)");
    const auto n0 = psi_.front().size();
    for (const auto& v : psi_)
        if (v.size() != n0 || !v.allFinite()) throw InvalidParameter("source h: spatial functions must share one V grid");
}

double SourceH::coefficient(int k) const {
    if (k < 1 || k > K()) throw InvalidParameter("source h: term index out of range");
    return std::pow(S(), k) / (std::ldexp(1.0, k * (k + 2)) * bump_.m(k));
}

std::pair<double, double> SourceH::support(int k) const {
    if (k < 1 || k > K()) throw InvalidParameter("source h: term index out of range");
    return {(1.0 - std::ldexp(1.0, 1 - k)) * S(), (1.0 - std::ldexp(1.0, -k)) * S()};
}

double SourceH::h_k(int k, double t, int l) const {
    const double c = coefficient(k);
    const double s = std::ldexp(1.0, k + 1) / S();
    const double u = s * (t - S()) + 3.0;
    return c * std::pow(s, l) * bump_.derivative(l, u);
}

double SourceH::envelope(double t) const {
    double e = 0.0;
    for (int k = 1; k <= K(); ++k) e += std::fabs(h_k(k, t));
    return e;
}

double SourceH::integral(int k) const {
    return coefficient(k) * S() * std::ldexp(1.0, -(k + 1)) * bump_.integral();
}

SourceTerm SourceH::term(int k) const {
    const SourceH self = *this;
    return {[self, k](double t) { return self.h_k(k, t); }, [self, k](double t) { return self.h_k(k, t, 1); },
            psi_[r(k) - 1]};
}

SpaceTimeSource SourceH::source(const Patch& p, const TimeGrid& g, int first, int last) const {
    if (last < 0) last = K();
    if (first < 1 || last > K() || first > last) throw InvalidParameter("source h: term range out of bounds");
    if (psi_.front().size() != p.size()) throw InvalidParameter("source h: spatial sequence does not match the patch");
    SpaceTimeSource f(p, g);
    for (int k = first; k <= last; ++k) f.add_term(term(k));
    return f;
}

void SourceH::validate_resolution(const TimeGrid& g) const {
    fracspec::validate(g);
    if (g.t_max < T() * (1.0 - 1e-12)) throw InvalidParameter("source h: time grid ends before T");
    for (int k = 1; k <= K(); ++k) {
        const auto [lo, hi] = support(k);
        const int nodes = static_cast<int>(std::ceil(hi / g.dt()) - std::floor(lo / g.dt())) - 1;
        if (nodes < kMinNodesPerSupport)
            throw InvalidParameter("source h: support of term " + std::to_string(k) + " holds " + std::to_string(nodes) +
                                   " grid nodes (< 16); reduce K_terms or refine the grid");
    }
}

std::string SourceH::hash() const {
    Hasher h;
    h.text("source-h").integer(static_cast<int>(bump_.kind())).number(T()).number(S()).integer(K());
    for (const auto& v : psi_) h.vector(v);
    return h.hex();
}

SourceH build_h(const BumpProfile& bump, SourceHParams params, std::vector<Eigen::VectorXd> psi) {
    return SourceH(bump, params, std::move(psi));
}

double MollifierDk::derivative(double t, int l) const {
    const double s = std::ldexp(1.0, k + 1) / S;
    return scale * std::pow(s, l) * bump.derivative(l, s * t + 3.0);
}

std::pair<double, double> MollifierDk::support() const {
    return {-S * std::ldexp(1.0, 1 - k), -S * std::ldexp(1.0, -k)};
}

MollifierDk build_mollifier(const SourceH& src, int k) {
    if (k < 1 || k > src.K()) throw InvalidParameter("build_mollifier: index out of range");
    return MollifierDk{k, src.S(), src.coefficient(k) / src.integral(k), src.bump()};
}

ScalarProfile build_riemann_sum(const ScalarProfile& a, const MollifierDk& d, int m) {
    if (m < 1) throw InvalidParameter("build_riemann_sum: m must be >= 1");
    const auto [dlo, dhi] = d.support();
    const int j0 = static_cast<int>(std::ceil(a.lo * m));
    const int j1 = static_cast<int>(std::floor(a.hi * m));
    std::vector<std::pair<double, double>> nodes;
    for (int j = j0; j <= j1; ++j) {
        const double s = static_cast<double>(j) / m;
        const double v = a.f(s);
        if (v == 0.0) continue;
        if (s + dlo <= 0.0)
            throw InvalidParameter("build_riemann_sum: shifted mollifier support reaches t <= 0; increase k");
        nodes.emplace_back(s, v / m);
    }
    ScalarProfile b;
    b.f = [nodes, d](double t) {
        double acc = 0.0;
        for (const auto& [s, c] : nodes) acc += c * d(t - s);
        return acc;
    };
    b.df = [nodes, d](double t) {
        double acc = 0.0;
        for (const auto& [s, c] : nodes) acc += c * d.derivative(t - s, 1);
        return acc;
    };
    b.lo = nodes.empty() ? 0.0 : nodes.front().first + dlo;
    b.hi = nodes.empty() ? 0.0 : nodes.back().first + dhi;
    return b;
}

}  // namespace fracspec
