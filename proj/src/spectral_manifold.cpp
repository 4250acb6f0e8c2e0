#include "fracspec/spectral_manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "fracspec/hash.hpp"

namespace fracspec {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss-Legendre nodes/weights on [-1, 1] via the Golub-Welsch eigenproblem.
void gauss_legendre(int n, Eigen::VectorXd& x, Eigen::VectorXd& w) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = i / std::sqrt(4.0 * i * i - 1.0);
        J(i, i - 1) = b;
        J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    x = es.eigenvalues();
    w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

// Fully normalized associated Legendre values Pbar_l^m(cos theta) for all
// l <= lmax at fixed m, normalized so that int |Pbar|^2 dOmega = 1 with the
// azimuthal factor 1 (m = 0) or sqrt(2) cos/sin (m > 0).
std::vector<double> legendre_column(int lmax, int m, double theta) {
    std::vector<double> p(lmax + 1, 0.0);
    if (m > lmax) return p;
    const double x = std::cos(theta);
    const double s = std::sin(theta);
    double pmm = 1.0 / std::sqrt(4.0 * kPi);
    for (int i = 1; i <= m; ++i) pmm *= std::sqrt((2.0 * i + 1.0) / (2.0 * i)) * s;
    p[m] = pmm;
    if (m + 1 <= lmax) p[m + 1] = std::sqrt(2.0 * m + 3.0) * x * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
        const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                   (4.0 * (l - 1) * (l - 1) - 1.0));
        p[l] = a * (x * p[l - 1] - b * p[l - 2]);
    }
    return p;
}

}  // namespace

double SpectralManifold::volume() const {
    if (spec_.kind == ManifoldKind::FlatTorus2D) return spec_.period1 * spec_.period2;
    return 4.0 * kPi * spec_.radius * spec_.radius;
}

double SpectralManifold::eval(int k, double c1, double c2) const {
    if (k < 0 || k >= n_modes()) throw InvalidParameter("eval: mode index out of range");
    const ModeLabel& lab = labels_[k];
    if (spec_.kind == ManifoldKind::FlatTorus2D) {
        const double area = volume();
        if (lab.i1 == 0 && lab.i2 == 0) return 1.0 / std::sqrt(area);
        const double ph = 2.0 * kPi * (lab.i1 * c1 / spec_.period1 + lab.i2 * c2 / spec_.period2);
        return std::sqrt(2.0 / area) * (lab.trig == 0 ? std::cos(ph) : std::sin(ph));
    }
    const int l = lab.i1;
    const int m = lab.i2;
    const double p = legendre_column(l, m, c1)[l];
    const double scale = 1.0 / spec_.radius;
    if (m == 0) return scale * p;
    return scale * std::sqrt(2.0) * p * (lab.trig == 0 ? std::cos(m * c2) : std::sin(m * c2));
}

double SpectralManifold::eigen_residual(int k, double h) const {
    double num = 0.0;
    double den = 0.0;
    auto d2 = [&](auto&& f, double c, double step) {
        return (-f(c + 2 * step) + 16 * f(c + step) - 30 * f(c) + 16 * f(c - step) - f(c - 2 * step)) /
               (12 * step * step);
    };
    auto d1 = [&](auto&& f, double c, double step) {
        return (-f(c + 2 * step) + 8 * f(c + step) - 8 * f(c - step) + f(c - 2 * step)) / (12 * step);
    };
    const double lam = eigenvalues_[k];
    for (int p = 0; p < n_points(); ++p) {
        const double c1 = points_(p, 0);
        const double c2 = points_(p, 1);
        auto f1 = [&](double v) { return eval(k, v, c2); };
        auto f2 = [&](double v) { return eval(k, c1, v); };
        double lap;
        if (spec_.kind == ManifoldKind::FlatTorus2D) {
            lap = d2(f1, c1, h) + d2(f2, c2, h);
        } else {
            const double st = std::sin(c1);
            lap = (d2(f1, c1, h) + std::cos(c1) / st * d1(f1, c1, h) + d2(f2, c2, h) / (st * st)) /
                  (spec_.radius * spec_.radius);
        }
        const double phi = eval(k, c1, c2);
        num = std::max(num, std::fabs(lap + lam * phi));
        den = std::max(den, std::fabs(phi) * std::max(lam, 1.0));
    }
    return num / den;
}

SpectralManifold build_manifold(const ManifoldSpec& spec) {
    if (spec.n_modes < 1) throw InvalidParameter("build_manifold: n_modes must be >= 1");
    SpectralManifold out;
    out.spec_ = spec;
    using Label = SpectralManifold::ModeLabel;
    std::vector<std::pair<double, Label>> modes;

    if (spec.kind == ManifoldKind::FlatTorus2D) {
        if (!(spec.period1 > 0.0) || !(spec.period2 > 0.0)) throw InvalidParameter("torus periods must be positive");
        const double k1 = 2.0 * kPi / spec.period1;
        const double k2 = 2.0 * kPi / spec.period2;
        // Lattice window large enough that every eigenvalue below the
        // cutoff of the n_modes-th mode is enumerated.
        const int window_cap = 512;
        for (int w = 4; w <= window_cap; w *= 2) {
            modes.clear();
            for (int m = 0; m <= w; ++m) {
                for (int n = -w; n <= w; ++n) {
                    if (m == 0 && n < 0) continue;
                    const double lam = k1 * k1 * m * m + k2 * k2 * n * n;
                    if (m == 0 && n == 0) {
                        modes.push_back({lam, Label{0, 0, 0}});
                    } else {
                        modes.push_back({lam, Label{m, n, 0}});
                        modes.push_back({lam, Label{m, n, 1}});
                    }
                }
            }
            std::stable_sort(modes.begin(), modes.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            const double edge = std::min(k1 * k1, k2 * k2) * (w + 1.0) * (w + 1.0);
            if (static_cast<int>(modes.size()) > spec.n_modes && modes[spec.n_modes].first < edge) break;
            if (w * 2 > window_cap) throw InvalidParameter("build_manifold: n_modes exceeds the generated lattice window");
        }
    } else if (spec.kind == ManifoldKind::Sphere2D) {
        if (!(spec.radius > 0.0)) throw InvalidParameter("sphere radius must be positive");
        const int lmax_cap = 200;
        for (int l = 0; l <= lmax_cap && static_cast<int>(modes.size()) <= spec.n_modes; ++l) {
            const double lam = l * (l + 1.0) / (spec.radius * spec.radius);
            modes.push_back({lam, Label{l, 0, 0}});
            for (int m = 1; m <= l; ++m) {
                modes.push_back({lam, Label{l, m, 0}});
                modes.push_back({lam, Label{l, m, 1}});
            }
        }
        if (static_cast<int>(modes.size()) <= spec.n_modes)
            throw InvalidParameter("build_manifold: n_modes exceeds the generated harmonic window");
    } else {
        throw InvalidParameter("build_manifold: unsupported manifold kind");
    }

    const double cut = modes[spec.n_modes - 1].first;
    const double next = modes[spec.n_modes].first;
    if (next - cut <= 1e-12 * (1.0 + cut))
        throw InvalidParameter("build_manifold: n_modes splits an eigenspace; choose a count that closes the last group");
    modes.resize(spec.n_modes);
    for (const auto& [lam, lab] : modes) {
        out.eigenvalues_.push_back(lam);
        out.labels_.push_back(lab);
    }

    int max1 = 0;
    int max2 = 0;
    for (const auto& lab : out.labels_) {
        max1 = std::max(max1, std::abs(lab.i1));
        max2 = std::max(max2, std::abs(lab.i2));
    }

    if (spec.kind == ManifoldKind::FlatTorus2D) {
        const int n1 = spec.grid1 > 0 ? spec.grid1 : 4 * ((2 * max1 + 4) / 4);
        const int n2 = spec.grid2 > 0 ? spec.grid2 : 4 * ((2 * max2 + 4) / 4);
        if (n1 <= 2 * max1 || n2 <= 2 * max2) throw InvalidParameter("torus grid too coarse for the retained modes");
        out.spec_.grid1 = n1;
        out.spec_.grid2 = n2;
        out.points_.resize(n1 * n2, 2);
        out.weights_ = Eigen::VectorXd::Constant(n1 * n2, spec.period1 * spec.period2 / (n1 * n2));
        for (int i = 0; i < n1; ++i) {
            for (int j = 0; j < n2; ++j) {
                out.points_(i * n2 + j, 0) = spec.period1 * i / n1;
                out.points_(i * n2 + j, 1) = spec.period2 * j / n2;
            }
        }
    } else {
        const int lmax = max1;
        const int nt = spec.grid1 > 0 ? spec.grid1 : lmax + 2;
        const int np = spec.grid2 > 0 ? spec.grid2 : 2 * lmax + 4;
        if (nt < lmax + 1 || np < 2 * lmax + 1) throw InvalidParameter("sphere grid too coarse for the retained modes");
        out.spec_.grid1 = nt;
        out.spec_.grid2 = np;
        Eigen::VectorXd gx, gw;
        gauss_legendre(nt, gx, gw);
        out.points_.resize(nt * np, 2);
        out.weights_.resize(nt * np);
        const double r2 = spec.radius * spec.radius;
        for (int i = 0; i < nt; ++i) {
            for (int j = 0; j < np; ++j) {
                out.points_(i * np + j, 0) = std::acos(gx(i));
                out.points_(i * np + j, 1) = 2.0 * kPi * j / np;
                out.weights_(i * np + j) = gw(i) * 2.0 * kPi / np * r2;
            }
        }
    }

    const int np = out.n_points();
    out.basis_.resize(np, spec.n_modes);
    if (spec.kind == ManifoldKind::FlatTorus2D) {
        for (int k = 0; k < spec.n_modes; ++k)
            for (int p = 0; p < np; ++p) out.basis_(p, k) = out.eval(k, out.points_(p, 0), out.points_(p, 1));
    } else {
        // One Legendre recurrence per (point, m) instead of per mode.
        const int lmax = max1;
        for (int p = 0; p < np; ++p) {
            const double th = out.points_(p, 0);
            const double ph = out.points_(p, 1);
            std::vector<std::vector<double>> cols(lmax + 1);
            for (int m = 0; m <= lmax; ++m) cols[m] = legendre_column(lmax, m, th);
            for (int k = 0; k < spec.n_modes; ++k) {
                const auto& lab = out.labels_[k];
                const double v = cols[lab.i2][lab.i1] / spec.radius;
                out.basis_(p, k) = lab.i2 == 0 ? v
                                   : std::sqrt(2.0) * v * (lab.trig == 0 ? std::cos(lab.i2 * ph) : std::sin(lab.i2 * ph));
            }
        }
    }

    Hasher h;
    h.text("manifold").integer(static_cast<int>(spec.kind)).number(spec.period1).number(spec.period2);
    h.number(spec.radius).integer(spec.n_modes).integer(out.spec_.grid1).integer(out.spec_.grid2);
    out.hash_ = h.hex();
    return out;
}

SpectrumGroups group_distinct(const SpectralManifold& m, double tol) {
    if (tol < 0.0) tol = 1e-9;
    SpectrumGroups g;
    const auto& ev = m.eigenvalues();
    g.values.push_back(ev[0]);
    g.first.push_back(0);
    g.count.push_back(1);
    for (std::size_t i = 1; i < ev.size(); ++i) {
        const double gap = ev[i] - ev[i - 1];
        const double thr = tol * (1.0 + std::fabs(ev[i - 1]));
        if (gap <= thr) {
            ++g.count.back();
            if (ev[i] - g.values.back() > thr) throw InvalidParameter("group_distinct: within-group spread exceeds tolerance");
        } else if (gap < 1e3 * thr) {
            throw InvalidParameter("group_distinct: ambiguous grouping, a spectral gap straddles the tolerance");
        } else {
            g.values.push_back(ev[i]);
            g.first.push_back(static_cast<int>(i));
            g.count.push_back(1);
        }
    }
    return g;
}

Patch make_patch(std::shared_ptr<const SpectralManifold> m, const RegionSpec& region) {
    if (!m) throw InvalidParameter("make_patch: null manifold");
    Patch p;
    p.manifold_ = m;
    p.region_ = region;
    const auto& pts = m->points();
    const int np = m->n_points();
    const bool torus = m->kind() == ManifoldKind::FlatTorus2D;
    auto inside = [&](double c1, double c2) -> bool {
        switch (region.kind) {
            case RegionSpec::Kind::Full: return true;
            case RegionSpec::Kind::Rectangle:
                return c1 >= region.lo1 && c1 < region.hi1 && c2 >= region.lo2 && c2 < region.hi2;
            case RegionSpec::Kind::Ball: {
                double d;
                if (torus) {
                    const double L1 = m->spec().period1;
                    const double L2 = m->spec().period2;
                    double dx = std::fmod(std::fabs(c1 - region.c1), L1);
                    double dy = std::fmod(std::fabs(c2 - region.c2), L2);
                    dx = std::min(dx, L1 - dx);
                    dy = std::min(dy, L2 - dy);
                    d = std::hypot(dx, dy);
                } else {
                    const double cosd = std::cos(c1) * std::cos(region.c1) +
                                        std::sin(c1) * std::sin(region.c1) * std::cos(c2 - region.c2);
                    d = m->spec().radius * std::acos(std::clamp(cosd, -1.0, 1.0));
                }
                return d < region.radius;
            }
        }
        return false;
    };
    if (region.kind == RegionSpec::Kind::Full && !region.allow_full)
        throw InvalidParameter("make_patch: full-manifold patch requires the explicit allow_full flag");
    for (int i = 0; i < np; ++i)
        if (inside(pts(i, 0), pts(i, 1))) p.indices_.push_back(i);
    if (p.indices_.empty()) throw InvalidParameter("make_patch: region contains no grid points");
    if (region.kind != RegionSpec::Kind::Full && static_cast<int>(p.indices_.size()) == np)
        throw InvalidParameter("make_patch: region covers the whole manifold; use the full-manifold flag");
    const int nv = p.size();
    p.weights_.resize(nv);
    p.basis_.resize(nv, m->n_modes());
    for (int i = 0; i < nv; ++i) {
        p.weights_(i) = m->weights()(p.indices_[i]);
        p.basis_.row(i) = m->basis().row(p.indices_[i]);
    }
    Hasher h;
    h.text("patch").text(m->hash()).integer(static_cast<int>(region.kind));
    for (double v : {region.lo1, region.hi1, region.lo2, region.hi2, region.c1, region.c2, region.radius}) h.number(v);
    for (int i : p.indices_) h.integer(i);
    p.hash_ = h.hex();
    return p;
}

Eigen::VectorXd Patch::restrict_to(const Eigen::VectorXd& u_m) const {
    if (u_m.size() != manifold_->n_points()) throw InvalidParameter("restrict_to: size mismatch");
    Eigen::VectorXd out(size());
    for (int i = 0; i < size(); ++i) out(i) = u_m(indices_[i]);
    return out;
}

Eigen::VectorXd Patch::extend(const Eigen::VectorXd& u_v) const {
    if (u_v.size() != size()) throw InvalidParameter("extend: size mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(manifold_->n_points());
    for (int i = 0; i < size(); ++i) out(indices_[i]) = u_v(i);
    return out;
}

double Patch::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    return (u.array() * v.array() * weights_.array()).sum();
}

Eigen::VectorXd RestrictedProjection::apply(const Eigen::VectorXd& u) const {
    return factor * (factor.transpose() * (weights.array() * u.array()).matrix());
}

Eigen::MatrixXd RestrictedProjection::matrix() const {
    return factor * (factor.transpose() * weights.asDiagonal());
}

double RestrictedProjection::smallest_singular_value() const {
    const Eigen::MatrixXd a = weights.array().sqrt().matrix().asDiagonal() * factor;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues().minCoeff();
}

RestrictedProjection restricted_projection(const Patch& p, const SpectrumGroups& g, int k) {
    if (k < 0 || k >= g.size()) throw InvalidParameter("restricted_projection: group index out of range");
    RestrictedProjection r;
    r.group = k;
    r.factor = p.basis().middleCols(g.first[k], g.count[k]);
    r.weights = p.weights();
    return r;
}

Eigen::VectorXd apply_projection(const Patch& p, const SpectrumGroups& g, int k, const Eigen::VectorXd& u) {
    if (u.size() != p.size()) throw InvalidParameter("apply_projection: size mismatch");
    return restricted_projection(p, g, k).apply(u);
}

}  // namespace fracspec
