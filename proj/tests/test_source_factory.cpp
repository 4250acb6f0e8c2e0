#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include "fracspec/source_factory.hpp"
#include "test_util.hpp"

using namespace fracspec;

namespace {

double quad(const std::function<double(double)>& f, double lo, double hi) {
    static boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate([&](double x, double) { return f(x); }, lo, hi, 1e-13);
}

SourceH reference_h(double S = 1.0, double T = 1.5, int K = 8) {
    auto m = testutil::torus(121);
    Patch p = testutil::quarter(m);
    return build_h(build_bump(), SourceHParams{T, S, K}, default_psi(p));
}

double conv_oracle(const ScalarProfile& a, const MollifierDk& d, double t, int deriv = 0) {
    // (d * a)(t) = int a(s) d(t - s) ds over the overlap of supports.
    const auto [dlo, dhi] = d.support();
    const double lo = std::max(a.lo, t - dhi);
    const double hi = std::min(a.hi, t - dlo);
    if (hi <= lo) return 0.0;
    return quad([&](double s) { return a.f(s) * d.derivative(t - s, deriv); }, lo, hi);
}

}  // namespace

TEST_CASE("bump profiles") {
    const auto e = build_bump(BumpKind::Exp);
    CHECK(e.value(0.0) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    for (double t : {-3.0, -1.0, 1.0, 1.5}) {
        CHECK(e.value(t) == 0.0);
        CHECK(e.derivative(3, t) == 0.0);
    }
    for (int i = 0; i < 1000; ++i) {
        const double t = -1.0 + 2.0 * (i + 0.5) / 1000;
        CHECK(std::fabs(e.value(t) - e.value(-t)) <= 1e-15);
        CHECK(e.value(t) >= 0.0);
    }
    // Closed-form first derivative and finite-difference ladder.
    for (double t : {-0.7, -0.2, 0.1, 0.6}) {
        const double q = 1 - t * t;
        CHECK(e.derivative(1, t) == doctest::Approx(e.value(t) * (-2 * t / (q * q))).epsilon(1e-13));
        for (int l = 1; l <= 6; ++l) {
            const double h = 1e-5;
            const double fd = (e.derivative(l - 1, t + h) - e.derivative(l - 1, t - h)) / (2 * h);
            CHECK(e.derivative(l, t) == doctest::Approx(fd).epsilon(1e-6).scale(e.sup_derivative(l) * 1e-3));
        }
    }
    for (int k = 1; k <= e.max_order(); ++k) CHECK(e.m(k) >= e.m(k - 1));
    CHECK(e.sup_derivative(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(e.integral() == doctest::Approx(0.4439938161680794).epsilon(1e-12));
    CHECK(e.smoothness() == -1);

    const auto p = build_bump(BumpKind::Poly);
    CHECK(p.smoothness() == 7);
    CHECK(p.value(0.5) == doctest::Approx(std::pow(0.75, 8)).epsilon(1e-15));
    CHECK(p.derivative(1, 0.5) == doctest::Approx(8 * std::pow(0.75, 7) * (-1.0)).epsilon(1e-14));
    CHECK(p.value(1.0) == 0.0);
    CHECK(p.integral() == doctest::Approx(65536.0 / 109395.0).epsilon(1e-12));
    CHECK_THROWS_AS(e.derivative(e.max_order() + 1, 0.0), InvalidParameter);
}

TEST_CASE("diagonal index sequence") {
    const std::vector<int> want{1, 1, 2, 1, 2, 3, 1, 2, 3, 4, 1};
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(diagonal_index(static_cast<int>(i) + 1) == want[i]);
    // Every index reappears.
    int count3 = 0;
    for (int k = 1; k <= 200; ++k) count3 += diagonal_index(k) == 3;
    CHECK(count3 >= 15);
}

TEST_CASE("default spatial sequence is an orthonormal basis of the V grid") {
    auto m = testutil::torus(121);
    Patch p = testutil::quarter(m);
    const auto psi = default_psi(p);
    REQUIRE(static_cast<int>(psi.size()) == p.size());
    Eigen::MatrixXd G(psi.size(), psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i)
        for (std::size_t j = 0; j < psi.size(); ++j) G(i, j) = p.inner(psi[i], psi[j]);
    CHECK((G - Eigen::MatrixXd::Identity(psi.size(), psi.size())).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("source h supports, amplitudes and derivative ladder") {
    const SourceH h = reference_h();
    const double S = h.S();
    CHECK(h.support(1).first == 0.0);
    CHECK(h.support(1).second == 0.5);
    CHECK(h.support(2).first == 0.5);
    CHECK(h.support(2).second == 0.75);
    CHECK(h.support(3).first == 0.75);
    CHECK(h.support(3).second == 0.875);

    const TimeGrid fine{1.0, 1 << 16};
    for (int k = 1; k <= h.K(); ++k) {
        const auto [lo, hi] = h.support(k);
        CHECK(h.h_k(k, lo) == 0.0);
        CHECK(h.h_k(k, hi) == 0.0);
        const double w = hi - lo;
        CHECK(h.h_k(k, lo + 0.02 * w) > 0.0);
        CHECK(h.h_k(k, hi - 0.02 * w) > 0.0);
        CHECK(h.h_k(k, lo - 1e-3 * w) == 0.0);
        CHECK(h.h_k(k, hi + 1e-3 * w) == 0.0);
    }
    // Ladder: sup |h_k^(l)| <= 2^{-k} for l <= 3, k >= l, 2^{k+1} >= S.
    for (int l = 0; l <= 3; ++l) {
        for (int k = std::max(l, 1); k <= h.K(); ++k) {
            if (std::ldexp(1.0, k + 1) < S) continue;
            double sup = 0.0;
            for (int i = 0; i < fine.size(); ++i) sup = std::max(sup, std::fabs(h.h_k(k, fine.t(i), l)));
            INFO("k=" << k << " l=" << l);
            CHECK(sup <= std::ldexp(1.0, -k));
        }
    }
    // Pairwise disjoint supports and vanishing outside (0, S).
    int overlaps = 0;
    int outside = 0;
    for (int i = 0; i < fine.size(); ++i) {
        const double t = fine.t(i);
        for (int k = 1; k <= h.K(); ++k)
            for (int j = k + 1; j <= h.K(); ++j) overlaps += h.h_k(k, t) * h.h_k(j, t) != 0.0;
        if (t >= S) outside += h.envelope(t) != 0.0;
    }
    CHECK(overlaps == 0);
    CHECK(outside == 0);
    CHECK(h.envelope(0.0) == 0.0);
    CHECK(h.envelope(-0.1) == 0.0);
}

TEST_CASE("source h tail bound for the envelope") {
    const SourceH h = reference_h(1.0, 1.5, 12);
    const TimeGrid g{1.0, 1 << 15};
    for (int K = 1; K < h.K(); ++K) {
        double tail = 0.0;
        for (int i = 0; i < g.size(); ++i) {
            double s = 0.0;
            for (int k = K + 1; k <= h.K(); ++k) s += std::fabs(h.h_k(k, g.t(i)));
            tail = std::max(tail, s);
        }
        CHECK(tail <= std::ldexp(1.0, -K));
    }
}

TEST_CASE("source h validation") {
    auto m = testutil::torus(121);
    Patch p = testutil::quarter(m);
    const auto psi = default_psi(p);
    CHECK_THROWS_AS(build_h(build_bump(), SourceHParams{1.0, 1.0, 4}, psi), InvalidParameter);
    CHECK_THROWS_AS(build_h(build_bump(), SourceHParams{1.0, 1.5, 4}, psi), InvalidParameter);
    CHECK_THROWS_AS(build_h(build_bump(), SourceHParams{1.0, 0.5, 0}, psi), InvalidParameter);
    CHECK_THROWS_AS(build_h(build_bump(), SourceHParams{1.0, 0.5, 4}, {}), InvalidParameter);
    const SourceH h = build_h(build_bump(), SourceHParams{1.0, 0.8, 8}, psi);
    // Term 8 spans 0.8/256 = 0.003125: 16 nodes need dt <= ~1.9e-4.
    CHECK_THROWS_AS(h.validate_resolution(TimeGrid{1.0, 2048}), InvalidParameter);
    CHECK_NOTHROW(h.validate_resolution(TimeGrid{1.0, 8192}));
    CHECK_THROWS_AS(h.validate_resolution(TimeGrid{0.9, 8192}), InvalidParameter);

    const auto src = h.source(p, TimeGrid{1.0, 512});
    CHECK(src.terms().size() == 8);
    CHECK(src.terms()[2].xi == psi[1]);
    CHECK(h.hash() == build_h(build_bump(), SourceHParams{1.0, 0.8, 8}, psi).hash());
}

TEST_CASE("mollifiers") {
    const SourceH h = reference_h();
    for (int k = 1; k <= h.K(); ++k) {
        const auto d = build_mollifier(h, k);
        const auto [lo, hi] = d.support();
        CHECK(lo == doctest::Approx(-h.S() / std::ldexp(1.0, k - 1)));
        CHECK(hi == doctest::Approx(-h.S() / std::ldexp(1.0, k)));
        const double mass = quad([&](double t) { return d(t); }, lo, hi);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
        for (int i = 0; i <= 200; ++i) CHECK(d(lo - 0.1 + (hi - lo + 0.2) * i / 200.0) >= 0.0);
        CHECK(d(lo) == 0.0);
        CHECK(d(hi) == 0.0);
    }
    const auto d3 = build_mollifier(h, 3);
    CHECK(d3.support().first == -0.25);
    CHECK(d3.support().second == -0.125);
    CHECK_THROWS_AS(build_mollifier(h, 9), InvalidParameter);
}

TEST_CASE("Riemann sums converge to the convolution") {
    const SourceH h = reference_h();
    const testutil::Bump bump{1.0, 0.4};
    const ScalarProfile a{bump, [bump](double t) { return bump.dot(t); }, 0.6, 1.4};
    const auto d = build_mollifier(h, 3);

    const ScalarProfile zero{[](double) { return 0.0; }, [](double) { return 0.0; }, 0.6, 1.4};
    const auto bz = build_riemann_sum(zero, d, 64);
    for (int i = 0; i < 100; ++i) CHECK(bz.f(0.5 + 0.01 * i) == 0.0);

    std::vector<double> err, derr;
    for (int m : {16, 32, 64, 128}) {
        const auto b = build_riemann_sum(a, d, m);
        double e = 0.0;
        double de = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double t = 0.2 + 1.4 * i / 400.0;
            e = std::max(e, std::fabs(b.f(t) - conv_oracle(a, d, t)));
            de = std::max(de, std::fabs(b.df(t) - conv_oracle(a, d, t, 1)));
        }
        err.push_back(e);
        derr.push_back(de);
        CHECK(b.lo > 0.0);
    }
    // Coarse m under-resolves d_3 (width 1/8); once m exceeds 1/width the
    // gap at least halves per doubling.
    for (std::size_t i = 1; i < err.size(); ++i) {
        CHECK(err[i] < err[i - 1]);
        CHECK(derr[i] < derr[i - 1]);
    }
    CHECK(err[3] <= 0.5 * err[2]);
    CHECK(derr[3] <= 0.5 * derr[2]);

    // Support violation: a reaching down to 0.1 with k = 1 (support width S).
    const ScalarProfile early{testutil::Bump{0.3, 0.2}, {}, 0.1, 0.5};
    CHECK_THROWS_AS(build_riemann_sum(early, build_mollifier(h, 1), 32), InvalidParameter);
}

TEST_CASE("mollified profiles approach the profile as k grows") {
    const SourceH h = reference_h(1.0, 1.5, 10);
    const testutil::Bump bump{1.0, 0.4};
    const ScalarProfile a{bump, [bump](double t) { return bump.dot(t); }, 0.6, 1.4};
    double prev = 1e300;
    double prevd = 1e300;
    for (int k = 3; k <= 9; k += 2) {
        const auto d = build_mollifier(h, k);
        double e = 0.0;
        double de = 0.0;
        for (int i = 0; i <= 300; ++i) {
            const double t = 0.5 + 1.0 * i / 300.0;
            e = std::max(e, std::fabs(conv_oracle(a, d, t) - a.f(t)));
            de = std::max(de, std::fabs(conv_oracle(a, d, t, 1) - a.df(t)));
        }
        CHECK(e < prev);
        CHECK(de < prevd);
        prev = e;
        prevd = de;
    }
}
