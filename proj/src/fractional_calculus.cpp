#include "fracspec/fractional_calculus.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "fracspec/special_kernels.hpp"

namespace fracspec {

namespace {

struct Rule {
    std::vector<double> x;  // on [0, 1]
    std::vector<double> w;
};

template <int N>
Rule make_rule() {
    using G = boost::math::quadrature::gauss<double, N>;
    Rule r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) {
            r.x.push_back(0.5);
            r.w.push_back(0.5 * w[i]);
            continue;
        }
        r.x.push_back(0.5 - 0.5 * a[i]);
        r.w.push_back(0.5 * w[i]);
        r.x.push_back(0.5 + 0.5 * a[i]);
        r.w.push_back(0.5 * w[i]);
    }
    return r;
}

const Rule& rule_for(int m) {
    static const Rule r12 = make_rule<12>();
    static const Rule r8 = make_rule<8>();
    static const Rule r6 = make_rule<6>();
    if (m <= 3) return r12;
    if (m <= 15) return r8;
    return r6;
}

// Monomial coefficients of the Lagrange basis on the given nodes:
// L_s(theta) = sum_q c[s][q] theta^q.
template <std::size_t N>
std::array<std::array<double, N>, N> lagrange_coefficients(const std::array<double, N>& nodes) {
    std::array<std::array<double, N>, N> c{};
    for (std::size_t s = 0; s < N; ++s) {
        std::array<double, N> poly{};
        poly[0] = 1.0;
        double denom = 1.0;
        std::size_t deg = 0;
        for (std::size_t r = 0; r < N; ++r) {
            if (r == s) continue;
            for (std::size_t q = deg + 2; q-- > 0;) {
                const double lower = q > 0 ? poly[q - 1] : 0.0;
                poly[q] = lower - nodes[r] * poly[q];
            }
            ++deg;
            denom *= nodes[s] - nodes[r];
        }
        for (std::size_t q = 0; q < N; ++q) c[s][q] = poly[q] / denom;
    }
    return c;
}

template <std::size_t N>
std::array<double, N> cell_weights(const std::array<double, N>& nodes, const std::array<double, 4>& mom) {
    const auto c = lagrange_coefficients(nodes);
    std::array<double, N> w{};
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t q = 0; q < N; ++q) w[s] += c[s][q] * mom[q];
    return w;
}

}  // namespace

void validate(const TimeGrid& g) {
    if (!(g.t_max > 0.0) || !std::isfinite(g.t_max)) throw InvalidParameter("time grid: t_max must be positive");
    if (g.n_steps < 2) throw InvalidParameter("time grid: n_steps must be >= 2");
}

ScalarSignal ScalarSignal::sample(const TimeGrid& g, const std::function<double(double)>& f) {
    ScalarSignal s{g, std::vector<double>(g.size())};
    for (int i = 0; i < g.size(); ++i) s.values[i] = f(g.t(i));
    return s;
}

namespace {

void check_signal(const ScalarSignal& y, double alpha) {
    validate(y.grid);
    if (static_cast<int>(y.values.size()) != y.grid.size()) throw InvalidParameter("signal length does not match grid");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParameter("derivative order must lie in (0, 1]");
}

}  // namespace

ScalarSignal caputo_l1(const ScalarSignal& y, double alpha) {
    check_signal(y, alpha);
    const int n = y.grid.n_steps;
    const double dt = y.grid.dt();
    const auto& v = y.values;
    ScalarSignal out{y.grid, std::vector<double>(n + 1, 0.0)};
    if (alpha == 1.0) {
        out.values[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * dt);
        for (int i = 1; i < n; ++i) out.values[i] = (v[i + 1] - v[i - 1]) / (2 * dt);
        out.values[n] = (3 * v[n] - 4 * v[n - 1] + v[n - 2]) / (2 * dt);
        return out;
    }
    std::vector<double> a(n);
    for (int k = 0; k < n; ++k) a[k] = std::pow(k + 1.0, 1.0 - alpha) - std::pow(static_cast<double>(k), 1.0 - alpha);
    const double scale = std::pow(dt, -alpha) / gamma(2.0 - alpha);
    for (int i = 1; i <= n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < i; ++j) acc += a[i - j - 1] * (v[j + 1] - v[j]);
        out.values[i] = scale * acc;
    }
    return out;
}

ScalarSignal rl_derivative(const ScalarSignal& y, double alpha) {
    check_signal(y, alpha);
    const double y0 = y.values[0];
    if (y0 == 0.0) return caputo_l1(y, alpha);
    ScalarSignal shifted = y;
    for (double& x : shifted.values) x -= y0;
    ScalarSignal out = caputo_l1(shifted, alpha);
    if (alpha == 1.0) return out;
    const double c = y0 * reciprocal_gamma(1.0 - alpha);
    out.values[0] = std::nan("");
    for (int i = 1; i < y.grid.size(); ++i) out.values[i] += c * std::pow(y.grid.t(i), -alpha);
    return out;
}

ConvolutionKernel::ConvolutionKernel(double alpha, double lam, const TimeGrid& grid)
    : alpha_(alpha), lam_(lam), grid_(grid) {
    validate(grid);
    const KernelParams kp{alpha, 1.0, lam};
    validate(kp);
    const int n = grid.n_steps;
    const double dt = grid.dt();
    moments_.assign(n + 1, {0.0, 0.0, 0.0, 0.0});
    for (int q = 0; q < 4; ++q) moments_[1][q] = kernel_moment(kp, dt, q) / std::pow(dt, q);
    for (int m = 2; m <= n; ++m) {
        const Rule& r = rule_for(m);
        auto& mo = moments_[m];
        for (std::size_t k = 0; k < r.x.size(); ++k) {
            const double th = r.x[k];
            const double f = r.w[k] * dt * kernel_F(kp, (m - th) * dt);
            mo[0] += f;
            mo[1] += f * th;
            mo[2] += f * th * th;
            mo[3] += f * th * th * th;
        }
    }
    centered_.assign(n + 1, {});
    forward_.assign(n + 1, {});
    for (int m = 2; m <= n; ++m) {
        centered_[m] = cell_weights<4>({-1.0, 0.0, 1.0, 2.0}, moments_[m]);
        forward_[m] = cell_weights<4>({0.0, 1.0, 2.0, 3.0}, moments_[m]);
    }
    backward_ = cell_weights<4>({-2.0, -1.0, 0.0, 1.0}, moments_[1]);
    row1_ = cell_weights<2>({0.0, 1.0}, moments_[1]);
    const auto c0 = cell_weights<3>({0.0, 1.0, 2.0}, moments_[2]);
    const auto c1 = cell_weights<3>({-1.0, 0.0, 1.0}, moments_[1]);
    for (int s = 0; s < 3; ++s) row2_[s] = c0[s] + c1[s];
}

void ConvolutionKernel::apply(const double* b, double* out) const {
    const int n = grid_.n_steps;
    out[0] = 0.0;
    out[1] = row1_[0] * b[0] + row1_[1] * b[1];
    out[2] = row2_[0] * b[0] + row2_[1] * b[1] + row2_[2] * b[2];
    for (int i = 3; i <= n; ++i) {
        const auto& f = forward_[i];
        double acc = f[0] * b[0] + f[1] * b[1] + f[2] * b[2] + f[3] * b[3];
        for (int j = 1; j <= i - 2; ++j) {
            const auto& w = centered_[i - j];
            acc += w[0] * b[j - 1] + w[1] * b[j] + w[2] * b[j + 1] + w[3] * b[j + 2];
        }
        const int j = i - 1;
        acc += backward_[0] * b[j - 2] + backward_[1] * b[j - 1] + backward_[2] * b[j] + backward_[3] * b[j + 1];
        out[i] = acc;
    }
}

std::vector<double> ConvolutionKernel::apply(const std::vector<double>& b) const {
    if (static_cast<int>(b.size()) != grid_.size()) throw InvalidParameter("convolution: input length does not match grid");
    std::vector<double> out(b.size());
    apply(b.data(), out.data());
    return out;
}

ScalarSignal solve_scalar_fde(double alpha, double lam, const ScalarSignal& b) {
    check_signal(b, alpha);
    if (!(lam >= 0.0)) throw InvalidParameter("solve_scalar_fde: lam must be nonnegative");
    if (b.values[0] != 0.0) throw InvalidParameter("solve_scalar_fde: source must vanish at t = 0");
    ConvolutionKernel k(alpha, lam, b.grid);
    return ScalarSignal{b.grid, k.apply(b.values)};
}

}  // namespace fracspec
