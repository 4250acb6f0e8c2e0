#include "fracspec/special_kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

namespace fracspec {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGammaMaxArg = 171.62437695630272;

// Lanczos approximation, g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

double lanczos_gamma(double x) {
    // x >= 0.5
    const double xm = x - 1.0;
    double acc = kLanczosCoef[0];
    for (std::size_t i = 1; i < kLanczosCoef.size(); ++i) acc += kLanczosCoef[i] / (xm + static_cast<double>(i));
    const double t = xm + kLanczosG + 0.5;
    const double half = std::pow(t, 0.5 * (xm + 0.5));
    return std::sqrt(2.0 * kPi) * half * std::exp(-t) * half * acc;
}

bool is_nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

double sin_pi(double x) { return boost::math::sin_pi(x); }

struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::fabs(sum) >= std::fabs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

double ml_taylor(double a, double b, double z) {
    NeumaierSum s;
    double zk = 1.0;
    int small_run = 0;
    for (int k = 0; k < 2000; ++k) {
        const double term = zk * reciprocal_gamma(a * k + b);
        s.add(term);
        if (std::fabs(term) <= 1e-18 * std::fabs(s.value()) && k > 2) {
            if (++small_run >= 2) break;
        } else {
            small_run = 0;
        }
        zk *= z;
        if (zk == 0.0) break;
    }
    return s.value();
}

// Positive argument: terms are positive, summed in log space to avoid
// overflow of z^k and underflow of 1/Gamma.
double ml_taylor_positive(double a, double b, double z) {
    const double lz = std::log(z);
    NeumaierSum s;
    double peak = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const double lt = k * lz - boost::math::lgamma(a * k + b);
        const double term = std::exp(lt);
        s.add(term);
        peak = std::max(peak, term);
        if (term < peak && term <= 1e-18 * s.value()) break;
    }
    return s.value();
}

// -sum_{k>=1} z^{-k}/Gamma(b - a k). Returns nullopt unless the term envelope
// falls below double resolution before it starts to grow. The envelope uses
// Gamma(1 + a k - b)/pi in place of |1/Gamma(b - a k)| so that terms landing
// near a pole of Gamma cannot fake convergence.
std::optional<double> ml_asymptotic_negative(double a, double b, double x) {
    if (a < 1.0) {
        // The remainder beyond all orders behaves like exp(-kappa x^{1/a});
        // kappa < 1 once the denominator peak -x cos(pi a) enters the integrand.
        const double kappa = (a > 0.5) ? std::pow(std::fabs(std::cos(kPi * a)), 1.0 / a) : 1.0;
        const double lexp = -kappa * std::pow(x, 1.0 / a) + std::fabs(1.0 - b) / a * std::log(x);
        if (lexp > std::log(1e-18)) return std::nullopt;
    }
    NeumaierSum s;
    double prev = std::numeric_limits<double>::infinity();
    const double lx = std::log(x);
    for (int k = 1; k <= 400; ++k) {
        const double y = b - a * k;
        const double lenv = (y < 0.5) ? boost::math::lgamma(1.0 - y) - std::log(kPi) : -boost::math::lgamma(y);
        const double env = std::exp(lenv - k * lx);
        if (env > prev) return std::nullopt;
        prev = env;
        const double sign = (k % 2 == 0) ? -1.0 : 1.0;  // -(-x)^{-k}
        const double rg = reciprocal_gamma(y);
        if (rg != 0.0) s.add(sign * std::exp(-k * lx) * rg);
        const double cur = std::fabs(s.value());
        if (cur > 0.0 && env <= 1e-17 * cur) return s.value();
    }
    return std::nullopt;
}

boost::math::quadrature::tanh_sinh<double>& ts_integrator() {
    thread_local boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator;
}

// Real-line integral representation of E_{a,c}(-x) for 0 < a < 1 and c < 1 + a.
double ml_integral_negative(double a, double c, double x) {
    const double inv_a = 1.0 / a;
    const double p = (1.0 - c) * inv_a;
    const double sc = sin_pi(c);
    const double sca = sin_pi(c - a);
    const double ca = std::cos(kPi * a);
    auto f = [&](double v, double) -> double {
        if (v <= 0.0) return 0.0;
        const double den = v * v + 2.0 * v * x * ca + x * x;
        return std::exp(-std::pow(v, inv_a)) * std::pow(v, p) * (v * sc + x * sca) / den;
    };
    const double vmax = std::pow(50.0, a);
    std::array<double, 4> cuts{0.0, 0.0, 0.0, vmax};
    int nc = 1;
    const double vpeak = -x * ca;
    if (vpeak > 0.0 && vpeak < vmax) cuts[nc++] = vpeak;
    if (x < vmax && x != vpeak) cuts[nc++] = x;
    cuts[nc++] = vmax;
    std::sort(cuts.begin(), cuts.begin() + nc);
    auto& ts = ts_integrator();
    double total = 0.0;
    for (int i = 0; i + 1 < nc; ++i) {
        if (cuts[i + 1] <= cuts[i]) continue;
        total += ts.integrate(f, cuts[i], cuts[i + 1], 1e-15);
    }
    return total / (a * kPi);
}

double ml_integral_reduced(double a, double b, double x) {
    // Reduce b into (0, 1 + a), then climb with E_{a,c+a} = (E_{a,c} - 1/Gamma(c)) / z.
    int steps = 0;
    double c = b;
    if (c >= 1.0 + a) {
        steps = static_cast<int>(std::floor((c - 1.0) / a));
        c = b - steps * a;
        while (c >= 1.0 + a) {
            c -= a;
            ++steps;
        }
    }
    double e = ml_integral_negative(a, c, x);
    for (int i = 0; i < steps; ++i) {
        e = (e - reciprocal_gamma(c)) / (-x);
        c += a;
    }
    return e;
}

double ml_negative_fractional(double a, double b, double x) {
    if (std::pow(x, 1.0 / a) <= 2.0) return ml_taylor(a, b, -x);
    if (auto v = ml_asymptotic_negative(a, b, x)) return *v;
    return ml_integral_reduced(a, b, x);
}

double ml_negative_unit_order(double b, double x) {
    if (b == 1.0) return std::exp(-x);
    if (x <= 2.0) return ml_taylor(1.0, b, -x);
    if (b > 1.0) {
        // E_{1,b}(-x) = 1/(Gamma(b-1) x) int_0^x e^{-u} (1 - u/x)^{b-2} du
        const double upper = std::min(x, 60.0);
        auto f = [&](double u, double uc) {
            const double rem = (u > 0.5 * upper && upper == x) ? uc / x : 1.0 - u / x;
            return rem > 0.0 ? std::exp(-u) * std::pow(rem, b - 2.0) : 0.0;
        };
        const double val = ts_integrator().integrate(f, 0.0, upper, 1e-15);
        return val * reciprocal_gamma(b - 1.0) / x;
    }
    if (x >= 40.0) {
        if (auto v = ml_asymptotic_negative(1.0, b, x)) return *v;
    }
    return reciprocal_gamma(b) - x * ml_negative_unit_order(b + 1.0, x);
}

}  // namespace

double gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidParameter("gamma: argument must be positive and finite");
    if (x > kGammaMaxArg) throw OverflowError("gamma: result exceeds double range for x > 171.624");
    if (x < 0.5) return kPi / (sin_pi(x) * lanczos_gamma(1.0 - x));
    return lanczos_gamma(x);
}

double reciprocal_gamma(double x) {
    if (std::isnan(x)) return x;
    if (is_nonpositive_integer(x)) return 0.0;
    if (x >= 0.5) {
        if (x > kGammaMaxArg) return std::exp(-boost::math::lgamma(x));
        return 1.0 / lanczos_gamma(x);
    }
    const double s = sin_pi(x);
    if (s == 0.0) return 0.0;
    const double g = (1.0 - x > kGammaMaxArg) ? std::numeric_limits<double>::infinity() : lanczos_gamma(1.0 - x);
    return s * g / kPi;
}

double mittag_leffler(MLParams p, double z) {
    const double a = p.a;
    const double b = p.b;
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw InvalidParameter("mittag_leffler: requires a > 0 and b > 0");
    if (!std::isfinite(z) || std::fabs(z) > kMLZMax)
        throw DomainError("mittag_leffler: |z| exceeds supported range 1e8");
    if (z == 0.0) return reciprocal_gamma(b);
    if (a == 1.0 && b == 1.0) return std::exp(z);

    if (a > 1.0) {
        if (a > 2.0 || std::pow(std::fabs(z), 1.0 / a) > 10.0)
            throw DomainError("mittag_leffler: a > 1 supported only for |z|^{1/a} <= 10 and a <= 2");
        return ml_taylor(a, b, z);
    }

    if (z > 0.0) {
        const double r = std::pow(z, 1.0 / a);
        if (r <= 50.0) return ml_taylor_positive(a, b, z);
        const double lv = std::log(1.0 / a) + (1.0 - b) / a * std::log(z) + r;
        return lv > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(lv);
    }

    const double x = -z;
    if (a == 1.0) return ml_negative_unit_order(b, x);
    return ml_negative_fractional(a, b, x);
}

std::optional<double> mittag_leffler_via(MLParams p, double z, MLBranch branch) {
    if (!(p.a > 0.0 && p.a < 1.0) || !(p.b > 0.0) || !(z < 0.0))
        throw InvalidParameter("mittag_leffler_via: needs 0 < a < 1, b > 0, z < 0");
    switch (branch) {
        case MLBranch::Taylor: return ml_taylor(p.a, p.b, z);
        case MLBranch::Asymptotic: return ml_asymptotic_negative(p.a, p.b, -z);
        case MLBranch::Integral: return ml_integral_reduced(p.a, p.b, -z);
    }
    return std::nullopt;
}

void validate(const KernelParams& k) {
    if (!(k.alpha > 0.0 && k.alpha <= 1.0)) throw InvalidParameter("alpha must lie in (0, 1]");
    if (!(k.beta > 0.0 && k.beta <= 1.0)) throw InvalidParameter("beta must lie in (0, 1]");
    if (!(k.lambda >= 0.0) || !std::isfinite(k.lambda)) throw InvalidParameter("lambda must be finite and >= 0");
}

double kernel_F(const KernelParams& k, double t) {
    validate(k);
    if (!(t > 0.0)) throw DomainError("kernel_F: t must be positive");
    if (k.alpha == 1.0) return std::exp(-k.lambda * t);
    if (k.lambda == 0.0) return std::pow(t, k.alpha - 1.0) * reciprocal_gamma(k.alpha);
    const double ta = std::pow(t, k.alpha);
    return ta / t * mittag_leffler({k.alpha, k.alpha}, -k.lambda * ta);
}

double kernel_primitive(const KernelParams& k, double t) {
    validate(k);
    if (!(t >= 0.0)) throw DomainError("kernel_primitive: t must be nonnegative");
    if (t == 0.0 || k.lambda == 0.0) return 1.0;
    return mittag_leffler({k.alpha, 1.0}, -k.lambda * std::pow(t, k.alpha));
}

double laplace_kernel_closed(const KernelParams& k, double s) {
    validate(k);
    if (!(s > 0.0)) throw DomainError("laplace_kernel_closed: s must be positive");
    return 1.0 / (std::pow(s, k.alpha) + k.lambda);
}

double kernel_moment(const KernelParams& k, double h, int q) {
    validate(k);
    if (!(h > 0.0) || q < 0) throw InvalidParameter("kernel_moment: need h > 0, q >= 0");
    double fact = 1.0;
    for (int i = 2; i <= q; ++i) fact *= i;
    const double ha = std::pow(h, k.alpha);
    const double e = (k.lambda == 0.0) ? reciprocal_gamma(k.alpha + q + 1.0)
                                       : mittag_leffler({k.alpha, k.alpha + q + 1.0}, -k.lambda * ha);
    return fact * ha * std::pow(h, q) * e;
}

}  // namespace fracspec
