#pragma once

#include "fracspec/errors.hpp"

#include <optional>

namespace fracspec {

/// Parameters of the two-parameter Mittag-Leffler function E_{a,b}.
struct MLParams {
    double a = 1.0;
    double b = 1.0;
};

/// Fractional orders plus the decay rate used by the diffusion kernels.
///
/// `lambda` is the coefficient that multiplies t^alpha inside the kernels.
/// Callers working with a Laplace eigenvalue pass lambda_k^beta here.
struct KernelParams {
    double alpha = 1.0;
    double beta = 1.0;
    double lambda = 0.0;
};

/// Largest |z| accepted by mittag_leffler.
inline constexpr double kMLZMax = 1e8;

/// Gamma function for x > 0. Throws OverflowError past the double range
/// (x > 171.62) and InvalidParameter for x <= 0.
double gamma(double x);

/// 1/Gamma(x) for every real x, exactly zero at the poles 0, -1, -2, ...
double reciprocal_gamma(double x);

/// E_{a,b}(z) = sum_k z^k / Gamma(a k + b) for real z with |z| <= kMLZMax.
///
/// Supported: 0 < a <= 1 on the whole real range, 1 < a <= 2 for
/// |z|^{1/a} <= 10 (series only). b > 0.
double mittag_leffler(MLParams p, double z);

/// Evaluation routes of mittag_leffler, exposed for cross-branch checks.
enum class MLBranch { Taylor, Asymptotic, Integral };

/// Evaluates E_{a,b}(z), z < 0, 0 < a < 1, by one fixed route. Returns
/// nullopt when the asymptotic series does not reach double resolution.
std::optional<double> mittag_leffler_via(MLParams p, double z, MLBranch branch);

/// F(t) = t^{alpha-1} E_{alpha,alpha}(-lambda t^alpha), t > 0.
double kernel_F(const KernelParams& k, double t);

/// G(t) = E_{alpha,1}(-lambda t^alpha), t >= 0. Satisfies G' = -lambda F.
double kernel_primitive(const KernelParams& k, double t);

/// Laplace transform of kernel_F: 1/(s^alpha + lambda), s > 0.
double laplace_kernel_closed(const KernelParams& k, double s);

/// int_0^h F(x) (h - x)^q dx = q! h^{alpha+q} E_{alpha,alpha+q+1}(-lambda h^alpha).
double kernel_moment(const KernelParams& k, double h, int q);

void validate(const KernelParams& k);

}  // namespace fracspec
