#include "fracspec/wave_bridge.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "fracspec/errors.hpp"

namespace fracspec {

double WaveKernelSet::kernel(double lambda, double t) {
    if (lambda < 0.0) throw InvalidParameter("wave kernel: lambda must be nonnegative");
    if (lambda == 0.0) return t;
    const double w = std::sqrt(lambda);
    return std::sin(w * t) / w;
}

WaveKernelSet wave_kernels(const SpectralData& d) {
    WaveKernelSet k;
    for (const auto& e : d.entries) k.lambda.push_back(e.lambda);
    return k;
}

namespace {

// y_i = dt sum_{j<i} c_j s(t_i - t_j) q_j with c_0 = 1/2 (trapezoid; the j = i
// term vanishes since s(0) = 0), accumulated into out.
void sine_convolve(double lambda, double dt, const double* q, int n, double* out) {
    if (lambda == 0.0) {
        double acc = 0.0;
        double y = 0.0;
        for (int i = 1; i < n; ++i) {
            acc += (i == 1 ? 0.5 : 1.0) * q[i - 1];
            y += dt * dt * acc;
            out[i] += y;
        }
        return;
    }
    const double w = std::sqrt(lambda);
    const std::complex<double> rot = std::polar(1.0, w * dt);
    std::complex<double> c = 0.0;
    for (int i = 1; i < n; ++i) {
        c = rot * (c + (i == 1 ? 0.5 : 1.0) * q[i - 1]);
        out[i] += dt * c.imag() / w;
    }
}

}  // namespace

MeasurementRecord hyp_apply(const SpectralData& d, const SpaceTimeSource& p, Execution exec) {
    if (d.empty()) throw InvalidParameter("hyp_apply: spectral data is empty");
    const Patch& patch = p.patch();
    const int nv = patch.size();
    auto it = d.provenance.find("patch_hash");
    if (it != d.provenance.end() && it->second != patch.hash())
        throw InvalidParameter("hyp_apply: spectral data belongs to another patch");
    for (const auto& e : d.entries)
        if (e.residue.rows() != nv || e.residue.cols() != nv)
            throw InvalidParameter("hyp_apply: residue size does not match the patch");
    p.validate();

    const TimeGrid& g = p.grid();
    const int n = g.size();
    const Eigen::MatrixXd P = p.sample();
    MeasurementRecord rec;
    rec.grid = g;
    rec.values = Eigen::MatrixXd::Zero(n, nv);
    for (const auto& e : d.entries) {
        if (e.lambda < 0.0) throw InvalidParameter("hyp_apply: negative eigenvalue");
        const Eigen::MatrixXd Q = P * e.residue.transpose();
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
        for (int c = 0; c < nv; ++c) sine_convolve(e.lambda, g.dt(), Q.col(c).data(), n, rec.values.col(c).data());
    }
    // alpha = 2 tags second-order-in-time records.
    rec.meta = RecordMeta{2.0, 1.0, patch.manifold().hash(), patch.hash(), p.hash()};
    return rec;
}

double verlet_energy(double w, double v, double lambda, double dt) {
    return 0.5 * (v * v + lambda * (1.0 - 0.25 * lambda * dt * dt) * w * w);
}

WaveModes wave_modes(const SpaceTimeSource& p, Execution exec) {
    p.validate();
    const SpectralManifold& m = p.patch().manifold();
    const TimeGrid& g = p.grid();
    const double dt = g.dt();
    const auto& lam = m.eigenvalues();
    const double lmax = *std::max_element(lam.begin(), lam.end());
    if (dt * std::sqrt(lmax) > 2.0)
        throw InvalidParameter("wave oracle: dt sqrt(lambda_max) = " + std::to_string(dt * std::sqrt(lmax)) +
                               " exceeds 2; refine the time grid");
    const Eigen::MatrixXd b = p.modal();
    const int n = g.size();
    const int nm = m.n_modes();
    WaveModes out{g, Eigen::MatrixXd::Zero(n, nm), Eigen::MatrixXd::Zero(n, nm)};
#pragma omp parallel for schedule(static) if (exec == Execution::Parallel)
    for (int k = 0; k < nm; ++k) {
        double w = 0.0;
        double v = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            const double vh = v + 0.5 * dt * (b(i, k) - lam[k] * w);
            w += dt * vh;
            v = vh + 0.5 * dt * (b(i + 1, k) - lam[k] * w);
            out.w(i + 1, k) = w;
            out.v(i + 1, k) = v;
        }
    }
    return out;
}

MeasurementRecord wave_oracle(const SpaceTimeSource& p, Execution exec) {
    const WaveModes wm = wave_modes(p, exec);
    const Patch& patch = p.patch();
    MeasurementRecord rec;
    rec.grid = p.grid();
    rec.values = wm.w * patch.basis().transpose();
    rec.meta = RecordMeta{2.0, 1.0, patch.manifold().hash(), patch.hash(), p.hash()};
    return rec;
}

HypComparison compare_hyp(const MeasurementRecord& a, const MeasurementRecord& b, const Eigen::VectorXd& weights,
                          int n_windows) {
    if (!(a.grid == b.grid) || a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
        throw InvalidParameter("compare_hyp: records live on different grids");
    if (!a.meta.patch_hash.empty() && !b.meta.patch_hash.empty() && a.meta.patch_hash != b.meta.patch_hash)
        throw InvalidParameter("compare_hyp: records live on different patches");
    if (weights.size() != 0 && weights.size() != a.values.cols())
        throw InvalidParameter("compare_hyp: weight vector does not match the V-grid");
    if (n_windows < 1) throw InvalidParameter("compare_hyp: need at least one window");

    const int n = a.n_nodes();
    const double T = a.grid.t(n - 1);
    std::vector<double> da(n_windows, 0.0), na(n_windows, 0.0), nb(n_windows, 0.0);
    for (int i = 0; i < n; ++i) {
        const double c = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        const auto ra = a.values.row(i).array();
        const auto rb = b.values.row(i).array();
        double sd, sa, sb;
        if (weights.size() == 0) {
            sd = (ra - rb).square().sum();
            sa = ra.square().sum();
            sb = rb.square().sum();
        } else {
            const auto w = weights.transpose().array();
            sd = (w * (ra - rb).square()).sum();
            sa = (w * ra.square()).sum();
            sb = (w * rb.square()).sum();
        }
        const int win = T > 0.0 ? std::min(n_windows - 1, static_cast<int>(a.grid.t(i) / T * n_windows)) : 0;
        da[win] += c * sd;
        na[win] += c * sa;
        nb[win] += c * sb;
    }
    auto rel = [](double d, double x, double y) {
        const double s = std::max(x, y);
        return s > 0.0 ? std::sqrt(d / s) : 0.0;
    };
    HypComparison out;
    double td = 0.0, ta = 0.0, tb = 0.0;
    for (int k = 0; k < n_windows; ++k) {
        out.window_edges.push_back(T * k / n_windows);
        out.window_relative.push_back(rel(da[k], na[k], nb[k]));
        td += da[k];
        ta += na[k];
        tb += nb[k];
    }
    out.window_edges.push_back(T);
    out.l2_relative = rel(td, ta, tb);
    return out;
}

}  // namespace fracspec
