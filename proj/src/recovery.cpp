#include "fracspec/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fracspec/errors.hpp"

namespace fracspec {

ProbeProfile bump_probe(double lo, double hi, double amp) {
    if (!(hi > lo)) throw InvalidParameter("bump_probe: empty support");
    if (!(amp > 0.0)) throw InvalidParameter("bump_probe: amplitude must be positive");
    const double c = 0.5 * (lo + hi);
    const double w = 0.5 * (hi - lo);
    ProbeProfile p;
    p.lo = lo;
    p.hi = hi;
    p.a = [=](double t) {
        const double u = (t - c) / w;
        if (std::fabs(u) >= 1.0) return 0.0;
        return amp * std::exp(-1.0 / (1.0 - u * u));
    };
    p.a_dot = [=](double t) {
        const double u = (t - c) / w;
        if (std::fabs(u) >= 1.0) return 0.0;
        const double q = 1.0 - u * u;
        return amp * std::exp(-1.0 / q) * (-2.0 * u / (q * q)) / w;
    };
    return p;
}

SolverAccess::SolverAccess(Patch p, double alpha, double beta, Execution exec)
    : patch_(std::move(p)), alpha_(alpha), beta_(beta), exec_(exec) {}

const ForwardSolver& SolverAccess::solver(const TimeGrid& g) const {
    const auto key = std::make_pair(g.t_max, g.n_steps);
    auto it = cache_.find(key);
    if (it == cache_.end())
        it = cache_.emplace(key, std::make_shared<ForwardSolver>(patch_.manifold_ptr(), alpha_, beta_, g, exec_)).first;
    return *it->second;
}

MeasurementRecord SolverAccess::record(const SpaceTimeSource& f) const {
    if (f.patch().hash() != patch_.hash()) throw InvalidParameter("forward access: source lives on a different patch");
    return lss_apply(solver(f.grid()).solve(f), patch_);
}

std::vector<MeasurementRecord> SolverAccess::records(const TimeGrid& g, const ProbeProfile& a,
                                                     const std::vector<Eigen::VectorXd>& xis) const {
    const ForwardSolver& fs = solver(g);
    const SpectrumGroups& gr = fs.groups();
    const int ng = gr.size();
    std::vector<double> samples(g.size());
    for (int i = 0; i < g.size(); ++i) samples[i] = a.a(g.t(i));
    if (samples.front() != 0.0 || samples.back() != 0.0)
        throw InvalidParameter("forward access: probe profile must vanish at the first and last nodes");

    Eigen::MatrixXd Y(g.size(), ng);
#pragma omp parallel for schedule(dynamic) if (exec_ == Execution::Parallel)
    for (int k = 0; k < ng; ++k) {
        const auto y = fs.group_response(k, samples);
        Y.col(k) = Eigen::Map<const Eigen::VectorXd>(y.data(), g.size());
    }
    const Eigen::MatrixXd& B = patch_.basis();
    const Eigen::VectorXd& w = patch_.weights();
    std::vector<MeasurementRecord> out;
    out.reserve(xis.size());
    for (const auto& xi : xis) {
        if (xi.size() != patch_.size()) throw InvalidParameter("forward access: probe does not match the patch");
        const Eigen::VectorXd c = B.transpose() * (xi.array() * w.array()).matrix();
        Eigen::MatrixXd Vg(ng, patch_.size());
        for (int k = 0; k < ng; ++k)
            Vg.row(k) = (B.middleCols(gr.first[k], gr.count[k]) * c.segment(gr.first[k], gr.count[k])).transpose();
        MeasurementRecord rec;
        rec.grid = g;
        rec.values = Y * Vg;
        SpaceTimeSource src(patch_, g);
        src.add_term({a.a, a.a_dot, xi});
        rec.meta = RecordMeta{alpha_, beta_, patch_.manifold().hash(), patch_.hash(), src.hash()};
        out.push_back(std::move(rec));
    }
    return out;
}

ProbePlan plan_probes(double alpha, const AbscissaPolicy& policy) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParameter("plan_probes: alpha must lie in (0, 1]");
    if (!(policy.z_lo > 0.0) || !(policy.z_hi > policy.z_lo)) throw InvalidParameter("plan_probes: need 0 < z_lo < z_hi");
    if (policy.count < 2) throw InvalidParameter("plan_probes: need at least two abscissae");
    ProbePlan plan;
    plan.alpha = alpha;
    const double s_lo = std::pow(policy.z_lo, 1.0 / alpha);
    const double s_hi = std::pow(policy.z_hi, 1.0 / alpha);
    if (!(policy.step_fraction > 0.0) || policy.probe_nodes < 16 || policy.probe_nodes * 2 > policy.n_steps)
        throw InvalidParameter("plan_probes: need step_fraction > 0 and 16 <= probe_nodes <= n_steps / 2");
    const double rho = policy.step_fraction * policy.n_steps / 30.0;
    if (!(rho > 1.5)) throw InvalidParameter("plan_probes: n_steps too small for the step fraction");
    const int nb = std::max(1, static_cast<int>(std::ceil(std::log(s_hi / s_lo) / std::log(rho) - 1e-12)));
    plan.bands.resize(nb);
    for (int b = 0; b < nb; ++b) {
        const double top = s_lo * std::pow(rho, b + 1);
        const double dt = policy.step_fraction / top;
        plan.bands[b].grid = TimeGrid{dt * policy.n_steps, policy.n_steps};
        plan.bands[b].a = bump_probe(0.0, policy.probe_nodes * dt);
    }
    const double lz0 = std::log(policy.z_lo), lz1 = std::log(policy.z_hi);
    for (int j = 0; j < policy.count; ++j) {
        const double z = std::exp(lz0 + (lz1 - lz0) * j / (policy.count - 1));
        const double s = std::pow(z, 1.0 / alpha);
        plan.z.push_back(z);
        plan.s.push_back(s);
        int b = static_cast<int>(std::floor(std::log(s / s_lo) / std::log(rho)));
        b = std::clamp(b, 0, nb - 1);
        plan.bands[b].members.push_back(j);
    }
    std::erase_if(plan.bands, [](const ProbeBand& b) { return b.members.empty(); });
    return plan;
}

std::vector<HvProbeResult> probe_hv(const ForwardAccess& access, const std::vector<Eigen::VectorXd>& xis,
                                    const ProbeProfile& a, const TimeGrid& g, const std::vector<double>& s,
                                    const LaplaceOptions& opt) {
    if (xis.empty()) throw InvalidParameter("probe_hv: no probes");
    const Patch& p = access.patch();
    const double mass = laplace_of_profile(a.a, a.lo, a.hi, 0.0);
    if (!(mass > 0.0)) throw InvalidParameter("probe_hv: probe profile must be nonnegative and nonzero");
    std::vector<double> la(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        la[j] = laplace_of_profile(a.a, a.lo, a.hi, s[j]);
        if (!(la[j] >= kProbeFloor * mass))
            throw InvalidParameter("probe_hv: probe degeneracy, La(s) below the floor at s = " + std::to_string(s[j]));
    }
    for (const auto& xi : xis)
        if (xi.size() != p.size() || xi.norm() == 0.0) throw InvalidParameter("probe_hv: probes must be nonzero V-grid functions");
    const auto recs = access.records(g, a, xis);
    LaplaceOptions o = opt;
    o.alpha = access.alpha();
    const LaplaceSampler sampler(s, o);
    std::vector<HvProbeResult> out(xis.size());
    for (std::size_t i = 0; i < xis.size(); ++i) {
        HvProbeResult& r = out[i];
        r.xi = xis[i];
        r.s = s;
        r.la = la;
        for (double sj : s) r.z.push_back(std::pow(sj, access.alpha()));
        r.hv = sampler.transform(recs[i]);
        r.worst_tail = sampler.worst_tail_ratio();
        for (std::size_t j = 0; j < s.size(); ++j) r.hv.col(j) /= la[j];
        r.trace = r.hv.transpose() * (xis[i].array() * p.weights().array()).matrix();
    }
    return out;
}

std::vector<HvProbeResult> probe_hv(const ForwardAccess& access, const std::vector<Eigen::VectorXd>& xis,
                                    const ProbePlan& plan, LaplaceOptions opt) {
    if (std::fabs(plan.alpha - access.alpha()) > 1e-15) throw InvalidParameter("probe_hv: plan built for another alpha");
    const int m = static_cast<int>(plan.s.size());
    std::vector<HvProbeResult> out(xis.size());
    const int nv = access.patch().size();
    for (std::size_t i = 0; i < xis.size(); ++i) {
        out[i].xi = xis[i];
        out[i].s = plan.s;
        out[i].z = plan.z;
        out[i].hv.resize(nv, m);
        out[i].trace.resize(m);
        out[i].la.resize(m);
    }
    for (const auto& band : plan.bands) {
        std::vector<double> s;
        for (int j : band.members) s.push_back(plan.s[j]);
        const auto part = probe_hv(access, xis, band.a, band.grid, s, opt);
        for (std::size_t i = 0; i < xis.size(); ++i) {
            for (std::size_t q = 0; q < band.members.size(); ++q) {
                const int j = band.members[q];
                out[i].hv.col(j) = part[i].hv.col(q);
                out[i].trace(j) = part[i].trace(q);
                out[i].la[j] = part[i].la[q];
            }
            out[i].worst_tail = std::max(out[i].worst_tail, part[i].worst_tail);
        }
    }
    return out;
}

double single_pole(double z1, double g1, double z2, double g2) {
    if (z1 == z2 || g1 == g2) throw IllConditioned("single_pole: samples do not determine a pole");
    // g1 (z1 + p) = g2 (z2 + p)
    return (g2 * z2 - g1 * z1) / (g1 - g2);
}

Eigen::MatrixXd partial_fraction_residues(const std::vector<double>& z, const std::vector<double>& poles,
                                          const Eigen::MatrixXd& y, double condition_limit, double* condition) {
    const int m = static_cast<int>(z.size());
    const int k = static_cast<int>(poles.size());
    if (y.rows() != m) throw InvalidParameter("partial fractions: sample count mismatch");
    if (k == 0) return Eigen::MatrixXd(0, y.cols());
    if (k > m) throw IllConditioned("partial fractions: more poles than samples");
    Eigen::MatrixXd C(m, k);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) C(i, j) = 1.0 / (z[i] + poles[j]);
    const Eigen::VectorXd scale = C.colwise().norm().transpose();
    C = C * scale.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(k - 1) > 0.0 ? sv(0) / sv(k - 1) : std::numeric_limits<double>::infinity();
    if (condition) *condition = cond;
    if (!(cond <= condition_limit))
        throw IllConditioned("partial fractions: condition number " + std::to_string(cond) +
                             " exceeds the limit; increase abscissa spread or reduce k_max");
    return scale.cwiseInverse().asDiagonal() * svd.solve(y);
}

namespace {

struct AaaResult {
    std::vector<std::complex<double>> poles;
    int support = 0;
};

AaaResult aaa(const std::vector<double>& Z, const Eigen::MatrixXd& F, int mmax, double tol) {
    const int M = static_cast<int>(Z.size());
    const int nf = static_cast<int>(F.cols());
    // Per-column scale floored at 1e-4 of the largest: a trace far below the
    // others is mostly cancellation and must not get equal weight.
    const double top = std::max(F.cwiseAbs().maxCoeff(), 1e-300);
    const Eigen::VectorXd scale = F.cwiseAbs().colwise().maxCoeff().transpose().cwiseMax(1e-4 * top);
    std::vector<int> sup;
    std::vector<char> in(M, 0);
    Eigen::MatrixXd R = F.colwise().mean().replicate(M, 1);
    Eigen::VectorXd wt;
    for (int it = 0; it < mmax; ++it) {
        int jbest = -1;
        double ebest = -1.0;
        for (int i = 0; i < M; ++i) {
            if (in[i]) continue;
            const double e = ((F.row(i) - R.row(i)).cwiseAbs().array() / scale.transpose().array()).maxCoeff();
            if (e > ebest) {
                ebest = e;
                jbest = i;
            }
        }
        if (jbest < 0) break;
        sup.push_back(jbest);
        in[jbest] = 1;
        std::vector<int> J;
        for (int i = 0; i < M; ++i)
            if (!in[i]) J.push_back(i);
        const int m = static_cast<int>(sup.size());
        const int nj = static_cast<int>(J.size());
        if (nj == 0) break;
        Eigen::MatrixXd C(nj, m);
        for (int i = 0; i < nj; ++i)
            for (int s = 0; s < m; ++s) C(i, s) = 1.0 / (Z[J[i]] - Z[sup[s]]);
        Eigen::MatrixXd A(nj * nf, m);
        for (int k = 0; k < nf; ++k)
            for (int i = 0; i < nj; ++i)
                for (int s = 0; s < m; ++s) A(k * nj + i, s) = (F(J[i], k) - F(sup[s], k)) * C(i, s) / scale(k);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinV);
        wt = svd.matrixV().col(m - 1);
        R = F;
        Eigen::MatrixXd fs(m, nf);
        for (int s = 0; s < m; ++s) fs.row(s) = F.row(sup[s]);
        const Eigen::VectorXd den = C * wt;
        const Eigen::MatrixXd num = C * (wt.asDiagonal() * fs);
        double err = 0.0;
        for (int i = 0; i < nj; ++i) {
            R.row(J[i]) = num.row(i) / den(i);
            err = std::max(err, ((F.row(J[i]) - R.row(J[i])).cwiseAbs().array() / scale.transpose().array()).maxCoeff());
        }
        if (err < tol) break;
    }
    AaaResult out;
    const int m = static_cast<int>(sup.size());
    out.support = m;
    if (m < 2) return out;
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(m + 1, m + 1);
    B(0, 0) = 0.0;
    for (int s = 0; s < m; ++s) {
        E(0, s + 1) = wt(s);
        E(s + 1, 0) = 1.0;
        E(s + 1, s + 1) = Z[sup[s]];
    }
    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges(E, B);
    const auto al = ges.alphas();
    const auto be = ges.betas();
    for (int i = 0; i < al.size(); ++i) {
        if (std::fabs(be(i)) <= 1e-13 * std::abs(al(i)) || be(i) == 0.0) continue;
        out.poles.push_back(al(i) / be(i));
    }
    return out;
}

double relative_misfit(const std::vector<double>& z, const std::vector<double>& poles, const Eigen::MatrixXd& y) {
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    if (poles.empty()) return 1.0;
    Eigen::MatrixXd C(z.size(), poles.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = 0; j < poles.size(); ++j) C(i, j) = 1.0 / (z[i] + poles[j]);
    const Eigen::MatrixXd coef = C.colPivHouseholderQr().solve(y);
    return (C * coef - y).norm() / ny;
}


}  // namespace

PoleFit fit_poles(const std::vector<double>& z, const Eigen::MatrixXd& traces, int k_max, const PoleFitOptions& opt) {
    const int M = static_cast<int>(z.size());
    if (k_max < 1) throw InvalidParameter("fit_poles: k_max must be >= 1");
    if (traces.rows() != M || traces.cols() < 1) throw InvalidParameter("fit_poles: traces must have one row per sample");
    for (double v : z)
        if (!(v > 0.0)) throw InvalidParameter("fit_poles: samples must have z > 0");
    PoleFit fit;
    if (traces.cwiseAbs().maxCoeff() == 0.0) return fit;

    std::vector<double> poles;
    if (k_max == 1) {
        if (M < 2) throw InvalidParameter("fit_poles: need at least two samples");
        int col = 0;
        traces.cwiseAbs().colwise().maxCoeff().maxCoeff(&col);
        poles.push_back(std::max(0.0, single_pole(z.front(), traces(0, col), z.back(), traces(M - 1, col))));
        fit.support_points = 2;
    } else {
        if (M < 2 * k_max + 2) throw InvalidParameter("fit_poles: need at least 2 k_max + 2 samples");
        const AaaResult r = aaa(z, traces, k_max + 1, opt.aaa_tol);
        fit.support_points = r.support;
        for (const auto& p : r.poles) {
            const double mag = std::max(1.0, std::abs(p));
            if (std::fabs(p.imag()) > opt.imag_tol * mag) continue;
            if (p.real() > opt.imag_tol * mag) continue;
            poles.push_back(std::max(0.0, -p.real()));
        }
        std::sort(poles.begin(), poles.end());
        poles.erase(std::unique(poles.begin(), poles.end(),
                                [](double a, double b) { return std::fabs(a - b) <= 1e-12 * (1.0 + std::fabs(b)); }),
                    poles.end());
    }
    // Drop the weakest offending pole until every residue passes.
    Eigen::MatrixXd coef;
    while (!poles.empty()) {
        coef = partial_fraction_residues(z, poles, traces, std::numeric_limits<double>::infinity());
        const Eigen::VectorXd rmax = coef.rowwise().maxCoeff();
        const Eigen::VectorXd rsum = coef.rowwise().sum();
        const double ref = std::max(rmax.maxCoeff(), 0.0);
        int worst = -1;
        double wscore = std::numeric_limits<double>::infinity();
        for (int k = 0; k < static_cast<int>(poles.size()); ++k) {
            const bool bad = rmax(k) <= opt.residue_floor * ref || rsum(k) < 0.0;
            if (bad && rsum(k) < wscore) {
                wscore = rsum(k);
                worst = k;
            }
        }
        if (worst < 0) break;
        poles.erase(poles.begin() + worst);
    }
    if (poles.empty()) return fit;
    coef = partial_fraction_residues(z, poles, traces, opt.condition_limit, &fit.condition);
    fit.misfit = relative_misfit(z, poles, traces);
    for (std::size_t k = 0; k < poles.size(); ++k) {
        PoleEstimate e;
        e.value = poles[k];
        e.residue = coef.row(k).maxCoeff();
        std::vector<double> rest = poles;
        rest.erase(rest.begin() + k);
        e.misfit = relative_misfit(z, rest, traces);
        fit.poles.push_back(e);
    }
    return fit;
}

SpectralData extract_projections(const std::vector<HvProbeResult>& probes, const Patch& patch,
                                 const PoleFit& poles, double beta, const ExtractOptions& opt) {
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidParameter("extract_projections: beta must lie in (0, 1]");
    const Eigen::VectorXd& weights = patch.weights();
    SpectralData d;
    d.beta = beta;
    d.weights = weights;
    if (probes.empty()) throw InvalidParameter("extract_projections: no probes");
    const int nv = static_cast<int>(weights.size());
    const int np = static_cast<int>(probes.size());
    const auto& z = probes.front().z;
    d.z = z;
    const int m = static_cast<int>(z.size());
    Eigen::MatrixXd Xi(nv, np);
    Eigen::MatrixXd Y(m, static_cast<Eigen::Index>(nv) * np);
    for (int j = 0; j < np; ++j) {
        if (probes[j].xi.size() != nv || probes[j].z != z)
            throw InvalidParameter("extract_projections: probes disagree on grid or abscissae");
        Xi.col(j) = probes[j].xi;
        Y.middleCols(static_cast<Eigen::Index>(j) * nv, nv) = probes[j].hv.transpose();
    }
    const Eigen::VectorXd sw = weights.cwiseSqrt();
    const Eigen::MatrixXd G = Xi.transpose() * weights.asDiagonal() * Xi;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(G);
    if (!(ges.eigenvalues()(0) > 1e-20 * ges.eigenvalues()(np - 1)))
        throw IllConditioned("extract_projections: probes are linearly dependent");
    // Xi^+ in the weighted metric: G^{-1} Xi^T W.
    const Eigen::MatrixXd pinv = G.ldlt().solve(Xi.transpose() * weights.asDiagonal());
    const Eigen::MatrixXd& B = patch.basis();
    if ((B - Xi * (pinv * B)).norm() > 1e-8 * B.norm())
        throw IllConditioned("extract_projections: probe set does not span the restricted eigenfunctions");
    if (poles.poles.empty()) return d;

    std::vector<double> pv;
    for (const auto& p : poles.poles) pv.push_back(p.value);
    const Eigen::MatrixXd coef = partial_fraction_residues(z, pv, Y, opt.condition_limit);
    d.fit_misfit = relative_misfit(z, pv, Y);
    for (std::size_t k = 0; k < pv.size(); ++k) {
        Eigen::MatrixXd cols(nv, np);
        for (int j = 0; j < np; ++j) cols.col(j) = coef.row(k).segment(static_cast<Eigen::Index>(j) * nv, nv).transpose();
        const Eigen::MatrixXd R = cols * pinv;
        SpectralEntry e;
        e.pole = pv[k];
        e.lambda = std::pow(pv[k], 1.0 / beta);
        e.misfit = poles.poles[k].misfit;
        const Eigen::MatrixXd S = weights.asDiagonal() * R;
        const double sn = S.norm();
        e.symmetry_defect = sn > 0.0 ? (S - S.transpose()).norm() / sn : 0.0;
        const Eigen::MatrixXd Ss = 0.5 * (S + S.transpose());
        e.residue = weights.cwiseInverse().asDiagonal() * Ss;
        const Eigen::MatrixXd Msym = sw.cwiseInverse().asDiagonal() * Ss * sw.cwiseInverse().asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Msym);
        e.spectrum = es.eigenvalues().reverse();
        const double top = e.spectrum(0);
        if (top > 0.0) {
            e.psd_defect = std::max(0.0, -e.spectrum(nv - 1) / top);
            e.rank = static_cast<int>((e.spectrum.array() > opt.rank_tol * top).count());
            const Eigen::MatrixXd Q = e.residue / top;
            e.idempotency_defect = (Q * Q - Q).norm() / Q.norm();
        } else {
            e.psd_defect = 1.0;
        }
        d.entries.push_back(std::move(e));
    }
    return d;
}

SpectralData exact_spectral_data(const Patch& p, double beta, int n_groups) {
    const SpectrumGroups g = group_distinct(p.manifold());
    if (n_groups < 0 || n_groups > g.size()) n_groups = g.size();
    SpectralData d;
    d.beta = beta;
    d.weights = p.weights();
    const Eigen::VectorXd sw = p.weights().cwiseSqrt();
    for (int k = 0; k < n_groups; ++k) {
        SpectralEntry e;
        e.lambda = g.values[k];
        e.pole = std::pow(g.values[k], beta);
        e.residue = restricted_projection(p, g, k).matrix();
        const Eigen::MatrixXd M = sw.asDiagonal() * e.residue * sw.cwiseInverse().asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
        e.spectrum = es.eigenvalues().reverse();
        e.rank = g.count[k];
        if (e.spectrum(0) > 0.0) {
            const Eigen::MatrixXd Q = e.residue / e.spectrum(0);
            e.idempotency_defect = (Q * Q - Q).norm() / Q.norm();
        }
        d.entries.push_back(std::move(e));
    }
    d.provenance["origin"] = "exact";
    d.provenance["manifold_hash"] = p.manifold().hash();
    d.provenance["patch_hash"] = p.hash();
    return d;
}

Eigen::VectorXd spectral_apply(const SpectralData& d, double z, const Eigen::VectorXd& v) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    for (const auto& e : d.entries) out += e.residue * v / (z + e.pole);
    return out;
}

PeelReport peel_windowed(const MeasurementRecord& rec_h, const SourceH& src, int j, const ForwardAccess& access) {
    if (j < 0 || j + 1 > src.K()) throw InvalidParameter("peel_windowed: need 0 <= j < K_terms");
    const Patch& p = access.patch();
    if (rec_h.meta.patch_hash != p.hash()) throw InvalidParameter("peel_windowed: record was taken on another patch");
    PeelReport r;
    r.j = j;
    r.window = (1.0 - std::ldexp(1.0, -(j + 1))) * src.S();
    int nw = 1;
    while (nw < rec_h.n_nodes() && rec_h.grid.t(nw) < r.window) ++nw;
    r.nodes = nw;

    const MeasurementRecord partial = access.record(src.source(p, rec_h.grid, 1, j + 1));
    r.residual = (rec_h.values.topRows(nw) - partial.values.topRows(nw)).cwiseAbs().maxCoeff();

    Eigen::MatrixXd rem = rec_h.values.topRows(nw);
    r.peel.push_back(rem.cwiseAbs().maxCoeff());
    for (int k = 1; k <= j + 1; ++k) {
        const MeasurementRecord term = access.record(src.source(p, rec_h.grid, k, k));
        rem -= term.values.topRows(nw);
        r.peel.push_back(rem.cwiseAbs().maxCoeff());
        if (k == j + 1) r.newest_scale = term.values.topRows(nw).cwiseAbs().maxCoeff();
    }
    r.relative = r.newest_scale > 0.0 ? r.residual / r.newest_scale : std::numeric_limits<double>::infinity();
    r.pass = r.residual <= 10.0 * kPeelTolerance * r.newest_scale;
    const double ulp = std::numeric_limits<double>::epsilon() * rec_h.values.topRows(nw).cwiseAbs().maxCoeff();
    r.resolvable = r.newest_scale > 1e3 * ulp;
    return r;
}

}  // namespace fracspec
