// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fracspec/forward_solver.hpp"
#include "fracspec/fractional_calculus.hpp"
#include "fracspec/io.hpp"
#include "fracspec/pipeline.hpp"
#include "fracspec/recovery.hpp"
#include "fracspec/source_factory.hpp"
#include "fracspec/special_kernels.hpp"
#include "fracspec/wave_bridge.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace fracspec;
using testutil::Bump;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", x);
    return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

SpaceTimeSource random_source(const Patch& p, const TimeGrid& g, std::mt19937_64& rng, int terms = 3) {
    std::uniform_real_distribution<double> uc(0.3, 0.7), uw(0.1, 0.2), ua(0.5, 2.0);
    SpaceTimeSource f(p, g);
    for (int i = 0; i < terms; ++i) f.add_term(Bump{uc(rng), uw(rng), ua(rng)}.term(testutil::random_field(p.size(), rng)));
    return f;
}

std::shared_ptr<const SpectralManifold> fine_sphere() {
    ManifoldSpec s;
    s.kind = ManifoldKind::Sphere2D;
    s.n_modes = 36;
    s.grid1 = 16;
    s.grid2 = 32;
    return std::make_shared<const SpectralManifold>(build_manifold(s));
}

Patch sphere_cap(std::shared_ptr<const SpectralManifold> m) {
    RegionSpec r;
    r.kind = RegionSpec::Kind::Ball;
    r.radius = 1.0;
    return make_patch(std::move(m), r);
}

SpectralData recover_on(const Patch& p, double alpha, double beta_data, double beta_declared, int k_max,
                        std::vector<HvProbeResult>* keep = nullptr, PoleFit* keep_fit = nullptr) {
    SolverAccess acc(p, alpha, beta_data);
    const auto plan = plan_probes(alpha);
    const auto pr = probe_hv(acc, default_psi(p), plan);
    Eigen::MatrixXd tr(plan.z.size(), pr.size());
    for (std::size_t i = 0; i < pr.size(); ++i) tr.col(i) = pr[i].trace;
    const PoleFit fit = fit_poles(plan.z, tr, k_max);
    SpectralData sd = extract_projections(pr, p, fit, beta_declared);
    sd.provenance["patch_hash"] = p.hash();
    if (keep) *keep = pr;
    if (keep_fit) *keep_fit = fit;
    return sd;
}

// Worst relative lambda error, rank mismatches and worst Frobenius error of
// the first n entries against the exact data.
struct SpectrumScore {
    double lambda = 0.0;
    int rank_misses = 0;
    double frobenius = 0.0;
    bool complete = true;
    std::string lambdas;
};

SpectrumScore score(const SpectralData& got, const SpectralData& ex, const std::vector<double>& lam, const std::vector<int>& ranks) {
    SpectrumScore s;
    for (std::size_t k = 0; k < lam.size(); ++k) {
        if (k >= got.entries.size() || k >= ex.entries.size()) {
            s.complete = false;
            continue;
        }
        const auto& e = got.entries[k];
        s.lambda = std::max(s.lambda, std::fabs(e.lambda - lam[k]) / std::max(1.0, lam[k]));
        s.rank_misses += e.rank != ranks[k];
        s.frobenius = std::max(s.frobenius, (e.residue - ex.entries[k].residue).norm() / ex.entries[k].residue.norm());
        s.lambdas += (k ? "," : "") + num(e.lambda) + "/r" + std::to_string(e.rank);
    }
    return s;
}

// ---------------------------------------------------------------------------

Outcome mittag_leffler_accuracy() {
    const oracle::RationalOrder orders[] = {{3, 10}, {1, 2}, {4, 5}, {1, 1}};
    std::vector<double> xs;
    for (int i = 0; i < 2500; ++i) xs.push_back(std::pow(10.0, -6.0 + 12.0 * i / 2499.0));
    for (int i = 0; i < 2499; ++i) xs.push_back(1e6 * (i + 1) / 2499.0);
    xs.push_back(0.0);
    double worst = 0.0;
    double runtime = 0.0;
    for (const auto& a : orders) {
        const double av = a.value();
        for (const oracle::RationalParam b : {oracle::RationalParam{a.num, a.den}, oracle::RationalParam{1, 1}}) {
            const double bv = static_cast<double>(b.num) / b.den;
            std::vector<double> got(xs.size());
            const auto t0 = std::chrono::steady_clock::now();
            for (std::size_t i = 0; i < xs.size(); ++i) got[i] = mittag_leffler({av, bv}, -xs[i]);
            runtime += seconds_since(t0);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double x = xs[i];
                double ref;
                if (x == 0.0) ref = 1.0 / oracle::gamma_mp(bv);
                else if (av == 1.0 && bv == 1.0) ref = std::exp(-x);
                else ref = oracle::mittag_leffler_neg(a, b, x);
                if (std::fabs(ref) < 1e-290) {
                    if (std::fabs(got[i]) >= 1e-290) worst = 1.0;
                    continue;
                }
                worst = std::max(worst, std::fabs(got[i] - ref) / std::fabs(ref));
            }
        }
    }
    return {worst <= 1e-9 && runtime < 5.0,
            "4 orders x b in {a,1} x 5000 points (10^4 per order): worst rel " + num(worst) + " (tol 1e-9), eval time " + num(runtime) + " s (limit 5)"};
}

Outcome laplace_identity() {
    boost::math::quadrature::tanh_sinh<double> ts;
    double worst = 0.0;
    double worst_tail = 0.0;
    for (double alpha : {0.3, 0.5, 0.8, 1.0}) {
        for (double lam : {0.0, 1.0, 10.0, 100.0}) {
            for (double s : {0.5, 1.0, 2.0, 5.0, 20.0}) {
                const KernelParams k{alpha, 1.0, lam};
                const double T = 45.0 / s;
                auto f = [&](double t) { return t > 0.0 ? std::exp(-s * t) * kernel_F(k, t) : 0.0; };
                const double body = ts.integrate(f, 0.0, T, 1e-14);
                const double closed = laplace_kernel_closed(k, s);
                worst_tail = std::max(worst_tail, kernel_F(k, T) * std::exp(-s * T) / s / closed);
                worst = std::max(worst, std::fabs(body - closed) / closed);
            }
        }
    }
    return {worst <= 1e-6 && worst_tail < 1e-8,
            "80 (alpha, lambda, s) triples: worst rel " + num(worst) + " (tol 1e-6), truncated tail " + num(worst_tail)};
}

Outcome strong_residual() {
    auto m = testutil::torus(121);
    const Patch p = testutil::quarter(m);
    std::mt19937_64 rng(31);
    const Eigen::VectorXd xi = testutil::random_field(p.size(), rng);
    bool ok = true;
    std::string d;
    for (double alpha : {0.5, 1.0}) {
        std::vector<double> res;
        for (int n : {1024, 2048, 4096}) {
            const TimeGrid g{1.0, n};
            SpaceTimeSource f(p, g);
            f.add_term(Bump{0.5, 0.3}.term(xi));
            const ModalSolution sol = solve_modes(m, alpha, 1.0, f);
            const Eigen::MatrixXd b = f.modal();
            double worst = 0.0;
            for (int k = 0; k < m->n_modes(); ++k) {
                ScalarSignal y{g, std::vector<double>(sol.coeffs.col(k).data(), sol.coeffs.col(k).data() + g.size())};
                const ScalarSignal dy = caputo_l1(y, alpha);
                const double lb = m->eigenvalues()[k];
                for (int i = 1; i < g.size(); ++i) worst = std::max(worst, std::fabs(dy.values[i] + lb * y.values[i] - b(i, k)));
            }
            res.push_back(worst / max_abs(b));
        }
        ok = ok && res[1] <= 5e-4 && res[2] < res[1] && res[1] < res[0];
        d += "alpha " + num(alpha) + ": " + num(res[0]) + " > " + num(res[1]) + " > " + num(res[2]) + "; ";
    }
    return {ok, d + "tol 5e-4 at n=2048 over 121 torus modes"};
}

Outcome heat_reduction() {
    auto m = testutil::torus(121);
    const Patch p = testutil::quarter(m);
    const TimeGrid g{1.0, 2048};
    std::mt19937_64 rng(11);
    const Bump a{0.5, 0.3};
    SpaceTimeSource f(p, g);
    const Eigen::VectorXd xi = testutil::random_field(p.size(), rng);
    f.add_term(a.term(xi));
    const auto t0 = std::chrono::steady_clock::now();
    const auto sol = solve_modes(m, 1.0, 1.0, f);
    const double solve_time = seconds_since(t0);
    const Eigen::RowVectorXd c = (xi.array() * p.weights().array()).matrix().transpose() * p.basis();
    double err = 0.0, ref = 0.0;
    for (int k = 0; k < m->n_modes(); ++k) {
        const double lam = m->eigenvalues()[k];
        for (int i = 0; i < g.size(); i += 64) {
            const double t = g.t(i);
            const double lo = 0.2, hi = std::min(t, 0.8);
            const double o = hi <= lo ? 0.0
                                      : c(k) * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                                                   [&](double s) { return std::exp(-lam * (t - s)) * a(s); }, lo, hi, 15, 1e-14);
            err = std::max(err, std::fabs(sol.coeffs(i, k) - o));
            ref = std::max(ref, std::fabs(o));
        }
    }
    return {err / ref <= 1e-7 && solve_time < 10.0,
            "121 modes, n=2048: max rel " + num(err / ref) + " (tol 1e-7), solve " + num(solve_time) + " s (limit 10)"};
}

Outcome sup_bound() {
    auto m = testutil::torus(121);
    const Patch p = testutil::quarter(m);
    const TimeGrid g{1.0, 2048};
    const double T = 0.9;
    std::mt19937_64 rng(41);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double alpha = trial % 2 ? 0.5 : 0.8;
        const double beta = trial % 4 < 2 ? 1.0 : 0.5;
        const auto f = random_source(p, g, rng);
        const auto sol = solve_modes(m, alpha, beta, f);
        const Eigen::MatrixXd db = f.modal_derivative();
        double energy = 0.0;
        for (int i = 1; i < g.size(); ++i) energy += 0.5 * g.dt() * (db.row(i).squaredNorm() + db.row(i - 1).squaredNorm());
        const double sup = sol.coeffs.rowwise().squaredNorm().maxCoeff();
        worst = std::max(worst, sup / (sup_bound_constant(alpha, beta, T, 1.0) * energy));
    }
    return {worst <= 1.05, "10 random sources: max sup/(C int |f'|^2) = " + num(worst) + " (limit 1.05)"};
}

Outcome source_h_certification() {
    auto m = testutil::torus(121);
    const Patch p = testutil::quarter(m);
    const SourceH h = build_h(build_bump(), SourceHParams{1.0, 0.5, 8}, default_psi(p));
    const double S = h.S();
    int bad_support = 0, bad_ladder = 0, overlaps = 0;
    double ladder = 0.0;
    const TimeGrid fine{1.0, 1 << 17};
    for (int k = 1; k <= h.K(); ++k) {
        const auto [lo, hi] = h.support(k);
        bad_support += lo != (1.0 - std::ldexp(1.0, 1 - k)) * S || hi != (1.0 - std::ldexp(1.0, -k)) * S;
        const double w = hi - lo;
        bad_support += h.h_k(k, lo) != 0.0 || h.h_k(k, hi) != 0.0;
        bad_support += !(h.h_k(k, lo + 0.01 * w) > 0.0) || !(h.h_k(k, hi - 0.01 * w) > 0.0);
        bad_support += h.h_k(k, lo - 1e-3 * w) != 0.0 || h.h_k(k, hi + 1e-3 * w) != 0.0;
    }
    for (int l = 0; l <= 3; ++l) {
        for (int k = std::max(l, 1); k <= h.K(); ++k) {
            if (std::ldexp(1.0, k + 1) < S) continue;
            double sup = 0.0;
            for (int i = 0; i < fine.size(); ++i) sup = std::max(sup, std::fabs(h.h_k(k, fine.t(i), l)));
            ladder = std::max(ladder, sup / std::ldexp(1.0, -k));
            bad_ladder += sup > std::ldexp(1.0, -k);
        }
    }
    for (int i = 0; i < fine.size(); ++i)
        for (int k = 1; k <= h.K(); ++k)
            for (int j = k + 1; j <= h.K(); ++j) overlaps += h.h_k(k, fine.t(i)) * h.h_k(j, fine.t(i)) != 0.0;
    return {bad_support == 0 && bad_ladder == 0 && overlaps == 0,
            "K=8: support defects " + std::to_string(bad_support) + ", max sup|h_k^(l)| 2^k = " + num(ladder) +
                ", nonzero pair products " + std::to_string(overlaps)};
}

// Shared between criteria 8 and 10.
struct TorusRun {
    ExperimentConfig cfg;
    fs::path dir;
    double seconds = 0.0;
    int recover_exit = 0;
};

Outcome windowed_peeling(const TorusRun& run) {
    const ExperimentConfig& c = run.cfg;
    auto m = std::make_shared<const SpectralManifold>(build_manifold(c.manifold));
    const Patch p = make_patch(m, c.patch);
    const SourceH h = build_h(build_bump(c.source.bump), c.source.h, default_psi(p));
    SolverAccess acc(p, c.alpha, c.beta);
    const MeasurementRecord rec = read_record(run.dir / "record.frec");
    int clean = 0, flipped = 0, resolvable = 0;
    double worst = 0.0;
    std::string unflipped;
    for (int j = 0; j < h.K(); ++j) {
        const PeelReport r = peel_windowed(rec, h, j, acc);
        clean += r.pass;
        resolvable += r.resolvable;
        worst = std::max(worst, r.relative);
        auto psi = h.psi();
        std::swap(psi[h.r(j + 1) - 1], psi[h.r(j + 1) % static_cast<int>(psi.size())]);
        const SourceH bad = build_h(h.bump(), c.source.h, psi);
        SpaceTimeSource f(p, c.grid);
        for (int k = 1; k <= h.K(); ++k) f.add_term(k == j + 1 ? bad.term(k) : h.term(k));
        const bool fb = !peel_windowed(acc.record(f), h, j, acc).pass;
        flipped += fb;
        if (!fb) unflipped += " " + std::to_string(j);
    }
    std::string d = "K=" + std::to_string(h.K()) + ", n=" + std::to_string(c.grid.n_steps) + ": clean windows pass " +
                    std::to_string(clean) + "/" + std::to_string(h.K()) + " (worst rel " + num(worst) + ", tol " +
                    num(10 * kPeelTolerance) + "); fault flips " +
                    std::to_string(flipped) + "/" + std::to_string(h.K()) + "; newest term resolvable in " +
                    std::to_string(resolvable) + "/" + std::to_string(h.K());
    if (!unflipped.empty()) d += "; not flipped:" + unflipped;
    return {clean == h.K() && flipped == h.K(), d};
}

Outcome spectral_recovery(const TorusRun& run, SpectralData* sphere_out) {
    const ExperimentConfig& c = run.cfg;
    auto m = std::make_shared<const SpectralManifold>(build_manifold(c.manifold));
    const Patch p = make_patch(m, c.patch);
    const SpectralData got = read_spectral(run.dir / "spectral.json");
    const SpectrumScore st = score(got, exact_spectral_data(p, c.beta), {0, 1, 2, 4}, {1, 4, 4, 4});
    const bool torus_ok = st.complete && st.lambda <= 1e-3 && st.rank_misses == 0 && st.frobenius <= 1e-2 && run.seconds < 300;

    const auto t0 = std::chrono::steady_clock::now();
    const Patch cap = sphere_cap(fine_sphere());
    const SpectralData ex = exact_spectral_data(cap, 1.0);
    *sphere_out = recover_on(cap, 0.5, 1.0, 1.0, static_cast<int>(ex.entries.size()) + 2);
    const SpectrumScore ss = score(*sphere_out, ex, {0, 2, 6}, {1, 3, 5});
    const bool sphere_ok = ss.complete && ss.lambda <= 1e-3 && ss.rank_misses == 0 && ss.frobenius <= 1e-2;
    return {torus_ok && sphere_ok,
            "torus {" + st.lambdas + "} rel " + num(st.lambda) + ", rank misses " + std::to_string(st.rank_misses) +
                ", frobenius " + num(st.frobenius) + ", pipeline " + num(run.seconds) + " s" + (torus_ok ? "" : " [torus FAIL]") +
                "; sphere {" + ss.lambdas + "} rel " + num(ss.lambda) + ", frobenius " + num(ss.frobenius) + ", " +
                num(seconds_since(t0)) + " s" + (sphere_ok ? "" : " [sphere FAIL]") + "; tol 1e-3 / 1e-2"};
}

Outcome beta_scaling() {
    const Patch cap = sphere_cap(fine_sphere());
    const SpectralData ex = exact_spectral_data(cap, 0.5);
    std::vector<HvProbeResult> pr;
    PoleFit fit;
    const SpectralData sd = recover_on(cap, 0.5, 0.5, 0.5, static_cast<int>(ex.entries.size()) + 2, &pr, &fit);
    const SpectrumScore s = score(sd, ex, {0, 2, 6}, {1, 3, 5});
    const SpectralData wrong = extract_projections(pr, cap, fit, 1.0);
    double identity = 0.0;
    for (std::size_t k = 0; k < std::min(wrong.entries.size(), sd.entries.size()); ++k) {
        const double want = std::pow(sd.entries[k].lambda, 0.5);
        identity = std::max(identity, std::fabs(wrong.entries[k].lambda - want) / std::max(1.0, want));
    }
    const bool ok = s.complete && s.lambda <= 1e-3 && identity <= 1e-3;
    return {ok, "sphere cap, beta = 0.5: {" + s.lambdas + "} rel " + num(s.lambda) +
                    "; declared beta' = 1 vs lambda^{1/2}: " + num(identity) + " (tol 1e-3)"};
}

double worst_wavecheck(const fs::path& csv) {
    std::istringstream in(read_text(csv));
    std::string line;
    std::getline(in, line);
    double worst = 0.0;
    while (std::getline(in, line))
        if (line.find(",all,") != std::string::npos) worst = std::max(worst, std::stod(line.substr(line.rfind(',') + 1)));
    return worst;
}

Outcome wave_bridge(const TorusRun& run, const SpectralData& sphere) {
    const auto t0 = std::chrono::steady_clock::now();
    auto m = testutil::torus(121);
    const Patch p = testutil::quarter(m);
    const SpectralData ex = exact_spectral_data(p, 1.0);
    Eigen::VectorXd xi(p.size());
    const auto& pts = m->points();
    for (int i = 0; i < p.size(); ++i) {
        const double x = pts(p.indices()[i], 0) - 1.5, y = pts(p.indices()[i], 1) - 1.5;
        xi(i) = std::exp(-(x * x + y * y));
    }
    std::vector<double> errs;
    for (int n : {1024, 2048, 4096}) {
        const TimeGrid g{6.0, n};
        SpaceTimeSource s(p, g);
        s.add_term(Bump{1.0, 0.8}.term(xi));
        errs.push_back(compare_hyp(hyp_apply(ex, s), wave_oracle(s), p.weights()).l2_relative);
    }
    const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];
    const bool exact_ok = errs[1] <= 1e-4 && std::fabs(r1 - 4.0) <= 0.4 && std::fabs(r2 - 4.0) <= 0.4;
    const double exact_time = seconds_since(t0);

    const RunResult wr = run_wavecheck(run.cfg, run.dir / "spectral.json", run.dir / "wave");
    const double torus_rec = worst_wavecheck(run.dir / "wave" / "wavecheck.csv");

    const Patch cap = sphere_cap(fine_sphere());
    const SpectralData sx = exact_spectral_data(cap, 1.0);
    std::mt19937_64 rng(20261017);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const TimeGrid g{6.0, 1200};
    const auto& sp = cap.manifold().points();
    double sphere_rec = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const int c = cap.indices()[static_cast<int>(u(rng) * cap.size())];
        const double r = 0.4 + 0.4 * u(rng);
        Eigen::VectorXd v(cap.size());
        for (int i = 0; i < cap.size(); ++i) {
            const double x = sp(cap.indices()[i], 0) - sp(c, 0), y = sp(cap.indices()[i], 1) - sp(c, 1);
            v(i) = std::exp(-(x * x + y * y) / (r * r));
        }
        SpaceTimeSource s(cap, g);
        s.add_term(Bump{0.8 + 2.0 * u(rng), 0.3 + 0.5 * u(rng)}.term(v));
        sphere_rec = std::max(sphere_rec, compare_hyp(hyp_apply(sphere, s), hyp_apply(sx, s), cap.weights()).l2_relative);
    }
    const bool rec_ok = torus_rec <= 3e-2 && sphere_rec <= 3e-2 && wr.exit_code == kExitOk;
    return {exact_ok && rec_ok && exact_time < 60.0,
            "exact vs oracle n=1024/2048/4096: " + num(errs[0]) + "/" + num(errs[1]) + "/" + num(errs[2]) + " (tol 1e-4), ratios " +
                num(r1) + ", " + num(r2) + ", " + num(exact_time) + " s; recovered torus worst " + num(torus_rec) +
                ", recovered sphere worst " + num(sphere_rec) + " (gate 3e-2)"};
}

Outcome invariance_linearity() {
    auto m = testutil::torus(121);
    const Patch p = testutil::quarter(m);
    const TimeGrid g{1.0, 1024};
    ForwardSolver solver(m, 0.5, 1.0, g);
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> uc(0.25, 0.45), uw(0.08, 0.15), ua(-2.0, 2.0);
    std::uniform_int_distribution<int> us(10, 300);
    double shift = 0.0, lin = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd x1 = testutil::random_field(p.size(), rng), x2 = testutil::random_field(p.size(), rng);
        const Bump b1{uc(rng), uw(rng)}, b2{uc(rng) + 0.1, uw(rng)};
        SpaceTimeSource f(p, g);
        f.add_term(b1.term(x1));
        const auto rec = lss_apply(solver.solve(f), p);
        const int s = us(rng);
        Bump sh = b1;
        sh.c += s * g.dt();
        SpaceTimeSource fs_(p, g);
        fs_.add_term(sh.term(x1));
        const auto rs = lss_apply(solver.solve(fs_), p);
        const double scale = max_abs(rec.values);
        shift = std::max(shift, max_abs(rs.values.topRows(s)) / scale);
        shift = std::max(shift, max_abs(rs.values.bottomRows(g.size() - s) - rec.values.topRows(g.size() - s)) / scale);

        SpaceTimeSource f2(p, g);
        f2.add_term(b2.term(x2));
        const auto r2 = lss_apply(solver.solve(f2), p);
        const double c1 = ua(rng), c2 = ua(rng);
        SpaceTimeSource mix(p, g);
        mix.add_term(Bump{b1.c, b1.w, c1}.term(x1));
        mix.add_term(Bump{b2.c, b2.w, c2}.term(x2));
        const auto rm = lss_apply(solver.solve(mix), p);
        lin = std::max(lin, max_abs(rm.values - c1 * rec.values - c2 * r2.values) / max_abs(rm.values));
    }
    return {shift <= 1e-8 && lin <= 1e-8, "5 random sources: shift " + num(shift) + ", superposition " + num(lin) + " (tol 1e-8)"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    };

    report(1, "mittag-leffler accuracy", mittag_leffler_accuracy);
    report(2, "laplace identity", laplace_identity);
    report(3, "strong-solution residual", strong_residual);
    report(4, "heat reduction", heat_reduction);
    report(5, "sup bound", sup_bound);
    report(6, "source h certification", source_h_certification);

    // Reference pipeline: simulate + recover through the library entry points.
    TorusRun run;
    run.dir = fs::temp_directory_path() / ("fracspec_accept_" + std::to_string(::getpid()));
    fs::remove_all(run.dir);
    std::string setup_error;
    try {
        run.cfg = load_config(fs::path(FRACSPEC_SOURCE_DIR) / "configs" / "torus-a05-b1.json");
        const auto t0 = std::chrono::steady_clock::now();
        run_simulate(run.cfg, run.dir);
        run.recover_exit = run_recover(run.cfg, {run.dir / "record.frec"}, run.dir).exit_code;
        run.seconds = seconds_since(t0);
    } catch (const std::exception& e) {
        setup_error = e.what();
    }
    auto needs_run = [&](const std::function<Outcome()>& f) {
        return [&, f]() { return setup_error.empty() ? f() : Outcome{false, "reference run failed: " + setup_error}; };
    };

    SpectralData sphere;
    report(7, "windowed peeling", needs_run([&] { return windowed_peeling(run); }));
    report(8, "spectral recovery", needs_run([&] { return spectral_recovery(run, &sphere); }));
    report(9, "beta scaling", beta_scaling);
    report(10, "wave bridge", needs_run([&] { return wave_bridge(run, sphere); }));
    report(11, "time invariance and linearity", invariance_linearity);

    fs::remove_all(run.dir);
    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
