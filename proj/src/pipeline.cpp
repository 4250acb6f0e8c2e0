#include "fracspec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <omp.h>

#include "fracspec/errors.hpp"
#include "fracspec/hash.hpp"
#include "fracspec/io.hpp"
#include "fracspec/wave_bridge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fracspec {

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InvalidParameter("config: '" + where + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw InvalidParameter("config: unknown key '" + where + "." + it.key() + "'");
}

template <class T>
void read(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

std::shared_ptr<const SpectralManifold> make_manifold(const ExperimentConfig& c) {
    return std::make_shared<const SpectralManifold>(build_manifold(c.manifold));
}

SourceH make_h(const ExperimentConfig& c, const Patch& p) {
    return build_h(build_bump(c.source.bump), c.source.h, default_psi(p));
}

std::vector<SpaceTimeSource> make_sources(const ExperimentConfig& c, const Patch& p) {
    std::vector<SpaceTimeSource> out;
    if (c.source.kind == SourceSpec::Kind::H) {
        out.push_back(make_h(c, p).source(p, c.grid));
        return out;
    }
    const auto psi = default_psi(p);
    for (const auto& q : c.source.probes) {
        const ProbeProfile a = bump_probe(q.lo, q.hi, q.amp);
        SpaceTimeSource s(p, c.grid);
        s.add_term({a.a, a.a_dot, psi.at(q.psi)});
        out.push_back(std::move(s));
    }
    return out;
}

std::string record_name(std::size_t i, std::size_t n) {
    if (n == 1) return "record.frec";
    std::ostringstream s;
    s << "record_" << (i < 100 ? (i < 10 ? "00" : "0") : "") << i << ".frec";
    return s.str();
}

// Checks a record against the manifest next to it, when there is one.
void check_manifest(const fs::path& rec) {
    const fs::path man = rec.parent_path() / "manifest.json";
    if (!fs::exists(man)) return;
    const json m = json::parse(read_text(man));
    for (const auto& f : m.at("files"))
        if (f.at("name").get<std::string>() == rec.filename().string()) {
            if (f.at("sha256").get<std::string>() != file_sha256(rec))
                throw ProvenanceError(rec.string() + ": content hash does not match manifest.json");
            return;
        }
}

struct Gate {
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
};

}  // namespace

void ExperimentConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParameter("config: alpha must lie in (0, 1]");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidParameter("config: beta must lie in (0, 1]");
    if (!(grid.t_max > 0.0) || grid.n_steps < 4) throw InvalidParameter("config: time needs t_max > 0 and n_steps >= 4");
    if (manifold.n_modes < 1) throw InvalidParameter("config: manifold.n_modes must be >= 1");
    auto m = make_manifold(*this);
    const Patch p = make_patch(m, patch);
    if (source.kind == SourceSpec::Kind::H) {
        const auto& h = source.h;
        if (!(h.S > 0.0 && h.S < h.T)) throw InvalidParameter("config: source needs 0 < S < T (got S = " + fmt(h.S) + ", T = " + fmt(h.T) + ")");
        if (h.T > grid.t_max) throw InvalidParameter("config: source.T exceeds time.t_max; lengthen the time grid");
        if (h.K_terms < 1) throw InvalidParameter("config: source.K_terms must be >= 1");
        if (h.K_terms > p.size()) throw InvalidParameter("config: source.K_terms exceeds the V-grid size");
        make_h(*this, p).validate_resolution(grid);
    } else {
        if (source.probes.empty()) throw InvalidParameter("config: source.probes is empty");
        for (const auto& q : source.probes) {
            if (!(q.lo >= 0.0 && q.lo < q.hi && q.hi <= grid.t_max))
                throw InvalidParameter("config: probe support must satisfy 0 <= lo < hi <= t_max");
            if (!(q.amp > 0.0)) throw InvalidParameter("config: probe amp must be positive");
            if (q.psi < 0 || q.psi >= p.size()) throw InvalidParameter("config: probe psi index out of range");
        }
    }
    const auto& r = recovery;
    if (r.k_max < 1) throw InvalidParameter("config: recovery.k_max must be >= 1");
    if (r.abscissae.count < 2 * r.k_max + 2)
        throw InvalidParameter("config: recovery.count must be >= 2 k_max + 2 (" + std::to_string(2 * r.k_max + 2) + ")");
    if (!(r.abscissae.z_lo > 0.0 && r.abscissae.z_lo < r.abscissae.z_hi))
        throw InvalidParameter("config: recovery needs 0 < z_lo < z_hi");
    if (!(r.abscissae.step_fraction > 0.0 && r.abscissae.step_fraction < 1.0))
        throw InvalidParameter("config: recovery.step_fraction must lie in (0, 1)");
    if (r.abscissae.probe_nodes < 4 || r.abscissae.probe_nodes >= r.abscissae.n_steps / 2)
        throw InvalidParameter("config: recovery.probe_nodes must lie in [4, n_steps / 2)");
    if (!r.expected_ranks.empty() && r.expected_ranks.size() != r.expected_lambda.size())
        throw InvalidParameter("config: recovery.expected_ranks must match expected_lambda in length");
    if (!(r.lambda_rel_tol > 0.0)) throw InvalidParameter("config: recovery.lambda_rel_tol must be positive");
    if (wave.n_sources < 1) throw InvalidParameter("config: wave.n_sources must be >= 1");
    if (!(wave.gate > 0.0)) throw InvalidParameter("config: wave.gate must be positive");
    if (!(wave.grid.t_max > 0.0) || wave.grid.n_steps < 16) throw InvalidParameter("config: wave needs t_max > 0, n_steps >= 16");
    const double lmax = *std::max_element(m->eigenvalues().begin(), m->eigenvalues().end());
    if (wave.grid.dt() * std::sqrt(lmax) > 2.0)
        throw InvalidParameter("config: wave time step too large for the oracle; need n_steps >= " +
                               std::to_string(static_cast<int>(std::ceil(wave.grid.t_max * std::sqrt(lmax) / 2.0))));
}

json ExperimentConfig::to_json() const {
    json j;
    j["schema_version"] = kSchemaVersion;
    json mj;
    mj["kind"] = manifold.kind == ManifoldKind::FlatTorus2D ? "torus" : "sphere";
    mj["n_modes"] = manifold.n_modes;
    mj["period1"] = manifold.period1;
    mj["period2"] = manifold.period2;
    mj["radius"] = manifold.radius;
    mj["grid1"] = manifold.grid1;
    mj["grid2"] = manifold.grid2;
    j["manifold"] = mj;
    json pj;
    switch (patch.kind) {
    case RegionSpec::Kind::Rectangle:
        pj = {{"kind", "rectangle"}, {"lo1", patch.lo1}, {"hi1", patch.hi1}, {"lo2", patch.lo2}, {"hi2", patch.hi2}};
        break;
    case RegionSpec::Kind::Ball:
        pj = {{"kind", "ball"}, {"c1", patch.c1}, {"c2", patch.c2}, {"radius", patch.radius}};
        break;
    case RegionSpec::Kind::Full:
        pj = {{"kind", "full"}};
        break;
    }
    j["patch"] = pj;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["time"] = {{"t_max", grid.t_max}, {"n_steps", grid.n_steps}};
    if (source.kind == SourceSpec::Kind::H) {
        j["source"] = {{"kind", "h"},
                       {"S", source.h.S},
                       {"T", source.h.T},
                       {"K_terms", source.h.K_terms},
                       {"bump", source.bump == BumpKind::Exp ? "exp" : "poly"}};
    } else {
        json ps = json::array();
        for (const auto& q : source.probes) ps.push_back({{"lo", q.lo}, {"hi", q.hi}, {"amp", q.amp}, {"psi", q.psi}});
        j["source"] = {{"kind", "probes"}, {"probes", ps}};
    }
    const auto& r = recovery;
    j["recovery"] = {{"z_lo", r.abscissae.z_lo},
                     {"z_hi", r.abscissae.z_hi},
                     {"count", r.abscissae.count},
                     {"n_steps", r.abscissae.n_steps},
                     {"step_fraction", r.abscissae.step_fraction},
                     {"probe_nodes", r.abscissae.probe_nodes},
                     {"k_max", r.k_max},
                     {"residue_floor", r.fit.residue_floor},
                     {"rank_tol", r.extract.rank_tol},
                     {"expected_lambda", r.expected_lambda},
                     {"expected_ranks", r.expected_ranks},
                     {"lambda_rel_tol", r.lambda_rel_tol},
                     {"frobenius_tol", r.frobenius_tol},
                     {"warn_fit_misfit", r.warn_fit_misfit},
                     {"warn_psd_defect", r.warn_psd_defect}};
    j["wave"] = {{"t_max", wave.grid.t_max}, {"n_steps", wave.grid.n_steps}, {"n_sources", wave.n_sources}, {"gate", wave.gate}};
    j["seed"] = seed;
    return j;
}

std::string ExperimentConfig::hash() const { return sha256_hex(to_json().dump()); }

ExperimentConfig config_from_json(const json& j) {
    try {
        check_keys(j, "config", {"schema_version", "manifold", "patch", "alpha", "beta", "time", "source", "recovery", "wave", "seed", "comment"});
        if (j.value("schema_version", kSchemaVersion) != kSchemaVersion)
            throw InvalidParameter("config: unsupported schema_version");
        ExperimentConfig c;
        const json& m = j.at("manifold");
        check_keys(m, "manifold", {"kind", "n_modes", "period1", "period2", "radius", "grid1", "grid2"});
        const std::string mk = m.at("kind").get<std::string>();
        if (mk == "torus")
            c.manifold.kind = ManifoldKind::FlatTorus2D;
        else if (mk == "sphere")
            c.manifold.kind = ManifoldKind::Sphere2D;
        else
            throw InvalidParameter("config: manifold.kind must be 'torus' or 'sphere'");
        c.manifold.n_modes = m.at("n_modes").get<int>();
        read(m, "period1", c.manifold.period1);
        read(m, "period2", c.manifold.period2);
        read(m, "radius", c.manifold.radius);
        read(m, "grid1", c.manifold.grid1);
        read(m, "grid2", c.manifold.grid2);

        const json& p = j.at("patch");
        check_keys(p, "patch", {"kind", "lo1", "hi1", "lo2", "hi2", "c1", "c2", "radius"});
        const std::string pk = p.at("kind").get<std::string>();
        if (pk == "rectangle") {
            c.patch.kind = RegionSpec::Kind::Rectangle;
            c.patch.lo1 = p.at("lo1").get<double>();
            c.patch.hi1 = p.at("hi1").get<double>();
            c.patch.lo2 = p.at("lo2").get<double>();
            c.patch.hi2 = p.at("hi2").get<double>();
        } else if (pk == "ball") {
            c.patch.kind = RegionSpec::Kind::Ball;
            c.patch.c1 = p.at("c1").get<double>();
            c.patch.c2 = p.at("c2").get<double>();
            c.patch.radius = p.at("radius").get<double>();
        } else if (pk == "full") {
            c.patch.kind = RegionSpec::Kind::Full;
            c.patch.allow_full = true;
        } else {
            throw InvalidParameter("config: patch.kind must be 'rectangle', 'ball' or 'full'");
        }
        c.alpha = j.at("alpha").get<double>();
        c.beta = j.at("beta").get<double>();
        const json& t = j.at("time");
        check_keys(t, "time", {"t_max", "n_steps"});
        c.grid = TimeGrid{t.at("t_max").get<double>(), t.at("n_steps").get<int>()};

        const json& s = j.at("source");
        const std::string sk = s.at("kind").get<std::string>();
        if (sk == "h") {
            check_keys(s, "source", {"kind", "S", "T", "K_terms", "bump"});
            c.source.kind = SourceSpec::Kind::H;
            c.source.h.S = s.at("S").get<double>();
            c.source.h.T = s.at("T").get<double>();
            read(s, "K_terms", c.source.h.K_terms);
            const std::string b = s.value("bump", "exp");
            if (b == "exp")
                c.source.bump = BumpKind::Exp;
            else if (b == "poly")
                c.source.bump = BumpKind::Poly;
            else
                throw InvalidParameter("config: source.bump must be 'exp' or 'poly'");
        } else if (sk == "probes") {
            check_keys(s, "source", {"kind", "probes"});
            c.source.kind = SourceSpec::Kind::Probes;
            for (const auto& q : s.at("probes")) {
                check_keys(q, "source.probes[]", {"lo", "hi", "amp", "psi"});
                ProbeSpec ps;
                ps.lo = q.at("lo").get<double>();
                ps.hi = q.at("hi").get<double>();
                read(q, "amp", ps.amp);
                read(q, "psi", ps.psi);
                c.source.probes.push_back(ps);
            }
        } else {
            throw InvalidParameter("config: source.kind must be 'h' or 'probes'");
        }

        if (j.contains("recovery")) {
            const json& r = j.at("recovery");
            check_keys(r, "recovery", {"z_lo", "z_hi", "count", "n_steps", "step_fraction", "probe_nodes", "k_max",
                                       "residue_floor", "rank_tol", "expected_lambda", "expected_ranks", "lambda_rel_tol",
                                       "frobenius_tol", "warn_fit_misfit", "warn_psd_defect"});
            auto& R = c.recovery;
            read(r, "z_lo", R.abscissae.z_lo);
            read(r, "z_hi", R.abscissae.z_hi);
            read(r, "count", R.abscissae.count);
            read(r, "n_steps", R.abscissae.n_steps);
            read(r, "step_fraction", R.abscissae.step_fraction);
            read(r, "probe_nodes", R.abscissae.probe_nodes);
            read(r, "k_max", R.k_max);
            read(r, "residue_floor", R.fit.residue_floor);
            read(r, "rank_tol", R.extract.rank_tol);
            read(r, "expected_lambda", R.expected_lambda);
            read(r, "expected_ranks", R.expected_ranks);
            read(r, "lambda_rel_tol", R.lambda_rel_tol);
            read(r, "frobenius_tol", R.frobenius_tol);
            read(r, "warn_fit_misfit", R.warn_fit_misfit);
            read(r, "warn_psd_defect", R.warn_psd_defect);
        }
        if (j.contains("wave")) {
            const json& w = j.at("wave");
            check_keys(w, "wave", {"t_max", "n_steps", "n_sources", "gate"});
            read(w, "t_max", c.wave.grid.t_max);
            read(w, "n_steps", c.wave.grid.n_steps);
            read(w, "n_sources", c.wave.n_sources);
            read(w, "gate", c.wave.gate);
        }
        read(j, "seed", c.seed);
        return c;
    } catch (const json::exception& e) {
        throw InvalidParameter(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text(path), nullptr, true, true);
    } catch (const json::exception& e) {
        throw InvalidParameter(path.string() + ": " + e.what());
    }
    ExperimentConfig c = config_from_json(j);
    c.validate();
    return c;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ProvenanceError*>(&e)) return kExitProvenance;
    if (dynamic_cast<const InvalidParameter*>(&e) || dynamic_cast<const DomainError*>(&e)) return kExitValidation;
    if (dynamic_cast<const ToleranceError*>(&e) || dynamic_cast<const IllConditioned*>(&e) ||
        dynamic_cast<const OverflowError*>(&e))
        return kExitTolerance;
    return 1;
}

RunResult run_simulate(const ExperimentConfig& c, const fs::path& out, const RunOptions& opt) {
    c.validate();
    if (opt.workers > 0) omp_set_num_threads(opt.workers);
    fs::create_directories(out);
    auto m = make_manifold(c);
    const Patch p = make_patch(m, c.patch);
    const ForwardSolver solver(m, c.alpha, c.beta, c.grid);
    const auto sources = make_sources(c, p);
    const std::string ch = c.hash();

    RunResult res;
    json files = json::array();
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const MeasurementRecord rec = lss_apply(solver.solve(sources[i]), p);
        const fs::path f = out / record_name(i, sources.size());
        write_record(f, rec, ch);
        files.push_back({{"name", f.filename().string()}, {"sha256", file_sha256(f)}, {"source_hash", rec.meta.source_hash}});
        res.outputs.push_back(f);
    }
    const fs::path ex = out / "exact_spectral.json";
    write_spectral(ex, exact_spectral_data(p, c.beta), ch);
    files.push_back({{"name", ex.filename().string()}, {"sha256", file_sha256(ex)}});
    res.outputs.push_back(ex);

    json man;
    man["schema_version"] = kSchemaVersion;
    man["kind"] = "manifest";
    man["config_hash"] = ch;
    man["config"] = c.to_json();
    man["manifold_hash"] = m->hash();
    man["patch_hash"] = p.hash();
    man["files"] = files;
    const fs::path mf = out / "manifest.json";
    write_text(mf, man.dump(1) + "\n");
    res.outputs.push_back(mf);
    res.status = "simulate: wrote " + std::to_string(sources.size()) + " record(s)";
    return res;
}

RunResult run_recover(const ExperimentConfig& c, const std::vector<fs::path>& records, const fs::path& out,
                      const RunOptions& opt) {
    c.validate();
    if (opt.workers > 0) omp_set_num_threads(opt.workers);
    if (records.empty()) throw InvalidParameter("recover: no record files given");
    auto m = make_manifold(c);
    const Patch p = make_patch(m, c.patch);
    const auto sources = make_sources(c, p);

    std::vector<MeasurementRecord> recs;
    std::set<std::string> expected;
    for (const auto& s : sources) expected.insert(s.hash());
    bool all_zero = true;
    for (const auto& f : records) {
        check_manifest(f);
        MeasurementRecord r = read_record(f);
        if (r.meta.manifold_hash != m->hash()) throw ProvenanceError(f.string() + ": manifold hash differs from the config");
        if (r.meta.patch_hash != p.hash()) throw ProvenanceError(f.string() + ": patch hash differs from the config");
        if (r.meta.alpha != c.alpha || r.meta.beta != c.beta)
            throw ProvenanceError(f.string() + ": alpha/beta differ from the config");
        if (!(r.grid == c.grid)) throw ProvenanceError(f.string() + ": time grid differs from the config");
        if (!expected.count(r.meta.source_hash)) throw ProvenanceError(f.string() + ": source hash differs from the config");
        all_zero = all_zero && r.values.cwiseAbs().maxCoeff() == 0.0;
        recs.push_back(std::move(r));
    }
    fs::create_directories(out);
    const std::string ch = c.hash();
    RunResult res;
    std::ostringstream rep;
    rep << "# recover\nconfig_hash " << ch << "\n";

    SpectralData sd;
    sd.beta = c.beta;
    sd.weights = p.weights();
    sd.provenance["origin"] = "recovered";
    sd.provenance["manifold_hash"] = m->hash();
    sd.provenance["patch_hash"] = p.hash();
    sd.provenance["config_hash"] = ch;

    if (all_zero) {
        sd.provenance["status"] = "empty";
        const fs::path sf = out / "spectral.json";
        write_spectral(sf, sd, ch);
        rep << "status EMPTY: the records vanish identically; no poles found\n";
        write_text(out / "report.txt", rep.str());
        res.outputs = {sf, out / "report.txt"};
        res.status = "recover: EMPTY (no poles found)";
        return res;
    }

    Gate gate;
    SolverAccess access(p, c.alpha, c.beta);

    // Windowed peeling of the single measurement.
    if (c.source.kind == SourceSpec::Kind::H) {
        const SourceH h = make_h(c, p);
        CsvTable peel{{"j", "window", "nodes", "residual", "newest_scale", "relative", "resolvable", "pass"}, {}};
        rep << "\n## windowed peeling\n";
        for (int j = 0; j < h.K(); ++j) {
            const PeelReport pr = peel_windowed(recs.front(), h, j, access);
            peel.add({std::to_string(j), csv_number(pr.window), std::to_string(pr.nodes), csv_number(pr.residual),
                      csv_number(pr.newest_scale), csv_number(pr.relative), pr.resolvable ? "1" : "0", pr.pass ? "1" : "0"});
            rep << "window " << j << " T' " << fmt(pr.window) << " relative " << fmt(pr.relative)
                << (pr.pass ? " PASS" : " FAIL") << (pr.resolvable ? "" : " (newest term below double resolution)") << "\n";
            if (!pr.pass) gate.failures.push_back("peeling window " + std::to_string(j) + " failed");
        }
        write_csv(out / "peel.csv", peel);
        res.outputs.push_back(out / "peel.csv");
    }

    const ProbePlan plan = plan_probes(c.alpha, c.recovery.abscissae);
    const auto pr = probe_hv(access, default_psi(p), plan);
    Eigen::MatrixXd traces(plan.z.size(), pr.size());
    double worst_tail = 0.0;
    for (std::size_t i = 0; i < pr.size(); ++i) {
        traces.col(i) = pr[i].trace;
        worst_tail = std::max(worst_tail, pr[i].worst_tail);
    }
    const PoleFit fit = fit_poles(plan.z, traces, c.recovery.k_max, c.recovery.fit);
    const SpectralData found = extract_projections(pr, p, fit, c.beta, c.recovery.extract);
    sd.entries = found.entries;
    sd.fit_misfit = found.fit_misfit;
    sd.z = found.z;
    sd.provenance["status"] = sd.empty() ? "empty" : "ok";
    for (std::size_t i = 0; i < records.size(); ++i) sd.provenance["record_" + std::to_string(i)] = file_sha256(records[i]);

    rep << "\n## poles\nabscissae " << plan.z.size() << " in [" << fmt(plan.z.front()) << ", " << fmt(plan.z.back())
        << "], bands " << plan.bands.size() << ", support points " << fit.support_points << "\n";
    rep << "fit misfit " << fmt(fit.misfit) << ", condition " << fmt(fit.condition) << ", worst tail ratio "
        << fmt(worst_tail) << "\n";
    CsvTable poles{{"k", "pole", "lambda", "rank", "misfit", "symmetry_defect", "psd_defect", "idempotency_defect"}, {}};
    for (std::size_t k = 0; k < sd.entries.size(); ++k) {
        const auto& e = sd.entries[k];
        poles.add({std::to_string(k), csv_number(e.pole), csv_number(e.lambda), std::to_string(e.rank), csv_number(e.misfit),
                   csv_number(e.symmetry_defect), csv_number(e.psd_defect), csv_number(e.idempotency_defect)});
        rep << "k " << k << " lambda " << fmt(e.lambda) << " rank " << e.rank << " psd_defect " << fmt(e.psd_defect) << "\n";
        if (e.psd_defect > c.recovery.warn_psd_defect)
            gate.warnings.push_back("entry " + std::to_string(k) + " psd defect " + fmt(e.psd_defect));
    }
    if (fit.misfit > c.recovery.warn_fit_misfit) gate.warnings.push_back("fit misfit " + fmt(fit.misfit));
    if (sd.empty()) rep << "status EMPTY: no poles found\n";

    // Acceptance targets.
    const auto& R = c.recovery;
    if (!R.expected_lambda.empty()) {
        rep << "\n## targets\n";
        const SpectralData ex = exact_spectral_data(p, c.beta);
        for (std::size_t k = 0; k < R.expected_lambda.size(); ++k) {
            if (k >= sd.entries.size()) {
                gate.failures.push_back("expected eigenvalue " + fmt(R.expected_lambda[k]) + " not found");
                continue;
            }
            const auto& e = sd.entries[k];
            const double lam = R.expected_lambda[k];
            const double err = std::fabs(e.lambda - lam) / std::max(1.0, std::fabs(lam));
            rep << "lambda " << fmt(lam) << " found " << fmt(e.lambda) << " rel " << fmt(err);
            if (err > R.lambda_rel_tol) gate.failures.push_back("lambda " + fmt(lam) + " off by " + fmt(err));
            if (!R.expected_ranks.empty()) {
                rep << " rank " << e.rank << "/" << R.expected_ranks[k];
                if (e.rank != R.expected_ranks[k]) gate.failures.push_back("rank of lambda " + fmt(lam) + " is " + std::to_string(e.rank));
            }
            if (R.frobenius_tol > 0.0 && k < ex.entries.size()) {
                const double fe = (e.residue - ex.entries[k].residue).norm() / ex.entries[k].residue.norm();
                rep << " frobenius " << fmt(fe);
                if (fe > R.frobenius_tol) gate.failures.push_back("projection of lambda " + fmt(lam) + " off by " + fmt(fe));
            }
            rep << "\n";
        }
    }

    const fs::path sf = out / "spectral.json";
    write_spectral(sf, sd, ch);
    write_csv(out / "poles.csv", poles);
    res.outputs.push_back(sf);
    res.outputs.push_back(out / "poles.csv");
    for (const auto& w : gate.warnings) rep << "warning " << w << "\n";
    for (const auto& f : gate.failures) rep << "failure " << f << "\n";
    res.warnings = gate.warnings;
    const bool fail = !gate.failures.empty() || (opt.strict && !gate.warnings.empty());
    rep << "status " << (sd.empty() ? "EMPTY" : (fail ? "FAIL" : "PASS")) << "\n";
    write_text(out / "report.txt", rep.str());
    res.outputs.push_back(out / "report.txt");
    res.exit_code = fail ? kExitTolerance : kExitOk;
    std::ostringstream st;
    st << "recover: " << sd.entries.size() << " distinct value(s)";
    if (!gate.failures.empty()) st << ", " << gate.failures.size() << " target(s) missed: " << gate.failures.front();
    else if (fail) st << ", strict: " << gate.warnings.front();
    res.status = st.str();
    return res;
}

RunResult run_wavecheck(const ExperimentConfig& c, const fs::path& spectral, const fs::path& out, const RunOptions& opt) {
    c.validate();
    if (opt.workers > 0) omp_set_num_threads(opt.workers);
    if (!fs::exists(spectral)) throw InvalidParameter("wavecheck: spectral data file " + spectral.string() + " is missing");
    const SpectralData sd = read_spectral(spectral);
    auto m = make_manifold(c);
    const Patch p = make_patch(m, c.patch);
    auto ph = sd.provenance.find("patch_hash");
    if (ph != sd.provenance.end() && ph->second != p.hash())
        throw ProvenanceError("wavecheck: spectral data was recovered on another patch");
    if (sd.empty()) throw InvalidParameter("wavecheck: spectral data is empty");
    fs::create_directories(out);

    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const TimeGrid& g = c.wave.grid;
    const auto& pts = m->points();
    CsvTable tab{{"source", "window", "t0", "t1", "relative_error"}, {}};
    double worst = 0.0;
    std::ostringstream rep;
    rep << "# wavecheck\nconfig_hash " << c.hash() << "\nspectral " << spectral.filename().string() << " entries "
        << sd.entries.size() << "\n";
    for (int s = 0; s < c.wave.n_sources; ++s) {
        const int center = p.indices()[std::min(p.size() - 1, static_cast<int>(u(rng) * p.size()))];
        const double r = 0.4 + 0.4 * u(rng);
        Eigen::VectorXd xi(p.size());
        for (int i = 0; i < p.size(); ++i) {
            const double dx = pts(p.indices()[i], 0) - pts(center, 0);
            const double dy = pts(p.indices()[i], 1) - pts(center, 1);
            xi(i) = std::exp(-(dx * dx + dy * dy) / (r * r));
        }
        const double width = (0.05 + 0.1 * u(rng)) * g.t_max;
        const double lo = (0.02 + 0.3 * u(rng)) * g.t_max;
        const ProbeProfile a = bump_probe(lo, lo + 2.0 * width);
        SpaceTimeSource src(p, g);
        src.add_term({a.a, a.a_dot, xi});
        const HypComparison cmp = compare_hyp(hyp_apply(sd, src), wave_oracle(src), p.weights());
        for (std::size_t w = 0; w < cmp.window_relative.size(); ++w)
            tab.add({std::to_string(s), std::to_string(w), csv_number(cmp.window_edges[w]), csv_number(cmp.window_edges[w + 1]),
                     csv_number(cmp.window_relative[w])});
        tab.add({std::to_string(s), "all", "0", csv_number(g.t_max), csv_number(cmp.l2_relative)});
        rep << "source " << s << " relative L2 error " << fmt(cmp.l2_relative) << "\n";
        worst = std::max(worst, cmp.l2_relative);
    }
    write_csv(out / "wavecheck.csv", tab);
    const bool pass = worst <= c.wave.gate;
    rep << "worst " << fmt(worst) << " gate " << fmt(c.wave.gate) << " status " << (pass ? "PASS" : "FAIL") << "\n";
    write_text(out / "wavecheck.txt", rep.str());
    RunResult res;
    res.outputs = {out / "wavecheck.csv", out / "wavecheck.txt"};
    res.exit_code = pass ? kExitOk : kExitTolerance;
    res.status = std::string("wavecheck: worst relative error ") + fmt(worst) + (pass ? " PASS" : " FAIL") + " (gate " + fmt(c.wave.gate) + ")";
    return res;
}

RunResult run_report(const fs::path& dir, const RunOptions&) {
    if (!fs::is_directory(dir)) throw InvalidParameter("report: " + dir.string() + " is not a directory");
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());
    RunResult res;
    for (const auto& f : entries) {
        if (f.extension() == ".frec") {
            const MeasurementRecord r = read_record(f);
            CsvTable t{{"t"}, {}};
            for (Eigen::Index j = 0; j < r.values.cols(); ++j) t.columns.push_back("v" + std::to_string(j));
            CsvTable n{{"t", "l2_norm", "max_abs"}, {}};
            for (int i = 0; i < r.n_nodes(); ++i) {
                std::vector<std::string> row{csv_number(r.grid.t(i))};
                for (Eigen::Index j = 0; j < r.values.cols(); ++j) row.push_back(csv_number(r.values(i, j)));
                t.add(std::move(row));
                n.add({csv_number(r.grid.t(i)), csv_number(r.values.row(i).norm()), csv_number(r.values.row(i).cwiseAbs().maxCoeff())});
            }
            const fs::path a = dir / (f.stem().string() + ".csv");
            const fs::path b = dir / (f.stem().string() + "_norm.csv");
            write_csv(a, t);
            write_csv(b, n);
            res.outputs.push_back(a);
            res.outputs.push_back(b);
        } else if (f.extension() == ".json" && f.filename() != "manifest.json") {
            const json j = json::parse(read_text(f));
            if (j.value("kind", "") != "spectral_data") continue;
            const SpectralData d = spectral_from_json(j);
            CsvTable t{{"k", "pole", "lambda", "rank", "trace"}, {}};
            for (std::size_t k = 0; k < d.entries.size(); ++k)
                t.add({std::to_string(k), csv_number(d.entries[k].pole), csv_number(d.entries[k].lambda),
                       std::to_string(d.entries[k].rank), csv_number(d.entries[k].residue.trace())});
            const fs::path a = dir / (f.stem().string() + "_poles.csv");
            write_csv(a, t);
            res.outputs.push_back(a);
        }
    }
    res.status = "report: wrote " + std::to_string(res.outputs.size()) + " table(s)";
    return res;
}

}  // namespace fracspec
