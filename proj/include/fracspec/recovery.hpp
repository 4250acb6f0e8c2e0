#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fracspec/forward_solver.hpp"
#include "fracspec/laplace.hpp"
#include "fracspec/source_factory.hpp"

namespace fracspec {

/// Nonnegative probe time profile with its support.
struct ProbeProfile {
    TimeProfile a;
    TimeProfile a_dot;
    double lo = 0.0;
    double hi = 1.0;
};

/// Exp bump on (lo, hi), scaled by amp.
ProbeProfile bump_probe(double lo, double hi, double amp = 1.0);

/// Black-box access to the local source-to-solution map of one patch.
class ForwardAccess {
public:
    virtual ~ForwardAccess() = default;
    virtual const Patch& patch() const = 0;
    virtual double alpha() const = 0;
    /// Record of an arbitrary source.
    virtual MeasurementRecord record(const SpaceTimeSource& f) const = 0;
    /// Records of the probes a(t) xi_j on one grid.
    virtual std::vector<MeasurementRecord> records(const TimeGrid& g, const ProbeProfile& a,
                                                   const std::vector<Eigen::VectorXd>& xis) const = 0;
};

/// ForwardAccess backed by the modal solver; solvers are cached per grid.
class SolverAccess final : public ForwardAccess {
public:
    SolverAccess(Patch p, double alpha, double beta, Execution exec = Execution::Parallel);

    const Patch& patch() const override { return patch_; }
    double alpha() const override { return alpha_; }
    double beta() const { return beta_; }
    MeasurementRecord record(const SpaceTimeSource& f) const override;
    std::vector<MeasurementRecord> records(const TimeGrid& g, const ProbeProfile& a,
                                           const std::vector<Eigen::VectorXd>& xis) const override;

    const ForwardSolver& solver(const TimeGrid& g) const;

private:
    Patch patch_;
    double alpha_;
    double beta_;
    Execution exec_;
    mutable std::map<std::pair<double, int>, std::shared_ptr<ForwardSolver>> cache_;
};

/// One time grid and probe profile covering a range of abscissae.
struct ProbeBand {
    TimeGrid grid;
    ProbeProfile a;
    std::vector<int> members;  // indices into ProbePlan::s
};

/// Abscissae s_j with z_j = s_j^alpha log-spaced in [z_lo, z_hi], split into
/// bands so that every band satisfies s dt <= step_fraction and s t_max >= 30.
struct ProbePlan {
    double alpha = 1.0;
    std::vector<double> s;
    std::vector<double> z;
    std::vector<ProbeBand> bands;
};

struct AbscissaPolicy {
    double z_lo = 0.05;
    double z_hi = 100.0;
    int count = 48;
    int n_steps = 2048;
    double step_fraction = 0.05;
    int probe_nodes = 300;  // probe support width in time steps
};

ProbePlan plan_probes(double alpha, const AbscissaPolicy& policy = {});

struct HvProbeResult {
    Eigen::VectorXd xi;
    std::vector<double> s;
    std::vector<double> z;
    Eigen::MatrixXd hv;     // V-grid x abscissae: H_V(z_j) xi
    Eigen::VectorXd trace;  // <xi, H_V(z_j) xi>_{L2(V)}
    std::vector<double> la;  // Laplace transform of the probe profile
    double worst_tail = 0.0;
};

/// Relative floor for La(s) / La(0) below which probe_hv refuses to divide.
inline constexpr double kProbeFloor = 1e-12;

/// H_V(s^alpha) xi = L[L_V(a xi)](s) / La(s) for each xi on one grid.
std::vector<HvProbeResult> probe_hv(const ForwardAccess& access, const std::vector<Eigen::VectorXd>& xis,
                                    const ProbeProfile& a, const TimeGrid& g, const std::vector<double>& s,
                                    const LaplaceOptions& opt);

/// Runs every band of a plan and merges results per probe.
std::vector<HvProbeResult> probe_hv(const ForwardAccess& access, const std::vector<Eigen::VectorXd>& xis,
                                    const ProbePlan& plan, LaplaceOptions opt = {});

struct PoleEstimate {
    double value = 0.0;    // lambda^beta >= 0
    double residue = 0.0;  // largest trace residue
    /// Relative misfit of the residue refit with this pole removed.
    double misfit = 0.0;
};

struct PoleFitOptions {
    double aaa_tol = 1e-13;
    double residue_floor = 1e-3;  // relative to the largest residue
    double imag_tol = 1e-6;
    double condition_limit = 1e14;
};

struct PoleFit {
    std::vector<PoleEstimate> poles;  // ascending
    double misfit = 0.0;              // relative misfit of the final refit
    int support_points = 0;
    double condition = 0.0;
};

/// Pole of c / (z + p) from two samples.
double single_pole(double z1, double g1, double z2, double g2);

/// Set-valued barycentric rational fit of the traces (one column per probe),
/// cleanup, and pole-constrained least-squares residues.
PoleFit fit_poles(const std::vector<double>& z, const Eigen::MatrixXd& traces, int k_max,
                  const PoleFitOptions& opt = {});

/// Least-squares residues of y(z_j) ~ sum_k c_k / (z_j + p_k); throws
/// IllConditioned above condition_limit.
Eigen::MatrixXd partial_fraction_residues(const std::vector<double>& z, const std::vector<double>& poles,
                                          const Eigen::MatrixXd& y, double condition_limit = 1e14,
                                          double* condition = nullptr);

struct SpectralEntry {
    double pole = 0.0;    // lambda^beta
    double lambda = 0.0;  // pole^{1/beta'}
    Eigen::MatrixXd residue;  // V-grid operator
    int rank = 0;
    Eigen::VectorXd spectrum;  // eigenvalues of the weighted-symmetric residue, descending
    double symmetry_defect = 0.0;
    double psd_defect = 0.0;          // -min eigenvalue / max eigenvalue, clipped at 0
    double idempotency_defect = 0.0;  // ||Q^2 - Q|| / ||Q||, Q = residue / max eigenvalue
    double misfit = 0.0;
};

struct SpectralData {
    double beta = 1.0;  // declared
    Eigen::VectorXd weights;
    std::vector<SpectralEntry> entries;
    double fit_misfit = 0.0;
    std::vector<double> z;
    std::map<std::string, std::string> provenance;

    bool empty() const { return entries.empty(); }
};

struct ExtractOptions {
    double rank_tol = 0.05;  // relative to the entry's largest eigenvalue
    double condition_limit = 1e14;
};

/// Residue operators with the poles frozen. The probes must be independent and
/// span the restricted eigenfunctions of the patch; the residues vanish on the
/// weighted complement of the probe span.
SpectralData extract_projections(const std::vector<HvProbeResult>& probes, const Patch& patch,
                                 const PoleFit& poles, double beta, const ExtractOptions& opt = {});

/// Spectral data of the known spectrum on a patch, for comparisons.
SpectralData exact_spectral_data(const Patch& p, double beta, int n_groups = -1);

/// Evaluates sum_k R_k v / (z + pole_k).
Eigen::VectorXd spectral_apply(const SpectralData& d, double z, const Eigen::VectorXd& v);

inline constexpr double kPeelTolerance = 1e-8;

struct PeelReport {
    int j = 0;
    double window = 0.0;  // T' = (1 - 2^{-(j+1)}) S
    int nodes = 0;
    double residual = 0.0;       // max abs difference on the window
    double newest_scale = 0.0;   // max abs of L(h_{j+1} psi) on the window
    double relative = 0.0;       // residual / newest_scale
    std::vector<double> peel;    // max abs remainder after removing terms 1..m, m = 0..j+1
    /// The newest term exceeds 1e3 ulps of the record on the window, so a
    /// change in it can show up in double precision at all.
    bool resolvable = false;
    bool pass = false;
};

/// Checks that rec_h agrees on [0, T') with the forward record of the first
/// j + 1 terms of src, relative to the size of the newest term.
PeelReport peel_windowed(const MeasurementRecord& rec_h, const SourceH& src, int j, const ForwardAccess& access);

}  // namespace fracspec
