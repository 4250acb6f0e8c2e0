#include "fracspec/forward_solver.hpp"

#include <cmath>

#include "fracspec/hash.hpp"
#include "fracspec/special_kernels.hpp"

namespace fracspec {

namespace {

std::vector<double> sample_profile(const TimeProfile& a, const TimeGrid& g) {
    std::vector<double> v(g.size());
    for (int i = 0; i < g.size(); ++i) v[i] = a(g.t(i));
    return v;
}

// Fourth-order central differences, second-order one-sided at the ends.
Eigen::VectorXd fd_derivative(const Eigen::VectorXd& y, double dt) {
    const int n = static_cast<int>(y.size()) - 1;
    Eigen::VectorXd d(n + 1);
    d(0) = (-3 * y(0) + 4 * y(1) - y(2)) / (2 * dt);
    d(n) = (3 * y(n) - 4 * y(n - 1) + y(n - 2)) / (2 * dt);
    if (n >= 2) {
        d(1) = (y(2) - y(0)) / (2 * dt);
        d(n - 1) = (y(n) - y(n - 2)) / (2 * dt);
    }
    for (int i = 2; i <= n - 2; ++i) d(i) = (-y(i + 2) + 8 * y(i + 1) - 8 * y(i - 1) + y(i - 2)) / (12 * dt);
    return d;
}

}  // namespace

SpaceTimeSource::SpaceTimeSource(Patch patch, TimeGrid grid) : patch_(std::move(patch)), grid_(grid) {
    fracspec::validate(grid_);
}

SpaceTimeSource SpaceTimeSource::from_samples(Patch patch, TimeGrid grid, Eigen::MatrixXd values) {
    SpaceTimeSource s(std::move(patch), grid);
    if (values.rows() != grid.size() || values.cols() != s.patch_.size())
        throw InvalidParameter("from_samples: values must be grid.size() x patch.size()");
    s.dense_ = std::move(values);
    return s;
}

SpaceTimeSource& SpaceTimeSource::add_term(SourceTerm term) {
    if (!term.a) throw InvalidParameter("source term: missing time profile");
    if (term.xi.size() != patch_.size()) throw InvalidParameter("source term: xi must be a V-grid function");
    terms_.push_back(std::move(term));
    return *this;
}

Eigen::MatrixXd SpaceTimeSource::sample() const {
    Eigen::MatrixXd out = has_dense() ? dense_ : Eigen::MatrixXd::Zero(grid_.size(), patch_.size());
    for (const auto& t : terms_) {
        const auto a = sample_profile(t.a, grid_);
        out += Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()) * t.xi.transpose();
    }
    return out;
}

Eigen::MatrixXd SpaceTimeSource::sample_derivative() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid_.size(), patch_.size());
    if (has_dense())
        for (int c = 0; c < dense_.cols(); ++c) out.col(c) = fd_derivative(dense_.col(c), grid_.dt());
    for (const auto& t : terms_) {
        Eigen::VectorXd d;
        if (t.a_dot) {
            const auto v = sample_profile(t.a_dot, grid_);
            d = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
        } else {
            const auto v = sample_profile(t.a, grid_);
            d = fd_derivative(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()), grid_.dt());
        }
        out += d * t.xi.transpose();
    }
    return out;
}

Eigen::MatrixXd SpaceTimeSource::modal() const {
    return sample() * patch_.weights().asDiagonal() * patch_.basis();
}

Eigen::MatrixXd SpaceTimeSource::modal_derivative() const {
    return sample_derivative() * patch_.weights().asDiagonal() * patch_.basis();
}

void SpaceTimeSource::validate() const {
    const Eigen::MatrixXd s = sample();
    const double scale = s.cwiseAbs().maxCoeff();
    if (s.row(0).cwiseAbs().maxCoeff() != 0.0) throw InvalidParameter("source must vanish at t = 0");
    if (s.row(grid_.n_steps).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidParameter("source must vanish near t_max; enlarge the time grid");
}

std::string SpaceTimeSource::hash() const {
    Hasher h;
    h.text("source").text(patch_.hash()).number(grid_.t_max).integer(grid_.n_steps).matrix(sample());
    return h.hex();
}

Eigen::VectorXd ModalSolution::synthesize(int i) const {
    return manifold->basis() * coeffs.row(i).transpose();
}

ForwardSolver::ForwardSolver(std::shared_ptr<const SpectralManifold> m, double alpha, double beta, TimeGrid grid,
                             Execution exec)
    : manifold_(std::move(m)), alpha_(alpha), beta_(beta), grid_(grid), exec_(exec) {
    if (!manifold_) throw InvalidParameter("ForwardSolver: null manifold");
    validate(KernelParams{alpha, beta, 0.0});
    fracspec::validate(grid_);
    groups_ = group_distinct(*manifold_);
    const int ng = groups_.size();
    std::vector<std::unique_ptr<ConvolutionKernel>> built(ng);
#pragma omp parallel for schedule(dynamic) if (exec_ == Execution::Parallel)
    for (int g = 0; g < ng; ++g)
        built[g] = std::make_unique<ConvolutionKernel>(alpha_, std::pow(groups_.values[g], beta_), grid_);
    kernels_.reserve(ng);
    for (auto& k : built) kernels_.push_back(std::move(*k));
}

std::vector<double> ForwardSolver::group_response(int g, const std::vector<double>& a) const {
    if (g < 0 || g >= groups_.size()) throw InvalidParameter("group_response: group index out of range");
    return kernels_[g].apply(a);
}

Eigen::MatrixXd ForwardSolver::solve_loads(const Eigen::MatrixXd& b) const {
    if (b.rows() != grid_.size() || b.cols() != manifold_->n_modes())
        throw InvalidParameter("solve_loads: loads must be grid.size() x n_modes");
    const int nm = manifold_->n_modes();
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(b.rows(), nm);
    std::vector<int> group_of(nm);
    for (int g = 0; g < groups_.size(); ++g)
        for (int j = 0; j < groups_.count[g]; ++j) group_of[groups_.first[g] + j] = g;
#pragma omp parallel for schedule(dynamic) if (exec_ == Execution::Parallel)
    for (int k = 0; k < nm; ++k) {
        if (b.col(k).cwiseAbs().maxCoeff() == 0.0) continue;
        const Eigen::VectorXd col = b.col(k);
        Eigen::VectorXd out(col.size());
        kernels_[group_of[k]].apply(col.data(), out.data());
        u.col(k) = out;
    }
    return u;
}

ModalSolution ForwardSolver::solve(const SpaceTimeSource& f) const {
    if (f.grid() != grid_) throw InvalidParameter("solve: source grid differs from solver grid");
    if (f.patch().manifold().hash() != manifold_->hash()) throw InvalidParameter("solve: source lives on a different manifold");
    f.validate();
    ModalSolution sol;
    sol.manifold = manifold_;
    sol.grid = grid_;
    sol.alpha = alpha_;
    sol.beta = beta_;
    sol.source_hash = f.hash();
    sol.coeffs = Eigen::MatrixXd::Zero(grid_.size(), manifold_->n_modes());
    if (f.has_dense()) {
        const Eigen::MatrixXd b = f.dense() * f.patch().weights().asDiagonal() * f.patch().basis();
        sol.coeffs += solve_loads(b);
    }
    // Separable terms need one convolution per distinct eigenvalue.
    const Patch& p = f.patch();
    for (const auto& term : f.terms()) {
        const std::vector<double> a = sample_profile(term.a, grid_);
        const Eigen::RowVectorXd c = (term.xi.array() * p.weights().array()).matrix().transpose() * p.basis();
        const int ng = groups_.size();
#pragma omp parallel for schedule(dynamic) if (exec_ == Execution::Parallel)
        for (int g = 0; g < ng; ++g) {
            const auto cg = c.segment(groups_.first[g], groups_.count[g]);
            if (cg.cwiseAbs().maxCoeff() == 0.0) continue;
            const std::vector<double> y = kernels_[g].apply(a);
            const Eigen::Map<const Eigen::VectorXd> ym(y.data(), y.size());
            sol.coeffs.middleCols(groups_.first[g], groups_.count[g]) += ym * cg;
        }
    }
    return sol;
}

ModalSolution solve_modes(std::shared_ptr<const SpectralManifold> m, double alpha, double beta, const SpaceTimeSource& f,
                          Execution exec) {
    ForwardSolver solver(std::move(m), alpha, beta, f.grid(), exec);
    return solver.solve(f);
}

MeasurementRecord lss_apply(const ModalSolution& sol, const Patch& p) {
    if (!sol.manifold || p.manifold().hash() != sol.manifold->hash())
        throw InvalidParameter("lss_apply: patch and solution live on different manifolds");
    MeasurementRecord rec;
    rec.grid = sol.grid;
    rec.values = sol.coeffs * p.basis().transpose();
    rec.meta = RecordMeta{sol.alpha, sol.beta, sol.manifold->hash(), p.hash(), sol.source_hash};
    return rec;
}

MeasurementRecord lss_truncate(const MeasurementRecord& rec, double T) {
    const double t_end = rec.grid.t(rec.n_nodes() - 1);
    if (!(T > 0.0)) throw InvalidParameter("lss_truncate: T must be positive");
    if (T > t_end * (1.0 + 1e-12)) throw InvalidParameter("lss_truncate: T exceeds the record length");
    MeasurementRecord out = rec;
    if (T >= t_end * (1.0 - 1e-12)) return out;
    int keep = 1;
    while (keep < rec.n_nodes() && rec.grid.t(keep) < T) ++keep;
    out.values = rec.values.topRows(keep);
    return out;
}

double sup_bound_constant(double alpha, double beta, double T, double lambda2) {
    const double g = gamma(alpha + 1.0);
    return std::max(std::pow(T, 2 * alpha + 1) / (g * g), T / std::pow(lambda2, 2 * beta));
}

}  // namespace fracspec
