#include "pulseforge/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pulseforge {
namespace {

constexpr double hermitian_tolerance = 1e-12;

void require_hermitian(const Eigen::MatrixXcd& h, const char* what)
{
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > hermitian_tolerance * scale)
        throw Error(ErrorCode::NonHermitian, std::string(what) + " is not Hermitian");
    require_finite(std::span<const Complex>(h.data(), h.size()), what);
}

/// exp(-i H) for Hermitian H.
Eigen::MatrixXcd unitary_exponential(const Eigen::MatrixXcd& h)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
    const Eigen::VectorXcd phases =
        eig.eigenvalues().unaryExpr([](double e) { return std::polar(1.0, -e); });
    return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

void magnus_step(const LatticeHamiltonianSignal& hamiltonian, double t, double h,
                 Eigen::VectorXcd& psi)
{
    static const double offset = std::sqrt(3.0) / 6.0;
    static const double commutator_weight = std::sqrt(3.0) / 12.0;
    const Eigen::MatrixXcd h1 = hamiltonian.at(t + (0.5 - offset) * h);
    const Eigen::MatrixXcd h2 = hamiltonian.at(t + (0.5 + offset) * h);
    const Eigen::MatrixXcd commutator = h2 * h1 - h1 * h2;
    Eigen::MatrixXcd effective =
        0.5 * h * (h1 + h2) - Complex(0.0, commutator_weight * h * h) * commutator;
    // Hermitian up to rounding; symmetrize before the eigen solve.
    effective = 0.5 * (effective + effective.adjoint()).eval();
    psi = unitary_exponential(effective) * psi;
}

} // namespace

LatticeHamiltonianSignal LatticeHamiltonianSignal::from_hoppings(
    const TimeGrid& grid, const std::vector<Eigen::MatrixXcd>& hoppings)
{
    if (hoppings.size() != grid.size())
        throw Error(ErrorCode::DimensionMismatch, "need one hopping matrix per grid point");
    const Eigen::Index m = hoppings.front().rows();
    LatticeHamiltonianSignal signal(grid, m);
    signal.samples_.reserve(hoppings.size());
    for (const auto& t : hoppings) {
        if (t.rows() != m || t.cols() != m)
            throw Error(ErrorCode::DimensionMismatch, "hopping matrices must be square and equal-sized");
        if (t.diagonal().cwiseAbs().maxCoeff() != 0.0)
            throw Error(ErrorCode::InvalidInput, "hopping matrix must have T_ii = 0");
        Eigen::MatrixXcd h = -t;
        require_hermitian(h, "hopping matrix");
        signal.samples_.push_back(std::move(h));
    }
    return signal;
}

Eigen::MatrixXcd chain_hamiltonian(double T0, const Eigen::VectorXd& potentials)
{
    const Eigen::Index m = potentials.size();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        h(i, i) = potentials[i];
        if (i + 1 < m) {
            h(i, i + 1) = -T0;
            h(i + 1, i) = -T0;
        }
    }
    return h;
}

LatticeHamiltonianSignal LatticeHamiltonianSignal::from_onsite(
    const TimeGrid& grid, double T0, const std::vector<Eigen::VectorXd>& potentials)
{
    if (potentials.size() != grid.size())
        throw Error(ErrorCode::DimensionMismatch, "need one potential vector per grid point");
    LatticeHamiltonianSignal signal(grid, potentials.front().size());
    signal.samples_.reserve(potentials.size());
    for (const auto& v : potentials) {
        if (v.size() != signal.sites_)
            throw Error(ErrorCode::DimensionMismatch, "potential vectors must be equal-sized");
        require_finite(std::span<const double>(v.data(), v.size()), "on-site potential");
        signal.samples_.push_back(chain_hamiltonian(T0, v));
    }
    return signal;
}

LatticeHamiltonianSignal LatticeHamiltonianSignal::from_function(const TimeGrid& grid,
                                                                 Eigen::Index sites,
                                                                 HamiltonianFn hamiltonian)
{
    LatticeHamiltonianSignal signal(grid, sites);
    signal.function_ = std::move(hamiltonian);
    return signal;
}

Eigen::MatrixXcd LatticeHamiltonianSignal::at(double t) const
{
    if (function_) {
        Eigen::MatrixXcd h = function_(t);
        if (h.rows() != sites_ || h.cols() != sites_)
            throw Error(ErrorCode::DimensionMismatch, "Hamiltonian function returned wrong size");
        require_hermitian(h, "Hamiltonian");
        return h;
    }
    const long n = grid_.n_steps();
    const double s = (t - grid_.t_start()) / grid_.dt();
    const long k = std::clamp(static_cast<long>(std::floor(s)), 0L, n - 1);
    const long start = std::clamp(k - 1, 0L, n - 3);
    const double u = s - static_cast<double>(start);
    // Lagrange basis on nodes 0,1,2,3.
    const double w0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    const double w1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    const double w2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    const double w3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    const auto idx = static_cast<std::size_t>(start);
    return w0 * samples_[idx] + w1 * samples_[idx + 1] + w2 * samples_[idx + 2] +
           w3 * samples_[idx + 3];
}

LatticeTrajectory propagate_lattice(const LatticeHamiltonianSignal& hamiltonian,
                                    const LatticeWavefunction& psi0, int substeps,
                                    std::size_t stride)
{
    if (psi0.sites() != hamiltonian.sites())
        throw Error(ErrorCode::DimensionMismatch, "initial state and Hamiltonian differ in size");
    if (substeps < 1 || stride < 1)
        throw Error(ErrorCode::InvalidInput, "substeps and stride must be positive");

    const TimeGrid& grid = hamiltonian.grid();
    const double h = grid.dt() / substeps;
    LatticeTrajectory out{grid, stride, {}};
    out.states.reserve(grid.size() / stride + 2);

    Eigen::VectorXcd psi = psi0.amplitudes();
    out.states.push_back(psi);
    const std::size_t last = grid.size() - 1;
    for (std::size_t k = 0; k < last; ++k) {
        const double t = grid.time(k);
        for (int s = 0; s < substeps; ++s)
            magnus_step(hamiltonian, t + s * h, h, psi);
        if ((k + 1) % stride == 0 || k + 1 == last)
            out.states.push_back(psi);
    }
    return out;
}

GridTrajectory propagate_grid_1d(const RealField1D& potential, const GridWavefunction1D& psi0,
                                 int substeps, std::size_t stride)
{
    if (!(potential.space == psi0.grid()))
        throw Error(ErrorCode::DimensionMismatch, "potential and initial state use different grids");
    if (substeps < 1 || stride < 1)
        throw Error(ErrorCode::InvalidInput, "substeps and stride must be positive");
    require_finite(std::span<const double>(potential.values.data(), potential.values.size()),
                   "grid potential");

    const SpatialGrid& space = potential.space;
    const TimeGrid& grid = potential.time;
    const double m = psi0.mass();
    const double dx = space.dx();
    const double dt = grid.dt() / substeps;
    const Eigen::Index n = space.n_points();
    const Eigen::Index interior = n - 2;

    const double kinetic_diag = 1.0 / (m * dx * dx);
    const double kinetic_off = -0.5 / (m * dx * dx);
    const Complex half_i_dt(0.0, 0.5 * dt);

    GridTrajectory out{grid, space, stride, {}};
    Eigen::ArrayXcd psi = psi0.amplitudes();
    psi[0] = 0.0;
    psi[n - 1] = 0.0;
    out.states.push_back(psi);

    Eigen::ArrayXcd rhs(interior);
    Eigen::ArrayXcd c_prime(interior);
    Eigen::ArrayXcd d_prime(interior);
    const Complex off = half_i_dt * kinetic_off;

    const std::size_t last = grid.size() - 1;
    for (std::size_t k = 0; k < last; ++k) {
        for (int s = 0; s < substeps; ++s) {
            // Potential at the half step of substep s, linear in time between samples.
            const double frac = (s + 0.5) / substeps;
            const auto row0 = potential.values.row(static_cast<Eigen::Index>(k));
            const auto row1 = potential.values.row(static_cast<Eigen::Index>(k + 1));

            for (Eigen::Index j = 0; j < interior; ++j) {
                const Eigen::Index i = j + 1;
                const double v = (1.0 - frac) * row0[i] + frac * row1[i];
                const Complex h_psi =
                    (kinetic_diag + v) * psi[i] + kinetic_off * (psi[i - 1] + psi[i + 1]);
                rhs[j] = psi[i] - half_i_dt * h_psi;
            }
            // Thomas algorithm for (1 + i dt/2 H) psi_new = rhs.
            for (Eigen::Index j = 0; j < interior; ++j) {
                const Eigen::Index i = j + 1;
                const double v = (1.0 - frac) * row0[i] + frac * row1[i];
                const Complex diag = 1.0 + half_i_dt * (kinetic_diag + v);
                if (j == 0) {
                    c_prime[j] = off / diag;
                    d_prime[j] = rhs[j] / diag;
                } else {
                    const Complex denom = diag - off * c_prime[j - 1];
                    c_prime[j] = off / denom;
                    d_prime[j] = (rhs[j] - off * d_prime[j - 1]) / denom;
                }
            }
            psi[interior] = d_prime[interior - 1];
            for (Eigen::Index j = interior - 2; j >= 0; --j)
                psi[j + 1] = d_prime[j] - c_prime[j] * psi[j + 2];
        }
        if ((k + 1) % stride == 0 || k + 1 == last)
            out.states.push_back(psi);
    }
    return out;
}

GroundState ground_state_lattice(const Eigen::MatrixXcd& hamiltonian)
{
    require_hermitian(hamiltonian, "Hamiltonian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(hamiltonian);
    Eigen::VectorXcd state = eig.eigenvectors().col(0);
    for (Eigen::Index i = 0; i < state.size(); ++i) {
        if (std::abs(state[i]) > 1e-12) {
            state *= std::conj(state[i]) / std::abs(state[i]);
            break;
        }
    }
    state.normalize();
    const double gap = hamiltonian.rows() > 1
                           ? eig.eigenvalues()[1] - eig.eigenvalues()[0]
                           : std::numeric_limits<double>::infinity();
    return {eig.eigenvalues()[0], state, gap, gap < 1e-10};
}

double fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b)
{
    if (a.size() != b.size())
        throw Error(ErrorCode::DimensionMismatch, "fidelity of states with different sizes");
    return std::norm(a.dot(b));
}

double fidelity(const Eigen::ArrayXcd& a, const Eigen::ArrayXcd& b, const SpatialGrid& grid)
{
    if (a.size() != b.size() || a.size() != grid.n_points())
        throw Error(ErrorCode::DimensionMismatch, "fidelity of states with different sizes");
    const Eigen::ArrayXcd prod = a.conjugate() * b;
    const Eigen::Index n = prod.size();
    const Complex overlap = grid.dx() * (prod.sum() - 0.5 * (prod[0] + prod[n - 1]));
    return std::norm(overlap);
}

bool VerificationReport::passes(const VerificationThresholds& thresholds) const
{
    if (max_density_error > thresholds.max_density_error)
        return false;
    if (final_fidelity && *final_fidelity < thresholds.min_fidelity)
        return false;
    if (norm_drift_rate() > thresholds.max_norm_drift_rate)
        return false;
    for (const auto& [t, overlap] : ground_state_overlaps) {
        if (overlap < thresholds.min_ground_state_overlap)
            return false;
    }
    return true;
}

VerificationReport verify_lattice(const LatticeHamiltonianSignal& hamiltonian,
                                  const std::optional<RealSeries>& target_densities,
                                  const LatticeWavefunction& psi0,
                                  const LatticeVerificationOptions& options)
{
    const TimeGrid& grid = hamiltonian.grid();
    if (target_densities) {
        if (!(target_densities->grid() == grid))
            throw Error(ErrorCode::DimensionMismatch, "signal and target use different time grids");
        if (static_cast<Eigen::Index>(target_densities->width()) != psi0.sites())
            throw Error(ErrorCode::DimensionMismatch, "target density width differs from site count");
    }

    const LatticeTrajectory traj = propagate_lattice(hamiltonian, psi0, options.substeps);
    VerificationReport report;
    report.duration = grid.t_end() - grid.t_start();

    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const Eigen::VectorXcd& psi = traj.states[k];
        report.norm_drift = std::max(report.norm_drift, std::abs(psi.squaredNorm() - 1.0));
        if (target_densities) {
            const auto row = target_densities->row(k);
            for (Eigen::Index i = 0; i < psi.size(); ++i)
                report.max_density_error =
                    std::max(report.max_density_error, std::abs(std::norm(psi[i]) - row[i]));
        }
    }

    const double dt = grid.dt();
    for (std::size_t k = 1; k + 1 < traj.states.size(); ++k) {
        const Eigen::VectorXcd lhs =
            Complex(0.0, 1.0) * (traj.states[k + 1] - traj.states[k - 1]) / (2.0 * dt);
        const Eigen::VectorXcd rhs = hamiltonian.at(grid.time(k)) * traj.states[k];
        report.schrodinger_residual = std::max(report.schrodinger_residual, (lhs - rhs).norm());
    }

    for (double t : options.ground_state_checkpoints) {
        const std::size_t k = grid.nearest_index(t);
        const GroundState gs = ground_state_lattice(hamiltonian.at(grid.time(k)));
        report.ground_state_overlaps.emplace_back(grid.time(k), fidelity(gs.state, traj.states[k]));
    }

    if (options.target_final_state) {
        const Eigen::VectorXcd& psi_end = traj.states.back();
        report.final_overlap = options.target_final_state->dot(psi_end);
        report.final_fidelity = std::norm(*report.final_overlap);
    }
    return report;
}

double max_l2_error(const GridTrajectory& trajectory, const ComplexField1D& reference)
{
    if (!(reference.space == trajectory.space) || !(reference.time == trajectory.grid))
        throw Error(ErrorCode::DimensionMismatch, "reference field uses different grids");
    double worst = 0.0;
    for (std::size_t c = 0; c < trajectory.states.size(); ++c) {
        const std::size_t k = std::min(c * trajectory.stride, trajectory.grid.size() - 1);
        const Eigen::ArrayXcd diff =
            trajectory.states[c] - reference.values.row(static_cast<Eigen::Index>(k)).transpose();
        worst = std::max(worst, std::sqrt(trapezoid_norm(trajectory.space, diff.abs2())));
    }
    return worst;
}

VerificationReport verify_grid(const RealField1D& potential,
                               const std::optional<RealField1D>& target_density,
                               const GridWavefunction1D& psi0,
                               const GridVerificationOptions& options)
{
    if (target_density &&
        (!(target_density->space == potential.space) || !(target_density->time == potential.time)))
        throw Error(ErrorCode::DimensionMismatch, "potential and target density use different grids");

    const GridTrajectory traj = propagate_grid_1d(potential, psi0, options.substeps);
    const SpatialGrid& space = potential.space;
    VerificationReport report;
    report.duration = potential.time.t_end() - potential.time.t_start();

    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const Eigen::ArrayXd density = traj.states[k].abs2();
        report.norm_drift = std::max(report.norm_drift, std::abs(trapezoid_norm(space, density) - 1.0));
        if (target_density) {
            const Eigen::ArrayXd diff =
                density - target_density->values.row(static_cast<Eigen::Index>(k)).transpose();
            report.max_density_error =
                std::max(report.max_density_error, std::sqrt(trapezoid_norm(space, diff.square())));
        }
    }

    if (options.target_wavefunction) {
        const auto& target = *options.target_wavefunction;
        const Eigen::ArrayXcd target_end = target.values.row(target.values.rows() - 1).transpose();
        const Eigen::ArrayXcd prod = target_end.conjugate() * traj.states.back();
        const Eigen::Index n = prod.size();
        report.final_overlap = space.dx() * (prod.sum() - 0.5 * (prod[0] + prod[n - 1]));
        report.final_fidelity = std::norm(*report.final_overlap);
    }
    return report;
}

} // namespace pulseforge
