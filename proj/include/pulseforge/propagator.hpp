#pragma once

// Forward Schrodinger propagation used as the verification oracle. Nothing
// in here may depend on the inverse maps: a report is computed from the
// driving signal and the initial state only.

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "pulseforge/core.hpp"

namespace pulseforge {

using HamiltonianFn = std::function<Eigen::MatrixXcd(double)>;

/// Time-dependent lattice Hamiltonian, either sampled on a TimeGrid or given
/// as a closed form. Sampled signals are read between grid points by 4-point
/// cubic Lagrange interpolation.
class LatticeHamiltonianSignal {
public:
    /// H_ij = -T_ij for complex hoppings with T_ii = 0.
    static LatticeHamiltonianSignal from_hoppings(const TimeGrid& grid,
                                                  const std::vector<Eigen::MatrixXcd>& hoppings);
    /// Chain with real hopping T0 and on-site potentials v_i(t_k).
    static LatticeHamiltonianSignal from_onsite(const TimeGrid& grid, double T0,
                                                const std::vector<Eigen::VectorXd>& potentials);
    static LatticeHamiltonianSignal from_function(const TimeGrid& grid, Eigen::Index sites,
                                                  HamiltonianFn hamiltonian);

    const TimeGrid& grid() const noexcept { return grid_; }
    Eigen::Index sites() const noexcept { return sites_; }
    Eigen::MatrixXcd at(double t) const;

private:
    LatticeHamiltonianSignal(TimeGrid grid, Eigen::Index sites) : grid_(grid), sites_(sites) {}

    TimeGrid grid_;
    Eigen::Index sites_;
    std::vector<Eigen::MatrixXcd> samples_;
    HamiltonianFn function_;
};

/// Dense nearest-neighbour chain Hamiltonian -T0 (|i><i+1| + h.c.) + diag(v).
Eigen::MatrixXcd chain_hamiltonian(double T0, const Eigen::VectorXd& potentials);

struct LatticeTrajectory {
    TimeGrid grid;
    std::size_t stride = 1;
    std::vector<Eigen::VectorXcd> states; ///< states[c] lives at grid index c*stride

    double time(std::size_t c) const { return grid.time(c * stride); }
};

/// Fourth-order Magnus stepping (two Gauss-Legendre nodes plus the commutator
/// term), `substeps` steps per grid interval. States are kept every `stride`
/// grid points; the final point is always kept.
LatticeTrajectory propagate_lattice(const LatticeHamiltonianSignal& hamiltonian,
                                    const LatticeWavefunction& psi0, int substeps = 2,
                                    std::size_t stride = 1);

struct GridTrajectory {
    TimeGrid grid;
    SpatialGrid space;
    std::size_t stride = 1;
    std::vector<Eigen::ArrayXcd> states;

    double time(std::size_t c) const { return grid.time(c * stride); }
};

/// Crank-Nicolson on a hard-walled grid, potential sampled at the half step.
GridTrajectory propagate_grid_1d(const RealField1D& potential, const GridWavefunction1D& psi0,
                                 int substeps = 1, std::size_t stride = 1);

struct GroundState {
    double energy;
    Eigen::VectorXcd state;
    double gap;
    bool degenerate; ///< lowest level degenerate within 1e-10; lowest-index eigenvector returned
};

/// Lowest eigenpair; the first component with modulus > 1e-12 is made real
/// and positive.
GroundState ground_state_lattice(const Eigen::MatrixXcd& hamiltonian);

/// |<a|b>|^2
double fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);
double fidelity(const Eigen::ArrayXcd& a, const Eigen::ArrayXcd& b, const SpatialGrid& grid);

struct VerificationThresholds {
    double max_density_error = 1e-5;
    double min_fidelity = 1.0 - 1e-6;
    double max_norm_drift_rate = 1e-10; ///< per unit time
    double min_ground_state_overlap = 1.0 - 1e-6;
};

struct VerificationReport {
    double max_density_error = 0.0;
    std::optional<double> final_fidelity;
    std::optional<Complex> final_overlap; ///< <target|psi(t_end)>
    double norm_drift = 0.0;              ///< max_t |<psi|psi> - 1|
    double duration = 0.0;
    double schrodinger_residual = 0.0;
    std::vector<std::pair<double, double>> ground_state_overlaps; ///< (t, overlap^2)

    double norm_drift_rate() const { return duration > 0.0 ? norm_drift / duration : norm_drift; }
    bool passes(const VerificationThresholds& thresholds) const;
};

struct LatticeVerificationOptions {
    int substeps = 2;
    std::vector<double> ground_state_checkpoints;
    std::optional<Eigen::VectorXcd> target_final_state;
};

/// Propagates psi0 under `hamiltonian` and compares the on-site densities
/// with `target_densities` (width = sites) at every grid point.
VerificationReport verify_lattice(const LatticeHamiltonianSignal& hamiltonian,
                                  const std::optional<RealSeries>& target_densities,
                                  const LatticeWavefunction& psi0,
                                  const LatticeVerificationOptions& options = {});

struct GridVerificationOptions {
    int substeps = 1;
    std::optional<ComplexField1D> target_wavefunction;
};

/// Densities compared in the L2 sense, sqrt(int (n - n_target)^2 dx), worst
/// time step reported.
VerificationReport verify_grid(const RealField1D& potential,
                               const std::optional<RealField1D>& target_density,
                               const GridWavefunction1D& psi0,
                               const GridVerificationOptions& options = {});

/// max_t sqrt(int |psi - psi_ref|^2 dx)
double max_l2_error(const GridTrajectory& trajectory, const ComplexField1D& reference);

} // namespace pulseforge
