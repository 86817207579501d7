#pragma once

// Nearest-neighbour chain with fixed real hopping T0, driven by real on-site
// potentials:  i d/dt psi_i = -T0 (psi_{i+1} + psi_{i-1}) + v_i(t) psi_i.
//
// A prescribed density trajectory fixes the link currents through the
// continuity equation and the kinetic link terms through |Q|^2 = 4 T0^2 n_i n_j;
// the on-site potential and the wavefunction then follow in closed form.
//
// Gauge: v_M(t) = 0 (the potential is anchored at the right edge).

#include <functional>
#include <vector>

#include "pulseforge/core.hpp"

namespace pulseforge {

struct ChainSpec {
    int sites = 11;
    double T0 = 1.0;

    void validate() const;
};

/// S(x) = x - sin(2 pi x) / (2 pi); S, S' and S'' are 0 at x=0 and S=1,
/// S'=S''=0 at x=1. Throws Domain outside [0, 1].
double smooth_step(double x);
double smooth_step_derivative(double x);
double smooth_step_second_derivative(double x);

/// psi_i = sqrt(2/(M+1)) sin(pi i/(M+1)), i = 1..M.
Eigen::VectorXd ground_state_amplitudes_chain(const ChainSpec& spec);
Eigen::VectorXd ground_state_density_chain(const ChainSpec& spec);

struct DensitySample {
    Eigen::VectorXd density;
    Eigen::VectorXd rate;         ///< dn/dt
    Eigen::VectorXd acceleration; ///< d2n/dt2
};

using DensityModel = std::function<DensitySample(double)>;

/// On-site densities with their first two time derivatives on a TimeGrid.
/// Rows sum to one; every entry exceeds density_floor.
class DensityProgram {
public:
    /// Samples a closed form, derivatives included.
    static DensityProgram from_model(const TimeGrid& grid, const DensityModel& model);
    /// Derivatives by central differences of the samples.
    static DensityProgram from_samples(RealSeries density);

    const TimeGrid& grid() const noexcept { return density_.grid(); }
    int sites() const noexcept { return static_cast<int>(density_.width()); }
    const RealSeries& density() const noexcept { return density_; }
    const RealSeries& rate() const noexcept { return rate_; }
    const RealSeries& acceleration() const noexcept { return acceleration_; }

private:
    DensityProgram(RealSeries density, RealSeries rate, RealSeries acceleration);

    RealSeries density_;
    RealSeries rate_;
    RealSeries acceleration_;
};

/// Stage one (0 <= t <= t1) blends the ground-state density into the uniform
/// 1/M profile with S(t/t1); stage two (t1 < t <= t2) contracts it into the
/// normalized Gaussian exp[-S((t-t1)/(t2-t1)) (i-c)^2], c = (M+1)/2.
DensityModel two_stage_density_model(const ChainSpec& spec, double t1, double t2);
DensityProgram two_stage_density(const ChainSpec& spec, double t1, double t2, const TimeGrid& grid);

/// Link series have width M-1; column i is the link (i+1, i+2) in 1-based sites.
struct LinkCurrents {
    RealSeries current; ///< J_{i,i+1} = -sum_{j<=i} dn_j/dt
    RealSeries rate;    ///< dJ/dt
};

LinkCurrents link_current_from_density(const DensityProgram& program);

/// -sum_{j=1..M} dn_j/dt per step: the current that would leave the chain
/// through its right end. Zero for a normalized program.
RealSeries boundary_leak(const DensityProgram& program);

struct LinkKinetic {
    RealSeries kinetic; ///< K_{i,i+1}
    RealSeries rate;    ///< dK/dt
    Eigen::VectorXd branch; ///< +-1 per link, read from psi0
};

/// K = s sqrt(4 T0^2 n_i n_{i+1} - J^2) with the per-link sign s of K(t0)
/// computed from psi0. Throws Representability when the radicand is not
/// positive and AmbiguousSign when |K(t0)| < 1e-8.
LinkKinetic kinetic_from_density(const DensityProgram& program, const LinkCurrents& currents,
                                 const ChainSpec& spec, const LatticeWavefunction& psi0);

struct ChainReconstruction {
    RealSeries potential; ///< v_i(t_k), width M
    std::vector<Eigen::VectorXcd> states;
    LinkCurrents currents;
    LinkKinetic kinetic;
    /// max |v_closed_form - v_extracted| over the grid (see onsite_potential).
    double dual_path_discrepancy = 0.0;
};

/// On-site potential and wavefunction generating `program` from psi0.
///
/// The potential is computed twice: from the closed form
///   v_i - v_{i+1} = dtheta_i/dt + (K_{i,i+1} + K_{i-1,i})/(2 n_i)
///                              - (K_{i+1,i+2} + K_{i,i+1})/(2 n_{i+1}),
///   dtheta_i/dt  = (K J' - J K') / (4 T0^2 n_i n_{i+1}),
/// and by direct extraction v_i = Re[(i dpsi_i/dt + T0 (psi_{i+1} + psi_{i-1})) / psi_i]
/// from a wavefunction assembled independently out of arg Q_{i,i+1} and the
/// right-edge phase, differentiated exactly rather than by finite differences.
/// The returned states use the closed-form potential.
ChainReconstruction onsite_potential(const DensityProgram& program, const ChainSpec& spec,
                                     const LatticeWavefunction& psi0);

/// Static potential whose ground state has density n, anchored at v_M = 0:
/// v_i = T0 (a_i - a_M), a_i = (sqrt n_{i-1} + sqrt n_{i+1}) / sqrt n_i.
Eigen::VectorXd lattice_bohm_potential(const Eigen::VectorXd& density, const ChainSpec& spec);

/// max_k || i dpsi/dt - H(t_k) psi || with central differences in time.
double chain_schrodinger_residual(const RealSeries& potential, double T0,
                                  const std::vector<Eigen::VectorXcd>& states);

} // namespace pulseforge
