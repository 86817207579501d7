#pragma once

// One-dimensional continuum maps (hbar = 1). Fields are sampled on a
// SpatialGrid x TimeGrid; rows are time steps.
//
// Coulomb gauge:  i dpsi/dt = -psi''/(2m) + V psi
// Temporal gauge: i dpsi/dt = (-i d/dx - A)^2 psi / (2m)
//
// Densities may fall below density_floor in the far wings; those nodes are
// excluded from the maps' validity masks and carry held-over values.

#include <functional>

#include "pulseforge/core.hpp"

namespace pulseforge {

using Mask1D = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Nodes used for residual and consistency metrics: n > density_floor and
/// n >= interior_fraction * max_x n at that step.
inline constexpr double interior_fraction = 1e-3;

Mask1D interior_mask(const RealField1D& density);

struct VelocityReconstruction {
    RealField1D velocity;
    Mask1D interior;
    double max_norm_drift; ///< max_t |int dn/dt dx|
};

/// v = -(1/n) int_{x_min}^{x} dn/dt dx' (no flux through the walls); the
/// integral runs from the wall on the lighter side of the peak. dn/dt comes from `rate` when given, else from central differences in
/// time. Throws NormalizationDrift when int dn/dt dx departs from zero by
/// more than 1e-6 (1 + int |dn/dt| dx).
VelocityReconstruction velocity_from_density_1d(const RealField1D& density,
                                                const RealField1D* rate = nullptr);

struct PotentialReconstruction {
    RealField1D potential;
    ComplexField1D wavefunction;
    Mask1D interior;
    double continuity_residual; ///< max interior |dn/dt + d(nv)/dx|
};

/// V = (sqrt n)''/(2m sqrt n) - m int_{x_mid}^{x} dv/dt dx' - m v^2/2 - C'(t),
/// psi = sqrt(n) exp(i phi), phi = m int_{x_mid}^{x} v dx' + C(t), with C fixed
/// by V(x_mid, t) = 0 and C(t0) = `initial_phase`. Throws
/// ContinuityInconsistency when the interior continuity residual exceeds
/// 1e-2 of the largest interior |dn/dt|, |d(nv)/dx| (plus 1e-8), and
/// VanishingDensity for a node inside the support.
PotentialReconstruction potential_from_density_1d(const RealField1D& density,
                                                  const RealField1D& velocity,
                                                  double initial_phase = 0.0);

struct VectorPotentialReconstruction {
    RealField1D vector_potential;
    ComplexField1D wavefunction;
    RealField1D density;
    RealField1D velocity;
    Mask1D interior;
};

/// n = n0 - int dj/dx dt, v = j/n,
/// phi = phi0 + int [(sqrt n)''/(2m sqrt n) - m v^2/2] dt, A = phi' - m v.
/// Throws NodeFormation where n0 > density_floor but n <= density_floor.
VectorPotentialReconstruction vector_potential_from_current_1d(const RealField1D& current,
                                                               const GridWavefunction1D& psi0);

/// max over interior nodes (excluding the first and last step) of
/// |i dpsi/dt - H psi| / |psi|, centred differences in space and time.
double coulomb_gauge_residual(const RealField1D& potential, const ComplexField1D& wavefunction,
                              const Mask1D& interior);
double temporal_gauge_residual(const RealField1D& vector_potential, const ComplexField1D& wavefunction,
                               const Mask1D& interior);

/// Scale factor alpha, trajectory r0 and the ground state chi0 = sqrt(n0) of
/// V0 with energy E0. alpha(t0) = 1, r0(t0) = 0 and both rates vanish at t0.
struct ScalingProgram {
    using Fn = std::function<double(double)>;
    Fn alpha, alpha_rate, alpha_accel;
    Fn r0, r0_rate, r0_accel;
    Fn base_potential;
    Fn base_amplitude;
    double base_energy = 0.0;
    double mass = 1.0;

    /// Throws InvalidInput when an initial condition fails at t0 or a member is missing.
    void validate(double t0) const;
};

/// V0 = m w0^2 x^2/2, chi0 = (m w0/pi)^{1/4} exp(-m w0 x^2/2), E0 = w0/2; the
/// motion members are left empty.
ScalingProgram harmonic_base(double omega0, double mass = 1.0);

/// alpha = 1 + stretch S(t/tau), r0 = shift S(t/tau) with the smooth step S,
/// held constant after tau.
void set_smooth_step_motion(ScalingProgram& program, double tau, double stretch, double shift);

struct ScalingObservables {
    RealField1D density;  ///< alpha^{-1} n0((x - r0)/alpha)
    RealField1D velocity; ///< (alpha'/alpha)(x - r0) + r0'
};

/// Throws Domain when alpha <= 0.
ScalingObservables scaling_observables(const ScalingProgram& program, const SpatialGrid& space,
                                       const TimeGrid& time);

struct ScalingSolution {
    RealField1D potential;
    ComplexField1D wavefunction;
    double base_residual; ///< relative stationary residual of the base state
};

/// V = alpha^{-2} V0(xi) - m r0'' x - (m/2)(alpha''/alpha)(x - r0)^2, xi = (x - r0)/alpha,
/// psi = alpha^{-1/2} chi0(xi) exp(i phi),
/// phi = (m/2)(alpha'/alpha)(x - r0)^2 + m r0' x - int [E0/alpha^2 + m r0'^2/2] dt.
/// Throws BaseStateValidation when chi0 fails the stationary equation by more
/// than 1e-6 relative on the grid.
ScalingSolution scaling_solution(const ScalingProgram& program, const SpatialGrid& space,
                                 const TimeGrid& time);

/// || -chi0''/(2m) + (V0 - E0) chi0 || / (||chi0''/(2m)|| + ||(V0 - E0) chi0||) over
/// the nodes, second derivative by Richardson-extrapolated differences.
double base_state_residual(const ScalingProgram& program, const SpatialGrid& space);

struct OscillatorParams {
    double omega0;
    double mass;
    RealSeries omega_sq; ///< w0^2/alpha^4 - alpha''/alpha
    RealSeries force;    ///< m w^2 r0 + m r0''
    double newton_residual; ///< max_t |m r0'' + m w^2 r0 - f|
};

/// Throws NonHarmonic unless V0 = m w0^2 x^2/2 with w0^2 > 0.
OscillatorParams oscillator_parameters(const ScalingProgram& program, const TimeGrid& time);

} // namespace pulseforge
