#pragma once

#include <vector>

#include "pulseforge/core.hpp"

namespace pulseforge {

/// Link observable Q_ij = K_ij + i J_ij per time step: K is the kinetic link
/// term, J the link current. Q_ij = conj(Q_ji), Q_ii = 0.
struct ComplexCurrent {
    TimeGrid grid;
    std::vector<Eigen::MatrixXcd> links;

    Eigen::Index sites() const { return links.empty() ? 0 : links.front().rows(); }
    Eigen::MatrixXd kinetic(std::size_t k) const { return links[k].real(); }
    Eigen::MatrixXd current(std::size_t k) const { return links[k].imag(); }
};

/// Complex hoppings T_ij(t_k) of i d/dt psi_i = -sum_j T_ij psi_j.
struct HoppingSignal {
    TimeGrid grid;
    std::vector<Eigen::MatrixXcd> hoppings;
};

/// Q_ij = 2 T_ij conj(psi_i) psi_j for one time step.
Eigen::MatrixXcd observable_from_state(const Eigen::MatrixXcd& hoppings,
                                       const Eigen::VectorXcd& psi);
Eigen::MatrixXcd observable_from_state(const Eigen::MatrixXcd& hoppings,
                                       const LatticeWavefunction& psi);

struct LatticeReconstruction {
    HoppingSignal hoppings;
    std::vector<Eigen::VectorXcd> states; ///< psi(t_k)
};

/// Rebuilds the hoppings and the wavefunction from a prescribed complex
/// current and a nodeless initial state:
///   |psi_i|^2 = |psi_i(t0)|^2 - int sum_j J_ij,
///   phase_i   = phase_i(t0) + int sum_j K_ij / (2 |psi_i|^2),
///   T_ij      = Q_ij / (2 conj(psi_i) psi_j).
/// Time integrals run on Q's grid; the default end-corrected rule is fourth
/// order, plain trapezoid second order.
LatticeReconstruction reconstruct_hopping(const ComplexCurrent& current,
                                          const LatticeWavefunction& psi0,
                                          Quadrature rule = Quadrature::CorrectedTrapezoid);

struct RepresentabilityViolation {
    std::size_t step;
    double time;
    Eigen::Index i;
    Eigen::Index j;
    double excess; ///< |Q_ij|^2 - 4 T0^2 n_i n_j
};

struct RepresentabilityReport {
    std::vector<RepresentabilityViolation> violations;
    bool representable() const { return violations.empty(); }
};

/// Flags every (link, step) where |Q_ij|^2 exceeds 4 T0^2 n_i n_j, the largest
/// value reachable with hopping amplitude T0.
RepresentabilityReport check_representability(const ComplexCurrent& current,
                                              const RealSeries& densities, double T0);

/// max_k || i dpsi/dt + T psi || with a central difference in time.
double hopping_schrodinger_residual(const HoppingSignal& hoppings,
                                    const std::vector<Eigen::VectorXcd>& states);

} // namespace pulseforge
