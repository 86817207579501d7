#pragma once

// Spin-1/2 in an in-plane field, i d/dt psi = -B.S psi with Bz = 0. This is
// the two-site lattice with complex hopping  calB = (Bx - i By)/2 = T_12.
//
// Bloch parametrization:
//   psi = e^{i beta} (cos(theta/2), e^{i phi} sin(theta/2)).

#include <functional>
#include <vector>

#include "pulseforge/core.hpp"

namespace pulseforge {

inline constexpr double pole_margin = 1e-6;
inline constexpr double field_cap = 1e6;
inline constexpr double crossing_tol = 1e-8;

struct BlochTrajectory {
    TimeGrid grid;
    std::vector<double> theta;
    std::vector<double> phi;
    std::vector<double> theta_rate;
    std::vector<double> phi_rate;

    using Fn = std::function<double(double)>;
    static BlochTrajectory from_closed_form(const TimeGrid& grid, const Fn& theta, const Fn& phi,
                                            const Fn& theta_rate, const Fn& phi_rate);
    /// Rates by central differences of the samples.
    static BlochTrajectory from_samples(const TimeGrid& grid, std::vector<double> theta,
                                        std::vector<double> phi);

    void validate() const;
};

/// Bx, By per step.
struct FieldPulse {
    TimeGrid grid;
    RealSeries field; ///< width 2: Bx, By

    explicit FieldPulse(const TimeGrid& g) : grid(g), field(g, 2) {}

    Complex complex_field(std::size_t k) const { return 0.5 * Complex(field(k, 0), -field(k, 1)); }
    /// Two-site hoppings T_12 = calB, T_21 = conj(calB).
    std::vector<Eigen::MatrixXcd> hoppings() const;
};

/// gamma = dphi/dt tan(theta) and phi with their derivatives. `ratio` and
/// `ratio_rate` (u = phi'/gamma and du/dt) are optional closed forms; without
/// them u is phi'/gamma (phi''/gamma' where gamma = 0 and |phi'| <= crossing_tol)
/// and du/dt comes from central differences.
struct GammaProgram {
    using Fn = std::function<double(double)>;

    explicit GammaProgram(const TimeGrid& g) : grid(g) {}

    TimeGrid grid;
    Fn gamma;
    Fn gamma_rate;
    Fn phi;
    Fn phi_rate;
    Fn phi_accel;
    Fn ratio;
    Fn ratio_rate;
};

struct SpinSynthesis {
    FieldPulse pulse;
    RealSeries beta; ///< width 1
    BlochTrajectory trajectory;
};

/// Q = (phi' sin(theta) tan(theta) + i theta' sin(theta)) / 2. Throws
/// Singularity when |phi' tan(theta)| exceeds field_cap.
Complex bloch_to_observable(double theta, double phi, double theta_rate, double phi_rate);

/// Bx = phi' tan(theta) cos(phi) + theta' sin(phi),
/// By = -theta' cos(phi) + phi' tan(theta) sin(phi),
/// beta = beta0 + (1/2) int phi' tan(theta) tan(theta/2).
/// Throws Representability when |phi' tan(theta)| exceeds field_cap.
SpinSynthesis field_from_bloch(const BlochTrajectory& trajectory, double beta0 = 0.0);

/// theta = 2 atan(sqrt(u^2 + 1) - u), u = phi'/gamma.
double theta_from_ratio(double ratio);
/// Throws UndefinedLimit when gamma = 0.
double theta_from_gamma(double gamma, double phi_rate);

/// Bx = gamma cos(phi) - u'/(u^2 + 1) sin(phi),
/// By = u'/(u^2 + 1) cos(phi) + gamma sin(phi),
/// beta = beta0 + (1/2) int [gamma sqrt(u^2 + 1) - phi'].
SpinSynthesis field_from_gamma(const GammaProgram& program, double beta0 = 0.0);

/// gamma = (B0/4) s (s^2 + 3), phi = pi t/tau - sin(4 pi t/tau)/4 with
/// s = 1 - 2t/tau, so gamma(0) = -gamma(tau) = B0.
GammaProgram not_gate_program(double B0, double tau, const TimeGrid& grid);

struct NotGate {
    SpinSynthesis synthesis;
    Eigen::VectorXcd predicted_final_state;
    double phase_shift; ///< beta(tau) - beta(0)
};

/// Requires a grid spanning [0, tau]; starts from |<-| = (1, 1)/sqrt 2.
NotGate not_gate_pulse(double B0, double tau, const TimeGrid& grid);

/// e^{i beta} (cos(theta/2), e^{i phi} sin(theta/2))
Eigen::VectorXcd bloch_state(double theta, double phi, double beta = 0.0);
std::vector<Eigen::VectorXcd> spin_states(const BlochTrajectory& trajectory, const RealSeries& beta);

/// |<-| and |->|, the ground and excited states of -B0 Sx.
Eigen::VectorXcd spin_left();
Eigen::VectorXcd spin_right();

struct BlochViolation {
    std::size_t step;
    double time;
    double theta;
    double phi_rate;
};

struct BlochRepresentabilityReport {
    std::vector<BlochViolation> violations;
    bool representable() const { return violations.empty(); }
};

/// Flags steps on the equator (|theta - pi/2| < pole_margin) that move along
/// it (|phi'| > crossing_tol) fast enough to need a field beyond field_cap.
BlochRepresentabilityReport check_bloch_representability(const BlochTrajectory& trajectory);

} // namespace pulseforge
