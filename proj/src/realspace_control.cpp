#include "pulseforge/realspace_control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pulseforge/chain_control.hpp"

namespace pulseforge {

namespace {

using Row = Eigen::ArrayXd;
using Field = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_same_grids(const RealField1D& a, const RealField1D& b, const char* what)
{
    if (!(a.space == b.space) || !(a.time == b.time))
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": grids differ");
}

void require_field_finite(const RealField1D& f, const char* what)
{
    require_finite(std::span<const double>(f.values.data(), static_cast<std::size_t>(f.values.size())),
                   what);
}

// Second order in time; one-sided stencils at the ends.
Field time_derivative(const Field& values, double dt)
{
    const Eigen::Index steps = values.rows();
    Field out(steps, values.cols());
    if (steps < 3)
        throw Error(ErrorCode::InvalidInput, "time derivative needs at least three samples");
    for (Eigen::Index k = 1; k + 1 < steps; ++k)
        out.row(k) = (values.row(k + 1) - values.row(k - 1)) / (2.0 * dt);
    out.row(0) = (-3.0 * values.row(0) + 4.0 * values.row(1) - values.row(2)) / (2.0 * dt);
    const Eigen::Index e = steps - 1;
    out.row(e) = (3.0 * values.row(e) - 4.0 * values.row(e - 1) + values.row(e - 2)) / (2.0 * dt);
    return out;
}

Row space_derivative(const Row& f, double dx)
{
    const Eigen::Index n = f.size();
    Row out(n);
    for (Eigen::Index i = 1; i + 1 < n; ++i)
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    return out;
}

// Signed cumulative trapezoid measured from node `from`.
Row cumulative_from(const Row& f, double dx, Eigen::Index from)
{
    const Eigen::Index n = f.size();
    Row out(n);
    out[from] = 0.0;
    for (Eigen::Index i = from + 1; i < n; ++i)
        out[i] = out[i - 1] + 0.5 * dx * (f[i] + f[i - 1]);
    for (Eigen::Index i = from - 1; i >= 0; --i)
        out[i] = out[i + 1] - 0.5 * dx * (f[i] + f[i + 1]);
    return out;
}

// Nodes with `defined` false take the value of the nearest defined node.
void hold_outside(Row& values, const Eigen::Array<bool, Eigen::Dynamic, 1>& defined)
{
    const Eigen::Index n = values.size();
    Eigen::Index first = -1;
    Eigen::Index last = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (defined[i]) {
            if (first < 0)
                first = i;
            last = i;
        }
    }
    if (first < 0)
        throw Error(ErrorCode::VanishingDensity, "density below floor at every node");
    for (Eigen::Index i = 0; i < first; ++i)
        values[i] = values[first];
    for (Eigen::Index i = last + 1; i < n; ++i)
        values[i] = values[last];
    double carry = values[first];
    for (Eigen::Index i = first; i <= last; ++i) {
        if (defined[i])
            carry = values[i];
        else
            values[i] = carry;
    }
}

Row bohm_row(const Row& density, double dx, double mass)
{
    const Eigen::Index n = density.size();
    const Row root = density.max(0.0).sqrt();
    Row out = Row::Zero(n);
    Eigen::Array<bool, Eigen::Dynamic, 1> defined(n);
    defined.setConstant(false);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        if (density[i] > density_floor) {
            out[i] = (root[i + 1] - 2.0 * root[i] + root[i - 1]) / (dx * dx * 2.0 * mass * root[i]);
            defined[i] = true;
        }
    }
    hold_outside(out, defined);
    return out;
}

Field cumulative_in_time(const Field& rate, double dt)
{
    Field out(rate.rows(), rate.cols());
    out.row(0).setZero();
    for (Eigen::Index k = 1; k < rate.rows(); ++k)
        out.row(k) = out.row(k - 1) + 0.5 * dt * (rate.row(k) + rate.row(k - 1));
    return out;
}

void require_contiguous_support(const Row& density, const Eigen::Array<bool, 1, Eigen::Dynamic>& interior,
                                std::size_t step)
{
    Eigen::Index first = -1;
    Eigen::Index last = -1;
    for (Eigen::Index i = 0; i < interior.size(); ++i) {
        if (interior[i]) {
            if (first < 0)
                first = i;
            last = i;
        }
    }
    for (Eigen::Index i = first; i >= 0 && i <= last; ++i) {
        if (!(density[i] > density_floor))
            throw Error(ErrorCode::VanishingDensity,
                        "density node inside the support at step " + std::to_string(step));
    }
}

double harmonic_chi(double x, double omega0, double mass)
{
    return std::pow(mass * omega0 / std::numbers::pi, 0.25) * std::exp(-0.5 * mass * omega0 * x * x);
}

} // namespace

Mask1D interior_mask(const RealField1D& density)
{
    Mask1D mask(density.values.rows(), density.values.cols());
    for (Eigen::Index k = 0; k < density.values.rows(); ++k) {
        const double peak = density.values.row(k).maxCoeff();
        mask.row(k) = (density.values.row(k) > density_floor) &&
                      (density.values.row(k) >= interior_fraction * peak);
    }
    return mask;
}

VelocityReconstruction velocity_from_density_1d(const RealField1D& density, const RealField1D* rate)
{
    require_field_finite(density, "density");
    if ((density.values < 0.0).any())
        throw Error(ErrorCode::InvalidInput, "negative density");
    if (density.space.n_points() < 3)
        throw Error(ErrorCode::InvalidInput, "spatial grid needs at least three nodes");
    Field dn;
    if (rate) {
        require_same_grids(density, *rate, "density rate");
        require_field_finite(*rate, "density rate");
        dn = rate->values;
    } else {
        dn = time_derivative(density.values, density.time.dt());
    }

    const double dx = density.space.dx();
    const Eigen::Index nodes = density.values.cols();
    VelocityReconstruction out{RealField1D(density.space, density.time, density.mass),
                               interior_mask(density), 0.0};
    for (Eigen::Index k = 0; k < density.values.rows(); ++k) {
        const Row n = density.values.row(k).transpose();
        const Row r = dn.row(k).transpose();
        const Row left = cumulative_from(r, dx, 0);
        const double total = left[nodes - 1];
        const double scale = trapezoid_norm(density.space, r.abs());
        out.max_norm_drift = std::max(out.max_norm_drift, std::abs(total));
        if (std::abs(total) > 1e-6 * (1.0 + scale))
            throw Error(ErrorCode::NormalizationDrift,
                        "density norm not conserved at step " + std::to_string(k));

        Eigen::Index peak = 0;
        n.maxCoeff(&peak);
        Row v(nodes);
        Eigen::Array<bool, Eigen::Dynamic, 1> defined(nodes);
        for (Eigen::Index i = 0; i < nodes; ++i) {
            defined[i] = n[i] > density_floor;
            const double flux = i <= peak ? left[i] : left[i] - total;
            v[i] = defined[i] ? -flux / n[i] : 0.0;
        }
        hold_outside(v, defined);
        out.velocity.values.row(k) = v.transpose();
    }
    return out;
}

PotentialReconstruction potential_from_density_1d(const RealField1D& density, const RealField1D& velocity,
                                                  double initial_phase)
{
    require_same_grids(density, velocity, "velocity");
    require_field_finite(density, "density");
    require_field_finite(velocity, "velocity");
    if ((density.values < 0.0).any())
        throw Error(ErrorCode::InvalidInput, "negative density");
    if (density.space.n_points() < 3)
        throw Error(ErrorCode::InvalidInput, "spatial grid needs at least three nodes");
    if (!std::isfinite(initial_phase))
        throw Error(ErrorCode::InvalidInput, "initial phase must be finite");

    const double m = density.mass;
    const double dx = density.space.dx();
    const double dt = density.time.dt();
    const Eigen::Index steps = density.values.rows();
    const Eigen::Index mid = density.space.mid_index();

    PotentialReconstruction out{RealField1D(density.space, density.time, m),
                                ComplexField1D(density.space, density.time, m), interior_mask(density), 0.0};

    const Field dn = time_derivative(density.values, dt);
    const Field dv = time_derivative(velocity.values, dt);

    double scale = 0.0;
    for (Eigen::Index k = 0; k < steps; ++k) {
        require_contiguous_support(density.values.row(k).transpose(), out.interior.row(k),
                                   static_cast<std::size_t>(k));
        const Row flux_div = space_derivative((density.values.row(k) * velocity.values.row(k)).transpose(), dx);
        for (Eigen::Index i = 0; i < density.values.cols(); ++i) {
            if (!out.interior(k, i))
                continue;
            out.continuity_residual = std::max(out.continuity_residual, std::abs(dn(k, i) + flux_div[i]));
            scale = std::max({scale, std::abs(dn(k, i)), std::abs(flux_div[i])});
        }
    }
    if (out.continuity_residual > 1e-2 * scale + 1e-8)
        throw Error(ErrorCode::ContinuityInconsistency, "velocity does not transport the density");

    Eigen::ArrayXd anchor_rate(steps);
    for (Eigen::Index k = 0; k < steps; ++k) {
        const Row n = density.values.row(k).transpose();
        const Row v = velocity.values.row(k).transpose();
        const Row raw = bohm_row(n, dx, m) - m * cumulative_from(dv.row(k).transpose(), dx, mid) - 0.5 * m * v.square();
        anchor_rate[k] = raw[mid];
        out.potential.values.row(k) = (raw - raw[mid]).transpose();
    }

    double anchor_phase = initial_phase;
    for (Eigen::Index k = 0; k < steps; ++k) {
        if (k > 0)
            anchor_phase += 0.5 * dt * (anchor_rate[k] + anchor_rate[k - 1]);
        const Row phase = m * cumulative_from(velocity.values.row(k).transpose(), dx, mid) + anchor_phase;
        const Row amp = density.values.row(k).transpose().sqrt();
        for (Eigen::Index i = 0; i < amp.size(); ++i)
            out.wavefunction.values(k, i) = std::polar(amp[i], phase[i]);
    }
    return out;
}

VectorPotentialReconstruction vector_potential_from_current_1d(const RealField1D& current,
                                                               const GridWavefunction1D& psi0)
{
    require_field_finite(current, "current");
    if (!(current.space == psi0.grid()))
        throw Error(ErrorCode::DimensionMismatch, "current and initial state grids differ");
    if (current.space.n_points() < 3)
        throw Error(ErrorCode::InvalidInput, "spatial grid needs at least three nodes");

    const double m = psi0.mass();
    const double dx = current.space.dx();
    const double dt = current.time.dt();
    const Eigen::Index steps = current.values.rows();
    const Eigen::Index nodes = current.values.cols();

    const Row n0 = psi0.amplitudes().abs2();
    Row phase0 = psi0.amplitudes().arg();
    for (Eigen::Index i = 1; i < nodes; ++i) {
        const double jump = phase0[i] - phase0[i - 1];
        phase0[i] -= 2.0 * std::numbers::pi * std::round(jump / (2.0 * std::numbers::pi));
    }

    Field div(steps, nodes);
    for (Eigen::Index k = 0; k < steps; ++k)
        div.row(k) = space_derivative(current.values.row(k).transpose(), dx).transpose();
    const Field transported = cumulative_in_time(div, dt);

    VectorPotentialReconstruction out{RealField1D(current.space, current.time, m),
                                      ComplexField1D(current.space, current.time, m),
                                      RealField1D(current.space, current.time, m),
                                      RealField1D(current.space, current.time, m), Mask1D()};
    for (Eigen::Index k = 0; k < steps; ++k) {
        for (Eigen::Index i = 0; i < nodes; ++i) {
            const double n = n0[i] - transported(k, i);
            if (n0[i] > density_floor && !(n > density_floor))
                throw Error(ErrorCode::NodeFormation, "density node forms at t = " +
                                                          std::to_string(current.time.time(static_cast<std::size_t>(k))) +
                                                          ", x = " + std::to_string(current.space.x(i)));
            out.density.values(k, i) = std::max(n, 0.0);
        }
    }
    out.interior = interior_mask(out.density);

    Field integrand(steps, nodes);
    for (Eigen::Index k = 0; k < steps; ++k) {
        const Row n = out.density.values.row(k).transpose();
        Row v(nodes);
        Eigen::Array<bool, Eigen::Dynamic, 1> defined(nodes);
        for (Eigen::Index i = 0; i < nodes; ++i) {
            defined[i] = n[i] > density_floor;
            v[i] = defined[i] ? current.values(k, i) / n[i] : 0.0;
        }
        hold_outside(v, defined);
        out.velocity.values.row(k) = v.transpose();
        integrand.row(k) = (bohm_row(n, dx, m) - 0.5 * m * v.square()).transpose();
    }
    const Field phase = cumulative_in_time(integrand, dt).rowwise() + phase0.transpose();

    for (Eigen::Index k = 0; k < steps; ++k) {
        const Row p = phase.row(k).transpose();
        out.vector_potential.values.row(k) = (space_derivative(p, dx) - m * out.velocity.values.row(k).transpose()).transpose();
        const Row amp = out.density.values.row(k).transpose().sqrt();
        for (Eigen::Index i = 0; i < nodes; ++i)
            out.wavefunction.values(k, i) = std::polar(amp[i], p[i]);
    }
    return out;
}

namespace {

template <class Apply>
double gauge_residual(const RealField1D& field, const ComplexField1D& psi, const Mask1D& interior,
                      const Apply& apply)
{
    if (!(field.space == psi.space) || !(field.time == psi.time) || interior.rows() != psi.values.rows() ||
        interior.cols() != psi.values.cols())
        throw Error(ErrorCode::DimensionMismatch, "residual: grids differ");
    const double dt = psi.time.dt();
    const double dx = psi.space.dx();
    const double m = psi.mass;
    double worst = 0.0;
    for (Eigen::Index k = 1; k + 1 < psi.values.rows(); ++k) {
        for (Eigen::Index i = 1; i + 1 < psi.values.cols(); ++i) {
            if (!interior(k, i))
                continue;
            const Complex p = psi.values(k, i);
            const Complex dpt = (psi.values(k + 1, i) - psi.values(k - 1, i)) / (2.0 * dt);
            const Complex dp = (psi.values(k, i + 1) - psi.values(k, i - 1)) / (2.0 * dx);
            const Complex d2p = (psi.values(k, i + 1) - 2.0 * p + psi.values(k, i - 1)) / (dx * dx);
            const Complex r = Complex(0.0, 1.0) * dpt - apply(k, i, p, dp, d2p, m, dx);
            worst = std::max(worst, std::abs(r) / std::abs(p));
        }
    }
    return worst;
}

} // namespace

double coulomb_gauge_residual(const RealField1D& potential, const ComplexField1D& wavefunction,
                              const Mask1D& interior)
{
    return gauge_residual(potential, wavefunction, interior,
                          [&](Eigen::Index k, Eigen::Index i, Complex p, Complex, Complex d2p, double m, double) {
                              return -d2p / (2.0 * m) + potential.values(k, i) * p;
                          });
}

double temporal_gauge_residual(const RealField1D& vector_potential, const ComplexField1D& wavefunction,
                               const Mask1D& interior)
{
    const auto& a = vector_potential.values;
    return gauge_residual(vector_potential, wavefunction, interior,
                          [&](Eigen::Index k, Eigen::Index i, Complex p, Complex dp, Complex d2p, double m,
                              double dx) {
                              const double da = (a(k, i + 1) - a(k, i - 1)) / (2.0 * dx);
                              const Complex I(0.0, 1.0);
                              return (-d2p + I * da * p + 2.0 * I * a(k, i) * dp + a(k, i) * a(k, i) * p) /
                                     (2.0 * m);
                          });
}

void ScalingProgram::validate(double t0) const
{
    if (!alpha || !alpha_rate || !alpha_accel || !r0 || !r0_rate || !r0_accel || !base_potential ||
        !base_amplitude)
        throw Error(ErrorCode::InvalidInput, "scaling program is incomplete");
    if (!(mass > 0.0) || !std::isfinite(mass) || !std::isfinite(base_energy))
        throw Error(ErrorCode::InvalidInput, "mass must be positive and energy finite");
    constexpr double tol = 1e-12;
    if (std::abs(alpha(t0) - 1.0) > tol || std::abs(alpha_rate(t0)) > tol || std::abs(r0(t0)) > tol ||
        std::abs(r0_rate(t0)) > tol)
        throw Error(ErrorCode::InvalidInput, "scaling program must start at alpha = 1, r0 = 0 at rest");
}

ScalingProgram harmonic_base(double omega0, double mass)
{
    if (!(omega0 > 0.0) || !(mass > 0.0))
        throw Error(ErrorCode::InvalidInput, "oscillator frequency and mass must be positive");
    ScalingProgram p;
    p.mass = mass;
    p.base_energy = 0.5 * omega0;
    p.base_potential = [omega0, mass](double x) { return 0.5 * mass * omega0 * omega0 * x * x; };
    p.base_amplitude = [omega0, mass](double x) { return harmonic_chi(x, omega0, mass); };
    return p;
}

void set_smooth_step_motion(ScalingProgram& program, double tau, double stretch, double shift)
{
    if (!(tau > 0.0))
        throw Error(ErrorCode::InvalidInput, "ramp duration must be positive");
    if (!(stretch > -1.0))
        throw Error(ErrorCode::Domain, "stretch must keep alpha positive");
    auto phase = [tau](double t) { return std::clamp(t / tau, 0.0, 1.0); };
    auto inside = [tau](double t) { return t > 0.0 && t < tau; };
    program.alpha = [=](double t) { return 1.0 + stretch * smooth_step(phase(t)); };
    program.alpha_rate = [=](double t) {
        return inside(t) ? stretch * smooth_step_derivative(phase(t)) / tau : 0.0;
    };
    program.alpha_accel = [=](double t) {
        return inside(t) ? stretch * smooth_step_second_derivative(phase(t)) / (tau * tau) : 0.0;
    };
    program.r0 = [=](double t) { return shift * smooth_step(phase(t)); };
    program.r0_rate = [=](double t) { return inside(t) ? shift * smooth_step_derivative(phase(t)) / tau : 0.0; };
    program.r0_accel = [=](double t) {
        return inside(t) ? shift * smooth_step_second_derivative(phase(t)) / (tau * tau) : 0.0;
    };
}

ScalingObservables scaling_observables(const ScalingProgram& program, const SpatialGrid& space,
                                       const TimeGrid& time)
{
    program.validate(time.t_start());
    ScalingObservables out{RealField1D(space, time, program.mass), RealField1D(space, time, program.mass)};
    const Eigen::ArrayXd x = space.nodes();
    for (std::size_t k = 0; k < time.size(); ++k) {
        const double t = time.time(k);
        const double a = program.alpha(t);
        if (!(a > 0.0))
            throw Error(ErrorCode::Domain, "scale factor must stay positive");
        const double r = program.r0(t);
        const double rate = program.alpha_rate(t) / a;
        const double drift = program.r0_rate(t);
        const auto row = static_cast<Eigen::Index>(k);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double chi = program.base_amplitude((x[i] - r) / a);
            out.density.values(row, i) = chi * chi / a;
            out.velocity.values(row, i) = rate * (x[i] - r) + drift;
        }
    }
    return out;
}

double base_state_residual(const ScalingProgram& program, const SpatialGrid& space)
{
    const double h = std::min(space.dx(), 1e-2);
    const auto& chi = program.base_amplitude;
    auto second = [&chi](double x, double step) {
        return (chi(x + step) - 2.0 * chi(x) + chi(x - step)) / (step * step);
    };
    double residual = 0.0;
    double kinetic = 0.0;
    double potential = 0.0;
    for (Eigen::Index i = 0; i < space.n_points(); ++i) {
        const double x = space.x(i);
        const double d2 = (4.0 * second(x, 0.5 * h) - second(x, h)) / 3.0;
        const double kin = -d2 / (2.0 * program.mass);
        const double pot = (program.base_potential(x) - program.base_energy) * chi(x);
        residual += (kin + pot) * (kin + pot);
        kinetic += kin * kin;
        potential += pot * pot;
    }
    const double scale = std::sqrt(kinetic) + std::sqrt(potential);
    if (!(scale > 0.0))
        throw Error(ErrorCode::BaseStateValidation, "base state vanishes on the grid");
    return std::sqrt(residual) / scale;
}

ScalingSolution scaling_solution(const ScalingProgram& program, const SpatialGrid& space, const TimeGrid& time)
{
    program.validate(time.t_start());
    const double residual = base_state_residual(program, space);
    if (!(residual <= 1e-6))
        throw Error(ErrorCode::BaseStateValidation,
                    "base amplitude is not an eigenstate of the base potential (relative residual " +
                        std::to_string(residual) + ")");

    const double m = program.mass;
    const double e0 = program.base_energy;
    ScalingSolution out{RealField1D(space, time, m), ComplexField1D(space, time, m), residual};
    const Eigen::ArrayXd x = space.nodes();
    double dynamic_phase = 0.0;
    double previous = 0.0;
    for (std::size_t k = 0; k < time.size(); ++k) {
        const double t = time.time(k);
        const double a = program.alpha(t);
        if (!(a > 0.0))
            throw Error(ErrorCode::Domain, "scale factor must stay positive");
        const double a_rate = program.alpha_rate(t);
        const double a_accel = program.alpha_accel(t);
        const double r = program.r0(t);
        const double r_rate = program.r0_rate(t);
        const double r_accel = program.r0_accel(t);

        const double integrand = e0 / (a * a) + 0.5 * m * r_rate * r_rate;
        if (k > 0)
            dynamic_phase += 0.5 * time.dt() * (integrand + previous);
        previous = integrand;

        const auto row = static_cast<Eigen::Index>(k);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double xi = (x[i] - r) / a;
            const double offset = x[i] - r;
            out.potential.values(row, i) = program.base_potential(xi) / (a * a) - m * r_accel * x[i] -
                                           0.5 * m * (a_accel / a) * offset * offset;
            const double phase = 0.5 * m * (a_rate / a) * offset * offset + m * r_rate * x[i] - dynamic_phase;
            out.wavefunction.values(row, i) = std::polar(program.base_amplitude(xi) / std::sqrt(a), phase);
        }
    }
    return out;
}

OscillatorParams oscillator_parameters(const ScalingProgram& program, const TimeGrid& time)
{
    program.validate(time.t_start());
    const double m = program.mass;
    const double omega_sq0 = 2.0 * program.base_potential(1.0) / m;
    if (!(omega_sq0 > 0.0))
        throw Error(ErrorCode::NonHarmonic, "base potential is not a confining oscillator");
    for (const double x : {-3.0, -2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 1.5, 2.0, 3.0}) {
        const double v = program.base_potential(x);
        if (std::abs(v - 0.5 * m * omega_sq0 * x * x) > 1e-10 * (1.0 + std::abs(v)))
            throw Error(ErrorCode::NonHarmonic, "base potential is not harmonic");
    }

    OscillatorParams out{std::sqrt(omega_sq0), m, RealSeries(time, 1), RealSeries(time, 1), 0.0};
    for (std::size_t k = 0; k < time.size(); ++k) {
        const double t = time.time(k);
        const double a = program.alpha(t);
        if (!(a > 0.0))
            throw Error(ErrorCode::Domain, "scale factor must stay positive");
        const double w2 = omega_sq0 / (a * a * a * a) - program.alpha_accel(t) / a;
        const double r = program.r0(t);
        const double r_accel = program.r0_accel(t);
        const double f = m * w2 * r + m * r_accel;
        out.omega_sq(k, 0) = w2;
        out.force(k, 0) = f;
        out.newton_residual = std::max(out.newton_residual, std::abs(m * r_accel + m * w2 * r - f));
    }
    return out;
}

} // namespace pulseforge
