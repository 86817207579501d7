#include "pulseforge/chain_control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "pulseforge/lattice_map.hpp"

namespace pulseforge {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void require_unit_interval(double x)
{
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream os;
        os << "smooth step argument " << x << " outside [0, 1]";
        throw Error(ErrorCode::Domain, os.str());
    }
}

/// Clamps round-off excursions of t/t1 and friends back into [0, 1].
double unit_clamp(double x)
{
    if (x < 0.0 && x > -1e-12)
        return 0.0;
    if (x > 1.0 && x < 1.0 + 1e-12)
        return 1.0;
    return x;
}

void validate_row(const RealSeries& density, std::size_t k)
{
    double total = 0.0;
    for (std::size_t i = 0; i < density.width(); ++i) {
        const double n = density(k, i);
        if (!(n > density_floor)) {
            std::ostringstream os;
            os << "density on site " << i + 1 << " is " << n << " at t = " << density.grid().time(k);
            throw Error(ErrorCode::VanishingDensity, os.str());
        }
        total += n;
    }
    if (std::abs(total - 1.0) > 1e-10) {
        std::ostringstream os;
        os << "densities sum to " << total << " at t = " << density.grid().time(k);
        throw Error(ErrorCode::InvalidInput, os.str());
    }
}

} // namespace

void ChainSpec::validate() const
{
    if (sites < 2)
        throw Error(ErrorCode::InvalidInput, "chain needs at least 2 sites");
    if (!(T0 > 0.0) || !std::isfinite(T0))
        throw Error(ErrorCode::InvalidInput, "hopping amplitude T0 must be positive");
}

double smooth_step(double x)
{
    require_unit_interval(x);
    return x - std::sin(two_pi * x) / two_pi;
}

double smooth_step_derivative(double x)
{
    require_unit_interval(x);
    return 1.0 - std::cos(two_pi * x);
}

double smooth_step_second_derivative(double x)
{
    require_unit_interval(x);
    return two_pi * std::sin(two_pi * x);
}

Eigen::VectorXd ground_state_amplitudes_chain(const ChainSpec& spec)
{
    spec.validate();
    const int m = spec.sites;
    Eigen::VectorXd psi(m);
    const double norm = std::sqrt(2.0 / (m + 1));
    for (int i = 0; i < m; ++i)
        psi[i] = norm * std::sin(std::numbers::pi * (i + 1) / (m + 1));
    return psi;
}

Eigen::VectorXd ground_state_density_chain(const ChainSpec& spec)
{
    return ground_state_amplitudes_chain(spec).array().square().matrix();
}

DensityProgram::DensityProgram(RealSeries density, RealSeries rate, RealSeries acceleration)
    : density_(std::move(density)), rate_(std::move(rate)), acceleration_(std::move(acceleration))
{
    if (density_.width() < 2)
        throw Error(ErrorCode::InvalidInput, "density program needs at least 2 sites");
    require_finite(std::span<const double>(density_.data()), "density program");
    require_finite(std::span<const double>(rate_.data()), "density rate");
    require_finite(std::span<const double>(acceleration_.data()), "density acceleration");
    for (std::size_t k = 0; k < density_.size(); ++k)
        validate_row(density_, k);
}

DensityProgram DensityProgram::from_model(const TimeGrid& grid, const DensityModel& model)
{
    const DensitySample first = model(grid.time(0));
    const auto m = static_cast<std::size_t>(first.density.size());
    RealSeries n(grid, m), rate(grid, m), accel(grid, m);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const DensitySample s = k == 0 ? first : model(grid.time(k));
        if (static_cast<std::size_t>(s.density.size()) != m ||
            static_cast<std::size_t>(s.rate.size()) != m ||
            static_cast<std::size_t>(s.acceleration.size()) != m)
            throw Error(ErrorCode::DimensionMismatch, "density model changed its site count");
        for (std::size_t i = 0; i < m; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            n(k, i) = s.density[ii];
            rate(k, i) = s.rate[ii];
            accel(k, i) = s.acceleration[ii];
        }
    }
    return DensityProgram(std::move(n), std::move(rate), std::move(accel));
}

DensityProgram DensityProgram::from_samples(RealSeries density)
{
    RealSeries rate = central_diff(density);
    RealSeries accel = central_diff(rate);
    return DensityProgram(std::move(density), std::move(rate), std::move(accel));
}

DensityModel two_stage_density_model(const ChainSpec& spec, double t1, double t2)
{
    spec.validate();
    if (!(t1 > 0.0) || !(t2 > t1)) {
        std::ostringstream os;
        os << "two-stage program needs 0 < t1 < t2 (got t1 = " << t1 << ", t2 = " << t2 << ")";
        throw Error(ErrorCode::Ordering, os.str());
    }
    const int m = spec.sites;
    const Eigen::ArrayXd ground = ground_state_density_chain(spec).array();
    const Eigen::ArrayXd blend_target = Eigen::ArrayXd::Constant(m, 1.0 / m) - ground;
    Eigen::ArrayXd offset_sq(m);
    const double center = 0.5 * (m + 1);
    for (int i = 0; i < m; ++i)
        offset_sq[i] = std::pow(i + 1 - center, 2);

    return [=](double t) -> DensitySample {
        if (t <= t1) {
            const double x = unit_clamp(t / t1);
            const double s = smooth_step(x);
            const double ds = smooth_step_derivative(x) / t1;
            const double dds = smooth_step_second_derivative(x) / (t1 * t1);
            return {(ground + s * blend_target).matrix(), (ds * blend_target).matrix(),
                    (dds * blend_target).matrix()};
        }
        const double span = t2 - t1;
        const double x = unit_clamp((t - t1) / span);
        const double s = smooth_step(x);
        const double ds = smooth_step_derivative(x) / span;
        const double dds = smooth_step_second_derivative(x) / (span * span);

        const Eigen::ArrayXd weights = (-s * offset_sq).exp();
        const Eigen::ArrayXd n = weights / weights.sum();
        const double mean = (n * offset_sq).sum();
        const double mean_sq = (n * offset_sq.square()).sum();
        const Eigen::ArrayXd centered = offset_sq - mean;
        const Eigen::ArrayXd rate = -ds * n * centered;
        const double mean_rate = -ds * (mean_sq - mean * mean);
        const Eigen::ArrayXd accel = -dds * n * centered - ds * rate * centered + ds * n * mean_rate;
        return {n.matrix(), rate.matrix(), accel.matrix()};
    };
}

DensityProgram two_stage_density(const ChainSpec& spec, double t1, double t2, const TimeGrid& grid)
{
    DensityModel model = two_stage_density_model(spec, t1, t2);
    if (std::abs(grid.t_start()) > 1e-12 || std::abs(grid.t_end() - t2) > 1e-9 * std::max(1.0, t2)) {
        std::ostringstream os;
        os << "two-stage program needs a grid spanning [0, t2 = " << t2 << "]";
        throw Error(ErrorCode::Ordering, os.str());
    }
    return DensityProgram::from_model(grid, model);
}

LinkCurrents link_current_from_density(const DensityProgram& program)
{
    const auto m = static_cast<std::size_t>(program.sites());
    const TimeGrid& grid = program.grid();
    LinkCurrents out{RealSeries(grid, m - 1), RealSeries(grid, m - 1)};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double flow = 0.0;
        double flow_rate = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            flow -= program.rate()(k, i);
            flow_rate -= program.acceleration()(k, i);
            out.current(k, i) = flow;
            out.rate(k, i) = flow_rate;
        }
    }
    return out;
}

RealSeries boundary_leak(const DensityProgram& program)
{
    RealSeries leak(program.grid(), 1);
    for (std::size_t k = 0; k < leak.size(); ++k) {
        double total = 0.0;
        for (double r : program.rate().row(k))
            total -= r;
        leak(k, 0) = total;
    }
    return leak;
}

LinkKinetic kinetic_from_density(const DensityProgram& program, const LinkCurrents& currents,
                                 const ChainSpec& spec, const LatticeWavefunction& psi0)
{
    spec.validate();
    const int m = program.sites();
    if (spec.sites != m || psi0.sites() != m)
        throw Error(ErrorCode::DimensionMismatch, "chain spec, program and psi0 differ in size");
    const auto links = static_cast<std::size_t>(m - 1);
    const TimeGrid& grid = program.grid();
    const double four_t0_sq = 4.0 * spec.T0 * spec.T0;

    Eigen::MatrixXcd hopping = Eigen::MatrixXcd::Zero(m, m);
    for (int i = 0; i + 1 < m; ++i) {
        hopping(i, i + 1) = spec.T0;
        hopping(i + 1, i) = spec.T0;
    }
    const Eigen::MatrixXcd q0 = observable_from_state(hopping, psi0);

    LinkKinetic out{RealSeries(grid, links), RealSeries(grid, links), Eigen::VectorXd(links)};
    for (std::size_t i = 0; i < links; ++i) {
        const double k0 = q0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)).real();
        if (std::abs(k0) < 1e-8) {
            std::ostringstream os;
            os << "kinetic term on link " << i + 1 << "-" << i + 2 << " vanishes at t0";
            throw Error(ErrorCode::AmbiguousSign, os.str());
        }
        out.branch[static_cast<Eigen::Index>(i)] = k0 > 0.0 ? 1.0 : -1.0;
    }

    const RealSeries& n = program.density();
    const RealSeries& dn = program.rate();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        for (std::size_t i = 0; i < links; ++i) {
            const double j = currents.current(k, i);
            const double dj = currents.rate(k, i);
            const double bound = four_t0_sq * n(k, i) * n(k, i + 1);
            const double radicand = bound - j * j;
            if (!(radicand > 1e-14 * bound)) {
                std::ostringstream os;
                os << "link " << i + 1 << "-" << i + 2 << " needs |J| = " << std::abs(j)
                   << " beyond the hopping bound at t = " << grid.time(k);
                throw Error(ErrorCode::Representability, os.str());
            }
            const double kin = out.branch[static_cast<Eigen::Index>(i)] * std::sqrt(radicand);
            out.kinetic(k, i) = kin;
            out.rate(k, i) =
                (0.5 * four_t0_sq * (dn(k, i) * n(k, i + 1) + n(k, i) * dn(k, i + 1)) - j * dj) / kin;
        }
    }
    return out;
}

ChainReconstruction onsite_potential(const DensityProgram& program, const ChainSpec& spec,
                                     const LatticeWavefunction& psi0)
{
    spec.validate();
    const int m = program.sites();
    if (spec.sites != m || psi0.sites() != m)
        throw Error(ErrorCode::DimensionMismatch, "chain spec, program and psi0 differ in size");
    for (int i = 0; i < m; ++i) {
        if (std::abs(std::norm(psi0[i]) - program.density()(0, static_cast<std::size_t>(i))) > 1e-8)
            throw Error(ErrorCode::InvalidInput, "psi0 does not match the program density at t0");
    }

    const TimeGrid& grid = program.grid();
    const auto sites = static_cast<std::size_t>(m);
    const std::size_t last = sites - 1;
    const double t0 = spec.T0;

    LinkCurrents currents = link_current_from_density(program);
    LinkKinetic kinetic = kinetic_from_density(program, currents, spec, psi0);
    const RealSeries& n = program.density();

    // Kinetic link term K_{i,i+1}, zero beyond the chain ends.
    auto link_k = [&](std::size_t k, long i) -> double {
        if (i < 0 || i >= static_cast<long>(last))
            return 0.0;
        return kinetic.kinetic(k, static_cast<std::size_t>(i));
    };
    auto bond_energy = [&](std::size_t k, std::size_t i) {
        const long li = static_cast<long>(i);
        return (link_k(k, li) + link_k(k, li - 1)) / (2.0 * n(k, i));
    };

    // Path (a): closed form summed from the right edge.
    RealSeries potential(grid, sites);
    RealSeries phase_rate(grid, sites);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        potential(k, last) = 0.0;
        for (std::size_t i = last; i-- > 0;) {
            const double kin = kinetic.kinetic(k, i);
            const double cur = currents.current(k, i);
            const double turn = (kin * currents.rate(k, i) - cur * kinetic.rate(k, i)) /
                                (4.0 * t0 * t0 * n(k, i) * n(k, i + 1));
            potential(k, i) = potential(k, i + 1) + turn + bond_energy(k, i) - bond_energy(k, i + 1);
        }
        for (std::size_t i = 0; i < sites; ++i)
            phase_rate(k, i) = bond_energy(k, i) - potential(k, i);
    }
    const RealSeries phase = trapezoid_integrate(phase_rate);

    ChainReconstruction out{potential, {}, currents, kinetic, 0.0};
    out.states.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Eigen::VectorXcd psi(m);
        for (std::size_t i = 0; i < sites; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            psi[ii] = std::polar(std::sqrt(n(k, i)), std::arg(psi0[ii]) + phase(k, i));
        }
        out.states.push_back(std::move(psi));
    }

    // Path (b): psi_i = sqrt(n_i) exp(i phi_i) with phi_i = phi_{i+1} - arg Q_{i,i+1}
    // and phi_M advancing with its bond term (v_M = 0). The phase rate is the
    // exact derivative of that representation, d arg Q/dt = Im(Q' conj Q)/|Q|^2;
    // v then follows from the Schrodinger equation.
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::vector<double> rate(sites);
        std::vector<double> turn(last);
        rate[last] = bond_energy(k, last);
        for (std::size_t i = last; i-- > 0;) {
            const Complex q(kinetic.kinetic(k, i), currents.current(k, i));
            const Complex dq(kinetic.rate(k, i), currents.rate(k, i));
            turn[i] = std::arg(q);
            rate[i] = rate[i + 1] - std::imag(dq * std::conj(q)) / std::norm(q);
        }
        for (std::size_t i = 0; i < sites; ++i) {
            // Re[T0 (psi_{i+1} + psi_{i-1}) / psi_i]
            double neighbours = 0.0;
            if (i > 0)
                neighbours += std::sqrt(n(k, i - 1) / n(k, i)) * std::cos(turn[i - 1]);
            if (i < last)
                neighbours += std::sqrt(n(k, i + 1) / n(k, i)) * std::cos(turn[i]);
            const double extracted = -rate[i] + t0 * neighbours;
            out.dual_path_discrepancy =
                std::max(out.dual_path_discrepancy, std::abs(extracted - potential(k, i)));
        }
    }
    return out;
}

Eigen::VectorXd lattice_bohm_potential(const Eigen::VectorXd& density, const ChainSpec& spec)
{
    spec.validate();
    const Eigen::Index m = density.size();
    if (m != spec.sites)
        throw Error(ErrorCode::DimensionMismatch, "density size differs from the chain spec");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(density[i] > density_floor))
            throw Error(ErrorCode::VanishingDensity, "lattice Bohm potential needs a nodeless density");
    }
    const Eigen::VectorXd root = density.cwiseSqrt();
    Eigen::VectorXd ratio(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double left = i > 0 ? root[i - 1] : 0.0;
        const double right = i + 1 < m ? root[i + 1] : 0.0;
        ratio[i] = (left + right) / root[i];
    }
    return (spec.T0 * (ratio.array() - ratio[m - 1])).matrix();
}

double chain_schrodinger_residual(const RealSeries& potential, double T0,
                                  const std::vector<Eigen::VectorXcd>& states)
{
    if (states.size() != potential.size())
        throw Error(ErrorCode::DimensionMismatch, "states and potential differ in length");
    const double dt = potential.grid().dt();
    const auto m = static_cast<Eigen::Index>(potential.width());
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < states.size(); ++k) {
        const Eigen::VectorXcd& psi = states[k];
        Eigen::VectorXcd residual =
            Complex(0.0, 1.0) * (states[k + 1] - states[k - 1]) / (2.0 * dt);
        for (Eigen::Index i = 0; i < m; ++i) {
            Complex h_psi = potential(k, static_cast<std::size_t>(i)) * psi[i];
            if (i > 0)
                h_psi -= T0 * psi[i - 1];
            if (i + 1 < m)
                h_psi -= T0 * psi[i + 1];
            residual[i] -= h_psi;
        }
        worst = std::max(worst, residual.norm());
    }
    return worst;
}

} // namespace pulseforge
