#include "pulseforge/spin_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace pulseforge {
namespace {

constexpr double pi = std::numbers::pi;

void require_size(const TimeGrid& grid, std::size_t n, const char* what)
{
    if (n != grid.size()) {
        std::ostringstream os;
        os << what << " has " << n << " samples, grid has " << grid.size();
        throw Error(ErrorCode::DimensionMismatch, os.str());
    }
}

std::vector<double> differentiate(const TimeGrid& grid, const std::vector<double>& values)
{
    RealSeries series(grid, 1, values);
    const RealSeries rate = central_diff(series);
    return {rate.data().begin(), rate.data().end()};
}

double gamma_ratio(const GammaProgram& p, double t)
{
    if (p.ratio)
        return p.ratio(t);
    const double g = p.gamma(t);
    const double phi_rate = p.phi_rate(t);
    if (g != 0.0)
        return phi_rate / g;
    const double g_rate = p.gamma_rate ? p.gamma_rate(t) : 0.0;
    if (std::abs(phi_rate) <= crossing_tol && g_rate != 0.0 && p.phi_accel)
        return p.phi_accel(t) / g_rate;
    std::ostringstream os;
    os << "phi'/gamma has no finite value at t = " << t;
    throw Error(ErrorCode::UndefinedLimit, os.str());
}

// Exact zeros at integer s.
double sin_pi(double s)
{
    const double n = std::round(s);
    const double r = s - n;
    const double v = std::sin(pi * r);
    return std::fmod(n, 2.0) == 0.0 ? v : -v;
}

double cos_pi(double s)
{
    const double n = std::round(s);
    const double v = std::cos(pi * (s - n));
    return std::fmod(n, 2.0) == 0.0 ? v : -v;
}

// Exact values when phi sits on a multiple of pi/2 to within round-off.
void sincos_snapped(double phi, double& s, double& c)
{
    const double q = phi / (0.5 * pi);
    const double n = std::round(q);
    if (std::abs(q - n) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(n))) {
        const auto quadrant = static_cast<long long>(std::fmod(n, 4.0) + 4.0) % 4;
        constexpr double sines[] = {0.0, 1.0, 0.0, -1.0};
        constexpr double cosines[] = {1.0, 0.0, -1.0, 0.0};
        s = sines[quadrant];
        c = cosines[quadrant];
        return;
    }
    s = std::sin(phi);
    c = std::cos(phi);
}

/// sin(pi s)/s and its derivative, series near s = 0.
void sinc_pi(double s, double& value, double& slope)
{
    const double x = pi * s;
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        value = pi * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
        slope = pi * pi * x * (-1.0 / 3.0 + x2 / 30.0);
        return;
    }
    value = sin_pi(s) / s;
    slope = (x * cos_pi(s) - sin_pi(s)) / (s * s);
}

} // namespace

BlochTrajectory BlochTrajectory::from_closed_form(const TimeGrid& grid, const Fn& theta, const Fn& phi,
                                                  const Fn& theta_rate, const Fn& phi_rate)
{
    BlochTrajectory out{grid, {}, {}, {}, {}};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        out.theta.push_back(theta(t));
        out.phi.push_back(phi(t));
        out.theta_rate.push_back(theta_rate(t));
        out.phi_rate.push_back(phi_rate(t));
    }
    out.validate();
    return out;
}

BlochTrajectory BlochTrajectory::from_samples(const TimeGrid& grid, std::vector<double> theta,
                                              std::vector<double> phi)
{
    require_size(grid, theta.size(), "theta");
    require_size(grid, phi.size(), "phi");
    BlochTrajectory out{grid, std::move(theta), std::move(phi), {}, {}};
    out.theta_rate = differentiate(grid, out.theta);
    out.phi_rate = differentiate(grid, out.phi);
    out.validate();
    return out;
}

void BlochTrajectory::validate() const
{
    require_size(grid, theta.size(), "theta");
    require_size(grid, phi.size(), "phi");
    require_size(grid, theta_rate.size(), "theta rate");
    require_size(grid, phi_rate.size(), "phi rate");
    require_finite(theta, "theta");
    require_finite(phi, "phi");
    require_finite(theta_rate, "theta rate");
    require_finite(phi_rate, "phi rate");
    for (std::size_t k = 0; k < theta.size(); ++k) {
        if (!(theta[k] > 0.0 && theta[k] < pi)) {
            std::ostringstream os;
            os << "theta = " << theta[k] << " at t = " << grid.time(k) << " leaves (0, pi)";
            throw Error(ErrorCode::Domain, os.str());
        }
    }
}

std::vector<Eigen::MatrixXcd> FieldPulse::hoppings() const
{
    std::vector<Eigen::MatrixXcd> out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Complex b = complex_field(k);
        Eigen::MatrixXcd t(2, 2);
        t << 0.0, b, std::conj(b), 0.0;
        out.push_back(std::move(t));
    }
    return out;
}

Complex bloch_to_observable(double theta, double /*phi*/, double theta_rate, double phi_rate)
{
    const double gamma = phi_rate * std::tan(theta);
    if (!(std::abs(gamma) <= field_cap)) {
        std::ostringstream os;
        os << "phi' tan(theta) = " << gamma << " diverges at theta = " << theta;
        throw Error(ErrorCode::Singularity, os.str());
    }
    return 0.5 * std::sin(theta) * Complex(gamma, theta_rate);
}

SpinSynthesis field_from_bloch(const BlochTrajectory& trajectory, double beta0)
{
    trajectory.validate();
    const TimeGrid& grid = trajectory.grid;
    SpinSynthesis out{FieldPulse(grid), RealSeries(grid, 1), trajectory};
    RealSeries beta_rate(grid, 1);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double theta = trajectory.theta[k];
        const double phi = trajectory.phi[k];
        const double gamma = trajectory.phi_rate[k] * std::tan(theta);
        if (!(std::abs(gamma) <= field_cap)) {
            std::ostringstream os;
            os << "trajectory needs |B| ~ " << std::abs(gamma) << " at t = " << grid.time(k)
               << " (theta = " << theta << ")";
            throw Error(ErrorCode::Representability, os.str());
        }
        const double theta_rate = trajectory.theta_rate[k];
        out.pulse.field(k, 0) = gamma * std::cos(phi) + theta_rate * std::sin(phi);
        out.pulse.field(k, 1) = -theta_rate * std::cos(phi) + gamma * std::sin(phi);
        beta_rate(k, 0) = 0.5 * gamma * std::tan(0.5 * theta);
    }
    const RealSeries beta = trapezoid_integrate(beta_rate);
    for (std::size_t k = 0; k < grid.size(); ++k)
        out.beta(k, 0) = beta0 + beta(k, 0);
    return out;
}

double theta_from_ratio(double ratio)
{
    if (!std::isfinite(ratio))
        throw Error(ErrorCode::UndefinedLimit, "phi'/gamma is not finite");
    // sqrt(u^2 + 1) - u without cancellation for large positive u.
    const double half_tan = ratio >= 0.0 ? 1.0 / (std::hypot(ratio, 1.0) + ratio)
                                         : std::hypot(ratio, 1.0) - ratio;
    return 2.0 * std::atan(half_tan);
}

double theta_from_gamma(double gamma, double phi_rate)
{
    if (gamma == 0.0) {
        std::ostringstream os;
        os << "gamma = 0 with phi' = " << phi_rate << " leaves phi'/gamma undefined";
        throw Error(ErrorCode::UndefinedLimit, os.str());
    }
    return theta_from_ratio(phi_rate / gamma);
}

SpinSynthesis field_from_gamma(const GammaProgram& program, double beta0)
{
    const TimeGrid& grid = program.grid;
    if (!program.gamma || !program.phi || !program.phi_rate)
        throw Error(ErrorCode::InvalidInput, "gamma program needs gamma, phi and phi'");

    std::vector<double> ratio(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        ratio[k] = gamma_ratio(program, grid.time(k));
    require_finite(ratio, "phi'/gamma");
    std::vector<double> ratio_rate;
    if (program.ratio_rate) {
        for (std::size_t k = 0; k < grid.size(); ++k)
            ratio_rate.push_back(program.ratio_rate(grid.time(k)));
    } else {
        ratio_rate = differentiate(grid, ratio);
    }
    require_finite(ratio_rate, "d(phi'/gamma)/dt");

    BlochTrajectory trajectory{grid, {}, {}, {}, {}};
    FieldPulse pulse(grid);
    RealSeries beta_rate(grid, 1);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        const double u = ratio[k];
        const double gamma = program.gamma(t);
        const double phi = program.phi(t);
        const double phi_rate = program.phi_rate(t);
        const double turn = ratio_rate[k] / (u * u + 1.0);
        double sn = 0.0, cs = 1.0;
        sincos_snapped(phi, sn, cs);
        pulse.field(k, 0) = gamma * cs - turn * sn + 0.0;
        pulse.field(k, 1) = turn * cs + gamma * sn + 0.0;
        beta_rate(k, 0) = 0.5 * (gamma * std::hypot(u, 1.0) - phi_rate);
        trajectory.theta.push_back(theta_from_ratio(u));
        trajectory.phi.push_back(phi);
        trajectory.theta_rate.push_back(-turn);
        trajectory.phi_rate.push_back(phi_rate);
    }
    require_finite(std::span<const double>(pulse.field.data()), "field");
    trajectory.validate();

    const RealSeries beta = trapezoid_integrate(beta_rate);
    SpinSynthesis out{std::move(pulse), RealSeries(grid, 1), std::move(trajectory)};
    for (std::size_t k = 0; k < grid.size(); ++k)
        out.beta(k, 0) = beta0 + beta(k, 0);
    return out;
}

GammaProgram not_gate_program(double B0, double tau, const TimeGrid& grid)
{
    if (!(B0 > 0.0) || !std::isfinite(B0))
        throw Error(ErrorCode::InvalidInput, "B0 must be positive");
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw Error(ErrorCode::InvalidInput, "tau must be positive");

    const double s_rate = -2.0 / tau;
    const double scale = 8.0 * pi / (tau * B0);
    auto s_of = [tau](double t) { return 1.0 - 2.0 * t / tau; };

    GammaProgram p(grid);
    p.gamma = [=](double t) {
        const double s = s_of(t);
        return 0.25 * B0 * s * (s * s + 3.0);
    };
    p.gamma_rate = [=](double t) {
        const double s = s_of(t);
        return 0.75 * B0 * (s * s + 1.0) * s_rate;
    };
    p.phi = [=](double t) { return pi * t / tau - 0.25 * sin_pi(4.0 * t / tau); };
    p.phi_rate = [=](double t) {
        const double sn = std::sin(2.0 * pi * t / tau);
        return 2.0 * pi / tau * sn * sn;
    };
    p.phi_accel = [=](double t) { return 4.0 * pi * pi / (tau * tau) * std::sin(4.0 * pi * t / tau); };
    // u = scale * [sin(pi s)/s] * sin(pi s)/(s^2 + 3)
    p.ratio = [=](double t) {
        const double s = s_of(t);
        double g = 0.0, g_slope = 0.0;
        sinc_pi(s, g, g_slope);
        return scale * g * sin_pi(s) / (s * s + 3.0);
    };
    p.ratio_rate = [=](double t) {
        const double s = s_of(t);
        double g = 0.0, g_slope = 0.0;
        sinc_pi(s, g, g_slope);
        const double d = s * s + 3.0;
        const double h = sin_pi(s) / d;
        const double h_slope = (pi * cos_pi(s) * d - 2.0 * s * sin_pi(s)) / (d * d);
        return scale * (g_slope * h + g * h_slope) * s_rate;
    };
    return p;
}

NotGate not_gate_pulse(double B0, double tau, const TimeGrid& grid)
{
    if (std::abs(grid.t_start()) > 1e-12 || std::abs(grid.t_end() - tau) > 1e-9 * std::max(1.0, tau)) {
        std::ostringstream os;
        os << "NOT pulse needs a grid spanning [0, tau = " << tau << "]";
        throw Error(ErrorCode::InvalidInput, os.str());
    }
    SpinSynthesis synthesis = field_from_gamma(not_gate_program(B0, tau, grid));
    const std::size_t last = grid.size() - 1;
    const double shift = synthesis.beta(last, 0) - synthesis.beta(0, 0);
    Eigen::VectorXcd final_state =
        bloch_state(synthesis.trajectory.theta[last], synthesis.trajectory.phi[last], synthesis.beta(last, 0));
    return {std::move(synthesis), std::move(final_state), shift};
}

Eigen::VectorXcd bloch_state(double theta, double phi, double beta)
{
    Eigen::VectorXcd psi(2);
    psi << std::polar(std::cos(0.5 * theta), beta), std::polar(std::sin(0.5 * theta), beta + phi);
    return psi;
}

std::vector<Eigen::VectorXcd> spin_states(const BlochTrajectory& trajectory, const RealSeries& beta)
{
    require_size(trajectory.grid, beta.size(), "beta");
    std::vector<Eigen::VectorXcd> out;
    out.reserve(beta.size());
    for (std::size_t k = 0; k < beta.size(); ++k)
        out.push_back(bloch_state(trajectory.theta[k], trajectory.phi[k], beta(k, 0)));
    return out;
}

Eigen::VectorXcd spin_left()
{
    return bloch_state(0.5 * pi, 0.0);
}

Eigen::VectorXcd spin_right()
{
    Eigen::VectorXcd psi(2);
    psi << 1.0, -1.0;
    return psi / std::sqrt(2.0);
}

BlochRepresentabilityReport check_bloch_representability(const BlochTrajectory& trajectory)
{
    trajectory.validate();
    BlochRepresentabilityReport report;
    for (std::size_t k = 0; k < trajectory.theta.size(); ++k) {
        const double theta = trajectory.theta[k];
        const double phi_rate = trajectory.phi_rate[k];
        if (std::abs(theta - 0.5 * pi) < pole_margin && std::abs(phi_rate) > crossing_tol &&
            std::abs(phi_rate * std::tan(theta)) > field_cap)
            report.violations.push_back({k, trajectory.grid.time(k), theta, phi_rate});
    }
    return report;
}

} // namespace pulseforge
