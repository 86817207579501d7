#include "pulseforge/lattice_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pulseforge {
namespace {

constexpr double hermitian_tolerance = 1e-12;

void require_hermitian_links(const Eigen::MatrixXcd& q, std::size_t step)
{
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    const bool diagonal_ok = q.diagonal().cwiseAbs().maxCoeff() <= hermitian_tolerance * scale;
    if (!diagonal_ok || (q - q.adjoint()).cwiseAbs().maxCoeff() > hermitian_tolerance * scale) {
        std::ostringstream os;
        os << "complex current at step " << step << " is not Hermitian with zero diagonal";
        throw Error(ErrorCode::NonHermitian, os.str());
    }
}

} // namespace

Eigen::MatrixXcd observable_from_state(const Eigen::MatrixXcd& hoppings,
                                       const Eigen::VectorXcd& psi)
{
    if (hoppings.rows() != psi.size() || hoppings.cols() != psi.size())
        throw Error(ErrorCode::DimensionMismatch, "hopping matrix and state differ in size");
    const Eigen::Index m = psi.size();
    Eigen::MatrixXcd q(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j)
            q(i, j) = i == j ? Complex{} : 2.0 * hoppings(i, j) * std::conj(psi[i]) * psi[j];
    }
    return q;
}

Eigen::MatrixXcd observable_from_state(const Eigen::MatrixXcd& hoppings,
                                       const LatticeWavefunction& psi)
{
    return observable_from_state(hoppings, psi.amplitudes());
}

LatticeReconstruction reconstruct_hopping(const ComplexCurrent& current,
                                          const LatticeWavefunction& psi0, Quadrature rule)
{
    const TimeGrid& grid = current.grid;
    const Eigen::Index m = psi0.sites();
    if (current.links.size() != grid.size())
        throw Error(ErrorCode::DimensionMismatch, "complex current needs one matrix per grid point");
    for (std::size_t k = 0; k < current.links.size(); ++k) {
        if (current.links[k].rows() != m || current.links[k].cols() != m)
            throw Error(ErrorCode::DimensionMismatch, "complex current and state differ in size");
        require_finite(std::span<const Complex>(current.links[k].data(), current.links[k].size()),
                       "complex current");
        require_hermitian_links(current.links[k], k);
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::norm(psi0[i]) <= density_floor)
            throw Error(ErrorCode::VanishingDensity, "initial state has a node");
    }

    const std::size_t steps = grid.size();
    const auto width = static_cast<std::size_t>(m);

    // Outflow sum_j J_ij drains the density.
    RealSeries outflow(grid, width);
    for (std::size_t k = 0; k < steps; ++k) {
        const Eigen::VectorXd row_sum = current.links[k].imag().rowwise().sum();
        for (std::size_t i = 0; i < width; ++i)
            outflow(k, i) = row_sum[static_cast<Eigen::Index>(i)];
    }
    const RealSeries drained = integrate(outflow, rule);

    RealSeries density(grid, width);
    RealSeries phase_rate(grid, width);
    for (std::size_t k = 0; k < steps; ++k) {
        const Eigen::VectorXd kinetic_sum = current.links[k].real().rowwise().sum();
        for (std::size_t i = 0; i < width; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double n = std::norm(psi0[ii]) - drained(k, i);
            if (n <= density_floor) {
                std::ostringstream os;
                os << "density on site " << i + 1 << " reaches " << n << " at t = " << grid.time(k);
                throw Error(ErrorCode::VanishingDensity, os.str());
            }
            density(k, i) = n;
            phase_rate(k, i) = kinetic_sum[ii] / (2.0 * n);
        }
    }
    const RealSeries phase_advance = integrate(phase_rate, rule);

    LatticeReconstruction out{{grid, {}}, {}};
    out.states.reserve(steps);
    out.hoppings.hoppings.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        Eigen::VectorXcd psi(m);
        for (std::size_t i = 0; i < width; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            psi[ii] = std::polar(std::sqrt(density(k, i)), std::arg(psi0[ii]) + phase_advance(k, i));
        }
        Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = i + 1; j < m; ++j) {
                t(i, j) = current.links[k](i, j) / (2.0 * std::conj(psi[i]) * psi[j]);
                t(j, i) = std::conj(t(i, j));
            }
        }
        out.states.push_back(std::move(psi));
        out.hoppings.hoppings.push_back(std::move(t));
    }
    return out;
}

RepresentabilityReport check_representability(const ComplexCurrent& current,
                                              const RealSeries& densities, double T0)
{
    if (!(densities.grid() == current.grid) || densities.size() != current.links.size())
        throw Error(ErrorCode::DimensionMismatch, "densities and complex current use different grids");
    RepresentabilityReport report;
    const double four_t0_sq = 4.0 * T0 * T0;
    for (std::size_t k = 0; k < current.links.size(); ++k) {
        const Eigen::MatrixXcd& q = current.links[k];
        if (static_cast<Eigen::Index>(densities.width()) != q.rows())
            throw Error(ErrorCode::DimensionMismatch, "density width differs from site count");
        const auto n = densities.row(k);
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < q.cols(); ++j) {
                const double bound = four_t0_sq * n[i] * n[j];
                const double excess = std::norm(q(i, j)) - bound;
                if (excess > 1e-10 * std::max(1.0, bound))
                    report.violations.push_back({k, current.grid.time(k), i, j, excess});
            }
        }
    }
    return report;
}

double hopping_schrodinger_residual(const HoppingSignal& hoppings,
                                    const std::vector<Eigen::VectorXcd>& states)
{
    if (states.size() != hoppings.hoppings.size())
        throw Error(ErrorCode::DimensionMismatch, "state trajectory and hoppings differ in length");
    const double dt = hoppings.grid.dt();
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < states.size(); ++k) {
        const Eigen::VectorXcd residual =
            Complex(0.0, 1.0) * (states[k + 1] - states[k - 1]) / (2.0 * dt) +
            hoppings.hoppings[k] * states[k];
        worst = std::max(worst, residual.norm());
    }
    return worst;
}

} // namespace pulseforge
