#include <doctest.h>

#include <cmath>

#include "pulseforge/lattice_map.hpp"
#include "pulseforge/propagator.hpp"
#include "test_support.hpp"

using namespace pulseforge;

namespace {

Eigen::VectorXcd vec2(Complex a, Complex b)
{
    Eigen::VectorXcd v(2);
    v << a, b;
    return v;
}

Eigen::MatrixXcd link2(Complex q12)
{
    Eigen::MatrixXcd q(2, 2);
    q << 0.0, q12, std::conj(q12), 0.0;
    return q;
}

struct RoundTrip {
    double relative_error;
    double max_norm_error;
    double residual;
};

RoundTrip round_trip(std::uint64_t seed, Eigen::Index sites, int steps,
                     Quadrature rule = Quadrature::CorrectedTrapezoid)
{
    testing::Uniform rng(seed);
    const testing::SmoothHoppings hop(sites, rng);
    const LatticeWavefunction psi0(testing::random_nodeless_state(sites, rng));
    const TimeGrid grid(0.0, 1.0, steps);
    const auto signal = LatticeHamiltonianSignal::from_function(
        grid, sites, [&](double t) { return Eigen::MatrixXcd(-hop(t)); });
    const auto forward = propagate_lattice(signal, psi0);

    ComplexCurrent q{grid, {}};
    for (std::size_t k = 0; k < grid.size(); ++k)
        q.links.push_back(observable_from_state(hop(grid.time(k)), forward.states[k]));
    const LatticeReconstruction rec = reconstruct_hopping(q, psi0, rule);

    RoundTrip out{0.0, 0.0, hopping_schrodinger_residual(rec.hoppings, rec.states)};
    double scale = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Eigen::MatrixXcd reference = hop(grid.time(k));
        scale = std::max(scale, reference.cwiseAbs().maxCoeff());
        out.relative_error =
            std::max(out.relative_error, (rec.hoppings.hoppings[k] - reference).cwiseAbs().maxCoeff());
        out.max_norm_error = std::max(out.max_norm_error, std::abs(rec.states[k].squaredNorm() - 1.0));
    }
    out.relative_error /= scale;
    return out;
}

} // namespace

TEST_CASE("observable from a state")
{
    const Eigen::MatrixXcd t = link2(1.0);
    SUBCASE("real state on real hoppings carries no current")
    {
        testing::Uniform rng(1);
        const Eigen::Index m = 5;
        Eigen::MatrixXcd real_t = Eigen::MatrixXcd::Zero(m, m);
        Eigen::VectorXcd psi(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            psi[i] = rng(-1.0, 1.0);
            for (Eigen::Index j = i + 1; j < m; ++j)
                real_t(i, j) = real_t(j, i) = rng(-1.0, 1.0);
        }
        const Eigen::MatrixXcd q = observable_from_state(real_t, psi.normalized());
        CHECK(q.imag().cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("empty site kills the link")
    {
        CHECK(std::abs(observable_from_state(t, vec2(1.0, 0.0))(0, 1)) == 0.0);
    }
    SUBCASE("(1, i)/sqrt 2 gives Q12 = i")
    {
        const double r = 1.0 / std::sqrt(2.0);
        const Eigen::MatrixXcd q = observable_from_state(t, vec2(r, Complex(0.0, r)));
        CHECK(std::abs(q(0, 1) - Complex(0.0, 1.0)) < 1e-15);
        CHECK(std::abs(q(1, 0) - std::conj(q(0, 1))) == 0.0);
        CHECK(q(0, 0) == Complex{});
    }
    SUBCASE("dimension mismatch")
    {
        CHECK_THROWS_AS(observable_from_state(t, Eigen::VectorXcd::Ones(3)), Error);
    }
}

TEST_CASE("zero complex current means zero hopping and a frozen state")
{
    testing::Uniform rng(4);
    const LatticeWavefunction psi0(testing::random_nodeless_state(4, rng));
    const TimeGrid grid(0.0, 2.0, 50);
    ComplexCurrent q{grid, std::vector<Eigen::MatrixXcd>(grid.size(), Eigen::MatrixXcd::Zero(4, 4))};
    const LatticeReconstruction rec = reconstruct_hopping(q, psi0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(rec.hoppings.hoppings[k].cwiseAbs().maxCoeff() == 0.0);
        CHECK((rec.states[k] - psi0.amplitudes()).norm() < 1e-15);
    }
}

TEST_CASE("round trip recovers random smooth hoppings")
{
    const RoundTrip r = round_trip(2024, 4, 10000);
    CHECK(r.relative_error <= 1e-6);
    CHECK(r.max_norm_error <= 1e-8);
    CHECK(r.residual < 1e-6);
}

TEST_CASE("round-trip error falls at second order with the plain trapezoid rule")
{
    const double coarse = round_trip(99, 3, 200, Quadrature::Trapezoid).relative_error;
    const double fine = round_trip(99, 3, 400, Quadrature::Trapezoid).relative_error;
    CHECK(std::log2(coarse / fine) == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("round-trip error falls at fourth order with the end-corrected rule")
{
    const double coarse = round_trip(99, 3, 200).relative_error;
    const double fine = round_trip(99, 3, 400).relative_error;
    CHECK(std::log2(coarse / fine) == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("a nearly emptied site stays within tolerance")
{
    // Site density dips to ~9e-4 for this seed.
    CHECK(round_trip(1021, 4, 10000, Quadrature::Trapezoid).relative_error > 1e-6);
    CHECK(round_trip(1021, 4, 10000).relative_error <= 1e-6);
}

TEST_CASE("reconstructed hoppings are Hermitian with zero diagonal")
{
    testing::Uniform rng(8);
    const testing::SmoothHoppings hop(5, rng);
    const TimeGrid grid(0.0, 0.5, 100);
    const LatticeWavefunction psi0(testing::random_nodeless_state(5, rng));
    const auto forward = propagate_lattice(
        LatticeHamiltonianSignal::from_function(grid, 5, [&](double t) { return Eigen::MatrixXcd(-hop(t)); }),
        psi0);
    ComplexCurrent q{grid, {}};
    for (std::size_t k = 0; k < grid.size(); ++k)
        q.links.push_back(observable_from_state(hop(grid.time(k)), forward.states[k]));
    const LatticeReconstruction rec = reconstruct_hopping(q, psi0);
    for (const auto& t : rec.hoppings.hoppings) {
        CHECK((t - t.adjoint()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(t.diagonal().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("norm is conserved for any antisymmetric current")
{
    testing::Uniform rng(15);
    const Eigen::Index m = 4;
    const LatticeWavefunction psi0(testing::random_nodeless_state(m, rng));
    const TimeGrid grid(0.0, 1.0, 1000);
    // Small currents keep every density above the floor.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m), w = a, kin = a;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i + 1; j < m; ++j) {
            a(i, j) = rng(-0.02, 0.02);
            w(i, j) = rng(0.5, 4.0);
            kin(i, j) = kin(j, i) = rng(-0.5, 0.5);
        }
    }
    ComplexCurrent q{grid, {}};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        Eigen::MatrixXcd links = kin.cast<Complex>();
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = i + 1; j < m; ++j) {
                const double current = a(i, j) * std::cos(w(i, j) * t);
                links(i, j) += Complex(0.0, current);
                links(j, i) = std::conj(links(i, j));
            }
        }
        q.links.push_back(links);
    }
    const LatticeReconstruction rec = reconstruct_hopping(q, psi0);
    for (const auto& psi : rec.states)
        CHECK(std::abs(psi.squaredNorm() - 1.0) < 1e-8);
}

TEST_CASE("reconstruction rejects bad input")
{
    const TimeGrid grid(0.0, 1.0, 10);
    const double r = 1.0 / std::sqrt(2.0);
    const LatticeWavefunction half(vec2(r, r));

    SUBCASE("non-Hermitian current")
    {
        Eigen::MatrixXcd bad = link2(Complex(0.1, 0.2));
        bad(1, 0) = Complex(0.1, 0.2);
        ComplexCurrent q{grid, std::vector<Eigen::MatrixXcd>(grid.size(), bad)};
        try {
            reconstruct_hopping(q, half);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonHermitian);
        }
    }
    SUBCASE("initial node")
    {
        ComplexCurrent q{grid, std::vector<Eigen::MatrixXcd>(grid.size(), link2(0.0))};
        try {
            reconstruct_hopping(q, LatticeWavefunction(vec2(1.0, 0.0)));
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::VanishingDensity);
        }
    }
    SUBCASE("current drains a site empty")
    {
        // J12 = 1 drains site 1 at unit rate: empty at t = 1/2.
        ComplexCurrent q{grid, std::vector<Eigen::MatrixXcd>(grid.size(), link2(Complex(0.0, 1.0)))};
        try {
            reconstruct_hopping(q, half);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::VanishingDensity);
        }
    }
    SUBCASE("wrong length")
    {
        ComplexCurrent q{grid, std::vector<Eigen::MatrixXcd>(3, link2(0.0))};
        CHECK_THROWS_AS(reconstruct_hopping(q, half), Error);
    }
}

TEST_CASE("representability bound")
{
    const TimeGrid grid(0.0, 1.0, 4);
    RealSeries n(grid, 2);
    for (std::size_t k = 0; k < grid.size(); ++k)
        n(k, 0) = n(k, 1) = 0.5;

    SUBCASE("zero current is representable")
    {
        ComplexCurrent q{grid, std::vector<Eigen::MatrixXcd>(grid.size(), link2(0.0))};
        CHECK(check_representability(q, n, 1.0).representable());
    }
    SUBCASE("|Q| = 1.01 T0 at n = (1/2, 1/2) is flagged at every step")
    {
        const double t0 = 0.7;
        ComplexCurrent q{grid, std::vector<Eigen::MatrixXcd>(grid.size(), link2(std::polar(1.01 * t0, 0.4)))};
        const RepresentabilityReport report = check_representability(q, n, t0);
        REQUIRE(report.violations.size() == grid.size());
        CHECK(report.violations[2].step == 2);
        CHECK(report.violations[2].i == 0);
        CHECK(report.violations[2].j == 1);
        CHECK(report.violations[2].excess == doctest::Approx((1.01 * 1.01 - 1.0) * t0 * t0));
    }
    SUBCASE("a state-derived current saturates but never exceeds the bound")
    {
        testing::Uniform rng(21);
        const Eigen::VectorXcd psi = testing::random_nodeless_state(2, rng);
        RealSeries dens(grid, 2);
        ComplexCurrent q{grid, {}};
        for (std::size_t k = 0; k < grid.size(); ++k) {
            dens(k, 0) = std::norm(psi[0]);
            dens(k, 1) = std::norm(psi[1]);
            q.links.push_back(observable_from_state(link2(std::polar(1.0, 0.3)), psi));
        }
        CHECK(check_representability(q, dens, 1.0).representable());
    }
}
