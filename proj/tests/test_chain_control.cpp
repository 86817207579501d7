#include <doctest.h>

#include <cmath>
#include <numbers>

#include "pulseforge/chain_control.hpp"
#include "pulseforge/lattice_map.hpp"
#include "pulseforge/propagator.hpp"

using namespace pulseforge;

namespace {

constexpr double pi = std::numbers::pi;

LatticeWavefunction ground_state_psi(const ChainSpec& spec)
{
    return LatticeWavefunction(ground_state_amplitudes_chain(spec).cast<Complex>());
}

std::vector<Eigen::VectorXd> rows(const RealSeries& series)
{
    std::vector<Eigen::VectorXd> out;
    out.reserve(series.size());
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto r = series.row(k);
        out.emplace_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
    }
    return out;
}

ErrorCode code_of(const auto& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidInput;
}

/// Two-site program n1 = (1 + a cos w t)/2 on [t_start, t_end].
DensityProgram two_site_program(double amplitude, double omega, const TimeGrid& grid)
{
    return DensityProgram::from_model(grid, [=](double t) {
        Eigen::VectorXd n(2), dn(2), ddn(2);
        n << 0.5 * (1.0 + amplitude * std::cos(omega * t)), 0.5 * (1.0 - amplitude * std::cos(omega * t));
        dn << -0.5 * amplitude * omega * std::sin(omega * t), 0.5 * amplitude * omega * std::sin(omega * t);
        ddn << -0.5 * amplitude * omega * omega * std::cos(omega * t),
            0.5 * amplitude * omega * omega * std::cos(omega * t);
        return DensitySample{n, dn, ddn};
    });
}

struct Scenario {
    ChainSpec spec;
    TimeGrid grid{0.0, 12.0, 12000};
    DensityProgram program = two_stage_density(spec, 3.0, 12.0, grid);
    ChainReconstruction rec = onsite_potential(program, spec, ground_state_psi(spec));
};

const Scenario& reference_scenario()
{
    static const Scenario s;
    return s;
}

} // namespace

TEST_CASE("smooth step")
{
    CHECK(smooth_step(0.0) == 0.0);
    CHECK(smooth_step(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(smooth_step(0.5) == doctest::Approx(0.5).epsilon(1e-15));
    for (double x : {0.0, 1.0}) {
        CHECK(std::abs(smooth_step_derivative(x)) < 1e-15);
        CHECK(std::abs(smooth_step_second_derivative(x)) < 1e-14);
    }
    CHECK(smooth_step_derivative(0.5) == doctest::Approx(2.0));
    const double h = 1e-5;
    for (double x : {0.1, 0.37, 0.8})
        CHECK(smooth_step_derivative(x) ==
              doctest::Approx((smooth_step(x + h) - smooth_step(x - h)) / (2 * h)).epsilon(1e-8));
    CHECK(code_of([] { smooth_step(-0.01); }) == ErrorCode::Domain);
    CHECK(code_of([] { smooth_step_derivative(1.01); }) == ErrorCode::Domain);
}

TEST_CASE("ground state of the 11-site chain")
{
    const ChainSpec spec;
    const Eigen::VectorXd psi = ground_state_amplitudes_chain(spec);
    const Eigen::VectorXd n = ground_state_density_chain(spec);
    CHECK(psi[5] == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-14));
    CHECK(n[5] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(n[0] == doctest::Approx(0.011165).epsilon(1e-4));
    CHECK(n.sum() == doctest::Approx(1.0).epsilon(1e-14));
    for (int m : {2, 3, 7, 40})
        CHECK(ground_state_density_chain(ChainSpec{m, 1.0}).sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(ground_state_density_chain(ChainSpec{1, 1.0}), Error);
}

TEST_CASE("two-stage density program")
{
    const ChainSpec spec;
    const TimeGrid grid(0.0, 12.0, 1200);
    const DensityProgram program = two_stage_density(spec, 3.0, 12.0, grid);
    const Eigen::VectorXd ground = ground_state_density_chain(spec);
    for (std::size_t i = 0; i < 11; ++i) {
        CHECK(program.density()(0, i) == doctest::Approx(ground[static_cast<Eigen::Index>(i)]).epsilon(1e-14));
        CHECK(program.density()(300, i) == doctest::Approx(1.0 / 11.0).epsilon(1e-13));
    }
    double tail = 0.0;
    for (int d = 1; d <= 5; ++d)
        tail += std::exp(-d * d);
    CHECK(program.density()(1200, 5) == doctest::Approx(1.0 / (1.0 + 2.0 * tail)).epsilon(1e-13));
    CHECK(program.density()(1200, 5) == doctest::Approx(0.56413).epsilon(1e-5));

    SUBCASE("mirror symmetric about the centre site")
    {
        for (std::size_t k = 0; k < grid.size(); k += 97)
            for (std::size_t i = 0; i < 5; ++i)
                CHECK(std::abs(program.density()(k, i) - program.density()(k, 10 - i)) < 1e-14);
    }
    SUBCASE("closed-form derivatives agree with finite differences")
    {
        const DensityModel model = two_stage_density_model(spec, 3.0, 12.0);
        const double h = 1e-4;
        for (double t : {0.7, 2.2, 4.1, 7.5, 11.3}) {
            const DensitySample s = model(t);
            const DensitySample lo = model(t - h);
            const DensitySample hi = model(t + h);
            CHECK((s.rate - (hi.density - lo.density) / (2 * h)).cwiseAbs().maxCoeff() < 1e-8);
            CHECK((s.acceleration - (hi.rate - lo.rate) / (2 * h)).cwiseAbs().maxCoeff() < 1e-7);
        }
    }
    SUBCASE("rates vanish at the stage boundaries")
    {
        for (std::size_t k : {0u, 300u, 1200u})
            for (std::size_t i = 0; i < 11; ++i)
                CHECK(std::abs(program.rate()(k, i)) < 1e-14);
    }
    SUBCASE("bad ordering")
    {
        CHECK(code_of([&] { two_stage_density(spec, 12.0, 3.0, grid); }) == ErrorCode::Ordering);
        CHECK(code_of([&] { two_stage_density(spec, 0.0, 12.0, grid); }) == ErrorCode::Ordering);
        CHECK(code_of([&] { two_stage_density(spec, 3.0, 10.0, grid); }) == ErrorCode::Ordering);
    }
}

TEST_CASE("density programs are validated")
{
    const TimeGrid grid(0.0, 1.0, 4);
    RealSeries bad(grid, 2);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        bad(k, 0) = 0.6;
        bad(k, 1) = 0.6;
    }
    CHECK(code_of([&] { DensityProgram::from_samples(bad); }) == ErrorCode::InvalidInput);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        bad(k, 0) = 1.0;
        bad(k, 1) = 0.0;
    }
    CHECK(code_of([&] { DensityProgram::from_samples(bad); }) == ErrorCode::VanishingDensity);
}

TEST_CASE("link currents")
{
    SUBCASE("static density carries no current")
    {
        const TimeGrid grid(0.0, 1.0, 10);
        RealSeries n(grid, 3);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            n(k, 0) = 0.2;
            n(k, 1) = 0.5;
            n(k, 2) = 0.3;
        }
        const LinkCurrents j = link_current_from_density(DensityProgram::from_samples(n));
        for (double v : j.current.data())
            CHECK(std::abs(v) < 1e-15);
    }
    SUBCASE("two sites with n1 = (1 + cos t)/2 give J12 = sin(t)/2")
    {
        const TimeGrid grid(0.5, 2.5, 200);
        const LinkCurrents j = link_current_from_density(two_site_program(1.0, 1.0, grid));
        for (std::size_t k = 0; k < grid.size(); ++k) {
            CHECK(j.current(k, 0) == doctest::Approx(0.5 * std::sin(grid.time(k))).epsilon(1e-14));
            CHECK(j.rate(k, 0) == doctest::Approx(0.5 * std::cos(grid.time(k))).epsilon(1e-14));
        }
    }
    SUBCASE("continuity and zero boundary leak on the two-stage program")
    {
        const Scenario& s = reference_scenario();
        const RealSeries leak = boundary_leak(s.program);
        for (double v : leak.data())
            CHECK(std::abs(v) < 1e-13);
        const RealSeries& j = s.rec.currents.current;
        for (std::size_t k = 0; k < s.grid.size(); k += 131) {
            for (std::size_t i = 0; i < 11; ++i) {
                const double in = i == 0 ? 0.0 : j(k, i - 1);
                const double out = i == 10 ? 0.0 : j(k, i);
                CHECK(std::abs(s.program.rate()(k, i) + (out - in)) < 1e-13);
            }
        }
    }
}

TEST_CASE("kinetic link terms")
{
    const ChainSpec spec;
    const Scenario& s = reference_scenario();
    const LinkKinetic& kin = s.rec.kinetic;
    const double k56 = (2.0 / 6.0) * std::sin(5.0 * pi / 12.0);
    CHECK(kin.kinetic(0, 4) == doctest::Approx(k56).epsilon(1e-12));
    CHECK(kin.kinetic(0, 4) == doctest::Approx(0.32198).epsilon(1e-5));
    for (double b : kin.branch)
        CHECK(b == 1.0);

    SUBCASE("|Q|^2 saturates the bound and the chain current is representable")
    {
        ComplexCurrent q{s.grid, {}};
        for (std::size_t k = 0; k < s.grid.size(); ++k) {
            Eigen::MatrixXcd links = Eigen::MatrixXcd::Zero(11, 11);
            for (Eigen::Index i = 0; i < 10; ++i) {
                const auto ii = static_cast<std::size_t>(i);
                links(i, i + 1) = Complex(kin.kinetic(k, ii), s.rec.currents.current(k, ii));
                links(i + 1, i) = std::conj(links(i, i + 1));
                const double bound = 4.0 * s.program.density()(k, ii) * s.program.density()(k, ii + 1);
                CHECK(std::abs(std::norm(links(i, i + 1)) - bound) < 1e-14);
            }
            q.links.push_back(links);
        }
        CHECK(check_representability(q, s.program.density(), spec.T0).representable());
    }
    SUBCASE("rate agrees with differentiating K")
    {
        const RealSeries dk = central_diff(kin.kinetic);
        for (std::size_t k = 1; k + 1 < s.grid.size(); k += 211)
            for (std::size_t i = 0; i < 10; ++i)
                CHECK(std::abs(dk(k, i) - kin.rate(k, i)) < 1e-6);
    }
    SUBCASE("sign is read from psi0")
    {
        const TimeGrid grid(0.5, 1.0, 50);
        const DensityProgram p = two_site_program(0.2, 1.0, grid);
        const double n1 = p.density()(0, 0);
        Eigen::VectorXcd psi(2);
        psi << std::sqrt(n1), -std::sqrt(1.0 - n1);
        const ChainSpec two{2, 1.0};
        const LinkKinetic k = kinetic_from_density(p, link_current_from_density(p), two, LatticeWavefunction(psi));
        CHECK(k.branch[0] == -1.0);
        CHECK(k.kinetic(10, 0) < 0.0);
    }
    SUBCASE("vanishing initial kinetic term is ambiguous")
    {
        const TimeGrid grid(0.0, 1.0, 10);
        RealSeries n(grid, 2);
        for (std::size_t k = 0; k < grid.size(); ++k)
            n(k, 0) = n(k, 1) = 0.5;
        const DensityProgram p = DensityProgram::from_samples(n);
        Eigen::VectorXcd psi(2);
        psi << 1.0, Complex(0.0, 1.0);
        const ChainSpec two{2, 1.0};
        CHECK(code_of([&] {
                  kinetic_from_density(p, link_current_from_density(p), two,
                                       LatticeWavefunction(psi / std::sqrt(2.0)));
              }) == ErrorCode::AmbiguousSign);
    }
    SUBCASE("current beyond the hopping bound is not representable")
    {
        const TimeGrid grid(0.0, 1.0, 100);
        const DensityProgram p = two_site_program(0.9, 10.0, grid);
        Eigen::VectorXcd psi(2);
        psi << std::sqrt(p.density()(0, 0)), std::sqrt(p.density()(0, 1));
        const ChainSpec two{2, 1.0};
        CHECK(code_of([&] { onsite_potential(p, two, LatticeWavefunction(psi)); }) ==
              ErrorCode::Representability);
    }
}

TEST_CASE("on-site potential for the two-stage program")
{
    const Scenario& s = reference_scenario();
    const RealSeries& v = s.rec.potential;

    for (std::size_t i = 0; i < 11; ++i)
        CHECK(std::abs(v(0, i)) < 1e-12);

    const std::size_t k3 = s.grid.nearest_index(3.0);
    for (std::size_t i = 1; i < 10; ++i)
        CHECK(std::abs(v(k3, i) - v(k3, 0) - 1.0) < 1e-6);
    CHECK(std::abs(v(k3, 10) - v(k3, 0)) < 1e-6);

    for (std::size_t k = 0; k < s.grid.size(); ++k)
        CHECK(v(k, 10) == 0.0);

    CHECK(s.rec.dual_path_discrepancy <= 1e-6);

    SUBCASE("mirror symmetry of the potential differences")
    {
        for (std::size_t k = 0; k < s.grid.size(); k += 503)
            for (std::size_t i = 0; i < 5; ++i)
                CHECK(std::abs(v(k, i) - v(k, 10 - i)) < 1e-8);
    }
    SUBCASE("states carry the prescribed density")
    {
        for (std::size_t k = 0; k < s.grid.size(); k += 97)
            for (Eigen::Index i = 0; i < 11; ++i)
                CHECK(std::abs(std::norm(s.rec.states[k][i]) - s.program.density()(k, static_cast<std::size_t>(i))) <
                      1e-14);
    }
}

TEST_CASE("forward propagation reproduces the two-stage program")
{
    const Scenario& s = reference_scenario();
    const auto signal = LatticeHamiltonianSignal::from_onsite(s.grid, s.spec.T0, rows(s.rec.potential));
    LatticeVerificationOptions options;
    options.ground_state_checkpoints = {3.0, 12.0};
    const VerificationReport report =
        verify_lattice(signal, s.program.density(), ground_state_psi(s.spec), options);
    CHECK(report.max_density_error <= 1e-5);
    REQUIRE(report.ground_state_overlaps.size() == 2);
    for (const auto& [t, overlap] : report.ground_state_overlaps)
        CHECK(overlap >= 1.0 - 1e-6);
    CHECK(report.norm_drift_rate() < 1e-10);
}

TEST_CASE("Schrodinger residual of the reconstruction falls at second order")
{
    const ChainSpec spec{7, 1.3};
    const auto residual = [&](int steps) {
        const TimeGrid grid(0.0, 4.0, steps);
        const DensityProgram p = two_stage_density(spec, 1.5, 4.0, grid);
        const ChainReconstruction rec = onsite_potential(p, spec, ground_state_psi(spec));
        return chain_schrodinger_residual(rec.potential, spec.T0, rec.states);
    };
    CHECK(std::log2(residual(400) / residual(800)) == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("static program reduces to the lattice Bohm potential")
{
    const ChainSpec spec{6, 0.8};
    Eigen::VectorXd n(6);
    n << 0.1, 0.15, 0.25, 0.2, 0.18, 0.12;
    const TimeGrid grid(0.0, 1.0, 20);
    RealSeries samples(grid, 6);
    for (std::size_t k = 0; k < grid.size(); ++k)
        for (Eigen::Index i = 0; i < 6; ++i)
            samples(k, static_cast<std::size_t>(i)) = n[i];
    const ChainReconstruction rec =
        onsite_potential(DensityProgram::from_samples(samples), spec,
                         LatticeWavefunction(n.cwiseSqrt().cast<Complex>()));
    const Eigen::VectorXd bohm = lattice_bohm_potential(n, spec);
    for (std::size_t k = 0; k < grid.size(); k += 5)
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(std::abs(rec.potential(k, i) - bohm[static_cast<Eigen::Index>(i)]) < 1e-12);
}

TEST_CASE("lattice Bohm potential")
{
    SUBCASE("uniform density: edges sit one unit below the interior")
    {
        const ChainSpec spec;
        const Eigen::VectorXd v = lattice_bohm_potential(Eigen::VectorXd::Constant(11, 1.0 / 11.0), spec);
        for (Eigen::Index i = 1; i < 10; ++i)
            CHECK(v[i] - v[0] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(v[10] == 0.0);
        CHECK(v[0] == doctest::Approx(0.0));
    }
    SUBCASE("two equal sites")
    {
        const Eigen::VectorXd v = lattice_bohm_potential(Eigen::Vector2d(0.5, 0.5), ChainSpec{2, 1.0});
        CHECK(v[0] == doctest::Approx(v[1]));
    }
    SUBCASE("ground state of the reconstructed potential reproduces the density")
    {
        const ChainSpec spec;
        Eigen::VectorXd n(11);
        for (int i = 0; i < 11; ++i)
            n[i] = std::exp(-std::pow(i + 1 - 6.0, 2));
        n /= n.sum();
        const GroundState gs = ground_state_lattice(chain_hamiltonian(spec.T0, lattice_bohm_potential(n, spec)));
        CHECK_FALSE(gs.degenerate);
        CHECK((gs.state.cwiseAbs2() - n).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("uniform density is the ground state of the stepped potential")
    {
        const ChainSpec spec{9, 2.0};
        const Eigen::VectorXd n = Eigen::VectorXd::Constant(9, 1.0 / 9.0);
        const GroundState gs = ground_state_lattice(chain_hamiltonian(spec.T0, lattice_bohm_potential(n, spec)));
        CHECK((gs.state.cwiseAbs2() - n).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("vanishing density")
    {
        CHECK(code_of([] { lattice_bohm_potential(Eigen::Vector3d(0.5, 0.0, 0.5), ChainSpec{3, 1.0}); }) ==
              ErrorCode::VanishingDensity);
    }
}
