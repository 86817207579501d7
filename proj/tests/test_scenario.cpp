#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>

#include "pulseforge/scenario.hpp"

using namespace pulseforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

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

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "pulseforge-test-scenario" / name;
    fs::remove_all(dir);
    return dir;
}

ScenarioConfig config_in(ScenarioKind kind, const fs::path& dir)
{
    ScenarioConfig c;
    c.kind = kind;
    c.output_dir = dir;
    return c;
}

json report_of(const fs::path& dir, ScenarioKind kind)
{
    return json::parse(io::read_text(dir / std::string(to_string(kind)) / "report.json"));
}

} // namespace

TEST_CASE("defaults are the published scenario values")
{
    const ScenarioConfig c;
    CHECK(c.M == 11);
    CHECK(c.T0 == 1.0);
    CHECK(c.t1 == 3.0);
    CHECK(c.t2 == 12.0);
    CHECK(c.B0 == 1.0);
    CHECK(c.resolved_tau() == 12.0);
    CHECK(c.resolved_t_end() == 12.0);
    CHECK(c.resolved_dt() == 1e-3);
    CHECK(c.n_steps() == 12000);

    ScenarioConfig spin = c;
    spin.kind = ScenarioKind::SpinNot;
    CHECK(spin.resolved_dt() == doctest::Approx(12e-5));
    CHECK(spin.n_steps() == 100000);

    ScenarioConfig osc = c;
    osc.kind = ScenarioKind::OscillatorScaling;
    CHECK(osc.resolved_tau() == 5.0);
    CHECK(osc.n_steps() == 5000);
}

TEST_CASE("scenario names round trip")
{
    for (auto k : {ScenarioKind::ChainReshape, ScenarioKind::SpinNot, ScenarioKind::OscillatorScaling,
                   ScenarioKind::LatticeRoundtrip})
        CHECK(scenario_from_string(to_string(k)) == k);
    CHECK(code_of([] { scenario_from_string("nope"); }) == ErrorCode::Config);
}

TEST_CASE("later documents override earlier ones")
{
    const ScenarioConfig file = config_from_json(json{{"M", 9}, {"t1", 2.0}, {"thresholds", {{"min_fidelity", 0.9}}}});
    const ScenarioConfig flags = config_from_json(json{{"t1", 4.0}}, file);
    CHECK(flags.M == 9);
    CHECK(flags.t1 == 4.0);
    CHECK(flags.t2 == 12.0);
    CHECK(flags.thresholds.min_fidelity == 0.9);
    CHECK(flags.thresholds.max_density_error == 1e-5);

    const ScenarioConfig back = config_from_json(config_to_json(flags));
    CHECK(config_to_json(back) == config_to_json(flags));
}

TEST_CASE("output directory falls back to the environment")
{
    ::setenv("PULSEFORGE_OUT", "/tmp/from-env", 1);
    CHECK(default_config(ScenarioKind::SpinNot).output_dir == fs::path("/tmp/from-env"));
    CHECK(config_from_json(json{{"output_dir", "x"}}, default_config(ScenarioKind::SpinNot)).output_dir ==
          fs::path("x"));
    ::unsetenv("PULSEFORGE_OUT");
    CHECK(default_config(ScenarioKind::SpinNot).output_dir == fs::path("pulseforge-out"));
}

TEST_CASE("malformed configs are config errors")
{
    CHECK(code_of([] { config_from_json(json{{"bogus", 1}}); }) == ErrorCode::Config);
    CHECK(code_of([] { config_from_json(json{{"M", "eleven"}}); }) == ErrorCode::Config);
    CHECK(code_of([] { config_from_json(json{{"thresholds", {{"nope", 1.0}}}}); }) == ErrorCode::Config);
    CHECK(code_of([] { config_from_json(json::array()); }) == ErrorCode::Config);
    CHECK(code_of([] { config_from_json(json{{"format", "xml"}}); }) == ErrorCode::Config);

    ScenarioConfig c;
    c.t1 = 0.0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
    c.t1 = 13.0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
    c = ScenarioConfig{};
    c.t_end = 15.0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
    c = ScenarioConfig{};
    c.dt = 0.007;
    CHECK(code_of([&] { c.n_steps(); }) == ErrorCode::Config);
    c = ScenarioConfig{};
    c.kind = ScenarioKind::SpinNot;
    c.B0 = -1.0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::Config);
}

TEST_CASE("error codes map to exit codes")
{
    CHECK(exit_code_for(ErrorCode::Config) == exit_code::config);
    CHECK(exit_code_for(ErrorCode::Ordering) == exit_code::config);
    CHECK(exit_code_for(ErrorCode::Representability) == exit_code::representability);
    CHECK(exit_code_for(ErrorCode::AmbiguousSign) == exit_code::representability);
    CHECK(exit_code_for(ErrorCode::VanishingDensity) == exit_code::representability);
}

TEST_CASE("spin-not writes the pulse files and passes")
{
    const fs::path dir = scratch("spin");
    ScenarioConfig c = config_in(ScenarioKind::SpinNot, dir);
    c.emit_plot_data = true;
    const ScenarioOutcome out = run_scenario(c);
    CHECK(out.exit_code == exit_code::ok);
    const json report = report_of(dir, c.kind);
    CHECK(report["passed"] == true);
    CHECK(report["metrics"]["final_fidelity"].get<double>() >= 1.0 - 1e-6);
    CHECK(std::abs(report["metrics"]["global_phase"].get<double>() + std::numbers::pi / 2.0) <= 1e-4);

    const io::Table pulse = io::read_table(dir / "spin-not" / "pulse.json");
    CHECK(pulse.kind == "spin-field");
    CHECK(pulse.samples.front() == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(pulse.samples.back() == std::vector<double>{12.0, 1.0, 0.0});
    for (const char* f : {"observables.json", "wavefunction.json", "plots/fig4_bloch.csv", "plots/fig5_field.csv"})
        CHECK(fs::exists(dir / "spin-not" / f));
}

TEST_CASE("chain-reshape starts from zero potential and passes")
{
    const fs::path dir = scratch("chain");
    ScenarioConfig c = config_in(ScenarioKind::ChainReshape, dir);
    c.format = io::Format::Csv;
    const ScenarioOutcome out = run_scenario(c);
    CHECK(out.exit_code == exit_code::ok);
    const std::string csv = io::read_text(dir / "chain-reshape" / "pulse.csv");
    CHECK(csv.rfind("t,v_1,v_2,v_3,v_4,v_5,v_6,v_7,v_8,v_9,v_10,v_11\n", 0) == 0);
    const io::Table pulse = io::read_table(dir / "chain-reshape" / "pulse.csv");
    REQUIRE(pulse.samples.size() == 12001);
    for (std::size_t i = 1; i < pulse.samples[0].size(); ++i)
        CHECK(std::abs(pulse.samples[0][i]) <= 1e-12);
}

TEST_CASE("identical configs give byte-identical files")
{
    const fs::path dir = scratch("determinism");
    const ScenarioConfig c = config_in(ScenarioKind::LatticeRoundtrip, dir);
    const ScenarioOutcome first = run_scenario(c);
    REQUIRE(first.exit_code == exit_code::ok);
    std::vector<std::string> before;
    for (const auto& f : first.files)
        before.push_back(io::read_text(f));
    const ScenarioOutcome second = run_scenario(c);
    REQUIRE(second.files == first.files);
    for (std::size_t i = 0; i < first.files.size(); ++i)
        CHECK(io::read_text(second.files[i]) == before[i]);
}

TEST_CASE("unrepresentable programs exit 3 and record the error")
{
    const fs::path dir = scratch("representability");
    ScenarioConfig c = config_in(ScenarioKind::ChainReshape, dir);
    c.T0 = 0.01;
    const ScenarioOutcome out = run_scenario(c);
    CHECK(out.exit_code == exit_code::representability);
    const json report = report_of(dir, c.kind);
    CHECK(report["error"]["code"] == "representability");
    CHECK(report["passed"] == false);
}

TEST_CASE("missed thresholds exit 4")
{
    const fs::path dir = scratch("threshold");
    ScenarioConfig c = config_in(ScenarioKind::LatticeRoundtrip, dir);
    c.thresholds.max_roundtrip_error = 1e-30;
    CHECK(run_scenario(c).exit_code == exit_code::verification);
}

TEST_CASE("config errors exit 2 without writing")
{
    const fs::path dir = scratch("config");
    ScenarioConfig c = config_in(ScenarioKind::ChainReshape, dir);
    c.t1 = 0.0;
    CHECK(run_scenario(c).exit_code == exit_code::config);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("exported pulses verify against their observables")
{
    const fs::path dir = scratch("verify");
    const ScenarioConfig c = config_in(ScenarioKind::LatticeRoundtrip, dir);
    REQUIRE(run_scenario(c).exit_code == exit_code::ok);
    const fs::path sub = dir / "lattice-roundtrip";
    const ScenarioOutcome ok = verify_files(sub / "pulse.json", sub / "observables.json", {}, dir);
    CHECK(ok.exit_code == exit_code::ok);
    CHECK(ok.report["metrics"]["max_density_error"].get<double>() <= 1e-5);

    const ScenarioOutcome missing = verify_files(sub / "absent.json", sub / "observables.json", {}, dir);
    CHECK(missing.exit_code == exit_code::config);
    const ScenarioOutcome swapped = verify_files(sub / "observables.json", sub / "pulse.json", {}, dir);
    CHECK(swapped.exit_code != exit_code::ok);
}
