#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "pulseforge/io.hpp"
#include "pulseforge/propagator.hpp"
#include "pulseforge/spin_control.hpp"

using namespace pulseforge;
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
    const fs::path dir = fs::temp_directory_path() / "pulseforge-test-io" / name;
    fs::remove_all(dir);
    return dir;
}

/// Values that stress shortest round-trip formatting.
RealSeries awkward_series(const TimeGrid& grid)
{
    RealSeries s(grid, 3);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        s(k, 0) = u(rng) * std::pow(10.0, static_cast<double>(k % 40) - 20.0);
        s(k, 1) = 0.1 * static_cast<double>(k) + 1.0 / 3.0;
        s(k, 2) = k == 0 ? std::numeric_limits<double>::denorm_min() : -std::nextafter(1.0, 2.0);
    }
    return s;
}

} // namespace

TEST_CASE("doubles are written with 17 significant digits")
{
    CHECK(io::format_double(0.0) == "0");
    CHECK(io::format_double(1.0) == "1");
    CHECK(io::format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("json round trip is bit exact")
{
    const TimeGrid grid(0.0, 0.7, 70);
    io::Table t = io::table_from_series("spin-field", awkward_series(grid), {"a", "b", "c"});
    t.initial_state = {0.5, -0.25, std::sqrt(0.5), 1e-300};
    t.parameters["m"] = 1.0 / 7.0;
    const io::Table back = io::table_from_json(io::to_json(t));
    CHECK(back == t);
    CHECK(io::to_json(back) == io::to_json(t));
}

TEST_CASE("csv round trip is bit exact given the grid")
{
    const TimeGrid grid(0.0, 0.7, 70);
    const RealSeries s = awkward_series(grid);
    const io::Table t = io::table_from_series("x", s, {"a", "b", "c"});
    const io::Table back = io::table_from_csv(io::to_csv(t), "x", grid);
    CHECK(back == t);
    const RealSeries again = io::series_from_table(back);
    for (std::size_t k = 0; k < grid.size(); ++k)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(again(k, c) == s(k, c));
}

TEST_CASE("csv grid is inferred from the sample times")
{
    const TimeGrid grid(0.0, 2.0, 20);
    RealSeries s(grid, 1);
    for (std::size_t k = 0; k < grid.size(); ++k)
        s(k, 0) = grid.time(k);
    const io::Table back = io::table_from_csv(io::to_csv(io::table_from_series("p", s, {"v"})));
    CHECK(back.grid.n_steps() == 20);
    CHECK(back.grid.t_end() == 2.0);
    CHECK(io::series_from_table(back)(20, 0) == 2.0);
}

TEST_CASE("csv header is t followed by the channels")
{
    const TimeGrid grid(0.0, 1.0, 2);
    RealSeries s(grid, 2);
    std::istringstream lines(io::to_csv(io::table_from_series("p", s, {"v_1", "v_2"})));
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t,v_1,v_2");
}

TEST_CASE("spin pulse row at t = 0 is 0,1,0")
{
    const double tau = 12.0;
    const TimeGrid grid(0.0, tau, 1200);
    const NotGate gate = not_gate_pulse(1.0, tau, grid);
    const std::string csv = io::to_csv(io::table_from_series("spin-field", gate.synthesis.pulse.field, {"Bx", "By"}));
    std::istringstream lines(csv);
    std::string header, first, last;
    std::getline(lines, header);
    std::getline(lines, first);
    for (std::string line; std::getline(lines, line);)
        last = line;
    CHECK(header == "t,Bx,By");
    CHECK(first == "0,1,0");
    CHECK(last == "12,1,0");
}

TEST_CASE("field tables use long-format csv and survive a round trip")
{
    const TimeGrid grid(0.0, 0.2, 4);
    const SpatialGrid space(-1.0, 1.0, 5);
    RealField1D field(space, grid);
    for (Eigen::Index k = 0; k < field.values.rows(); ++k)
        for (Eigen::Index i = 0; i < space.n_points(); ++i)
            field.values(k, i) = grid.time(static_cast<std::size_t>(k)) * space.x(i) + 0.1;
    const io::Table t = io::table_from_field("grid-potential", field, "V");
    std::istringstream lines(io::to_csv(t));
    std::string header;
    std::getline(lines, header);
    CHECK(header == "t,x,V");

    const io::Table back = io::table_from_csv(io::to_csv(t), "grid-potential", grid);
    CHECK(back.samples == t.samples);
    CHECK(back.x == t.x);
    CHECK(back.channels == t.channels);
    CHECK(io::table_from_json(io::to_json(t)) == t);
    const io::Table inferred = io::table_from_csv(io::to_csv(t), "grid-potential");
    CHECK(inferred.grid == grid);
    const RealField1D again = io::field_from_table(back, "V");
    CHECK((again.values == field.values).all());
    CHECK(again.space == space);
}

TEST_CASE("states survive interleaving")
{
    Eigen::VectorXcd psi(3);
    psi << Complex(0.1, -0.2), Complex(std::sqrt(0.5), 0.0), Complex(-1e-17, 3.0);
    CHECK(io::deinterleave(io::interleave(psi)) == psi);
    CHECK(code_of([] { io::deinterleave({1.0, 2.0, 3.0}); }) == ErrorCode::InvalidInput);

    const TimeGrid grid(0.0, 1.0, 2);
    const std::vector<Eigen::VectorXcd> states(3, psi);
    const io::Table t = io::table_from_states("wavefunction", grid, states);
    CHECK(t.channels.front() == "re_1");
    CHECK(io::states_from_table(io::table_from_json(io::to_json(t))) == states);
}

TEST_CASE("empty trajectory is a valid file with zero rows")
{
    io::Table t{"spin-field", TimeGrid(0.0, 1.0, 2), {"Bx", "By"}, {}, {}, {}, {}};
    t.validate();
    const std::string text = io::to_json(t);
    CHECK(text.find("\"samples\": []") != std::string::npos);
    CHECK(io::table_from_json(text) == t);
    CHECK(io::table_from_csv(io::to_csv(t), "spin-field", t.grid) == t);
}

TEST_CASE("strided export keeps every stride-th row")
{
    const TimeGrid grid(0.0, 1.0, 10);
    RealSeries s(grid, 1);
    for (std::size_t k = 0; k < grid.size(); ++k)
        s(k, 0) = static_cast<double>(k);
    const io::Table t = io::table_from_series("p", s, {"v"}, 5);
    REQUIRE(t.samples.size() == 3);
    CHECK(t.samples[1][1] == 5.0);
    CHECK(t.grid.n_steps() == 2);
    CHECK(code_of([&] { io::table_from_series("p", s, {"v"}, 3); }) == ErrorCode::InvalidInput);
}

TEST_CASE("files are written and read back by extension")
{
    const fs::path dir = scratch("files");
    const TimeGrid grid(0.0, 0.3, 3);
    const io::Table t = io::table_from_series("p", awkward_series(grid), {"a", "b", "c"});
    io::write_table(t, dir / "nested" / "p.json", io::Format::Json);
    io::write_table(t, dir / "p.csv", io::Format::Csv);
    CHECK(io::read_table(dir / "nested" / "p.json") == t);
    const io::Table csv = io::read_table(dir / "p.csv");
    CHECK(csv.samples == t.samples);
    CHECK(csv.grid == t.grid);
}

TEST_CASE("errors carry codes and paths")
{
    const fs::path missing = scratch("missing") / "nope.json";
    try {
        io::read_text(missing);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Io);
        CHECK(std::string(e.what()).find("nope.json") != std::string::npos);
    }
    CHECK(code_of([] { io::table_from_json("{not json"); }) == ErrorCode::Io);
    CHECK(code_of([] {
              io::table_from_json(R"({"kind":"p","grid":{"t_start":0,"t_end":1,"n_steps":1},"channels":["v"],"samples":[[0]]})");
          }) == ErrorCode::InvalidInput);
    CHECK(code_of([] {
              io::table_from_json(R"({"kind":"p","grid":{"t_start":0,"t_end":1,"n_steps":1},"channels":["v"],"samples":[],"extra":1})");
          }) == ErrorCode::InvalidInput);
    CHECK(code_of([] { io::table_from_csv("t,v\n0,abc\n"); }) == ErrorCode::Io);
    CHECK(code_of([] { io::format_from_string("xml"); }) == ErrorCode::Config);
    CHECK(code_of([&] { io::read_table(missing.parent_path() / "p.txt"); }) != ErrorCode::InvalidInput);
}
