#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pulseforge/scenario.hpp"

namespace {

using nlohmann::json;
using namespace pulseforge;

struct Overrides {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::string> format;
    bool emit_plot_data = false;
    std::optional<double> dt;
    std::optional<double> t_end;
    std::optional<int> stride;
    std::optional<int> M;
    std::optional<double> T0, t1, t2, B0, tau, omega0, m, stretch, shift, x_min, x_max;
    std::optional<std::string> alpha_program, r0_program;
    std::optional<int> n_points, sites;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

template <class T>
void put(json& j, const char* key, const std::optional<T>& v)
{
    if (v)
        j[key] = *v;
}

json overlay(const Overrides& o)
{
    json j = json::object();
    put(j, "output_dir", o.out);
    put(j, "format", o.format);
    if (o.emit_plot_data)
        j["emit_plot_data"] = true;
    put(j, "dt", o.dt);
    put(j, "t_end", o.t_end);
    put(j, "stride", o.stride);
    put(j, "M", o.M);
    put(j, "T0", o.T0);
    put(j, "t1", o.t1);
    put(j, "t2", o.t2);
    put(j, "B0", o.B0);
    put(j, "tau", o.tau);
    put(j, "omega0", o.omega0);
    put(j, "m", o.m);
    put(j, "stretch", o.stretch);
    put(j, "shift", o.shift);
    put(j, "x_min", o.x_min);
    put(j, "x_max", o.x_max);
    put(j, "alpha_program", o.alpha_program);
    put(j, "r0_program", o.r0_program);
    put(j, "n_points", o.n_points);
    put(j, "sites", o.sites);
    put(j, "seed", o.seed);
    return j;
}

json load_config(const std::string& path)
{
    if (path.empty())
        return json::object();
    try {
        return json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, path + ": " + e.what());
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, e.what());
    }
}

void print_outcome(const ScenarioOutcome& out, bool quiet)
{
    if (out.report.contains("checks") && !quiet) {
        for (const auto& c : out.report["checks"]) {
            std::printf("%-36s %-24s %s %-12s %s\n", c["name"].get<std::string>().c_str(),
                        io::format_double(c["value"].get<double>()).c_str(), c["relation"].get<std::string>().c_str(),
                        io::format_double(c["limit"].get<double>()).c_str(), c["passed"].get<bool>() ? "PASS" : "FAIL");
        }
    }
    if (!out.files.empty() && !quiet)
        std::printf("wrote %zu files, report: %s\n", out.files.size(), out.files.back().string().c_str());
    if (out.exit_code == exit_code::ok)
        std::printf("%s\n", out.message.c_str());
    else
        std::fprintf(stderr, "pulseforge: %s (exit %d)\n", out.message.c_str(), out.exit_code);
}

void add_common(CLI::App* sub, Overrides& o)
{
    sub->add_option("--config", o.config_path, "JSON config document (flags override it)");
    sub->add_option("--out", o.out, "output directory (default $PULSEFORGE_OUT or ./pulseforge-out)");
    sub->add_option("--format", o.format, "csv or json");
    sub->add_flag("--emit-plot-data", o.emit_plot_data, "write per-figure CSVs under plots/");
    sub->add_option("--dt", o.dt, "time step");
    sub->add_option("--t-end", o.t_end, "run length");
    sub->add_option("--stride", o.stride, "export every stride-th step");
    sub->add_flag("-q,--quiet", o.quiet, "print only the final status");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Inverse-engineered control pulses for lattice, spin and continuum quantum systems"};
    app.require_subcommand(1);
    Overrides o;

    auto* chain = app.add_subcommand("chain-reshape", "reshape the ground-state density of a tight-binding chain");
    add_common(chain, o);
    chain->add_option("--M", o.M, "number of sites");
    chain->add_option("--T0", o.T0, "hopping amplitude");
    chain->add_option("--t1", o.t1, "end of the flattening stage");
    chain->add_option("--t2", o.t2, "end of the contraction stage");

    auto* spin = app.add_subcommand("spin-not", "in-plane field pulse realising a NOT gate");
    add_common(spin, o);
    spin->add_option("--B0", o.B0, "initial and final field along x");
    spin->add_option("--tau", o.tau, "gate duration");

    auto* osc = app.add_subcommand("oscillator-scaling", "scaling-solution drive of a harmonic oscillator");
    add_common(osc, o);
    osc->add_option("--omega0", o.omega0, "base frequency");
    osc->add_option("--m", o.m, "mass");
    osc->add_option("--tau", o.tau, "ramp duration");
    osc->add_option("--alpha-program", o.alpha_program, "smooth-step or constant");
    osc->add_option("--r0-program", o.r0_program, "smooth-step or rest");
    osc->add_option("--stretch", o.stretch, "final alpha - 1");
    osc->add_option("--shift", o.shift, "final displacement r0");
    osc->add_option("--n-points", o.n_points, "spatial nodes");
    osc->add_option("--x-min", o.x_min, "left wall");
    osc->add_option("--x-max", o.x_max, "right wall");

    auto* trip = app.add_subcommand("lattice-roundtrip", "propagate random hoppings, extract Q, reconstruct");
    add_common(trip, o);
    trip->add_option("--sites", o.sites, "number of sites");
    trip->add_option("--seed", o.seed, "random seed");

    std::string pulse_path;
    std::string target_path;
    auto* verify = app.add_subcommand("verify", "propagate a pulse file and compare with a target observable file");
    verify->add_option("pulse", pulse_path, "pulse file (.json or .csv)")->required();
    verify->add_option("target", target_path, "target observable file")->required();
    verify->add_option("--config", o.config_path, "JSON document; only its \"thresholds\" are used");
    verify->add_option("--out", o.out, "output directory");
    verify->add_flag("-q,--quiet", o.quiet, "print only the final status");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_code::config;
    }

    try {
        const json doc = load_config(o.config_path);
        if (verify->parsed()) {
            ScenarioConfig base = default_config(ScenarioKind::ChainReshape);
            if (doc.contains("thresholds"))
                base = config_from_json({{"thresholds", doc["thresholds"]}}, base);
            const std::filesystem::path out_dir = o.out ? std::filesystem::path(*o.out) : base.output_dir;
            const ScenarioOutcome out = verify_files(pulse_path, target_path, base.thresholds, out_dir);
            print_outcome(out, o.quiet);
            return out.exit_code;
        }

        ScenarioKind kind = ScenarioKind::ChainReshape;
        for (const auto* sub : {chain, spin, osc, trip})
            if (sub->parsed())
                kind = scenario_from_string(sub->get_name());
        if (doc.contains("scenario") && (!doc["scenario"].is_string() || doc["scenario"].get<std::string>() != to_string(kind)))
            throw Error(ErrorCode::Config, "config names a different scenario than the subcommand");
        ScenarioConfig config = config_from_json(doc, default_config(kind));
        config = config_from_json(overlay(o), config);
        const ScenarioOutcome out = run_scenario(config);
        print_outcome(out, o.quiet);
        return out.exit_code;
    } catch (const Error& e) {
        std::fprintf(stderr, "pulseforge: %s\n", e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pulseforge: %s\n", e.what());
        return exit_code::failure;
    }
}
