#include "pulseforge/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "pulseforge/benchmarks.hpp"
#include "pulseforge/chain_control.hpp"
#include "pulseforge/lattice_map.hpp"
#include "pulseforge/propagator.hpp"
#include "pulseforge/realspace_control.hpp"
#include "pulseforge/spin_control.hpp"

namespace pulseforge {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* tool_version = "1.0.0";

[[noreturn]] void config_error(const std::string& what)
{
    throw Error(ErrorCode::Config, what);
}

class Checks {
public:
    void at_most(const std::string& name, double value, double limit) { add(name, value, limit, "<=", value <= limit); }
    void at_least(const std::string& name, double value, double limit) { add(name, value, limit, ">=", value >= limit); }
    bool passed() const { return passed_; }
    const json& list() const { return list_; }

private:
    void add(const std::string& name, double value, double limit, const char* relation, bool ok)
    {
        list_.push_back({{"name", name}, {"value", value}, {"limit", limit}, {"relation", relation}, {"passed", ok}});
        passed_ = passed_ && ok;
    }
    json list_ = json::array();
    bool passed_ = true;
};

struct Writer {
    fs::path dir;
    io::Format format;
    ScenarioOutcome& outcome;

    void table(const std::string& stem, const io::Table& t)
    {
        const fs::path p = dir / (stem + std::string(io::extension(format)));
        io::write_table(t, p, format);
        outcome.files.push_back(p);
    }
    void plot(const std::string& stem, const io::Table& t)
    {
        const fs::path p = dir / "plots" / (stem + ".csv");
        io::write_table(t, p, io::Format::Csv);
        outcome.files.push_back(p);
    }
};

std::vector<std::string> numbered(const std::string& prefix, int count)
{
    std::vector<std::string> out;
    for (int i = 1; i <= count; ++i)
        out.push_back(prefix + std::to_string(i));
    return out;
}

std::vector<Eigen::VectorXd> series_rows(const RealSeries& s)
{
    std::vector<Eigen::VectorXd> out;
    out.reserve(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto r = s.row(k);
        out.emplace_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
    }
    return out;
}

std::vector<std::string> link_channels(Eigen::Index sites, const std::string& name)
{
    std::vector<std::string> out;
    for (Eigen::Index i = 1; i <= sites; ++i)
        for (Eigen::Index j = i + 1; j <= sites; ++j) {
            const std::string tag = name + "_" + std::to_string(i) + "_" + std::to_string(j);
            out.push_back("re_" + tag);
            out.push_back("im_" + tag);
        }
    return out;
}

std::vector<double> upper_links(const Eigen::MatrixXcd& m)
{
    std::vector<double> out;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
            out.push_back(m(i, j).real());
            out.push_back(m(i, j).imag());
        }
    return out;
}

Eigen::MatrixXcd links_from_values(Eigen::Index sites, const double* values)
{
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(sites, sites);
    for (Eigen::Index i = 0; i < sites; ++i)
        for (Eigen::Index j = i + 1; j < sites; ++j) {
            m(i, j) = Complex(values[0], values[1]);
            m(j, i) = std::conj(m(i, j));
            values += 2;
        }
    return m;
}

io::Table hopping_table(std::string kind, const TimeGrid& grid, const std::vector<Eigen::MatrixXcd>& hoppings,
                        std::size_t stride)
{
    const TimeGrid coarse = io::strided_grid(grid, stride);
    const Eigen::Index sites = hoppings.front().rows();
    io::Table t{std::move(kind), coarse, link_channels(sites, "T"), {}, {}, {}, {}};
    for (std::size_t c = 0; c < coarse.size(); ++c) {
        std::vector<double> row{coarse.time(c)};
        const auto v = upper_links(hoppings[c * stride]);
        row.insert(row.end(), v.begin(), v.end());
        t.samples.push_back(std::move(row));
    }
    return t;
}

double max_norm_drift(const std::vector<Eigen::VectorXcd>& states)
{
    double worst = 0.0;
    for (const auto& s : states)
        worst = std::max(worst, std::abs(s.squaredNorm() - 1.0));
    return worst;
}

json verification_json(const VerificationReport& r)
{
    json j{{"max_density_error", r.max_density_error},
           {"norm_drift", r.norm_drift},
           {"norm_drift_rate", r.norm_drift_rate()},
           {"duration", r.duration}};
    if (r.final_fidelity)
        j["final_fidelity"] = *r.final_fidelity;
    if (r.final_overlap)
        j["final_overlap"] = {r.final_overlap->real(), r.final_overlap->imag()};
    json overlaps = json::array();
    for (const auto& [t, o] : r.ground_state_overlaps)
        overlaps.push_back({{"t", t}, {"overlap_sq", o}});
    j["ground_state_overlaps"] = overlaps;
    return j;
}

void finish(ScenarioOutcome& out, const Checks& checks, json metrics, const fs::path& dir, json config)
{
    out.exit_code = checks.passed() ? exit_code::ok : exit_code::verification;
    out.message = checks.passed() ? "all checks passed" : "verification thresholds not met";
    out.report["metrics"] = std::move(metrics);
    out.report["checks"] = checks.list();
    out.report["passed"] = checks.passed();
    out.report["exit_code"] = out.exit_code;
    json files = json::array();
    for (const auto& f : out.files)
        files.push_back(fs::relative(f, dir).generic_string());
    out.report["metadata"] = {{"tool", "pulseforge"}, {"version", tool_version}, {"config", std::move(config)},
                              {"files", files}};
    const fs::path p = dir / "report.json";
    io::write_text(p, out.report.dump(2) + "\n");
    out.files.push_back(p);
}

void run_chain(const ScenarioConfig& cfg, Writer& w, Checks& checks, json& metrics)
{
    const ChainSpec spec{cfg.M, cfg.T0};
    const TimeGrid grid(0.0, cfg.resolved_t_end(), cfg.n_steps());
    const auto stride = static_cast<std::size_t>(cfg.resolved_stride());
    const DensityProgram program = two_stage_density(spec, cfg.t1, cfg.t2, grid);
    const LatticeWavefunction psi0(ground_state_amplitudes_chain(spec).cast<Complex>());
    const ChainReconstruction rec = onsite_potential(program, spec, psi0);

    const auto signal = LatticeHamiltonianSignal::from_onsite(grid, cfg.T0, series_rows(rec.potential));
    LatticeVerificationOptions options;
    options.ground_state_checkpoints = {cfg.t1, cfg.t2};
    const VerificationReport report = verify_lattice(signal, program.density(), psi0, options);

    double initial = 0.0;
    for (int i = 0; i < cfg.M; ++i)
        initial = std::max(initial, std::abs(rec.potential(0, static_cast<std::size_t>(i))));
    const std::size_t k1 = grid.nearest_index(cfg.t1);
    double step = 0.0;
    for (int i = 1; i + 1 < cfg.M; ++i)
        step = std::max(step, std::abs(rec.potential(k1, static_cast<std::size_t>(i)) - rec.potential(k1, 0) - cfg.T0));

    metrics = verification_json(report);
    metrics["max_initial_potential"] = initial;
    metrics["potential_step_error_at_t1"] = step;
    metrics["dual_path_discrepancy"] = rec.dual_path_discrepancy;

    const auto& th = cfg.thresholds;
    checks.at_most("max_density_error", report.max_density_error, th.max_density_error);
    for (const auto& [t, o] : report.ground_state_overlaps)
        checks.at_least("ground_state_overlap_t" + io::format_double(t), o, th.min_ground_state_overlap);
    checks.at_most("potential_step_error_at_t1", step, th.potential_step_tolerance);
    checks.at_most("max_initial_potential", initial, 1e-12);
    checks.at_most("norm_drift_rate", report.norm_drift_rate(), th.max_norm_drift_rate);

    io::Table pulse = io::table_from_series("chain-potential", rec.potential, numbered("v_", cfg.M), stride);
    pulse.initial_state = io::interleave(psi0.amplitudes());
    pulse.parameters = {{"T0", cfg.T0}, {"M", cfg.M}, {"t1", cfg.t1}, {"t2", cfg.t2}};
    const io::Table density = io::table_from_series("chain-density", program.density(), numbered("n_", cfg.M), stride);
    w.table("pulse", pulse);
    w.table("observables", density);
    w.table("wavefunction", io::table_from_states("lattice-wavefunction", grid, rec.states, stride));
    if (cfg.emit_plot_data) {
        w.plot("fig2_density", density);
        w.plot("fig3_potential", pulse);
    }
}

void run_spin(const ScenarioConfig& cfg, Writer& w, Checks& checks, json& metrics)
{
    const double tau = cfg.resolved_tau();
    const TimeGrid grid(0.0, tau, cfg.n_steps());
    const auto stride = static_cast<std::size_t>(cfg.resolved_stride());
    const NotGate gate = not_gate_pulse(cfg.B0, tau, grid);
    const auto& traj = gate.synthesis.trajectory;
    const auto bloch = check_bloch_representability(traj);
    if (!bloch.representable())
        throw Error(ErrorCode::Representability, "Bloch trajectory needs an unbounded field at t = " +
                                                     io::format_double(bloch.violations.front().time));

    const auto predicted = spin_states(traj, gate.synthesis.beta);
    RealSeries density(grid, 2);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        density(k, 0) = std::norm(predicted[k][0]);
        density(k, 1) = std::norm(predicted[k][1]);
    }
    const auto signal = LatticeHamiltonianSignal::from_hoppings(grid, gate.synthesis.pulse.hoppings());
    LatticeVerificationOptions options;
    options.target_final_state = spin_right();
    const VerificationReport report = verify_lattice(signal, density, LatticeWavefunction(spin_left()), options);
    const Complex overlap = report.final_overlap.value_or(Complex(0.0));
    const double phase = std::arg(overlap);
    const Eigen::VectorXcd back =
        propagate_lattice(signal, LatticeWavefunction(spin_right()), 2, grid.size()).states.back();
    const double reverse = fidelity(spin_left(), back);

    const auto& field = gate.synthesis.pulse.field;
    const std::size_t last = grid.size() - 1;
    const double endpoint = std::max({std::abs(field(0, 0) - cfg.B0), std::abs(field(0, 1)),
                                      std::abs(field(last, 0) - cfg.B0), std::abs(field(last, 1))});

    metrics = verification_json(report);
    metrics["global_phase"] = phase;
    metrics["predicted_phase_shift"] = gate.phase_shift;
    metrics["reverse_fidelity"] = reverse;
    metrics["endpoint_field_error"] = endpoint;

    const auto& th = cfg.thresholds;
    checks.at_least("final_fidelity", report.final_fidelity.value_or(0.0), th.min_fidelity);
    checks.at_most("phase_error", std::abs(phase + std::numbers::pi / 2.0), th.phase_tolerance);
    checks.at_least("reverse_fidelity", reverse, th.min_fidelity);
    checks.at_most("endpoint_field_error", endpoint, 0.0);
    checks.at_most("norm_drift_rate", report.norm_drift_rate(), th.max_norm_drift_rate);

    io::Table pulse = io::table_from_series("spin-field", field, {"Bx", "By"}, stride);
    pulse.initial_state = io::interleave(spin_left());
    pulse.parameters = {{"B0", cfg.B0}, {"tau", tau}};

    RealSeries obs(grid, 5);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        obs(k, 0) = density(k, 0);
        obs(k, 1) = density(k, 1);
        obs(k, 2) = traj.theta[k];
        obs(k, 3) = traj.phi[k];
        obs(k, 4) = gate.synthesis.beta(k, 0);
    }
    w.table("pulse", pulse);
    w.table("observables", io::table_from_series("spin-observables", obs, {"n_1", "n_2", "theta", "phi", "beta"}, stride));
    w.table("wavefunction", io::table_from_states("lattice-wavefunction", grid, predicted, stride));
    if (cfg.emit_plot_data) {
        RealSeries angles(grid, 2);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            angles(k, 0) = traj.theta[k];
            angles(k, 1) = traj.phi[k];
        }
        w.plot("fig4_bloch", io::table_from_series("bloch-angles", angles, {"theta", "phi"}, stride));
        w.plot("fig5_field", pulse);
    }
}

ScalingProgram oscillator_program(const ScenarioConfig& cfg)
{
    ScalingProgram p = harmonic_base(cfg.omega0, cfg.m);
    const double stretch = cfg.alpha_program == "constant" ? 0.0 : cfg.stretch;
    const double shift = cfg.r0_program == "rest" ? 0.0 : cfg.shift;
    set_smooth_step_motion(p, cfg.resolved_tau(), stretch, shift);
    return p;
}

void run_oscillator(const ScenarioConfig& cfg, Writer& w, Checks& checks, json& metrics)
{
    const TimeGrid grid(0.0, cfg.resolved_t_end(), cfg.n_steps());
    const SpatialGrid space(cfg.x_min, cfg.x_max, cfg.n_points);
    const auto stride = static_cast<std::size_t>(cfg.resolved_stride());
    const ScalingProgram program = oscillator_program(cfg);

    const OscillatorParams osc = oscillator_parameters(program, grid);
    const ScalingSolution sol = scaling_solution(program, space, grid);
    const ScalingObservables obs = scaling_observables(program, space, grid);
    const GridWavefunction1D psi0(space, sol.wavefunction.values.row(0).transpose(), cfg.m);

    const GridTrajectory traj = propagate_grid_1d(sol.potential, psi0);
    const double l2 = max_l2_error(traj, sol.wavefunction);
    const VerificationReport report = verify_grid(sol.potential, obs.density, psi0);

    metrics = verification_json(report);
    metrics["max_wavefunction_l2_error"] = l2;
    metrics["newton_residual"] = osc.newton_residual;
    metrics["base_state_residual"] = sol.base_residual;
    metrics["omega0"] = osc.omega0;

    const auto& th = cfg.thresholds;
    checks.at_most("newton_residual", osc.newton_residual, th.max_newton_residual);
    checks.at_most("max_wavefunction_l2_error", l2, th.max_wavefunction_l2);
    checks.at_most("norm_drift_rate", report.norm_drift_rate(), th.max_norm_drift_rate);

    io::Table pulse = io::table_from_field("grid-potential", sol.potential, "V", stride);
    pulse.initial_state = io::interleave(psi0.amplitudes().matrix());
    pulse.parameters["m"] = cfg.m;
    w.table("pulse", pulse);
    w.table("observables", io::table_from_fields("grid-density", {&obs.density, &obs.velocity}, {"n", "v"}, stride));
    w.table("wavefunction", io::table_from_complex_field("grid-wavefunction", sol.wavefunction, stride));

    RealSeries drive(grid, 4);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid.time(k);
        drive(k, 0) = program.alpha(t);
        drive(k, 1) = program.r0(t);
        drive(k, 2) = osc.omega_sq(k, 0);
        drive(k, 3) = osc.force(k, 0);
    }
    const io::Table oscillator = io::table_from_series("oscillator-drive", drive, {"alpha", "r0", "omega_sq", "f"}, stride);
    w.table("oscillator", oscillator);
    if (cfg.emit_plot_data)
        w.plot("oscillator_drive", oscillator);
}

void run_roundtrip(const ScenarioConfig& cfg, Writer& w, Checks& checks, json& metrics)
{
    const Eigen::Index sites = cfg.sites;
    Uniform rng(cfg.seed);
    const SmoothHoppings hop(sites, rng);
    const LatticeWavefunction psi0(random_nodeless_state(sites, rng));
    const TimeGrid grid(0.0, cfg.resolved_t_end(), cfg.n_steps());
    const auto stride = static_cast<std::size_t>(cfg.resolved_stride());

    const auto signal =
        LatticeHamiltonianSignal::from_function(grid, sites, [&](double t) { return Eigen::MatrixXcd(-hop(t)); });
    const LatticeTrajectory forward = propagate_lattice(signal, psi0);

    ComplexCurrent q{grid, {}};
    RealSeries density(grid, static_cast<std::size_t>(sites));
    std::vector<Eigen::MatrixXcd> original;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        original.push_back(hop(grid.time(k)));
        q.links.push_back(observable_from_state(original.back(), forward.states[k]));
        for (Eigen::Index i = 0; i < sites; ++i)
            density(k, static_cast<std::size_t>(i)) = std::norm(forward.states[k][i]);
    }
    const LatticeReconstruction rec = reconstruct_hopping(q, psi0);

    double error = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        scale = std::max(scale, original[k].cwiseAbs().maxCoeff());
        error = std::max(error, (rec.hoppings.hoppings[k] - original[k]).cwiseAbs().maxCoeff());
    }
    const double relative = error / scale;
    const double drift = max_norm_drift(forward.states);

    metrics = {{"relative_hopping_error", relative},
               {"forward_norm_drift", drift},
               {"reconstructed_norm_drift", max_norm_drift(rec.states)},
               {"schrodinger_residual", hopping_schrodinger_residual(rec.hoppings, rec.states)},
               {"duration", grid.t_end() - grid.t_start()}};
    const auto& th = cfg.thresholds;
    checks.at_most("relative_hopping_error", relative, th.max_roundtrip_error);
    checks.at_most("norm_drift_rate", drift / (grid.t_end() - grid.t_start()), th.max_norm_drift_rate);

    io::Table pulse = hopping_table("lattice-hopping", grid, original, stride);
    pulse.initial_state = io::interleave(psi0.amplitudes());
    io::Table observables{"lattice-observables", io::strided_grid(grid, stride), numbered("n_", cfg.sites), {}, {}, {}, {}};
    for (const auto& c : link_channels(sites, "Q"))
        observables.channels.push_back(c);
    for (std::size_t c = 0; c < observables.grid.size(); ++c) {
        const std::size_t k = c * stride;
        std::vector<double> row{observables.grid.time(c)};
        for (Eigen::Index i = 0; i < sites; ++i)
            row.push_back(density(k, static_cast<std::size_t>(i)));
        const auto links = upper_links(q.links[k]);
        row.insert(row.end(), links.begin(), links.end());
        observables.samples.push_back(std::move(row));
    }
    w.table("pulse", pulse);
    w.table("observables", observables);
    w.table("wavefunction", io::table_from_states("lattice-wavefunction", grid, rec.states, stride));
    w.table("reconstructed", hopping_table("lattice-hopping", grid, rec.hoppings.hoppings, stride));
}

template <class T>
T read_value(const json& j, const std::string& key)
{
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!j.is_boolean())
                config_error("'" + key + "' must be a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!j.is_string())
                config_error("'" + key + "' must be a string");
        } else if constexpr (std::is_integral_v<T>) {
            if (!j.is_number_integer())
                config_error("'" + key + "' must be an integer");
            if constexpr (std::is_unsigned_v<T>)
                if (j.is_number_integer() && !j.is_number_unsigned())
                    config_error("'" + key + "' must be non-negative");
        } else {
            if (!j.is_number())
                config_error("'" + key + "' must be a number");
        }
        return j.get<T>();
    } catch (const json::exception& e) {
        config_error("'" + key + "': " + e.what());
    }
}

void positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v))
        config_error(std::string(what) + " must be positive");
}

} // namespace

std::string_view to_string(ScenarioKind kind)
{
    switch (kind) {
    case ScenarioKind::ChainReshape:
        return "chain-reshape";
    case ScenarioKind::SpinNot:
        return "spin-not";
    case ScenarioKind::OscillatorScaling:
        return "oscillator-scaling";
    case ScenarioKind::LatticeRoundtrip:
        return "lattice-roundtrip";
    }
    return "unknown";
}

ScenarioKind scenario_from_string(std::string_view name)
{
    for (auto k : {ScenarioKind::ChainReshape, ScenarioKind::SpinNot, ScenarioKind::OscillatorScaling,
                   ScenarioKind::LatticeRoundtrip})
        if (to_string(k) == name)
            return k;
    config_error("unknown scenario '" + std::string(name) + "'");
}

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::Config:
    case ErrorCode::InvalidInput:
    case ErrorCode::Ordering:
        return exit_code::config;
    case ErrorCode::Representability:
    case ErrorCode::AmbiguousSign:
    case ErrorCode::Singularity:
    case ErrorCode::VanishingDensity:
    case ErrorCode::NodeFormation:
    case ErrorCode::UndefinedLimit:
        return exit_code::representability;
    default:
        return exit_code::failure;
    }
}

double ScenarioConfig::resolved_tau() const
{
    if (tau)
        return *tau;
    return kind == ScenarioKind::OscillatorScaling ? 5.0 : 12.0;
}

double ScenarioConfig::resolved_t_end() const
{
    if (t_end)
        return *t_end;
    switch (kind) {
    case ScenarioKind::ChainReshape:
        return t2;
    case ScenarioKind::LatticeRoundtrip:
        return 1.0;
    default:
        return resolved_tau();
    }
}

double ScenarioConfig::resolved_dt() const
{
    if (dt)
        return *dt;
    switch (kind) {
    case ScenarioKind::SpinNot:
        return resolved_tau() * 1e-5;
    case ScenarioKind::LatticeRoundtrip:
        return 1e-4;
    default:
        return 1e-3;
    }
}

int ScenarioConfig::resolved_stride() const
{
    if (stride)
        return *stride;
    switch (kind) {
    case ScenarioKind::ChainReshape:
        return 1;
    default:
        return 10;
    }
}

int ScenarioConfig::n_steps() const
{
    const double span = kind == ScenarioKind::SpinNot ? resolved_tau() : resolved_t_end();
    const double d = resolved_dt();
    positive(d, "dt");
    const double ratio = span / d;
    const double n = std::round(ratio);
    if (n < 2.0 || n > 5e7 || std::abs(ratio - n) > 1e-6 * n)
        config_error("dt must divide the run length into between 2 and 5e7 steps");
    return static_cast<int>(n);
}

void ScenarioConfig::validate() const
{
    switch (kind) {
    case ScenarioKind::ChainReshape:
        if (M < 3 || M > 64)
            config_error("M must lie in [3, 64]");
        positive(T0, "T0");
        if (!(t1 > 0.0) || !(t2 > t1) || !std::isfinite(t2))
            config_error("ordering: 0 < t1 < t2 required");
        if (resolved_t_end() != t2)
            config_error("the two-stage program runs over [0, t2]; t_end must equal t2");
        break;
    case ScenarioKind::SpinNot:
        positive(B0, "B0");
        positive(resolved_tau(), "tau");
        if (t_end && *t_end != resolved_tau())
            config_error("the NOT gate runs over [0, tau]; t_end must equal tau");
        break;
    case ScenarioKind::OscillatorScaling:
        positive(omega0, "omega0");
        positive(m, "m");
        positive(resolved_tau(), "tau");
        positive(resolved_t_end(), "t_end");
        if (alpha_program != "smooth-step" && alpha_program != "constant")
            config_error("alpha_program must be smooth-step or constant");
        if (r0_program != "smooth-step" && r0_program != "rest")
            config_error("r0_program must be smooth-step or rest");
        if (!(stretch > -1.0) || !std::isfinite(stretch) || !std::isfinite(shift))
            config_error("stretch must exceed -1 and shift must be finite");
        if (n_points < 16)
            config_error("n_points must be at least 16");
        if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
            config_error("x_min < x_max required");
        break;
    case ScenarioKind::LatticeRoundtrip:
        if (sites < 2 || sites > 16)
            config_error("sites must lie in [2, 16]");
        positive(resolved_t_end(), "t_end");
        break;
    }
    const int steps = n_steps();
    const int s = resolved_stride();
    if (s < 1 || steps % s != 0)
        config_error("stride must be positive and divide the number of steps");
    const auto& th = thresholds;
    for (double v : {th.max_density_error, th.potential_step_tolerance, th.phase_tolerance, th.max_wavefunction_l2,
                     th.max_newton_residual, th.max_roundtrip_error, th.max_norm_drift_rate})
        positive(v, "thresholds");
    for (double v : {th.min_ground_state_overlap, th.min_fidelity})
        if (!(v > 0.0 && v <= 1.0))
            config_error("fidelity thresholds must lie in (0, 1]");
}

ScenarioConfig config_from_json(const json& doc, ScenarioConfig c)
{
    if (!doc.is_object())
        config_error("config must be a JSON object");
    for (const auto& item : doc.items()) {
        const std::string& k = item.key();
        const json& v = item.value();
        if (k == "scenario")
            c.kind = scenario_from_string(read_value<std::string>(v, k));
        else if (k == "M")
            c.M = read_value<int>(v, k);
        else if (k == "T0")
            c.T0 = read_value<double>(v, k);
        else if (k == "t1")
            c.t1 = read_value<double>(v, k);
        else if (k == "t2")
            c.t2 = read_value<double>(v, k);
        else if (k == "B0")
            c.B0 = read_value<double>(v, k);
        else if (k == "tau")
            c.tau = read_value<double>(v, k);
        else if (k == "omega0")
            c.omega0 = read_value<double>(v, k);
        else if (k == "m")
            c.m = read_value<double>(v, k);
        else if (k == "alpha_program")
            c.alpha_program = read_value<std::string>(v, k);
        else if (k == "r0_program")
            c.r0_program = read_value<std::string>(v, k);
        else if (k == "stretch")
            c.stretch = read_value<double>(v, k);
        else if (k == "shift")
            c.shift = read_value<double>(v, k);
        else if (k == "n_points")
            c.n_points = read_value<int>(v, k);
        else if (k == "x_min")
            c.x_min = read_value<double>(v, k);
        else if (k == "x_max")
            c.x_max = read_value<double>(v, k);
        else if (k == "sites")
            c.sites = read_value<int>(v, k);
        else if (k == "seed")
            c.seed = read_value<std::uint64_t>(v, k);
        else if (k == "t_end")
            c.t_end = read_value<double>(v, k);
        else if (k == "dt")
            c.dt = read_value<double>(v, k);
        else if (k == "stride")
            c.stride = read_value<int>(v, k);
        else if (k == "format")
            c.format = io::format_from_string(read_value<std::string>(v, k));
        else if (k == "output_dir")
            c.output_dir = read_value<std::string>(v, k);
        else if (k == "emit_plot_data")
            c.emit_plot_data = read_value<bool>(v, k);
        else if (k == "thresholds") {
            if (!v.is_object())
                config_error("thresholds must be an object");
            auto& th = c.thresholds;
            for (const auto& t : v.items()) {
                const std::string& n = t.key();
                const double x = read_value<double>(t.value(), "thresholds." + n);
                if (n == "max_density_error")
                    th.max_density_error = x;
                else if (n == "min_ground_state_overlap")
                    th.min_ground_state_overlap = x;
                else if (n == "potential_step_tolerance")
                    th.potential_step_tolerance = x;
                else if (n == "min_fidelity")
                    th.min_fidelity = x;
                else if (n == "phase_tolerance")
                    th.phase_tolerance = x;
                else if (n == "max_wavefunction_l2")
                    th.max_wavefunction_l2 = x;
                else if (n == "max_newton_residual")
                    th.max_newton_residual = x;
                else if (n == "max_roundtrip_error")
                    th.max_roundtrip_error = x;
                else if (n == "max_norm_drift_rate")
                    th.max_norm_drift_rate = x;
                else
                    config_error("unknown threshold '" + n + "'");
            }
        } else
            config_error("unknown config key '" + k + "'");
    }
    return c;
}

json config_to_json(const ScenarioConfig& c)
{
    const auto& th = c.thresholds;
    return {{"scenario", to_string(c.kind)},
            {"M", c.M},
            {"T0", c.T0},
            {"t1", c.t1},
            {"t2", c.t2},
            {"B0", c.B0},
            {"tau", c.resolved_tau()},
            {"omega0", c.omega0},
            {"m", c.m},
            {"alpha_program", c.alpha_program},
            {"r0_program", c.r0_program},
            {"stretch", c.stretch},
            {"shift", c.shift},
            {"n_points", c.n_points},
            {"x_min", c.x_min},
            {"x_max", c.x_max},
            {"sites", c.sites},
            {"seed", c.seed},
            {"t_end", c.kind == ScenarioKind::SpinNot ? c.resolved_tau() : c.resolved_t_end()},
            {"dt", c.resolved_dt()},
            {"stride", c.resolved_stride()},
            {"format", io::to_string(c.format)},
            {"output_dir", c.output_dir.generic_string()},
            {"emit_plot_data", c.emit_plot_data},
            {"thresholds",
             {{"max_density_error", th.max_density_error},
              {"min_ground_state_overlap", th.min_ground_state_overlap},
              {"potential_step_tolerance", th.potential_step_tolerance},
              {"min_fidelity", th.min_fidelity},
              {"phase_tolerance", th.phase_tolerance},
              {"max_wavefunction_l2", th.max_wavefunction_l2},
              {"max_newton_residual", th.max_newton_residual},
              {"max_roundtrip_error", th.max_roundtrip_error},
              {"max_norm_drift_rate", th.max_norm_drift_rate}}}};
}

ScenarioConfig default_config(ScenarioKind kind)
{
    ScenarioConfig c;
    c.kind = kind;
    if (const char* env = std::getenv("PULSEFORGE_OUT"); env && *env)
        c.output_dir = env;
    return c;
}

ScenarioOutcome run_scenario(const ScenarioConfig& config)
{
    ScenarioOutcome out;
    out.report = {{"scenario", to_string(config.kind)}};
    const fs::path dir = config.output_dir / std::string(to_string(config.kind));
    json metrics = json::object();
    Checks checks;
    try {
        config.validate();
        Writer w{dir, config.format, out};
        switch (config.kind) {
        case ScenarioKind::ChainReshape:
            run_chain(config, w, checks, metrics);
            break;
        case ScenarioKind::SpinNot:
            run_spin(config, w, checks, metrics);
            break;
        case ScenarioKind::OscillatorScaling:
            run_oscillator(config, w, checks, metrics);
            break;
        case ScenarioKind::LatticeRoundtrip:
            run_roundtrip(config, w, checks, metrics);
            break;
        }
        finish(out, checks, std::move(metrics), dir, config_to_json(config));
    } catch (const Error& e) {
        out.exit_code = exit_code_for(e.code());
        out.message = e.what();
        out.report["passed"] = false;
        out.report["exit_code"] = out.exit_code;
        out.report["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
        if (out.exit_code != exit_code::config) {
            try {
                const fs::path p = dir / "report.json";
                io::write_text(p, out.report.dump(2) + "\n");
                out.files.push_back(p);
            } catch (const Error&) {
            }
        }
    }
    return out;
}

ScenarioOutcome verify_files(const fs::path& pulse_path, const fs::path& target_path,
                             const ScenarioThresholds& thresholds, const fs::path& output_dir)
{
    ScenarioOutcome out;
    out.report = {{"scenario", "verify"}};
    const fs::path dir = output_dir / "verify";
    try {
        const io::Table pulse = io::read_table(pulse_path);
        const io::Table target = io::read_table(target_path);
        if (pulse.initial_state.empty())
            config_error(pulse_path.string() + ": pulse file carries no initial state");
        if (!(pulse.grid == target.grid) || pulse.samples.size() != target.samples.size())
            config_error("pulse and target files are on different time grids");
        if (pulse.samples.size() != pulse.grid.size())
            config_error("pulse file must hold one row per grid point");

        Checks checks;
        json metrics;
        if (pulse.kind == "grid-potential") {
            const double m = pulse.parameters.count("m") ? pulse.parameters.at("m") : 1.0;
            const RealField1D potential = io::field_from_table(pulse, "V", m);
            const RealField1D density = io::field_from_table(target, "n", m);
            if (!(density.space == potential.space))
                config_error("pulse and target files are on different spatial grids");
            const Eigen::VectorXcd amp = io::deinterleave(pulse.initial_state);
            const GridWavefunction1D psi0(potential.space, amp.array(), m);
            const VerificationReport report = verify_grid(potential, density, psi0);
            metrics = verification_json(report);
            checks.at_most("max_density_error", report.max_density_error, thresholds.max_wavefunction_l2);
            checks.at_most("norm_drift_rate", report.norm_drift_rate(), thresholds.max_norm_drift_rate);
        } else {
            const Eigen::VectorXcd psi = io::deinterleave(pulse.initial_state);
            const auto sites = psi.size();
            std::vector<Eigen::MatrixXcd> hoppings;
            std::optional<LatticeHamiltonianSignal> signal;
            if (pulse.kind == "chain-potential") {
                const double T0 = pulse.parameters.count("T0") ? pulse.parameters.at("T0") : 1.0;
                const RealSeries v = io::series_from_table(pulse);
                if (static_cast<Eigen::Index>(v.width()) != sites)
                    config_error("initial state and potential widths differ");
                signal = LatticeHamiltonianSignal::from_onsite(pulse.grid, T0, series_rows(v));
            } else if (pulse.kind == "spin-field") {
                if (sites != 2)
                    config_error("spin pulse needs a two-component initial state");
                const auto bx = pulse.channel("Bx");
                const auto by = pulse.channel("By");
                for (std::size_t k = 0; k < bx.size(); ++k) {
                    Eigen::MatrixXcd h(2, 2);
                    const Complex b = 0.5 * Complex(bx[k], -by[k]);
                    h << 0.0, b, std::conj(b), 0.0;
                    hoppings.push_back(h);
                }
                signal = LatticeHamiltonianSignal::from_hoppings(pulse.grid, hoppings);
            } else if (pulse.kind == "lattice-hopping") {
                if (pulse.values_per_row() != static_cast<std::size_t>(sites * (sites - 1)))
                    config_error("hopping channels do not match the initial state");
                for (const auto& row : pulse.samples)
                    hoppings.push_back(links_from_values(sites, row.data() + 1));
                signal = LatticeHamiltonianSignal::from_hoppings(pulse.grid, hoppings);
            } else {
                config_error("cannot verify pulse kind '" + pulse.kind + "'");
            }
            RealSeries density(target.grid, static_cast<std::size_t>(sites));
            for (Eigen::Index i = 0; i < sites; ++i) {
                const auto col = target.channel("n_" + std::to_string(i + 1));
                for (std::size_t k = 0; k < col.size(); ++k)
                    density(k, static_cast<std::size_t>(i)) = col[k];
            }
            const VerificationReport report = verify_lattice(*signal, density, LatticeWavefunction(psi));
            metrics = verification_json(report);
            checks.at_most("max_density_error", report.max_density_error, thresholds.max_density_error);
            checks.at_most("norm_drift_rate", report.norm_drift_rate(), thresholds.max_norm_drift_rate);
        }
        metrics["pulse_kind"] = pulse.kind;
        finish(out, checks, std::move(metrics), dir,
               {{"pulse", pulse_path.generic_string()}, {"target", target_path.generic_string()}});
    } catch (const Error& e) {
        out.exit_code = e.code() == ErrorCode::Io ? exit_code::config : exit_code_for(e.code());
        out.message = e.what();
        out.report["passed"] = false;
        out.report["exit_code"] = out.exit_code;
        out.report["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    }
    return out;
}

} // namespace pulseforge
