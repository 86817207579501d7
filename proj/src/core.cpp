#include "pulseforge/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pulseforge {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::NonHermitian: return "non-hermitian";
    case ErrorCode::VanishingDensity: return "vanishing-density";
    case ErrorCode::Representability: return "representability";
    case ErrorCode::AmbiguousSign: return "ambiguous-sign";
    case ErrorCode::Singularity: return "singularity";
    case ErrorCode::UndefinedLimit: return "undefined-limit";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Ordering: return "ordering";
    case ErrorCode::NodeFormation: return "node-formation";
    case ErrorCode::ContinuityInconsistency: return "continuity-inconsistency";
    case ErrorCode::NormalizationDrift: return "normalization-drift";
    case ErrorCode::BaseStateValidation: return "base-state-validation";
    case ErrorCode::NonHarmonic: return "non-harmonic";
    case ErrorCode::Io: return "io";
    case ErrorCode::Config: return "config";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

TimeGrid::TimeGrid(double t_start, double t_end, int n_steps)
    : t_start_(t_start), t_end_(t_end), n_steps_(n_steps)
{
    if (!std::isfinite(t_start) || !std::isfinite(t_end))
        throw Error(ErrorCode::InvalidInput, "time grid bounds must be finite");
    if (n_steps < 2)
        throw Error(ErrorCode::InvalidInput, "time grid needs n_steps >= 2");
    if (!(t_end > t_start))
        throw Error(ErrorCode::InvalidInput, "time grid needs t_end > t_start");
}

std::size_t TimeGrid::nearest_index(double t) const noexcept
{
    const double k = std::round((t - t_start_) / dt());
    if (!(k > 0.0))
        return 0;
    return std::min(static_cast<std::size_t>(k), static_cast<std::size_t>(n_steps_));
}

template <class T>
TimeSeries<T>::TimeSeries(TimeGrid grid, std::size_t width)
    : grid_(grid), width_(width), data_(grid.size() * width)
{
}

template <class T>
TimeSeries<T>::TimeSeries(TimeGrid grid, std::size_t width, std::vector<T> data)
    : grid_(grid), width_(width), data_(std::move(data))
{
    if (data_.size() != grid_.size() * width_)
        throw Error(ErrorCode::DimensionMismatch, "time series needs one block per grid point");
}

template <class T>
TimeSeries<T> TimeSeries<T>::sample(const TimeGrid& grid, const std::function<T(double)>& f)
{
    TimeSeries out(grid, 1);
    for (std::size_t k = 0; k < grid.size(); ++k)
        out.data_[k] = f(grid.time(k));
    return out;
}

template <class T>
TimeSeries<T> TimeSeries<T>::channel(std::size_t c) const
{
    TimeSeries out(grid_, 1);
    for (std::size_t k = 0; k < size(); ++k)
        out.data_[k] = (*this)(k, c);
    return out;
}

template <class T>
TimeSeries<T> trapezoid_integrate(const TimeSeries<T>& series)
{
    require_finite(std::span<const T>(series.data()), "trapezoid_integrate input");
    const double half_dt = 0.5 * series.grid().dt();
    TimeSeries<T> out(series.grid(), series.width());
    for (std::size_t k = 1; k < series.size(); ++k) {
        for (std::size_t c = 0; c < series.width(); ++c)
            out(k, c) = out(k - 1, c) + half_dt * (series(k - 1, c) + series(k, c));
    }
    return out;
}

template <class T>
TimeSeries<T> central_diff(const TimeSeries<T>& series)
{
    require_finite(std::span<const T>(series.data()), "central_diff input");
    const double inv2dt = 1.0 / (2.0 * series.grid().dt());
    const std::size_t last = series.size() - 1;
    TimeSeries<T> out(series.grid(), series.width());
    for (std::size_t c = 0; c < series.width(); ++c) {
        out(0, c) = (-3.0 * series(0, c) + 4.0 * series(1, c) - series(2, c)) * inv2dt;
        for (std::size_t k = 1; k < last; ++k)
            out(k, c) = (series(k + 1, c) - series(k - 1, c)) * inv2dt;
        out(last, c) =
            (3.0 * series(last, c) - 4.0 * series(last - 1, c) + series(last - 2, c)) * inv2dt;
    }
    return out;
}

template <class T>
TimeSeries<T> corrected_trapezoid_integrate(const TimeSeries<T>& series)
{
    TimeSeries<T> out = trapezoid_integrate(series);
    const TimeSeries<T> slope = central_diff(series);
    const double dt = series.grid().dt();
    const double c = dt * dt / 12.0;
    for (std::size_t k = 1; k < series.size(); ++k)
        for (std::size_t ch = 0; ch < series.width(); ++ch)
            out(k, ch) -= c * (slope(k, ch) - slope(0, ch));
    return out;
}

template <class T>
TimeSeries<T> integrate(const TimeSeries<T>& series, Quadrature rule)
{
    return rule == Quadrature::Trapezoid ? trapezoid_integrate(series) : corrected_trapezoid_integrate(series);
}

template class TimeSeries<double>;
template class TimeSeries<Complex>;
template TimeSeries<double> trapezoid_integrate(const TimeSeries<double>&);
template TimeSeries<Complex> trapezoid_integrate(const TimeSeries<Complex>&);
template TimeSeries<double> corrected_trapezoid_integrate(const TimeSeries<double>&);
template TimeSeries<Complex> corrected_trapezoid_integrate(const TimeSeries<Complex>&);
template TimeSeries<double> integrate(const TimeSeries<double>&, Quadrature);
template TimeSeries<Complex> integrate(const TimeSeries<Complex>&, Quadrature);
template TimeSeries<double> central_diff(const TimeSeries<double>&);
template TimeSeries<Complex> central_diff(const TimeSeries<Complex>&);

LatticeWavefunction::LatticeWavefunction(Eigen::VectorXcd amplitudes)
    : amplitudes_(std::move(amplitudes))
{
    if (amplitudes_.size() < 2)
        throw Error(ErrorCode::InvalidInput, "lattice wavefunction needs at least 2 sites");
    require_finite(std::span<const Complex>(amplitudes_.data(), amplitudes_.size()),
                   "lattice wavefunction");
    const double norm = amplitudes_.squaredNorm();
    if (std::abs(norm - 1.0) > norm_tolerance) {
        std::ostringstream os;
        os << "lattice wavefunction norm " << norm << " differs from 1";
        throw Error(ErrorCode::InvalidInput, os.str());
    }
}

SpatialGrid::SpatialGrid(double x_min, double x_max, int n_points)
    : x_min_(x_min), x_max_(x_max), n_points_(n_points)
{
    if (n_points < 3)
        throw Error(ErrorCode::InvalidInput, "spatial grid needs at least 3 nodes");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
        throw Error(ErrorCode::InvalidInput, "spatial grid needs finite x_max > x_min");
}

Eigen::ArrayXd SpatialGrid::nodes() const
{
    Eigen::ArrayXd xs(n_points_);
    for (Eigen::Index i = 0; i < n_points_; ++i)
        xs[i] = x(i);
    return xs;
}

double trapezoid_norm(const SpatialGrid& grid, const Eigen::ArrayXd& values)
{
    const Eigen::Index n = values.size();
    return grid.dx() * (values.sum() - 0.5 * (values[0] + values[n - 1]));
}

GridWavefunction1D::GridWavefunction1D(SpatialGrid grid, Eigen::ArrayXcd amplitudes, double mass)
    : grid_(grid), amplitudes_(std::move(amplitudes)), mass_(mass)
{
    if (amplitudes_.size() != grid_.n_points())
        throw Error(ErrorCode::DimensionMismatch, "grid wavefunction size differs from grid");
    if (!(mass > 0.0))
        throw Error(ErrorCode::InvalidInput, "mass must be positive");
    require_finite(std::span<const Complex>(amplitudes_.data(), amplitudes_.size()),
                   "grid wavefunction");
    const double norm = trapezoid_norm(grid_, amplitudes_.abs2());
    if (std::abs(norm - 1.0) > norm_tolerance) {
        std::ostringstream os;
        os << "grid wavefunction norm " << norm << " differs from 1";
        throw Error(ErrorCode::InvalidInput, os.str());
    }
    const Eigen::Index last = amplitudes_.size() - 1;
    if (std::abs(amplitudes_[0]) > boundary_tolerance ||
        std::abs(amplitudes_[last]) > boundary_tolerance)
        throw Error(ErrorCode::InvalidInput, "grid wavefunction must vanish at the hard walls");
}

void require_finite(std::span<const double> values, const char* what)
{
    for (double v : values) {
        if (!std::isfinite(v))
            throw Error(ErrorCode::InvalidInput, std::string("non-finite sample in ") + what);
    }
}

void require_finite(std::span<const Complex> values, const char* what)
{
    for (const Complex& v : values) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw Error(ErrorCode::InvalidInput, std::string("non-finite sample in ") + what);
    }
}

} // namespace pulseforge
