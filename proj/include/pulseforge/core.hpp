#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pulseforge {

using Complex = std::complex<double>;

/// Strict positivity threshold for on-site and continuum densities. The
/// inverse maps divide by densities and abort below this value.
inline constexpr double density_floor = 1e-14;

enum class ErrorCode {
    InvalidInput,
    DimensionMismatch,
    NonHermitian,
    VanishingDensity,
    Representability,
    AmbiguousSign,
    Singularity,
    UndefinedLimit,
    Domain,
    Ordering,
    NodeFormation,
    ContinuityInconsistency,
    NormalizationDrift,
    BaseStateValidation,
    NonHarmonic,
    Io,
    Config,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Uniform sampling t_k = t_start + k*dt, k = 0..n_steps.
class TimeGrid {
public:
    TimeGrid(double t_start, double t_end, int n_steps);

    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }
    int n_steps() const noexcept { return n_steps_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_steps_) + 1; }
    double dt() const noexcept { return (t_end_ - t_start_) / n_steps_; }
    /// The last point is t_end exactly.
    double time(std::size_t k) const noexcept
    {
        return k == static_cast<std::size_t>(n_steps_) ? t_end_ : t_start_ + static_cast<double>(k) * dt();
    }

    /// Index of the grid point nearest to t (clamped to the grid).
    std::size_t nearest_index(double t) const noexcept;

    bool operator==(const TimeGrid&) const = default;

private:
    double t_start_;
    double t_end_;
    int n_steps_;
};

/// Samples of one or more channels on a TimeGrid, stored row-major: one row
/// of `width` values per grid point.
template <class T>
class TimeSeries {
public:
    TimeSeries(TimeGrid grid, std::size_t width);
    TimeSeries(TimeGrid grid, std::size_t width, std::vector<T> data);

    /// Samples a closed form f(t) -> value (width 1).
    static TimeSeries sample(const TimeGrid& grid, const std::function<T(double)>& f);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return grid_.size(); }

    std::span<T> row(std::size_t k) { return {data_.data() + k * width_, width_}; }
    std::span<const T> row(std::size_t k) const { return {data_.data() + k * width_, width_}; }
    T& operator()(std::size_t k, std::size_t c) { return data_[k * width_ + c]; }
    const T& operator()(std::size_t k, std::size_t c) const { return data_[k * width_ + c]; }

    const std::vector<T>& data() const noexcept { return data_; }

    /// Single channel as a width-1 series.
    TimeSeries channel(std::size_t c) const;

private:
    TimeGrid grid_;
    std::size_t width_;
    std::vector<T> data_;
};

using RealSeries = TimeSeries<double>;
using ComplexSeries = TimeSeries<Complex>;

/// Running trapezoid integral per channel, F(t_0) = 0.
template <class T>
TimeSeries<T> trapezoid_integrate(const TimeSeries<T>& series);

/// Trapezoid rule plus the Euler-Maclaurin end term
/// -dt^2/12 (f'(t_k) - f'(t_0)), with f' from central_diff; O(dt^4).
template <class T>
TimeSeries<T> corrected_trapezoid_integrate(const TimeSeries<T>& series);

enum class Quadrature { Trapezoid, CorrectedTrapezoid };

template <class T>
TimeSeries<T> integrate(const TimeSeries<T>& series, Quadrature rule);

/// Per-channel time derivative: second-order central differences in the
/// interior, second-order one-sided stencils at both ends.
template <class T>
TimeSeries<T> central_diff(const TimeSeries<T>& series);

/// Normalized single-particle state on an M-site lattice (M >= 2).
class LatticeWavefunction {
public:
    explicit LatticeWavefunction(Eigen::VectorXcd amplitudes);

    const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
    Eigen::Index sites() const noexcept { return amplitudes_.size(); }
    Complex operator[](Eigen::Index i) const { return amplitudes_[i]; }

    static constexpr double norm_tolerance = 1e-12;

private:
    Eigen::VectorXcd amplitudes_;
};

/// Nodes x_i = x_min + i*dx, i = 0..n_points-1, boundaries included.
class SpatialGrid {
public:
    SpatialGrid(double x_min, double x_max, int n_points);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    int n_points() const noexcept { return n_points_; }
    double dx() const noexcept { return (x_max_ - x_min_) / (n_points_ - 1); }
    double x(Eigen::Index i) const noexcept { return x_min_ + static_cast<double>(i) * dx(); }
    Eigen::Index mid_index() const noexcept { return (n_points_ - 1) / 2; }
    Eigen::ArrayXd nodes() const;

    bool operator==(const SpatialGrid&) const = default;

private:
    double x_min_;
    double x_max_;
    int n_points_;
};

/// Trapezoid-rule integral over the nodes of a spatial grid.
double trapezoid_norm(const SpatialGrid& grid, const Eigen::ArrayXd& values);

/// Continuum state on a hard-walled 1D grid.
class GridWavefunction1D {
public:
    GridWavefunction1D(SpatialGrid grid, Eigen::ArrayXcd amplitudes, double mass);

    const SpatialGrid& grid() const noexcept { return grid_; }
    const Eigen::ArrayXcd& amplitudes() const noexcept { return amplitudes_; }
    double mass() const noexcept { return mass_; }

    static constexpr double norm_tolerance = 1e-10;
    static constexpr double boundary_tolerance = 1e-8;

private:
    SpatialGrid grid_;
    Eigen::ArrayXcd amplitudes_;
    double mass_;
};

/// Rows are time steps, columns are spatial nodes.
template <class Scalar>
struct SpaceTimeField1D {
    SpatialGrid space;
    TimeGrid time;
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;
    double mass = 1.0;

    SpaceTimeField1D(SpatialGrid space_grid, TimeGrid time_grid, double m = 1.0)
        : space(space_grid), time(time_grid),
          values(static_cast<Eigen::Index>(time_grid.size()), space_grid.n_points()), mass(m)
    {
        values.setZero();
    }
};

using RealField1D = SpaceTimeField1D<double>;
using ComplexField1D = SpaceTimeField1D<Complex>;

/// Throws InvalidInput unless every entry is finite.
void require_finite(std::span<const double> values, const char* what);
void require_finite(std::span<const Complex> values, const char* what);

} // namespace pulseforge
