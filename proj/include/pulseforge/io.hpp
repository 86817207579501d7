#pragma once

// Tabular export of pulses, observables and wavefunctions.
//
// A Table holds one row per exported time step: the time followed by the
// channel values. With spatial nodes `x` each channel is a field and a row
// stores node-major, channel-minor values: t, c0(x0), c1(x0), ..., c0(x1), ...
//
// JSON: {"kind", "grid": {"t_start", "t_end", "n_steps"}, "channels", "samples",
//        optional "x", "initial_state" (interleaved re, im), "parameters"}.
// CSV:  header `t,<channels>`, or `t,x,<channels>` with one line per node.
// Every double is written with 17 significant digits.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pulseforge/core.hpp"

namespace pulseforge::io {

struct Table {
    std::string kind;
    TimeGrid grid;
    std::vector<std::string> channels;
    std::vector<double> x;
    std::vector<std::vector<double>> samples;
    std::vector<double> initial_state;
    std::map<std::string, double> parameters;

    std::size_t values_per_row() const;
    /// Throws InvalidInput on inconsistent widths, empty channel names or
    /// non-finite values.
    void validate() const;
    /// Column of one channel; for field tables the value at node `node`.
    std::vector<double> channel(std::string_view name, std::size_t node = 0) const;
    bool has_channel(std::string_view name) const;

    bool operator==(const Table&) const = default;
};

enum class Format { Csv, Json };

/// "csv" or "json"; throws Config otherwise.
Format format_from_string(std::string_view name);
std::string_view to_string(Format format);
std::string_view extension(Format format);

std::string format_double(double value);

std::string to_json(const Table& table);
std::string to_csv(const Table& table);

/// Throws Io on malformed text and InvalidInput on schema violations.
Table table_from_json(std::string_view text);
/// CSV carries no grid metadata: `grid` is used when given, otherwise the
/// grid spans the first and last sample times with one step per row (per
/// node block for field tables).
Table table_from_csv(std::string_view text, std::string kind = {}, std::optional<TimeGrid> grid = {});

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

void write_table(const Table& table, const std::filesystem::path& path, Format format);
/// Format chosen by extension (.csv or .json).
Table read_table(const std::filesystem::path& path);

/// Rows k = 0, stride, 2 stride, ... on the grid coarsened by `stride`,
/// which must divide n_steps.
TimeGrid strided_grid(const TimeGrid& grid, std::size_t stride);

Table table_from_series(std::string kind, const RealSeries& series, std::vector<std::string> channels,
                        std::size_t stride = 1);
/// Requires one row per grid point.
RealSeries series_from_table(const Table& table);

/// Channels re_1, im_1, ..., re_M, im_M.
Table table_from_states(std::string kind, const TimeGrid& grid, const std::vector<Eigen::VectorXcd>& states,
                        std::size_t stride = 1);
std::vector<Eigen::VectorXcd> states_from_table(const Table& table);

Table table_from_field(std::string kind, const RealField1D& field, std::string channel, std::size_t stride = 1);
Table table_from_fields(std::string kind, const std::vector<const RealField1D*>& fields,
                        std::vector<std::string> channels, std::size_t stride = 1);
Table table_from_complex_field(std::string kind, const ComplexField1D& field, std::size_t stride = 1);
/// Field of one channel; requires one row per grid point and uniform x.
RealField1D field_from_table(const Table& table, std::string_view channel, double mass = 1.0);

std::vector<double> interleave(const Eigen::VectorXcd& state);
Eigen::VectorXcd deinterleave(const std::vector<double>& values);

} // namespace pulseforge::io
