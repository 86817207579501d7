#include "pulseforge/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pulseforge::io {

namespace {

using nlohmann::json;

[[noreturn]] void bad_table(const std::string& what)
{
    throw Error(ErrorCode::InvalidInput, "table: " + what);
}

std::string quoted(const std::string& s)
{
    return json(s).dump();
}

void append_array(std::string& out, const std::vector<double>& values)
{
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i)
            out += ',';
        out += format_double(values[i]);
    }
    out += ']';
}

double parse_double(std::string_view token, std::size_t line)
{
    const std::string s(token);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw Error(ErrorCode::Io, "csv line " + std::to_string(line) + ": not a number '" + s + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::vector<double> number_array(const json& j, const char* what)
{
    if (!j.is_array())
        bad_table(std::string(what) + " must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number())
            bad_table(std::string(what) + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::size_t checked_stride(const TimeGrid& grid, std::size_t stride)
{
    if (stride == 0 || grid.n_steps() % static_cast<int>(stride) != 0)
        throw Error(ErrorCode::InvalidInput, "stride must divide the number of time steps");
    return stride;
}

} // namespace

std::size_t Table::values_per_row() const
{
    return channels.size() * std::max<std::size_t>(1, x.size());
}

void Table::validate() const
{
    if (channels.empty())
        bad_table("no channels");
    for (const auto& c : channels) {
        if (c.empty() || c.find_first_of(",\n\r\"") != std::string::npos)
            bad_table("invalid channel name '" + c + "'");
        if (c == "t" || c == "x")
            bad_table("channel name '" + c + "' is reserved");
    }
    const std::size_t width = 1 + values_per_row();
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].size() != width)
            bad_table("row " + std::to_string(k) + " has " + std::to_string(samples[k].size()) +
                      " values, expected " + std::to_string(width));
        for (double v : samples[k])
            if (!std::isfinite(v))
                bad_table("non-finite sample in row " + std::to_string(k));
    }
    for (double v : x)
        if (!std::isfinite(v))
            bad_table("non-finite node");
    if (initial_state.size() % 2 != 0)
        bad_table("initial state must interleave real and imaginary parts");
    for (double v : initial_state)
        if (!std::isfinite(v))
            bad_table("non-finite initial state");
    for (const auto& [k, v] : parameters)
        if (!std::isfinite(v))
            bad_table("non-finite parameter " + k);
}

bool Table::has_channel(std::string_view name) const
{
    return std::find(channels.begin(), channels.end(), name) != channels.end();
}

std::vector<double> Table::channel(std::string_view name, std::size_t node) const
{
    const auto it = std::find(channels.begin(), channels.end(), name);
    if (it == channels.end())
        bad_table("missing channel '" + std::string(name) + "'");
    if (node >= std::max<std::size_t>(1, x.size()))
        bad_table("node out of range");
    const std::size_t col = 1 + node * channels.size() + static_cast<std::size_t>(it - channels.begin());
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& row : samples)
        out.push_back(row[col]);
    return out;
}

Format format_from_string(std::string_view name)
{
    if (name == "csv")
        return Format::Csv;
    if (name == "json")
        return Format::Json;
    throw Error(ErrorCode::Config, "unknown format '" + std::string(name) + "' (csv or json)");
}

std::string_view to_string(Format format)
{
    return format == Format::Csv ? "csv" : "json";
}

std::string_view extension(Format format)
{
    return format == Format::Csv ? ".csv" : ".json";
}

std::string format_double(double value)
{
    if (!std::isfinite(value))
        throw Error(ErrorCode::InvalidInput, "cannot export a non-finite value");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string to_json(const Table& table)
{
    table.validate();
    std::string out = "{\n  \"kind\": " + quoted(table.kind) + ",\n  \"grid\": {\"t_start\": " +
                      format_double(table.grid.t_start()) + ", \"t_end\": " + format_double(table.grid.t_end()) +
                      ", \"n_steps\": " + std::to_string(table.grid.n_steps()) + "},\n  \"channels\": [";
    for (std::size_t i = 0; i < table.channels.size(); ++i)
        out += (i ? ", " : "") + quoted(table.channels[i]);
    out += "],\n";
    if (!table.x.empty()) {
        out += "  \"x\": ";
        append_array(out, table.x);
        out += ",\n";
    }
    if (!table.initial_state.empty()) {
        out += "  \"initial_state\": ";
        append_array(out, table.initial_state);
        out += ",\n";
    }
    if (!table.parameters.empty()) {
        out += "  \"parameters\": {";
        bool first = true;
        for (const auto& [k, v] : table.parameters) {
            out += (first ? "" : ", ") + quoted(k) + ": " + format_double(v);
            first = false;
        }
        out += "},\n";
    }
    out += "  \"samples\": [";
    for (std::size_t k = 0; k < table.samples.size(); ++k) {
        out += k ? ",\n    " : "\n    ";
        append_array(out, table.samples[k]);
    }
    out += table.samples.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

Table table_from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("malformed json: ") + e.what());
    }
    if (!j.is_object())
        bad_table("document must be an object");
    for (const char* key : {"kind", "grid", "channels", "samples"})
        if (!j.contains(key))
            bad_table(std::string("missing key '") + key + "'");
    for (const auto& item : j.items()) {
        const auto& k = item.key();
        if (k != "kind" && k != "grid" && k != "channels" && k != "samples" && k != "x" && k != "initial_state" &&
            k != "parameters")
            bad_table("unknown key '" + k + "'");
    }
    const json& g = j["grid"];
    if (!j["kind"].is_string() || !g.is_object() || !g.contains("t_start") || !g.contains("t_end") ||
        !g.contains("n_steps") || !g["t_start"].is_number() || !g["t_end"].is_number() ||
        !g["n_steps"].is_number_integer())
        bad_table("malformed kind or grid");
    Table t{j["kind"].get<std::string>(),
            TimeGrid(g["t_start"].get<double>(), g["t_end"].get<double>(), g["n_steps"].get<int>()),
            {}, {}, {}, {}, {}};
    if (!j["channels"].is_array())
        bad_table("channels must be an array");
    for (const auto& c : j["channels"]) {
        if (!c.is_string())
            bad_table("channel names must be strings");
        t.channels.push_back(c.get<std::string>());
    }
    if (j.contains("x"))
        t.x = number_array(j["x"], "x");
    if (j.contains("initial_state"))
        t.initial_state = number_array(j["initial_state"], "initial_state");
    if (j.contains("parameters")) {
        if (!j["parameters"].is_object())
            bad_table("parameters must be an object");
        for (const auto& item : j["parameters"].items()) {
            if (!item.value().is_number())
                bad_table("parameters must be numbers");
            t.parameters[item.key()] = item.value().get<double>();
        }
    }
    if (!j["samples"].is_array())
        bad_table("samples must be an array");
    t.samples.reserve(j["samples"].size());
    for (const auto& row : j["samples"])
        t.samples.push_back(number_array(row, "sample row"));
    t.validate();
    return t;
}

std::string to_csv(const Table& table)
{
    table.validate();
    std::string out = table.x.empty() ? "t" : "t,x";
    for (const auto& c : table.channels)
        out += "," + c;
    out += '\n';
    const std::size_t nodes = std::max<std::size_t>(1, table.x.size());
    const std::size_t width = table.channels.size();
    for (const auto& row : table.samples) {
        const std::string t = format_double(row[0]);
        for (std::size_t i = 0; i < nodes; ++i) {
            out += t;
            if (!table.x.empty())
                out += "," + format_double(table.x[i]);
            for (std::size_t c = 0; c < width; ++c)
                out += "," + format_double(row[1 + i * width + c]);
            out += '\n';
        }
    }
    return out;
}

Table table_from_csv(std::string_view text, std::string kind, std::optional<TimeGrid> grid)
{
    std::vector<std::string_view> lines;
    for (auto line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (!line.empty())
            lines.push_back(line);
    }
    if (lines.empty())
        throw Error(ErrorCode::Io, "csv: missing header");
    const auto header = split(lines[0], ',');
    if (header.empty() || header[0] != "t")
        throw Error(ErrorCode::Io, "csv: first column must be 't'");
    const bool field = header.size() > 1 && header[1] == "x";
    const std::size_t first_channel = field ? 2 : 1;
    if (header.size() <= first_channel)
        throw Error(ErrorCode::Io, "csv: no channels");

    Table t{std::move(kind), grid.value_or(TimeGrid(0.0, 1.0, 2)), {}, {}, {}, {}, {}};
    for (std::size_t c = first_channel; c < header.size(); ++c)
        t.channels.emplace_back(header[c]);
    const std::size_t width = t.channels.size();

    std::vector<std::vector<double>> parsed;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto cells = split(lines[l], ',');
        if (cells.size() != header.size())
            throw Error(ErrorCode::Io, "csv line " + std::to_string(l + 1) + ": wrong number of columns");
        std::vector<double> v;
        v.reserve(cells.size());
        for (const auto cell : cells)
            v.push_back(parse_double(cell, l + 1));
        parsed.push_back(std::move(v));
    }

    if (!field) {
        t.samples = std::move(parsed);
    } else {
        std::size_t nodes = 0;
        while (nodes < parsed.size() && parsed[nodes][0] == parsed[0][0])
            ++nodes;
        if (nodes > 0 && parsed.size() % nodes != 0)
            throw Error(ErrorCode::Io, "csv: ragged node blocks");
        for (std::size_t i = 0; i < nodes; ++i)
            t.x.push_back(parsed[i][1]);
        for (std::size_t b = 0; nodes > 0 && b < parsed.size() / nodes; ++b) {
            std::vector<double> row{parsed[b * nodes][0]};
            for (std::size_t i = 0; i < nodes; ++i) {
                const auto& line = parsed[b * nodes + i];
                if (line[0] != row[0] || line[1] != t.x[i])
                    throw Error(ErrorCode::Io, "csv: inconsistent node block " + std::to_string(b));
                row.insert(row.end(), line.begin() + 2, line.begin() + 2 + static_cast<std::ptrdiff_t>(width));
            }
            t.samples.push_back(std::move(row));
        }
    }

    if (!grid) {
        if (t.samples.size() < 2)
            throw Error(ErrorCode::InvalidInput, "csv: a grid is required for fewer than two rows");
        t.grid = TimeGrid(t.samples.front()[0], t.samples.back()[0], static_cast<int>(t.samples.size() - 1));
    }
    t.validate();
    return t;
}

void write_text(const std::filesystem::path& path, std::string_view text)
{
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    if (ec)
        throw Error(ErrorCode::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_table(const Table& table, const std::filesystem::path& path, Format format)
{
    write_text(path, format == Format::Csv ? to_csv(table) : to_json(table));
}

Table read_table(const std::filesystem::path& path)
{
    const std::string ext = path.extension().string();
    try {
        if (ext == ".json")
            return table_from_json(read_text(path));
        if (ext == ".csv")
            return table_from_csv(read_text(path));
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
    throw Error(ErrorCode::Io, path.string() + ": unknown extension (expected .csv or .json)");
}

TimeGrid strided_grid(const TimeGrid& grid, std::size_t stride)
{
    checked_stride(grid, stride);
    return TimeGrid(grid.t_start(), grid.t_end(), grid.n_steps() / static_cast<int>(stride));
}

Table table_from_series(std::string kind, const RealSeries& series, std::vector<std::string> channels,
                        std::size_t stride)
{
    if (channels.size() != series.width())
        throw Error(ErrorCode::DimensionMismatch, "channel names do not match series width");
    const TimeGrid coarse = strided_grid(series.grid(), stride);
    Table t{std::move(kind), coarse, std::move(channels), {}, {}, {}, {}};
    for (std::size_t c = 0; c < coarse.size(); ++c) {
        const auto row = series.row(c * stride);
        std::vector<double> r{coarse.time(c)};
        r.insert(r.end(), row.begin(), row.end());
        t.samples.push_back(std::move(r));
    }
    return t;
}

RealSeries series_from_table(const Table& table)
{
    if (!table.x.empty())
        bad_table("field table where a series was expected");
    if (table.samples.size() != table.grid.size())
        bad_table("expected one row per grid point");
    RealSeries s(table.grid, table.channels.size());
    for (std::size_t k = 0; k < table.samples.size(); ++k)
        for (std::size_t c = 0; c < table.channels.size(); ++c)
            s(k, c) = table.samples[k][1 + c];
    return s;
}

std::vector<double> interleave(const Eigen::VectorXcd& state)
{
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(2 * state.size()));
    for (Eigen::Index i = 0; i < state.size(); ++i) {
        out.push_back(state[i].real());
        out.push_back(state[i].imag());
    }
    return out;
}

Eigen::VectorXcd deinterleave(const std::vector<double>& values)
{
    if (values.size() % 2 != 0)
        bad_table("interleaved state has odd length");
    Eigen::VectorXcd out(static_cast<Eigen::Index>(values.size() / 2));
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = Complex(values[static_cast<std::size_t>(2 * i)], values[static_cast<std::size_t>(2 * i + 1)]);
    return out;
}

Table table_from_states(std::string kind, const TimeGrid& grid, const std::vector<Eigen::VectorXcd>& states,
                        std::size_t stride)
{
    if (states.size() != grid.size() || states.empty())
        throw Error(ErrorCode::DimensionMismatch, "expected one state per grid point");
    const TimeGrid coarse = strided_grid(grid, stride);
    Table t{std::move(kind), coarse, {}, {}, {}, {}, {}};
    for (Eigen::Index i = 1; i <= states.front().size(); ++i) {
        t.channels.push_back("re_" + std::to_string(i));
        t.channels.push_back("im_" + std::to_string(i));
    }
    for (std::size_t c = 0; c < coarse.size(); ++c) {
        std::vector<double> r{coarse.time(c)};
        const auto v = interleave(states[c * stride]);
        r.insert(r.end(), v.begin(), v.end());
        t.samples.push_back(std::move(r));
    }
    return t;
}

std::vector<Eigen::VectorXcd> states_from_table(const Table& table)
{
    std::vector<Eigen::VectorXcd> out;
    out.reserve(table.samples.size());
    for (const auto& row : table.samples)
        out.push_back(deinterleave(std::vector<double>(row.begin() + 1, row.end())));
    return out;
}

Table table_from_fields(std::string kind, const std::vector<const RealField1D*>& fields,
                        std::vector<std::string> channels, std::size_t stride)
{
    if (fields.empty() || fields.size() != channels.size())
        throw Error(ErrorCode::DimensionMismatch, "one channel name per field");
    const RealField1D& first = *fields.front();
    for (const auto* f : fields)
        if (!(f->space == first.space) || !(f->time == first.time))
            throw Error(ErrorCode::DimensionMismatch, "fields on different grids");
    const TimeGrid coarse = strided_grid(first.time, stride);
    const Eigen::ArrayXd nodes = first.space.nodes();
    Table t{std::move(kind), coarse, std::move(channels), std::vector<double>(nodes.begin(), nodes.end()), {}, {}, {}};
    for (std::size_t c = 0; c < coarse.size(); ++c) {
        const auto k = static_cast<Eigen::Index>(c * stride);
        std::vector<double> r{coarse.time(c)};
        r.reserve(1 + t.values_per_row());
        for (Eigen::Index i = 0; i < first.space.n_points(); ++i)
            for (const auto* f : fields)
                r.push_back(f->values(k, i));
        t.samples.push_back(std::move(r));
    }
    t.parameters["m"] = first.mass;
    return t;
}

Table table_from_field(std::string kind, const RealField1D& field, std::string channel, std::size_t stride)
{
    return table_from_fields(std::move(kind), {&field}, {std::move(channel)}, stride);
}

Table table_from_complex_field(std::string kind, const ComplexField1D& field, std::size_t stride)
{
    RealField1D re(field.space, field.time, field.mass);
    RealField1D im(field.space, field.time, field.mass);
    re.values = field.values.real();
    im.values = field.values.imag();
    return table_from_fields(std::move(kind), {&re, &im}, {"re", "im"}, stride);
}

RealField1D field_from_table(const Table& table, std::string_view channel, double mass)
{
    if (table.x.size() < 3)
        bad_table("field table needs at least three nodes");
    if (table.samples.size() != table.grid.size())
        bad_table("expected one row per grid point");
    const SpatialGrid space(table.x.front(), table.x.back(), static_cast<int>(table.x.size()));
    const double span = table.x.back() - table.x.front();
    for (std::size_t i = 0; i < table.x.size(); ++i)
        if (std::abs(space.x(static_cast<Eigen::Index>(i)) - table.x[i]) > 1e-9 * std::abs(span))
            bad_table("spatial nodes are not uniform");
    RealField1D f(space, table.grid, mass);
    for (std::size_t i = 0; i < table.x.size(); ++i) {
        const auto column = table.channel(channel, i);
        for (std::size_t k = 0; k < column.size(); ++k)
            f.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = column[k];
    }
    return f;
}

} // namespace pulseforge::io
