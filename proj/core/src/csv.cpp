#include "shbkit/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace shbkit {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;  // data rows, header excluded
    std::vector<std::size_t> line_numbers;       // 1-based file line per data row
};

Table read_table(const std::string& path, const std::vector<std::string>& expected_columns) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");

    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line);
        if (!have_header) {
            table.columns = fields;
            if (!expected_columns.empty() && fields != expected_columns) {
                std::ostringstream want;
                for (std::size_t i = 0; i < expected_columns.size(); ++i)
                    want << (i ? "," : "") << expected_columns[i];
                throw ValidationError(path + ": line " + std::to_string(line_no) +
                                      ": expected header '" + want.str() + "', got '" + line +
                                      "'");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != table.columns.size())
            throw ValidationError(path + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.columns.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw ValidationError(path + ": missing header row");
    if (table.rows.empty()) throw ValidationError(path + ": no data rows");
    return table;
}

double parse_cell(const Table& table, const std::string& path, std::size_t row, std::size_t col) {
    const std::string& cell = table.rows[row][col];
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError(path + ": row " + std::to_string(row + 1) + " (line " +
                              std::to_string(table.line_numbers[row]) + "), column '" +
                              table.columns[col] + "': '" + cell + "' is not a number");
    return value;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_spectrum_csv(const std::string& path, std::span<const double> detuning_hz,
                        std::span<const double> od) {
    if (detuning_hz.size() != od.size())
        throw ValidationError("write_spectrum_csv: column length mismatch");
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "detuning_hz,od\n";
    for (std::size_t i = 0; i < detuning_hz.size(); ++i)
        out << format_double(detuning_hz[i]) << "," << format_double(od[i]) << "\n";
}

void write_spectrum_sweep_csv(const std::string& path, std::span<const double> detuning_hz,
                              const std::vector<std::pair<double, std::vector<double>>>& by_field) {
    if (by_field.empty()) throw ValidationError("write_spectrum_sweep_csv: no fields");
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "detuning_hz";
    for (const auto& [field, od] : by_field) {
        if (od.size() != detuning_hz.size())
            throw ValidationError("write_spectrum_sweep_csv: column length mismatch");
        char label[40];
        std::snprintf(label, sizeof(label), "%g", field);
        out << ",od_B" << label;
    }
    out << "\n";
    for (std::size_t i = 0; i < detuning_hz.size(); ++i) {
        out << format_double(detuning_hz[i]);
        for (const auto& [field, od] : by_field) out << "," << format_double(od[i]);
        out << "\n";
    }
}

void write_time_trace_csv(const std::string& path, std::span<const double> time_s,
                          std::span<const double> value) {
    if (time_s.size() != value.size())
        throw ValidationError("write_time_trace_csv: column length mismatch");
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "time_s,value\n";
    for (std::size_t i = 0; i < time_s.size(); ++i)
        out << format_double(time_s[i]) << "," << format_double(value[i]) << "\n";
}

void write_populations_csv(const std::string& path, std::span<const TracePoint> trace) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "time_s,n_g,n_e,n_b\n";
    for (const auto& pt : trace)
        out << format_double(pt.time_s) << "," << format_double(pt.populations.n_g) << ","
            << format_double(pt.populations.n_e) << "," << format_double(pt.populations.n_b)
            << "\n";
}

void write_coherence_csv(const std::string& path, std::span<const CoherencePoint> points) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "field_t,temperature_k,t2_s,t2_sigma_s,method\n";
    for (const auto& pt : points)
        out << format_double(pt.field_t) << "," << format_double(pt.temperature_k) << ","
            << format_double(pt.t2_s) << "," << format_double(pt.t2_sigma_s) << ","
            << (pt.method == CoherenceMethod::FID ? "fid" : "hole_burning") << "\n";
}

SpectrumData read_spectrum_csv(const std::string& path) {
    const auto table = read_table(path, {"detuning_hz", "od"});
    SpectrumData data;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        data.detuning_hz.push_back(parse_cell(table, path, r, 0));
        data.od.push_back(parse_cell(table, path, r, 1));
    }
    return data;
}

TimeTrace read_time_trace_csv(const std::string& path) {
    const auto table = read_table(path, {"time_s", "value"});
    TimeTrace trace;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        trace.time_s.push_back(parse_cell(table, path, r, 0));
        trace.value.push_back(parse_cell(table, path, r, 1));
    }
    return trace;
}

std::vector<CoherencePoint> read_coherence_csv(const std::string& path) {
    const auto table =
        read_table(path, {"field_t", "temperature_k", "t2_s", "t2_sigma_s", "method"});
    std::vector<CoherencePoint> points;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        CoherencePoint pt{};
        pt.field_t = parse_cell(table, path, r, 0);
        pt.temperature_k = parse_cell(table, path, r, 1);
        pt.t2_s = parse_cell(table, path, r, 2);
        pt.t2_sigma_s = parse_cell(table, path, r, 3);
        const std::string& method = table.rows[r][4];
        if (method == "hole_burning")
            pt.method = CoherenceMethod::HoleBurning;
        else if (method == "fid")
            pt.method = CoherenceMethod::FID;
        else
            throw ValidationError(path + ": row " + std::to_string(r + 1) +
                                  ", column 'method': '" + method +
                                  "' is not one of hole_burning|fid");
        pt.validate();
        points.push_back(pt);
    }
    return points;
}

}  // namespace shbkit
