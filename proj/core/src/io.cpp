#include "incstab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "incstab/errors.hpp"

namespace incstab {

namespace {

void append_g17(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

}  // namespace

std::string trace_csv(const Trace& trace) {
    std::string out;
    for (const TraceEvent& e : trace.events) {
        out += "# event t=";
        append_g17(out, e.t);
        out += " system=" + std::to_string(e.system) + " dir=";
        out += e.dir > 0 ? '+' : '-';
        out += '\n';
    }
    out += 't';
    for (const std::string& c : trace.columns) out += ',' + c;
    if (trace.has_variational())
        for (const std::string& c : trace.columns) out += ",d_" + c;
    out += '\n';
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
        append_g17(out, trace.times[k]);
        for (double v : trace.states[k]) {
            out += ',';
            append_g17(out, v);
        }
        if (trace.has_variational()) {
            for (double v : trace.dstates[k]) {
                out += ',';
                append_g17(out, v);
            }
        }
        out += '\n';
    }
    return out;
}

std::string distance_csv(const DistanceSeries& series) {
    std::string out = "t,dist\n";
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        append_g17(out, series.times[k]);
        out += ',';
        append_g17(out, series.values[k]);
        out += '\n';
    }
    return out;
}

int CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        if (!header_seen) {
            while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError("bad numeric cell '" + cell + "' in '" + path + "'");
            }
        }
        if (row.size() != table.columns.size())
            throw ConfigError("ragged row in '" + path + "'");
        table.rows.push_back(std::move(row));
    }
    if (!header_seen) throw ConfigError("'" + path + "' has no header row");
    return table;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ConfigError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw ConfigError("cannot rename into '" + path + "': " + ec.message());
    }
}

}  // namespace incstab
