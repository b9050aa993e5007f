#pragma once

// CSV writers for trajectories, density snapshots, and analysis reports,
// plus the sidecar metadata document that stamps every output directory
// with the scenario hash, grid, and tool version (no timestamps, so equal
// inputs produce byte-equal outputs).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "scenario.hpp"
#include "simulate.hpp"
#include "version.hpp"

namespace agestruct {

inline std::string csv_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw config_error("short write to '" + path + "'");
}

}  // namespace detail

inline std::string ensure_out_dir(const std::string& dir) {
    std::filesystem::path p = dir.empty() ? "." : dir;
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw config_error("cannot create output directory '" + dir + "': " + ec.message());
    return p.string();
}

// trajectory.csv: one row per step, t_end/da + 1 rows in total.
inline std::string write_trajectory_csv(const std::string& dir, const TrajectoryRecord& rec) {
    std::string text = "t,B,Q0,Q1,J,R,S,T\n";
    for (const auto& row : rec.rows) {
        text += csv_num(row.t);
        for (double v : {row.B, row.Q0, row.Q1, row.J, row.R, row.S, row.T})
            text += "," + csv_num(v);
        text += "\n";
    }
    std::string path = dir + "/trajectory.csv";
    detail::write_text_file(path, text);
    return path;
}

// Density snapshots: p_t<time>.csv with age,density rows, one per cell.
inline std::vector<std::string> write_snapshot_csvs(const std::string& dir,
                                                    const TrajectoryRecord& rec) {
    std::vector<std::string> paths;
    for (const auto& [stepidx, snap] : rec.snapshots) {
        const double t = static_cast<double>(stepidx) * rec.grid.da;
        char label[32];
        std::snprintf(label, sizeof label, "%g", t);
        std::string text = "age,density\n";
        for (std::size_t j = 0; j < snap.size(); ++j)
            text += csv_num(rec.grid.center(j)) + "," + csv_num(snap[j]) + "\n";
        std::string path = dir + "/p_t" + label + ".csv";
        detail::write_text_file(path, text);
        paths.push_back(path);
    }
    return paths;
}

// metadata.json sidecar: scenario identity + grid + tool version + command.
inline std::string write_metadata(const std::string& dir, const Scenario& sc, const AgeGrid& g,
                                  const std::string& command) {
    ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["command"] = command;
    j["scenario"] = sc.name;
    j["scenario_hash"] = scenario_hash(sc);
    j["grid"] = ordered_json{{"a1", g.a1}, {"da", g.da}, {"a_min", g.a_min},
                             {"a_max", g.a_max}, {"cells", g.n}};
    std::string path = dir + "/metadata.json";
    detail::write_text_file(path, j.dump(2) + "\n");
    return path;
}

// Single-row report CSV: header columns + one row of values.
inline std::string write_report_csv(const std::string& dir, const std::string& filename,
                                    const std::vector<std::string>& header,
                                    const std::vector<std::string>& row) {
    std::string text;
    for (std::size_t i = 0; i < header.size(); ++i)
        text += (i ? "," : "") + header[i];
    text += "\n";
    for (std::size_t i = 0; i < row.size(); ++i)
        text += (i ? "," : "") + row[i];
    text += "\n";
    std::string path = dir + "/" + filename;
    detail::write_text_file(path, text);
    return path;
}

// Column-series CSV (sweeps, Lyapunov traces, age profiles).
inline std::string write_series_csv(const std::string& dir, const std::string& filename,
                                    const std::vector<std::string>& header,
                                    const std::vector<std::vector<double>>& columns) {
    std::string text;
    for (std::size_t i = 0; i < header.size(); ++i)
        text += (i ? "," : "") + header[i];
    text += "\n";
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t rix = 0; rix < rows; ++rix) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            text += (c ? "," : "") + csv_num(columns[c][rix]);
        text += "\n";
    }
    std::string path = dir + "/" + filename;
    detail::write_text_file(path, text);
    return path;
}

}  // namespace agestruct
