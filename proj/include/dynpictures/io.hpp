#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dynpictures/phase.hpp"
#include "dynpictures/state.hpp"

namespace dynp {

/// Shortest round-trip decimal rendering; byte-stable for a given build.
inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Write-then-rename so readers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw error("short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Minimal CSV accumulator: header line plus uniformly shaped rows.
class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) {
        append_row(header);
    }

    void append_row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw error("CsvWriter: ragged row");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) buf_ << ',';
            buf_ << cells[i];
        }
        buf_ << '\n';
    }

    void append_numeric(const std::vector<double>& cells) {
        std::vector<std::string> row;
        row.reserve(cells.size());
        for (double x : cells) row.push_back(fmt_double(x));
        append_row(row);
    }

    void write(const std::filesystem::path& path) const { atomic_write_file(path, buf_.str()); }

    std::string str() const { return buf_.str(); }

  private:
    std::size_t width_;
    std::ostringstream buf_;
};

/// Ensemble snapshot as CSV with columns q0..q{N-1}, p0..p{N-1}, re, im,
/// weight (densities export their value through the re column).
inline std::string ensemble_csv(const KvnWaveFunction& phi) {
    if (phi.rep != Representation::Ensemble)
        throw validation_error("ensemble_csv: ensemble representation required");
    const int n = phi.points.front().dof();
    std::vector<std::string> header;
    for (int i = 0; i < n; ++i) header.push_back("q" + std::to_string(i));
    for (int i = 0; i < n; ++i) header.push_back("p" + std::to_string(i));
    header.insert(header.end(), {"re", "im", "weight"});
    CsvWriter csv(header);
    for (std::size_t k = 0; k < phi.points.size(); ++k) {
        std::vector<double> row;
        for (int i = 0; i < n; ++i) row.push_back(phi.points[k].q(i));
        for (int i = 0; i < n; ++i) row.push_back(phi.points[k].p(i));
        row.push_back(phi.amplitudes[k].real());
        row.push_back(phi.amplitudes[k].imag());
        row.push_back(phi.weights[k]);
        csv.append_numeric(row);
    }
    return csv.str();
}

inline std::string ensemble_csv(const PhaseSpaceDensity& rho) {
    if (rho.rep != Representation::Ensemble)
        throw validation_error("ensemble_csv: ensemble representation required");
    const int n = rho.points.front().dof();
    std::vector<std::string> header;
    for (int i = 0; i < n; ++i) header.push_back("q" + std::to_string(i));
    for (int i = 0; i < n; ++i) header.push_back("p" + std::to_string(i));
    header.insert(header.end(), {"re", "im", "weight"});
    CsvWriter csv(header);
    for (std::size_t k = 0; k < rho.points.size(); ++k) {
        std::vector<double> row;
        for (int i = 0; i < n; ++i) row.push_back(rho.points[k].q(i));
        for (int i = 0; i < n; ++i) row.push_back(rho.points[k].p(i));
        row.push_back(rho.values[k]);
        row.push_back(0.0);
        row.push_back(rho.weights[k]);
        csv.append_numeric(row);
    }
    return csv.str();
}

}  // namespace dynp
