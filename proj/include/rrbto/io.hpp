#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rrbto/errors.hpp"

namespace rrbto {

/// Shortest round-trippable decimal form of a double ("%.17g"), used for all
/// numeric artifacts so identical runs produce bit-identical files.
inline std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Write physical densities as a binary P5 graymap, one pixel per element,
/// solid material (rho = 1) rendered black.  Row 0 of the image is the top of
/// the mesh (ey = nely - 1); columns run left to right.
inline void write_pgm(const std::string& path, int nelx, int nely, const Eigen::VectorXd& physical) {
    if (physical.size() != static_cast<Eigen::Index>(nelx) * nely)
        throw InvalidArgument("density vector does not match the mesh");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "P5\n" << nelx << " " << nely << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(nelx));
    for (int ey = nely - 1; ey >= 0; --ey) {
        for (int ex = 0; ex < nelx; ++ex) {
            const double rho = physical[static_cast<Eigen::Index>(ex) * nely + ey];
            const double v = std::round(255.0 * (1.0 - rho));
            row[static_cast<size_t>(ex)] =
                static_cast<unsigned char>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
        }
        out.write(reinterpret_cast<const char*>(row.data()), nelx);
    }
    if (!out) throw IoError("failed writing image '" + path + "'");
}

/// Plain-text density field: first line "nelx nely", then one density per
/// line in element order (ex-major, ey fastest).
inline void write_design(const std::string& path, int nelx, int nely, const Eigen::VectorXd& x) {
    if (x.size() != static_cast<Eigen::Index>(nelx) * nely)
        throw InvalidArgument("density vector does not match the mesh");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << nelx << " " << nely << "\n";
    for (Eigen::Index e = 0; e < x.size(); ++e) out << format_full(x[e]) << "\n";
    if (!out) throw IoError("failed writing design '" + path + "'");
}

struct DesignFile {
    int nelx = 0;
    int nely = 0;
    Eigen::VectorXd x;
};

inline DesignFile read_design(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open design file '" + path + "'");
    DesignFile d;
    if (!(in >> d.nelx >> d.nely) || d.nelx < 1 || d.nely < 1)
        throw IoError("design file '" + path + "': bad header (expected 'nelx nely')");
    const Eigen::Index n = static_cast<Eigen::Index>(d.nelx) * d.nely;
    d.x.resize(n);
    for (Eigen::Index e = 0; e < n; ++e)
        if (!(in >> d.x[e]))
            throw IoError("design file '" + path + "': expected " + std::to_string(n) + " densities");
    return d;
}

/// Newline-delimited run log, appended to a file and optionally echoed.
class TraceLog {
public:
    TraceLog() = default;
    explicit TraceLog(const std::string& path, bool echo = false) : echo_(echo) {
        if (!path.empty()) {
            out_.open(path);
            if (!out_) throw IoError("cannot open trace log '" + path + "'");
        }
    }

    void line(const std::string& s) {
        if (out_.is_open()) out_ << s << "\n" << std::flush;
        if (echo_) std::cout << s << "\n";
    }

private:
    std::ofstream out_;
    bool echo_ = false;
};

/// One metrics row, mirroring the published result tables.
struct CsvRow {
    double beta = 0.0;
    double expected_Pf = 0.0;
    double epsilon = 0.0;
    double muC = 0.0;
    double sigmaC = 0.0;
    double muB = 0.0;
    double sigmaB = 0.0;
    double Pf_mcs = 0.0;
    double muB_srsm = 0.0;
    double sigmaB_srsm = 0.0;
    int loops = 0;
    bool converged = false;
};

inline const char* csv_header() {
    return "beta,expected_Pf,epsilon,muC,sigmaC,muB,sigmaB,Pf_mcs,muB_srsm,sigmaB_srsm,loops,converged";
}

inline std::string csv_format_row(const CsvRow& r) {
    std::ostringstream os;
    os << format_full(r.beta) << ',' << format_full(r.expected_Pf) << ',' << format_full(r.epsilon)
       << ',' << format_full(r.muC) << ',' << format_full(r.sigmaC) << ',' << format_full(r.muB)
       << ',' << format_full(r.sigmaB) << ',' << format_full(r.Pf_mcs) << ','
       << format_full(r.muB_srsm) << ',' << format_full(r.sigmaB_srsm) << ',' << r.loops << ','
       << (r.converged ? 1 : 0);
    return os.str();
}

inline void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << csv_header() << "\n";
    for (const CsvRow& r : rows) out << csv_format_row(r) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::vector<CsvRow> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path + "': empty file");
    if (line != csv_header())
        throw IoError("'" + path + "': unexpected CSV header");
    std::vector<CsvRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string tok;
        std::vector<std::string> f;
        while (std::getline(is, tok, ',')) f.push_back(tok);
        if (f.size() != 12)
            throw IoError("'" + path + "' line " + std::to_string(lineno) + ": expected 12 fields");
        auto num = [&](size_t i) {
            try {
                size_t pos = 0;
                const double v = std::stod(f[i], &pos);
                if (pos != f[i].size()) throw std::invalid_argument(f[i]);
                return v;
            } catch (const std::exception&) {
                throw IoError("'" + path + "' line " + std::to_string(lineno) + ": bad number '" +
                              f[i] + "'");
            }
        };
        CsvRow r;
        r.beta = num(0);
        r.expected_Pf = num(1);
        r.epsilon = num(2);
        r.muC = num(3);
        r.sigmaC = num(4);
        r.muB = num(5);
        r.sigmaB = num(6);
        r.Pf_mcs = num(7);
        r.muB_srsm = num(8);
        r.sigmaB_srsm = num(9);
        r.loops = static_cast<int>(num(10));
        r.converged = num(11) != 0.0;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace rrbto
