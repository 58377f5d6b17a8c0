#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rrbto/errors.hpp"
#include "rrbto/io.hpp"

namespace rrbto {

/// A published result row: moments and failure probability for one
/// (benchmark, beta, epsilon) combination.
struct ReferenceRow {
    double beta;
    double expected_Pf;
    double epsilon;
    double muC;
    double sigmaC;
    double muB;
    double sigmaB;
    double Pf;
    double muB_srsm;
    double sigmaB_srsm;
};

/// Cantilever reference results: beta in {1,2,3} x epsilon in
/// {1, 0.9, 0.8, 0.5, 0.2, 0}.
inline const std::vector<ReferenceRow>& cantilever_reference() {
    static const std::vector<ReferenceRow> rows = {
        {1, 0.15865, 1.0, 162.9505, 0.9263, -220.6120, 0.6071, 0.15674, -220.6120, 0.6071},
        {1, 0.15865, 0.9, 162.9992, 0.9188, -220.6070, 0.6017, 0.15642, -220.6070, 0.6017},
        {1, 0.15865, 0.8, 163.2204, 0.8953, -220.5980, 0.5853, 0.15326, -220.5980, 0.5853},
        {1, 0.15865, 0.5, 166.5160, 0.9032, -225.0110, 0.5906, 0.00000, -225.0110, 0.5906},
        {1, 0.15865, 0.2, 177.7632, 0.8588, -240.6990, 0.5572, 0.00000, -240.6990, 0.5572},
        {1, 0.15865, 0.0, 206.2317, 0.8559, -278.9100, 0.5527, 0.00000, -278.9100, 0.5527},
        {2, 0.02275, 1.0, 163.4230, 0.9150, -221.1960, 0.5995, 0.02252, -221.1960, 0.5995},
        {2, 0.02275, 0.9, 163.6040, 0.9106, -221.1880, 0.5961, 0.02250, -221.1880, 0.5961},
        {2, 0.02275, 0.8, 163.7847, 0.9118, -221.1890, 0.5967, 0.02266, -221.1890, 0.5967},
        {2, 0.02275, 0.5, 164.7008, 0.8953, -222.9560, 0.5866, 0.00000, -222.9560, 0.5866},
        {2, 0.02275, 0.2, 178.0176, 0.8586, -241.0670, 0.5570, 0.00000, -241.0670, 0.5570},
        {2, 0.02275, 0.0, 206.2320, 0.8559, -278.9110, 0.5527, 0.00000, -278.9110, 0.5527},
        {3, 0.001349, 1.0, 163.7490, 0.9094, -221.7690, 0.5962, 0.001340, -221.7690, 0.5962},
        {3, 0.001349, 0.9, 164.0019, 0.9078, -221.7630, 0.5944, 0.001340, -221.7630, 0.5944},
        {3, 0.001349, 0.8, 164.0458, 0.9015, -221.7520, 0.5907, 0.001320, -221.7520, 0.5907},
        {3, 0.001349, 0.5, 165.0556, 0.8938, -223.2560, 0.5855, 0.000000, -223.2560, 0.5855},
        {3, 0.001349, 0.2, 177.8977, 0.8585, -240.8960, 0.5570, 0.000000, -240.8960, 0.5570},
        {3, 0.001349, 0.0, 206.2320, 0.8559, -278.9110, 0.5527, 0.000000, -278.9110, 0.5527},
    };
    return rows;
}

/// L-shaped beam reference results: beta in {1,3} x epsilon in
/// {1, 0.9, 0.8, 0.5, 0.2, 0}.
inline const std::vector<ReferenceRow>& lbeam_reference() {
    static const std::vector<ReferenceRow> rows = {
        {1, 0.15865, 1.0, 96.4893, 0.5352, -130.3580, 0.3577, 0.15808, -130.3580, 0.3577},
        {1, 0.15865, 0.9, 96.3536, 0.5321, -130.3560, 0.3553, 0.15790, -130.3560, 0.3553},
        {1, 0.15865, 0.8, 96.8678, 0.5241, -131.0290, 0.3498, 0.00144, -131.0290, 0.3498},
        {1, 0.15865, 0.5, 99.5821, 0.5045, -135.7740, 0.3396, 0.00000, -135.7740, 0.3396},
        {1, 0.15865, 0.2, 108.7352, 0.4917, -149.3090, 0.3332, 0.00000, -149.3090, 0.3332},
        {1, 0.15865, 0.0, 133.3052, 0.4762, -183.8160, 0.3238, 0.00000, -183.8160, 0.3238},
        {3, 0.001349, 1.0, 96.8866, 0.5300, -131.0510, 0.3544, 0.00130, -131.0510, 0.3544},
        {3, 0.001349, 0.9, 96.7519, 0.5298, -131.0510, 0.3545, 0.00126, -131.0510, 0.3545},
        {3, 0.001349, 0.8, 96.8852, 0.5240, -131.0560, 0.3497, 0.00106, -131.0560, 0.3497},
        {3, 0.001349, 0.5, 99.6087, 0.5049, -135.9450, 0.3399, 0.00000, -135.9450, 0.3399},
        {3, 0.001349, 0.2, 108.7883, 0.4916, -149.3880, 0.3331, 0.00000, -149.3880, 0.3331},
        {3, 0.001349, 0.0, 133.9731, 0.4755, -184.5450, 0.3229, 0.00000, -184.5450, 0.3229},
    };
    return rows;
}

/// Guess which benchmark a CSV belongs to: by file name when it mentions one,
/// otherwise by the scale of the monitored displacement (the two benchmarks'
/// |muB| ranges are disjoint around 200).
inline std::string infer_benchmark(const std::string& path, const std::vector<CsvRow>& rows) {
    std::string lower(path);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower.find("lbeam") != std::string::npos || lower.find("l-beam") != std::string::npos)
        return "lbeam";
    if (lower.find("cantilever") != std::string::npos) return "cantilever";
    double max_ub = 0.0;
    for (const CsvRow& r : rows) max_ub = std::max(max_ub, std::abs(r.muB));
    return max_ub >= 200.0 ? "cantilever" : "lbeam";
}

inline const ReferenceRow* find_reference(const std::string& benchmark, double beta, double epsilon) {
    const auto& table = benchmark == "lbeam" ? lbeam_reference() : cantilever_reference();
    for (const ReferenceRow& r : table)
        if (std::abs(r.beta - beta) < 1e-9 && std::abs(r.epsilon - epsilon) < 1e-9) return &r;
    return nullptr;
}

struct ReportSummary {
    int rows = 0;
    int matched = 0;       ///< rows with a published counterpart
    int pf_violations = 0; ///< rows with Pf above the target bound
    int spread_flags = 0;  ///< epsilon = 0 groups with muC spread > 0.5%
};

/// Side-by-side comparison of artifact CSV rows against the published tables:
/// relative deviations per row, a failure-probability bound check per row, and
/// a cross-beta consistency check for the epsilon = 0 designs.
inline std::string format_report(const std::vector<std::pair<std::string, std::vector<CsvRow>>>& files,
                                 ReportSummary* summary = nullptr) {
    ReportSummary s;
    std::ostringstream os;
    auto pct = [](double ours, double ref) {
        char buf[32];
        if (ref == 0.0) {
            std::snprintf(buf, sizeof(buf), "%s", ours == 0.0 ? "+0.0%" : "  n/a");
        } else {
            std::snprintf(buf, sizeof(buf), "%+.2f%%", 100.0 * (ours - ref) / std::abs(ref));
        }
        return std::string(buf);
    };
    auto fixed = [](double v, int prec) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
        return std::string(buf);
    };

    for (const auto& [path, rows] : files) {
        const std::string bench = infer_benchmark(path, rows);
        os << "== " << path << " (" << bench << ") ==\n";
        os << "beta  eps   muC        (ref, dev)            sigmaC  (ref, dev)          "
              "muB        (ref, dev)            Pf_mcs    (target)   bound\n";
        std::map<long long, std::vector<double>> eps0_muC;
        for (const CsvRow& r : rows) {
            ++s.rows;
            const ReferenceRow* ref = find_reference(bench, r.beta, r.epsilon);
            const bool pf_ok = r.Pf_mcs <= r.expected_Pf + 1e-12;
            if (!pf_ok) ++s.pf_violations;
            os << fixed(r.beta, 1) << "   " << fixed(r.epsilon, 1) << "   " << fixed(r.muC, 4);
            if (ref) {
                ++s.matched;
                os << "  (" << fixed(ref->muC, 4) << ", " << pct(r.muC, ref->muC) << ")  "
                   << fixed(r.sigmaC, 4) << "  (" << fixed(ref->sigmaC, 4) << ", "
                   << pct(r.sigmaC, ref->sigmaC) << ")  " << fixed(r.muB, 4) << "  ("
                   << fixed(ref->muB, 4) << ", " << pct(r.muB, ref->muB) << ")  ";
            } else {
                os << "  (no published row)  " << fixed(r.sigmaC, 4) << "  " << fixed(r.muB, 4)
                   << "  ";
            }
            os << fixed(r.Pf_mcs, 5) << "  (<= " << fixed(r.expected_Pf, 5) << ")  "
               << (pf_ok ? "ok" : "VIOLATION") << "\n";
            if (r.epsilon == 0.0) eps0_muC[static_cast<long long>(bench == "lbeam")].push_back(r.muC);
        }
        for (const auto& [key, v] : eps0_muC) {
            (void)key;
            if (v.size() < 2) continue;
            const double lo = *std::min_element(v.begin(), v.end());
            const double hi = *std::max_element(v.begin(), v.end());
            const double spread = lo > 0.0 ? hi / lo - 1.0 : 0.0;
            const bool ok = spread <= 0.005;
            if (!ok) ++s.spread_flags;
            os << "epsilon=0 designs across beta: muC spread " << fixed(100.0 * spread, 3)
               << "% (limit 0.5%) " << (ok ? "ok" : "FLAG") << "\n";
        }
        os << "\n";
    }
    os << "rows: " << s.rows << ", with published counterpart: " << s.matched
       << ", Pf bound violations: " << s.pf_violations << ", epsilon=0 spread flags: " << s.spread_flags
       << "\n";
    if (summary) *summary = s;
    return os.str();
}

}  // namespace rrbto
