#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "rrbto/errors.hpp"
#include "rrbto/fem.hpp"
#include "rrbto/filter.hpp"
#include "rrbto/parallel.hpp"
#include "rrbto/random_field.hpp"
#include "rrbto/srsm.hpp"

namespace rrbto {

/// Self-contained counter-based generator (SplitMix64 sequence): the i-th
/// draw is a pure function of (seed, stream, i), so identical seeds give
/// identical samples on every platform and thread layout.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : base_(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1))) {}

    /// Uniform draw in the open interval (0, 1).
    double uniform(std::uint64_t index) const {
        const std::uint64_t bits = mix(base_ + 0x9E3779B97F4A7C15ULL * (index + 1));
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t index, std::uint64_t bound) const {
        return static_cast<std::uint64_t>(uniform(index) * static_cast<double>(bound));
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::uint64_t base_;
};

/// Inverse standard normal CDF (Wichura's AS 241, double precision).
inline double normal_ppf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal_ppf requires p in (0, 1)");
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                    4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                  1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                    2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                  4.2313330701600911252e1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double v;
    if (r <= 5.0) {
        r -= 1.6;
        v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
                 1.27045825245236838258e0) * r + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
               4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
                 1.48103976427480074590e-1) * r + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
               2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
                 2.65321895265761230930e-2) * r + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
               5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
                 7.86869131145613259100e-4) * r + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
               5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -v : v;
}

/// Latin hypercube sampler over R^M: one stratified uniform per stratum and
/// margin, shuffled per margin, pushed through the inverse normal CDF.
struct LhsSampler {
    int N = 50000;
    int M = 2;
    std::uint64_t seed = 0;
};

inline Eigen::MatrixXd lhs_sample(const LhsSampler& sampler) {
    if (sampler.N < 1 || sampler.M < 1) throw InvalidArgument("LHS needs N >= 1 and M >= 1");
    const int N = sampler.N, M = sampler.M;
    Eigen::MatrixXd X(N, M);
    std::vector<int> perm(static_cast<size_t>(N));
    for (int j = 0; j < M; ++j) {
        CounterRng shuffle(sampler.seed, 2 * static_cast<std::uint64_t>(j));
        CounterRng jitter(sampler.seed, 2 * static_cast<std::uint64_t>(j) + 1);
        for (int i = 0; i < N; ++i) perm[static_cast<size_t>(i)] = i;
        for (int i = N - 1; i >= 1; --i) {  // Fisher-Yates with the counter stream
            const int k = static_cast<int>(shuffle.below(static_cast<std::uint64_t>(i),
                                                         static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(k)]);
        }
        for (int i = 0; i < N; ++i) {
            const double u = (perm[static_cast<size_t>(i)] + jitter.uniform(static_cast<std::uint64_t>(i))) /
                             static_cast<double>(N);
            X(i, j) = normal_ppf(u);
        }
    }
    return X;
}

enum class McMode { FullFea, Surrogate };

/// Monte Carlo validation summary.  Compliance columns are NaN in surrogate
/// mode (the SRSM models the monitored displacement only).
struct McReport {
    double pf = 0.0;        ///< P[|u_B| < u0]
    double mu_B = 0.0, sigma_B = 0.0;  ///< signed displacement moments
    double mu_C = std::numeric_limits<double>::quiet_NaN();
    double sigma_C = std::numeric_limits<double>::quiet_NaN();
    double se_pf = 0.0, se_mu_B = 0.0, se_mu_C = 0.0;
    int n = 0;
    McMode mode = McMode::FullFea;
    int fea_failures = 0;
};

/// Validates a design against N field realizations.  Full-FEA mode solves
/// per sample; surrogate mode evaluates a fitted response surface.  Samples
/// evaluate in parallel; accumulation runs in fixed sample order.
inline McReport validate_design(const FeaSolver& solver, const KlModel& kl, double penal,
                                const Eigen::VectorXd& physical, double u0, const Eigen::MatrixXd& samples,
                                McMode mode, const ResponseSurface* surface = nullptr) {
    const int N = static_cast<int>(samples.rows());
    if (N < 1) throw InvalidArgument("empty sample matrix");
    if (samples.cols() != kl.M) throw InvalidArgument("sample dimension does not match KL order");
    if (mode == McMode::Surrogate && surface == nullptr)
        throw InvalidArgument("surrogate mode requires a fitted response surface");

    std::vector<double> uB(static_cast<size_t>(N), 0.0), C(static_cast<size_t>(N), 0.0);
    std::vector<std::uint8_t> failed(static_cast<size_t>(N), 0);

    if (mode == McMode::FullFea) {
        const int workers = thread_count();
        std::vector<FeaContext> ctxs;
        ctxs.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) ctxs.push_back(solver.make_context());
        parallel_for_workers(N, [&](int w, int i) {
            const Eigen::VectorXd e0 = kl.realize_modulus(samples.row(i).transpose());
            const Eigen::VectorXd moduli = simp_moduli(physical, penal, e0);
            try {
                FeaResult fea = solver.solve(moduli, ctxs[static_cast<size_t>(w)]);
                uB[static_cast<size_t>(i)] = fea.u_B;
                C[static_cast<size_t>(i)] = fea.compliance;
            } catch (const NumericalError&) {
                failed[static_cast<size_t>(i)] = 1;
            }
        });
    } else {
        parallel_for(N, [&](int i) {
            const Eigen::Vector2d a(samples(i, 0), samples(i, 1));
            uB[static_cast<size_t>(i)] = surface->value(a);
        });
    }

    McReport rep;
    rep.mode = mode;
    // Fixed-order streaming accumulation over the successful samples.
    long long ok = 0, fails = 0;
    double sum_uB = 0.0, sum_C = 0.0;
    for (int i = 0; i < N; ++i) {
        if (failed[static_cast<size_t>(i)]) continue;
        ++ok;
        sum_uB += uB[static_cast<size_t>(i)];
        sum_C += C[static_cast<size_t>(i)];
        if (std::abs(uB[static_cast<size_t>(i)]) < u0) ++fails;
    }
    rep.fea_failures = static_cast<int>(N - ok);
    if (ok == 0) throw NumericalError("all Monte Carlo samples failed to solve");
    const double dn = static_cast<double>(ok);
    rep.n = static_cast<int>(ok);
    rep.pf = static_cast<double>(fails) / dn;
    rep.mu_B = sum_uB / dn;
    double ss_uB = 0.0, ss_C = 0.0;
    for (int i = 0; i < N; ++i) {
        if (failed[static_cast<size_t>(i)]) continue;
        const double db = uB[static_cast<size_t>(i)] - rep.mu_B;
        ss_uB += db * db;
        if (mode == McMode::FullFea) {
            const double dc = C[static_cast<size_t>(i)] - sum_C / dn;
            ss_C += dc * dc;
        }
    }
    rep.sigma_B = std::sqrt(ss_uB / dn);
    if (mode == McMode::FullFea) {
        rep.mu_C = sum_C / dn;
        rep.sigma_C = std::sqrt(ss_C / dn);
        rep.se_mu_C = rep.sigma_C / std::sqrt(dn);
    }
    rep.se_pf = std::sqrt(rep.pf * (1.0 - rep.pf) / dn);
    rep.se_mu_B = rep.sigma_B / std::sqrt(dn);
    return rep;
}

} // namespace rrbto
