#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rrbto/config.hpp"
#include "rrbto/io.hpp"
#include "rrbto/monte_carlo.hpp"
#include "rrbto/sora.hpp"

namespace rrbto {

/// Everything produced by one (beta, epsilon) optimization: the SORA result,
/// the Monte Carlo validations, and the metrics row derived from them.
struct RunArtifacts {
    double beta = 0.0;
    double epsilon = 0.0;
    double kappa1 = 0.0, kappa2 = 0.0;
    SoraResult sora;
    std::optional<McReport> full;  ///< full-FEA validation (absent in surrogate-only mode)
    McReport surrogate;
    CsvRow row;
};

/// Runs configurations end to end.  Pure runs (epsilon = 1 or 0) double as the
/// normalization pre-runs; their results are cached per beta so a sweep pays
/// for them once, and mixed-epsilon runs derive kappa_1, kappa_2 from the
/// cache (or from explicitly configured constants).
class Driver {
public:
    explicit Driver(RunSpec spec) : spec_(std::move(spec)) {}

    const RunSpec& spec() const { return spec_; }

    /// Stable artifact prefix for one run, e.g. "cantilever_b1_e0.9".
    std::string basename(double beta, double epsilon) const {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s_b%g_e%g", spec_.benchmark.c_str(), beta, epsilon);
        return buf;
    }

    const RunArtifacts& run_single(double beta, double epsilon, TraceLog& log) {
        PerBeta& pb = cache_[key(beta)];
        if (epsilon == 1.0) {
            if (!pb.eps1) pb.eps1 = execute(beta, 1.0, 1.0, 0.0, log);
            return *pb.eps1;
        }
        if (epsilon == 0.0) {
            if (!pb.eps0) pb.eps0 = execute(beta, 0.0, 0.0, 1.0, log);
            return *pb.eps0;
        }
        const auto [mu_star, sigma_star] = normalizers(beta, log);
        pb.mixed[epsilon] = execute(beta, epsilon, epsilon / mu_star, (1.0 - epsilon) / sigma_star, log);
        return pb.mixed[epsilon];
    }

    /// mu* (mean at the pure-sigma optimum) and sigma* (std at the pure-mu
    /// optimum) for one beta, from config or from cached pre-runs.
    std::pair<double, double> normalizers(double beta, TraceLog& log) {
        if (spec_.config.mu_star && spec_.config.sigma_star)
            return {*spec_.config.mu_star, *spec_.config.sigma_star};
        PerBeta& pb = cache_[key(beta)];
        if (!pb.eps1) pb.eps1 = execute(beta, 1.0, 1.0, 0.0, log);
        if (!pb.eps0) pb.eps0 = execute(beta, 0.0, 0.0, 1.0, log);
        const double mu_star = pb.eps0->sora.moments.mean;
        const double sigma_star = std::sqrt(pb.eps1->sora.moments.variance);
        if (!(mu_star > 0.0) || !(sigma_star > 0.0))
            throw NumericalError("degenerate normalization constants from pre-runs");
        return {mu_star, sigma_star};
    }

    /// Full sweep in list order; each (beta, epsilon) is emitted exactly once
    /// even when it also served as a pre-run.
    std::vector<CsvRow> sweep(TraceLog& log, const std::function<void(const RunArtifacts&)>& on_run = {}) {
        std::vector<CsvRow> rows;
        for (double beta : spec_.beta_list)
            for (double epsilon : spec_.epsilon_list) {
                const RunArtifacts& art = run_single(beta, epsilon, log);
                rows.push_back(art.row);
                if (on_run) on_run(art);
            }
        return rows;
    }

private:
    struct PerBeta {
        std::optional<RunArtifacts> eps1, eps0;
        std::map<double, RunArtifacts> mixed;
    };

    static long long key(double beta) { return std::llround(beta * 1e9); }

    RunArtifacts execute(double beta, double epsilon, double kappa1, double kappa2, TraceLog& log) {
        RrbtoConfig cfg = spec_.config;
        cfg.beta = beta;
        cfg.epsilon = epsilon;
        {
            std::ostringstream os;
            os << "run beta=" << beta << " epsilon=" << epsilon << " kappa=(" << kappa1 << ","
               << kappa2 << ")";
            log.line(os.str());
        }
        RrbtoEngine engine(cfg);
        RunArtifacts art;
        art.beta = beta;
        art.epsilon = epsilon;
        art.kappa1 = kappa1;
        art.kappa2 = kappa2;
        art.sora = engine.run(kappa1, kappa2);
        for (size_t i = 0; i < art.sora.trace.loops.size(); ++i) {
            const SoraLoopRecord& r = art.sora.trace.loops[i];
            std::ostringstream os;
            os << "  loop " << (i + 1) << ": mma_iters=" << r.mma_iterations << " objective="
               << format_full(r.objective) << " g_mpp=" << format_full(r.performance)
               << " mpp_shift=" << format_full(r.mpp_shift)
               << (r.mpp_converged ? "" : " (mpp-search-hit-budget)");
            log.line(os.str());
        }

        LhsSampler sampler;
        sampler.N = spec_.mc_samples;
        sampler.M = cfg.kl.M;
        sampler.seed = spec_.mc_seed;
        const Eigen::MatrixXd samples = lhs_sample(sampler);

        art.surrogate = validate_design(engine.solver(), engine.kl(), cfg.penal, art.sora.physical,
                                        cfg.problem.u0, samples, McMode::Surrogate, &art.sora.surface);
        if (spec_.mc_mode == McMode::FullFea)
            art.full = validate_design(engine.solver(), engine.kl(), cfg.penal, art.sora.physical,
                                       cfg.problem.u0, samples, McMode::FullFea);

        CsvRow& row = art.row;
        row.beta = beta;
        row.expected_Pf = normal_cdf(-beta);
        row.epsilon = epsilon;
        if (art.full) {
            row.muC = art.full->mu_C;
            row.sigmaC = art.full->sigma_C;
            row.muB = art.full->mu_B;
            row.sigmaB = art.full->sigma_B;
            row.Pf_mcs = art.full->pf;
        } else {
            row.muC = art.sora.moments.mean;
            row.sigmaC = std::sqrt(art.sora.moments.variance);
            row.muB = art.surrogate.mu_B;
            row.sigmaB = art.surrogate.sigma_B;
            row.Pf_mcs = art.surrogate.pf;
        }
        row.muB_srsm = art.surrogate.mu_B;
        row.sigmaB_srsm = art.surrogate.sigma_B;
        row.loops = static_cast<int>(art.sora.trace.loops.size());
        row.converged = art.sora.trace.converged;
        {
            std::ostringstream os;
            os << "  done: loops=" << row.loops << (row.converged ? "" : " (sora-hit-budget)")
               << " muC=" << format_full(row.muC) << " sigmaC=" << format_full(row.sigmaC)
               << " muB=" << format_full(row.muB) << " Pf=" << format_full(row.Pf_mcs);
            log.line(os.str());
        }
        return art;
    }

    RunSpec spec_;
    std::map<long long, PerBeta> cache_;
};

}  // namespace rrbto
