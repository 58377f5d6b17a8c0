#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rrbto/errors.hpp"
#include "rrbto/fem.hpp"
#include "rrbto/filter.hpp"
#include "rrbto/mma.hpp"
#include "rrbto/parallel.hpp"
#include "rrbto/quadrature.hpp"
#include "rrbto/random_field.hpp"
#include "rrbto/reliability.hpp"
#include "rrbto/srsm.hpp"

namespace rrbto {

/// Random-field settings: correlation lengths are interpreted on the physical
/// mesh (element lengths) by default, or on the unit square per axis when
/// normalized_domain is set.
struct KlSettings {
    double l1 = 0.6, l2 = 0.6;
    bool normalized_domain = false;
    int M = 2;              ///< truncation order
    double a = 1.0, b = 1.5;  ///< marginal modulus bounds
    int n_quad = 512;       ///< Nystrom points per axis
};

/// Full configuration of one robust reliability-based optimization run.
struct RrbtoConfig {
    ProblemDef problem;
    KlSettings kl;
    double beta = 1.0;
    double epsilon = 1.0;
    double penal = 3.0;
    double rho_min = 0.001;
    double r_min = 1.5;
    int sg_level = 4;
    Growth sg_growth = Growth::Linear;
    double d_mma = 1e-3;   ///< MMA design-change tolerance
    double d_mpp = 1e-3;   ///< SORA MPP-shift tolerance
    int n_mma = 200;
    int n_sora = 20;
    std::optional<double> mu_star;     ///< normalization constants; recomputed
    std::optional<double> sigma_star;  ///< from pre-runs when unset

    void validate() const {
        problem.validate();
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon must be in [0, 1]");
        if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
        if (!(penal >= 1.0)) throw InvalidArgument("penal must be >= 1");
        if (!(rho_min > 0.0 && rho_min < 1.0)) throw InvalidArgument("rho_min must be in (0, 1)");
        if (!(r_min > 0.0)) throw InvalidArgument("r_min must be positive");
        if (sg_level < 1) throw InvalidArgument("sparse grid level must be >= 1");
        if (n_mma < 1 || n_sora < 1) throw InvalidArgument("iteration budgets must be >= 1");
        if (!(d_mma > 0.0 && d_mpp > 0.0)) throw InvalidArgument("tolerances must be positive");
        if (kl.M != 2)
            throw InvalidArgument("KL truncation order must be 2: the response-surface stage is built for two random variables");
        if (!(kl.a < kl.b)) throw InvalidArgument("marginal bounds must satisfy a < b");
    }
};

/// One SORA loop: the DTO solution, the MPP found at it, and diagnostics.
struct SoraLoopRecord {
    Eigen::VectorXd design;          ///< converged DTO design of this loop
    Eigen::VectorXd xi_star;         ///< MPP after this loop's IRA
    double performance = 0.0;        ///< g at the MPP (surrogate)
    double objective = 0.0;          ///< robust objective at the last DTO iterate
    int mma_iterations = 0;
    double mpp_shift = 0.0;          ///< max |xi* - xi*_prev|
    bool mpp_converged = false;
    bool warm_started = false;       ///< DTO started from the previous loop's design
};

struct SoraTrace {
    std::vector<SoraLoopRecord> loops;
    bool converged = false;
};

/// Final artifact of a SORA run.
struct SoraResult {
    Eigen::VectorXd design;     ///< design densities
    Eigen::VectorXd physical;   ///< filtered densities
    SoraTrace trace;
    ResponseSurface surface;    ///< SRSM fitted at the final design
    RobustMoments moments;      ///< sparse-grid compliance moments at the final design
    Eigen::VectorXd xi_star;    ///< final MPP
};

/// Couples FEA, filtering, the random field, sparse-grid moments, the SRSM
/// surrogate, and HMV inverse reliability into the decoupled SORA iteration.
/// The engine is immutable configuration plus per-worker solver scratch; one
/// engine instance serves one optimization run at a time.
class RrbtoEngine {
public:
    explicit RrbtoEngine(const RrbtoConfig& config)
        : cfg_(config),
          solver_(config.problem),
          filter_(config.problem.nelx, config.problem.nely, config.r_min),
          grid_(smolyak(config.kl.M, config.sg_level, config.sg_growth)),
          colloc_(collocation_points()) {
        cfg_.validate();
        CovarianceSpec cov;
        cov.l1 = cfg_.kl.l1;
        cov.l2 = cfg_.kl.l2;
        cov.L1 = cfg_.kl.normalized_domain ? 1.0 : static_cast<double>(cfg_.problem.nelx);
        cov.L2 = cfg_.kl.normalized_domain ? 1.0 : static_cast<double>(cfg_.problem.nely);
        kl_ = build_kl_2d(cov, cfg_.problem.nelx, cfg_.problem.nely, cfg_.kl.M, cfg_.kl.a, cfg_.kl.b,
                          cfg_.kl.n_quad);
        const int workers = thread_count();
        for (int w = 0; w < workers; ++w) ctx_.push_back(solver_.make_context());
    }

    const RrbtoConfig& config() const { return cfg_; }
    const FeaSolver& solver() const { return solver_; }
    const FilterKernel& filter() const { return filter_; }
    const KlModel& kl() const { return kl_; }
    const SparseGrid& grid() const { return grid_; }

    Eigen::VectorXd initial_design() const {
        const int n = cfg_.problem.n_elems();
        Eigen::VectorXd x = Eigen::VectorXd::Constant(n, cfg_.problem.gamma);
        apply_passive(x);
        return x;
    }

    Eigen::VectorXd lower_bounds() const {
        return Eigen::VectorXd::Constant(cfg_.problem.n_elems(), cfg_.rho_min);
    }

    Eigen::VectorXd upper_bounds() const {
        const int n = cfg_.problem.n_elems();
        Eigen::VectorXd ub = Eigen::VectorXd::Ones(n);
        if (!cfg_.problem.passive.empty())
            for (int e = 0; e < n; ++e)
                if (cfg_.problem.passive[static_cast<size_t>(e)]) ub[e] = cfg_.rho_min;
        return ub;
    }

    /// Sparse-grid compliance moments (with design gradients when
    /// with_gradients) at a physical density field.
    RobustMoments moments_at(const Eigen::VectorXd& physical, bool with_gradients) const {
        return robust_moments(grid_, [&](int w, const Eigen::VectorXd& xi) {
            NodeValue nv;
            const Eigen::VectorXd e0 = kl_.realize_modulus(xi);
            const Eigen::VectorXd moduli = simp_moduli(physical, cfg_.penal, e0);
            FeaResult fea = solver_.solve(moduli, ctx_[static_cast<size_t>(w)]);
            nv.value = fea.compliance;
            if (with_gradients)
                nv.grad = compliance_sensitivity(solver_, e0, physical, cfg_.penal, fea.u);
            return nv;
        });
    }

    /// Eq.-(14)-style deterministic bundle: robust objective over the sparse
    /// grid plus volume and limit-state constraints, the latter evaluated at
    /// the fixed MPP realization xi_star.  All gradients are back-propagated
    /// through the density filter.  Constraint order: [volume, limit state].
    ConstraintBundle dto_bundle(const Eigen::VectorXd& rho, const Eigen::VectorXd& xi_star, double kappa1,
                                double kappa2) const {
        const int n = cfg_.problem.n_elems();
        const Eigen::VectorXd phys = filter_.apply(rho);
        RobustMoments mom = moments_at(phys, true);
        RobustObjective obj = robust_objective_gradient(mom, kappa1, kappa2);

        ConstraintBundle bundle;
        bundle.objective = obj.value;
        bundle.objective_grad = filter_.backpropagate(obj.grad);
        bundle.constraints.resize(2);
        bundle.constraint_grads.resize(n, 2);

        const double v0_gamma = static_cast<double>(n) * cfg_.problem.gamma;
        bundle.constraints[0] = phys.sum() / v0_gamma - 1.0;
        bundle.constraint_grads.col(0) =
            filter_.backpropagate(Eigen::VectorXd::Constant(n, 1.0 / v0_gamma));

        const Eigen::VectorXd e0 = kl_.realize_modulus(xi_star);
        const Eigen::VectorXd moduli = simp_moduli(phys, cfg_.penal, e0);
        Eigen::VectorXd lambda;
        FeaResult fea = solver_.solve_with_adjoint(moduli, ctx_[0], lambda);
        const double sign = fea.u_B >= 0.0 ? 1.0 : -1.0;
        bundle.constraints[1] = (cfg_.problem.u0 - std::abs(fea.u_B)) / cfg_.problem.u0;
        const Eigen::VectorXd duB = displacement_sensitivity(solver_, e0, phys, cfg_.penal, fea.u, lambda);
        bundle.constraint_grads.col(1) = filter_.backpropagate((-sign / cfg_.problem.u0) * duB);
        return bundle;
    }

    /// Fits the SRSM u_B surrogate at a fixed physical density (17 FEA solves).
    ResponseSurface fit_surface(const Eigen::VectorXd& physical) const {
        Eigen::VectorXd obs(colloc_.rows());
        parallel_for_workers(static_cast<int>(colloc_.rows()), [&](int w, int i) {
            const Eigen::VectorXd e0 = kl_.realize_modulus(colloc_.row(i).transpose());
            const Eigen::VectorXd moduli = simp_moduli(physical, cfg_.penal, e0);
            obs[i] = solver_.solve(moduli, ctx_[static_cast<size_t>(w)]).u_B;
        });
        return fit_response_surface(colloc_, obs);
    }

    /// Limit state g = |z(psi)| - u0 through a fitted surrogate.
    LimitState surrogate_limit_state(const ResponseSurface& surface) const {
        const double u0 = cfg_.problem.u0;
        return LimitState{[surface, u0](const Eigen::VectorXd& psi) {
            const Eigen::Vector2d a(psi[0], psi[1]);
            const double z = surface.value(a);
            const double sign = z >= 0.0 ? 1.0 : -1.0;
            Eigen::VectorXd grad = sign * surface.gradient(a);
            return std::make_pair(std::abs(z) - u0, grad);
        }};
    }

    /// Runs the decoupled SORA iteration with explicit robust weights.
    /// kappa1/kappa2 are the resolved kappa_1, kappa_2 of Eq. (14)'s
    /// objective (callers derive them from epsilon and the normalization
    /// constants, or pass (1,0)/(0,1) for the pure pre-runs).
    SoraResult run(double kappa1, double kappa2) const {
        const Eigen::VectorXd xmin = lower_bounds(), xmax = upper_bounds();
        Eigen::VectorXd x = initial_design();
        Eigen::VectorXd xi = Eigen::VectorXd::Zero(kl_.M);  // first-loop MPP: mean field
        Eigen::VectorXd psi_warm;

        SoraResult result;
        for (int loop = 1; loop <= cfg_.n_sora; ++loop) {
            auto evaluator = [&](const Eigen::VectorXd& rho) { return dto_bundle(rho, xi, kappa1, kappa2); };
            auto [xnew, history] =
                Mma::run_to_convergence(x, evaluator, xmin, xmax, cfg_.d_mma, cfg_.n_mma);
            SoraLoopRecord rec;
            rec.warm_started = loop > 1;
            x = xnew;
            apply_passive(x);

            const Eigen::VectorXd phys = filter_.apply(x);
            ResponseSurface surface = fit_surface(phys);
            MppResult mpp = hmv_search(surrogate_limit_state(surface), cfg_.beta, kl_.M, psi_warm);

            rec.design = x;
            rec.xi_star = mpp.psi;  // identity Rosenblatt transform: xi* = psi*
            rec.performance = mpp.g;
            rec.objective = history.empty() ? 0.0 : history.back().objective;
            rec.mma_iterations = static_cast<int>(history.size());
            rec.mpp_shift = (mpp.psi - xi).cwiseAbs().maxCoeff();
            rec.mpp_converged = mpp.converged;
            result.trace.loops.push_back(rec);

            xi = mpp.psi;
            psi_warm = mpp.psi;
            result.surface = surface;
            if (rec.mpp_shift <= cfg_.d_mpp) {
                result.trace.converged = true;
                break;
            }
        }
        result.design = x;
        result.physical = filter_.apply(x);
        result.moments = moments_at(result.physical, false);
        result.xi_star = xi;
        return result;
    }

    /// Normalization pre-runs: pure sigma minimization yields mu*, pure mu
    /// minimization yields sigma* (the worst value of each moment across the
    /// two single-objective optima).
    std::pair<double, double> normalization_constants() const {
        SoraResult sigma_run = run(0.0, 1.0);
        SoraResult mu_run = run(1.0, 0.0);
        const double mu_star = sigma_run.moments.mean;
        const double sigma_star = std::sqrt(mu_run.moments.variance);
        if (!(mu_star > 0.0) || !(sigma_star > 0.0))
            throw NumericalError("degenerate normalization constants");
        return {mu_star, sigma_star};
    }

    /// Resolved robust weights for this config's epsilon.  Pure runs need no
    /// normalization constants (scaling does not move the minimizer); mixed
    /// weights require mu_star/sigma_star in the config.
    std::pair<double, double> kappas() const {
        if (cfg_.epsilon == 1.0) return {1.0, 0.0};
        if (cfg_.epsilon == 0.0) return {0.0, 1.0};
        if (!cfg_.mu_star || !cfg_.sigma_star)
            throw ConfigError("mu_star/sigma_star required for 0 < epsilon < 1 (run normalization pre-runs)");
        return {cfg_.epsilon / *cfg_.mu_star, (1.0 - cfg_.epsilon) / *cfg_.sigma_star};
    }

    /// Per-worker FEA context for callers that run their own solve loops.
    FeaContext& context(int worker) const { return ctx_[static_cast<size_t>(worker)]; }

private:
    void apply_passive(Eigen::VectorXd& x) const {
        if (cfg_.problem.passive.empty()) return;
        for (int e = 0; e < cfg_.problem.n_elems(); ++e)
            if (cfg_.problem.passive[static_cast<size_t>(e)]) x[e] = cfg_.rho_min;
    }

    RrbtoConfig cfg_;
    FeaSolver solver_;
    FilterKernel filter_;
    SparseGrid grid_;
    Eigen::Matrix<double, 17, 2> colloc_;
    KlModel kl_;
    mutable std::vector<FeaContext> ctx_;
};

} // namespace rrbto
