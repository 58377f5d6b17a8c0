#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "rrbto/errors.hpp"

namespace rrbto {

/// Objective/constraint data for one MMA step, constraints in "<= 0" form.
struct ConstraintBundle {
    double objective = 0.0;
    Eigen::VectorXd objective_grad;
    Eigen::VectorXd constraints;       ///< m values
    Eigen::MatrixXd constraint_grads;  ///< n x m

    void validate(Eigen::Index n, Eigen::Index m) const {
        if (objective_grad.size() != n) throw InvalidArgument("objective gradient has wrong length");
        if (constraints.size() != m) throw InvalidArgument("constraint vector has wrong length");
        if (constraint_grads.rows() != n || constraint_grads.cols() != m)
            throw InvalidArgument("constraint gradient matrix has wrong shape");
        if (!std::isfinite(objective) || !objective_grad.allFinite() || !constraints.allFinite() ||
            !constraint_grads.allFinite())
            throw InvalidArgument("non-finite value in MMA inputs");
    }
};

/// History record of one MMA iteration.
struct MmaIterate {
    double objective = 0.0;
    Eigen::VectorXd constraints;
    double change = 0.0;  ///< max |x_new - x_old|
};

/// Method of Moving Asymptotes (Svanberg 1987).
///
/// Asymptote bookkeeping: initial span 0.5 of the variable range, shrink 0.7 /
/// grow 1.2 driven by the sign of successive design oscillations; move limit
/// 0.5 of the variable range.  The convex subproblem is solved in the dual via
/// a primal-dual interior point iteration driven down to epsilon =
/// 1e-9*sqrt(m+n), with the standard elastic variables (y, z) guarding
/// against infeasible linearizations.
class Mma {
public:
    Mma(Eigen::Index n, Eigen::Index m) : n_(n), m_(m) {
        if (n < 1 || m < 1) throw InvalidArgument("MMA needs at least one variable and one constraint");
        a_ = Eigen::VectorXd::Zero(m);
        c_ = Eigen::VectorXd::Constant(m, 1000.0);
        L_ = Eigen::VectorXd::Zero(n);
        U_ = Eigen::VectorXd::Zero(n);
        xold1_ = Eigen::VectorXd::Zero(n);
        xold2_ = Eigen::VectorXd::Zero(n);
    }

    int iteration() const { return iter_; }

    /// One MMA step: builds the separable convex subproblem at x and returns
    /// its solution, respecting box bounds intersected with move limits.
    Eigen::VectorXd step(const Eigen::VectorXd& x, const ConstraintBundle& bundle,
                         const Eigen::VectorXd& xmin, const Eigen::VectorXd& xmax) {
        if (x.size() != n_ || xmin.size() != n_ || xmax.size() != n_)
            throw InvalidArgument("design/bound vector has wrong length");
        bundle.validate(n_, m_);
        for (Eigen::Index i = 0; i < n_; ++i)
            if (!(xmin[i] <= x[i] && x[i] <= xmax[i] && xmin[i] <= xmax[i]))
                throw InvalidArgument("design not within box bounds");
        ++iter_;

        // Asymptote update.
        Eigen::ArrayXd range = (xmax - xmin).array();
        for (Eigen::Index i = 0; i < n_; ++i) {
            if (range[i] <= kFixedTol) {  // pinned variable: keep a dummy finite span
                L_[i] = x[i] - 1.0;
                U_[i] = x[i] + 1.0;
                continue;
            }
            if (iter_ < 3) {
                L_[i] = x[i] - kAsymInit * range[i];
                U_[i] = x[i] + kAsymInit * range[i];
            } else {
                const double osc = (x[i] - xold1_[i]) * (xold1_[i] - xold2_[i]);
                const double g = osc < 0.0 ? kAsymShrink : (osc > 0.0 ? kAsymGrow : 1.0);
                L_[i] = x[i] - g * (xold1_[i] - L_[i]);
                U_[i] = x[i] + g * (U_[i] - xold1_[i]);
                const double span = std::max(1e-5, range[i]);
                L_[i] = std::clamp(L_[i], x[i] - 100.0 * span, x[i] - 1e-5 * span);
                U_[i] = std::clamp(U_[i], x[i] + 1e-5 * span, x[i] + 100.0 * span);
            }
        }
        xold2_ = xold1_;
        xold1_ = x;

        // Subproblem bounds (box intersect move limit intersect asymptote margin).
        Eigen::VectorXd alpha(n_), beta(n_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            if (range[i] <= kFixedTol) {
                alpha[i] = beta[i] = xmin[i];
                continue;
            }
            alpha[i] = std::max({xmin[i], 0.9 * L_[i] + 0.1 * x[i], x[i] - kMoveLimit * range[i]});
            beta[i] = std::min({xmax[i], 0.9 * U_[i] + 0.1 * x[i], x[i] + kMoveLimit * range[i]});
        }

        // Separable approximation coefficients.
        Eigen::VectorXd p0(n_), q0(n_);
        Eigen::MatrixXd pij(n_, m_), qij(n_, m_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double Ux = U_[i] - x[i], xL = x[i] - L_[i];
            const double df = bundle.objective_grad[i];
            const double reg = 0.001 * std::abs(df) + 0.5 * kFeps / (U_[i] - L_[i]);
            p0[i] = Ux * Ux * (std::max(0.0, df) + reg);
            q0[i] = xL * xL * (std::max(0.0, -df) + reg);
            for (Eigen::Index j = 0; j < m_; ++j) {
                const double dg = bundle.constraint_grads(i, j);
                pij(i, j) = Ux * Ux * std::max(0.0, dg);
                qij(i, j) = xL * xL * std::max(0.0, -dg);
            }
            if (range[i] <= kFixedTol) {  // pinned variables do not enter the dual
                p0[i] = q0[i] = 0.0;
                pij.row(i).setZero();
                qij.row(i).setZero();
            }
        }
        Eigen::VectorXd b(m_);
        for (Eigen::Index j = 0; j < m_; ++j) {
            double acc = -bundle.constraints[j];
            for (Eigen::Index i = 0; i < n_; ++i)
                acc += pij(i, j) / (U_[i] - x[i]) + qij(i, j) / (x[i] - L_[i]);
            b[j] = acc;
        }

        return solve_dual(p0, q0, pij, qij, b, alpha, beta);
    }

    /// Runs MMA until max |delta x| <= tol or max_iter steps.
    /// The evaluator maps an in-bounds design to a ConstraintBundle.
    static std::pair<Eigen::VectorXd, std::vector<MmaIterate>> run_to_convergence(
        const Eigen::VectorXd& initial, const std::function<ConstraintBundle(const Eigen::VectorXd&)>& evaluate,
        const Eigen::VectorXd& xmin, const Eigen::VectorXd& xmax, double tol = 1e-3, int max_iter = 200) {
        Eigen::VectorXd x = initial;
        std::vector<MmaIterate> history;
        if (max_iter <= 0) return {x, history};
        Mma mma(initial.size(), 1);
        bool sized = false;
        for (int it = 0; it < max_iter; ++it) {
            ConstraintBundle bundle = evaluate(x);
            MmaIterate rec;
            rec.objective = bundle.objective;
            rec.constraints = bundle.constraints;
            if (bundle.constraints.size() == 0) {  // unconstrained: add a slack "-1 <= 0"
                bundle.constraints = Eigen::VectorXd::Constant(1, -1.0);
                bundle.constraint_grads = Eigen::MatrixXd::Zero(initial.size(), 1);
            }
            if (!sized) {
                mma = Mma(initial.size(), bundle.constraints.size());
                sized = true;
            }
            Eigen::VectorXd xnew = mma.step(x, bundle, xmin, xmax);
            rec.change = (xnew - x).cwiseAbs().maxCoeff();
            history.push_back(rec);
            x = xnew;
            if (rec.change <= tol) break;
        }
        return {x, history};
    }

private:
    // Dual variables maximize W(lam) subject to lam >= 0; primal x recovered
    // analytically per separable term and clamped to [alpha, beta].
    Eigen::VectorXd recover_x(const Eigen::VectorXd& lam, const Eigen::VectorXd& p0, const Eigen::VectorXd& q0,
                              const Eigen::MatrixXd& pij, const Eigen::MatrixXd& qij,
                              const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) const {
        Eigen::VectorXd x(n_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double pj = p0[i] + pij.row(i).dot(lam);
            const double qj = q0[i] + qij.row(i).dot(lam);
            const double sp = std::sqrt(pj), sq = std::sqrt(qj);
            const double xi = (sp + sq) > 0.0 ? (sp * L_[i] + sq * U_[i]) / (sp + sq) : alpha[i];
            x[i] = std::clamp(xi, alpha[i], beta[i]);
        }
        return x;
    }

    Eigen::VectorXd solve_dual(const Eigen::VectorXd& p0, const Eigen::VectorXd& q0, const Eigen::MatrixXd& pij,
                               const Eigen::MatrixXd& qij, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) const {
        Eigen::VectorXd lam = 0.5 * c_, mu = Eigen::VectorXd::Ones(m_);
        const double tol = 1e-9 * std::sqrt(static_cast<double>(m_ + n_));
        double epsi = 1.0;
        Eigen::VectorXd x;
        auto y_of = [&](const Eigen::VectorXd& l) { return (l - c_).cwiseMax(0.0); };
        auto z_of = [&](const Eigen::VectorXd& l) { return std::max(0.0, 10.0 * (l.dot(a_) - 1.0)); };
        while (epsi > tol) {
            double err = 1.0;
            int inner = 0;
            while (err > 0.9 * epsi && inner < 100) {
                ++inner;
                x = recover_x(lam, p0, q0, pij, qij, alpha, beta);
                const Eigen::VectorXd y = y_of(lam);
                const double z = z_of(lam);
                Eigen::VectorXd grad(m_);
                for (Eigen::Index j = 0; j < m_; ++j) {
                    double acc = -b[j] - a_[j] * z - y[j];
                    for (Eigen::Index i = 0; i < n_; ++i)
                        acc += pij(i, j) / (U_[i] - x[i]) + qij(i, j) / (x[i] - L_[i]);
                    grad[j] = -acc - epsi / lam[j];
                }
                // Dual Hessian with interior-point and elastic corrections.
                Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m_, m_);
                {
                    Eigen::MatrixXd PQ(n_, m_);
                    Eigen::VectorXd df2(n_);
                    for (Eigen::Index i = 0; i < n_; ++i) {
                        const double Ux = U_[i] - x[i], xL = x[i] - L_[i];
                        const double pj = p0[i] + pij.row(i).dot(lam);
                        const double qj = q0[i] + qij.row(i).dot(lam);
                        for (Eigen::Index j = 0; j < m_; ++j)
                            PQ(i, j) = pij(i, j) / (Ux * Ux) - qij(i, j) / (xL * xL);
                        if (pj + qj <= 0.0) {  // pinned variable: no dual curvature
                            df2[i] = 0.0;
                            continue;
                        }
                        df2[i] = -1.0 / (2.0 * pj / (Ux * Ux * Ux) + 2.0 * qj / (xL * xL * xL));
                        const double sp = std::sqrt(pj), sq = std::sqrt(qj);
                        const double xp = (sp * L_[i] + sq * U_[i]) / (sp + sq);
                        if (xp < alpha[i] || xp > beta[i]) df2[i] = 0.0;  // bound-active: x insensitive
                    }
                    hess = PQ.transpose() * df2.asDiagonal() * PQ;
                }
                double lamai = 0.0;
                for (Eigen::Index j = 0; j < m_; ++j) {
                    if (lam[j] < 0.0) lam[j] = 0.0;
                    lamai += lam[j] * a_[j];
                    if (lam[j] > c_[j]) hess(j, j) += -1.0;
                    hess(j, j) += -mu[j] / lam[j];
                }
                if (lamai > 0.0) hess -= 10.0 * a_ * a_.transpose();
                const double corr = std::min(1e-4 * hess.trace() / static_cast<double>(m_), -1e-7);
                hess.diagonal().array() += corr;

                Eigen::VectorXd s = hess.lu().solve(grad);
                Eigen::VectorXd smu(m_);
                for (Eigen::Index j = 0; j < m_; ++j) smu[j] = -mu[j] + epsi / lam[j] - s[j] * mu[j] / lam[j];
                double theta = 1.005;
                for (Eigen::Index j = 0; j < m_; ++j) {
                    theta = std::max(theta, -1.01 * s[j] / lam[j]);
                    theta = std::max(theta, -1.01 * smu[j] / mu[j]);
                }
                theta = 1.0 / theta;
                lam += theta * s;
                mu += theta * smu;
                if (!lam.allFinite() || !mu.allFinite())
                    throw NumericalError("MMA dual iteration diverged (non-finite multipliers)");

                x = recover_x(lam, p0, q0, pij, qij, alpha, beta);
                const Eigen::VectorXd y2 = y_of(lam);
                const double z2 = z_of(lam);
                err = 0.0;
                for (Eigen::Index j = 0; j < m_; ++j) {
                    double acc = -b[j] - a_[j] * z2 - y2[j] + mu[j];
                    for (Eigen::Index i = 0; i < n_; ++i)
                        acc += pij(i, j) / (U_[i] - x[i]) + qij(i, j) / (x[i] - L_[i]);
                    err = std::max(err, std::abs(acc));
                    err = std::max(err, std::abs(mu[j] * lam[j] - epsi));
                }
            }
            epsi *= 0.1;
        }
        return recover_x(lam, p0, q0, pij, qij, alpha, beta);
    }

    static constexpr double kAsymInit = 0.5;
    static constexpr double kAsymShrink = 0.7;
    static constexpr double kAsymGrow = 1.2;
    // Per-iteration cap on |delta x| as a fraction of the variable range.
    // Density objectives whose linearizations are only locally valid (the
    // compliance *variance* above all) blow up under the customary 0.5: a
    // half-range first step can disconnect the load path outright.
    static constexpr double kMoveLimit = 0.2;
    static constexpr double kFeps = 1e-6;
    static constexpr double kFixedTol = 1e-12;

    Eigen::Index n_, m_;
    int iter_ = 0;
    Eigen::VectorXd a_, c_;
    Eigen::VectorXd L_, U_, xold1_, xold2_;
};

} // namespace rrbto
