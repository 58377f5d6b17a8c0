#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rrbto/errors.hpp"

namespace rrbto {

/// A limit state g(psi) over standard normal space with analytic gradient.
/// Failure is g < 0.
struct LimitState {
    std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)> evaluate;
};

/// Outcome of the inverse reliability (PMA) search on the sphere |psi| = beta.
struct MppResult {
    Eigen::VectorXd psi;       ///< MPP, |psi| = beta to 1e-9
    double g = 0.0;            ///< performance measure g(psi*)
    int iterations = 0;
    bool converged = false;
    int conjugate_steps = 0;   ///< iterations that used the conjugate blend
};

/// Hybrid Mean Value search for min g(psi) s.t. |psi| = beta.
///
/// Advanced-mean-value steps psi <- -beta * grad g / |grad g| are taken while
/// the convexity indicator <n^k - n^{k-1}, n' - n^k> is non-negative (n' the
/// tentative steepest direction); when it turns negative the direction is the
/// normalized blend n' + n^k + n^{k-1}, which stabilizes concave performance
/// functions.  Converges when successive direction cosines reach 1 - 1e-8 or
/// the iterate moves less than tol.
inline MppResult hmv_search(const LimitState& limit_state, double beta, int dim,
                            const Eigen::VectorXd& start = Eigen::VectorXd(), double tol = 1e-4,
                            int max_iter = 100) {
    if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
    if (dim < 1) throw InvalidArgument("dimension must be >= 1");
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");

    Eigen::VectorXd psi;
    if (start.size() > 0) {
        if (start.size() != dim) throw InvalidArgument("warm-start dimension mismatch");
        const double nrm = start.norm();
        if (nrm > 0.0 && start.allFinite())
            psi = (beta / nrm) * start;
        else
            throw InvalidArgument("invalid warm-start point");
    } else {
        psi = Eigen::VectorXd::Zero(dim);
        psi[0] = -beta;  // deterministic default seed
    }

    MppResult result;
    Eigen::VectorXd n_prev, n_prev2;  // accepted directions n^k, n^{k-1}
    for (int k = 1; k <= max_iter; ++k) {
        result.iterations = k;
        auto [g, grad] = limit_state.evaluate(psi);
        if (!std::isfinite(g) || !grad.allFinite()) throw NumericalError("non-finite limit state evaluation");
        const double gn = grad.norm();
        if (gn == 0.0) throw NumericalError("stationary limit state: zero gradient at MPP iterate");

        Eigen::VectorXd n_tent = -grad / gn;  // steepest descent of g on the sphere
        Eigen::VectorXd n_next = n_tent;
        if (n_prev.size() > 0 && n_prev2.size() > 0) {
            const double indicator = (n_prev - n_prev2).dot(n_tent - n_prev);
            if (indicator < 0.0) {
                Eigen::VectorXd blend = n_tent + n_prev + n_prev2;
                const double bn = blend.norm();
                if (bn > 0.0) {
                    n_next = blend / bn;
                    ++result.conjugate_steps;
                }
            }
        }
        Eigen::VectorXd psi_next = beta * n_next;
        const double cosine = psi.dot(psi_next) / (beta * psi.norm());
        const double step = (psi_next - psi).norm();
        psi = psi_next;
        n_prev2 = n_prev;
        n_prev = n_next;
        if (cosine >= 1.0 - 1e-8 || step <= tol) {
            result.converged = true;
            break;
        }
    }
    auto [gf, gradf] = limit_state.evaluate(psi);
    result.psi = psi;
    result.g = gf;
    return result;
}

/// Performance measure at a converged MPP: the design is beta-reliable for
/// this limit state iff the value is >= 0.
inline double pma_constraint_value(const MppResult& mpp) {
    if (!mpp.converged) throw InvalidArgument("performance measure requested from an unconverged MPP");
    return mpp.g;
}

} // namespace rrbto
