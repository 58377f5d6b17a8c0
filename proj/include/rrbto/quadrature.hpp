#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "rrbto/errors.hpp"
#include "rrbto/parallel.hpp"

namespace rrbto {

/// 1D quadrature rule for expectations under the standard normal measure.
struct Quad1D {
    Eigen::VectorXd nodes;    ///< symmetric about 0, ascending
    Eigen::VectorXd weights;  ///< sum to 1
};

/// 1D growth rule: number of points used by the level-l difference term.
enum class Growth {
    Linear,  ///< n_l = l (default)
    Odd,     ///< n_l = 2l - 1 (keeps the origin at every level)
};

inline int growth_points(Growth g, int level) { return g == Growth::Linear ? level : 2 * level - 1; }

/// Probabilists' Gauss-Hermite rule with n points: exact for polynomials of
/// degree <= 2n-1 under the standard normal measure.  Computed by
/// Golub-Welsch on the symmetric Jacobi matrix (off-diagonal sqrt(k)), then
/// symmetrized so paired nodes are exactly +/- equal and odd rules contain an
/// exact zero node.
inline Quad1D gauss_hermite(int n) {
    if (n < 1) throw InvalidArgument("quadrature rule needs at least one point");
    Quad1D rule;
    if (n == 1) {
        rule.nodes = Eigen::VectorXd::Zero(1);
        rule.weights = Eigen::VectorXd::Ones(1);
        return rule;
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigensolve did not converge");
    rule.nodes = es.eigenvalues();  // ascending
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;  // first-moment normalization mu_0 = 1
    }
    // Enforce exact symmetry.
    for (int i = 0; i < n / 2; ++i) {
        const int j = n - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    rule.weights /= rule.weights.sum();
    return rule;
}

/// Smolyak sparse quadrature grid over R^d for the standard normal measure.
struct SparseGrid {
    int dim = 0;
    int level = 0;
    Eigen::MatrixXd nodes;    ///< n x d, lexicographically sorted
    Eigen::VectorXd weights;  ///< may be negative; sum to 1

    int size() const { return static_cast<int>(weights.size()); }
};

/// Builds the level-l Smolyak grid: sum over multi-indices |l|_1 <= l + d - 1
/// of tensor products of 1D difference rules (Q_k - Q_{k-1}, Q_0 = 0), with
/// coinciding nodes merged.  Construction is deterministic; nodes come out in
/// lexicographic order.
inline SparseGrid smolyak(int d, int level, Growth growth = Growth::Linear) {
    if (d < 1) throw InvalidArgument("sparse grid dimension must be >= 1");
    if (level < 1) throw InvalidArgument("sparse grid level must be >= 1");

    std::vector<Quad1D> rules(static_cast<size_t>(level) + 1);
    for (int k = 1; k <= level; ++k) rules[static_cast<size_t>(k)] = gauss_hermite(growth_points(growth, k));

    std::map<std::vector<double>, double> acc;
    std::vector<int> ell(static_cast<size_t>(d), 1);
    // Enumerate multi-indices with components >= 1 and sum <= level + d - 1.
    const int max_sum = level + d - 1;
    auto process_multi_index = [&](const std::vector<int>& mi) {
        // Expand the product of differences: each axis picks Q_{l} (choice 0)
        // or -Q_{l-1} (choice 1, skipped when l - 1 == 0).
        for (int mask = 0; mask < (1 << d); ++mask) {
            double sign = 1.0;
            std::vector<const Quad1D*> axis(static_cast<size_t>(d));
            bool skip = false;
            for (int k = 0; k < d; ++k) {
                int lev = mi[static_cast<size_t>(k)];
                if (mask & (1 << k)) {
                    --lev;
                    if (lev == 0) {
                        skip = true;
                        break;
                    }
                    sign = -sign;
                }
                axis[static_cast<size_t>(k)] = &rules[static_cast<size_t>(lev)];
            }
            if (skip) continue;
            std::vector<int> idx(static_cast<size_t>(d), 0);
            while (true) {
                std::vector<double> pt(static_cast<size_t>(d));
                double w = sign;
                for (int k = 0; k < d; ++k) {
                    pt[static_cast<size_t>(k)] = axis[static_cast<size_t>(k)]->nodes[idx[static_cast<size_t>(k)]];
                    w *= axis[static_cast<size_t>(k)]->weights[idx[static_cast<size_t>(k)]];
                }
                acc[pt] += w;
                int k = d - 1;
                for (; k >= 0; --k) {
                    if (++idx[static_cast<size_t>(k)] < axis[static_cast<size_t>(k)]->nodes.size()) break;
                    idx[static_cast<size_t>(k)] = 0;
                }
                if (k < 0) break;
            }
        }
    };
    while (true) {
        int sum = 0;
        for (int v : ell) sum += v;
        if (sum <= max_sum) process_multi_index(ell);
        int k = d - 1;
        for (; k >= 0; --k) {
            if (++ell[static_cast<size_t>(k)] <= max_sum - (d - 1)) {
                bool feasible = true;
                int s = 0;
                for (int v : ell) s += v;
                if (s > max_sum) feasible = false;
                if (feasible) break;
            }
            ell[static_cast<size_t>(k)] = 1;
        }
        if (k < 0) break;
    }

    // On non-nested axes the difference construction can cancel an entire
    // sub-rule, leaving merged nodes with weight exactly 0.0 (e.g. the d = 1
    // grid telescopes to the plain rule plus dead interior nodes).  Dropping
    // them changes no quadrature sum and skips wasted model evaluations.
    Eigen::Index kept = 0;
    for (const auto& [pt, w] : acc)
        if (w != 0.0) ++kept;

    SparseGrid grid;
    grid.dim = d;
    grid.level = level;
    grid.nodes.resize(kept, d);
    grid.weights.resize(kept);
    Eigen::Index r = 0;
    for (const auto& [pt, w] : acc) {
        if (w == 0.0) continue;
        for (int k = 0; k < d; ++k) grid.nodes(r, k) = pt[static_cast<size_t>(k)];
        grid.weights[r] = w;
        ++r;
    }
    return grid;
}

/// Mean/variance of a scalar response over a grid, with design-gradients.
struct RobustMoments {
    double mean = 0.0;
    double variance = 0.0;      ///< clamped to >= 0
    double raw_variance = 0.0;  ///< pre-clamp value (can be slightly negative)
    bool variance_clamped = false;
    Eigen::VectorXd d_mean;      ///< empty when the evaluator returns no gradient
    Eigen::VectorXd d_variance;
};

/// Evaluator result at one grid node: response value and its design gradient
/// (leave the gradient empty to skip gradient accumulation).
struct NodeValue {
    double value = 0.0;
    Eigen::VectorXd grad;
};

/// Computes E[C] = sum w_i C_i, sigma^2 = sum w_i C_i^2 - E^2, and their
/// design derivatives.  Node evaluations run in parallel (the evaluator must
/// be pure up to per-worker scratch selected by the first argument); the
/// reduction runs in fixed node order, so results are bit-identical
/// regardless of thread count.  A variance below -1e-9 (possible with
/// negative Smolyak weights) sets variance_clamped as a structured warning;
/// the clamped value is 0.
inline RobustMoments robust_moments(const SparseGrid& grid,
                                    const std::function<NodeValue(int, const Eigen::VectorXd&)>& evaluate) {
    const int n = grid.size();
    if (n == 0) throw InvalidArgument("empty quadrature grid");
    std::vector<NodeValue> at(static_cast<size_t>(n));
    parallel_for_workers(n, [&](int w, int i) { at[static_cast<size_t>(i)] = evaluate(w, grid.nodes.row(i).transpose()); });

    RobustMoments m;
    double mean = 0.0, second = 0.0;
    for (int i = 0; i < n; ++i) {
        mean += grid.weights[i] * at[static_cast<size_t>(i)].value;
        second += grid.weights[i] * at[static_cast<size_t>(i)].value * at[static_cast<size_t>(i)].value;
    }
    m.mean = mean;
    m.raw_variance = second - mean * mean;
    m.variance = m.raw_variance;
    if (m.variance < 0.0) {
        m.variance_clamped = m.raw_variance < -1e-9;
        m.variance = 0.0;
    }

    const Eigen::Index glen = at[0].grad.size();
    bool with_grad = glen > 0;
    for (int i = 0; i < n; ++i)
        if (at[static_cast<size_t>(i)].grad.size() != glen)
            throw InvalidArgument("inconsistent gradient lengths across grid nodes");
    if (with_grad) {
        m.d_mean = Eigen::VectorXd::Zero(glen);
        m.d_variance = Eigen::VectorXd::Zero(glen);
        for (int i = 0; i < n; ++i) {
            const auto& nv = at[static_cast<size_t>(i)];
            m.d_mean += grid.weights[i] * nv.grad;
            m.d_variance += 2.0 * grid.weights[i] * nv.value * nv.grad;
        }
        m.d_variance -= 2.0 * mean * m.d_mean;
    }
    return m;
}

/// kappa_1 * mean + kappa_2 * sigma and its design gradient.  Near-zero
/// variance is guarded by sqrt(sigma^2 + 1e-12) in the gradient denominator.
struct RobustObjective {
    double value = 0.0;
    Eigen::VectorXd grad;
};

inline RobustObjective robust_objective_gradient(const RobustMoments& m, double kappa1, double kappa2) {
    if (!(kappa1 >= 0.0 && kappa2 >= 0.0)) throw InvalidArgument("kappa weights must be non-negative");
    RobustObjective out;
    const double sigma = std::sqrt(m.variance);
    out.value = kappa1 * m.mean + kappa2 * sigma;
    if (m.d_mean.size() > 0) {
        out.grad = kappa1 * m.d_mean + (kappa2 / (2.0 * std::sqrt(m.variance + 1e-12))) * m.d_variance;
    }
    return out;
}

} // namespace rrbto
