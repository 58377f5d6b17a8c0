#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "rrbto/errors.hpp"

namespace rrbto {

/// Degree-3 Hermite chaos basis in two standard normal variables, in the
/// fixed order [1, a1, a2, a1^2-1, a2^2-1, a1*a2, a1^3-3a1, a2^3-3a2,
/// a1*a2^2-a1, a1^2*a2-a2].  All non-constant members are zero-mean and the
/// set is orthogonal under the bivariate standard normal measure.
namespace hermite2 {

constexpr int kBasisSize = 10;

inline Eigen::Matrix<double, kBasisSize, 1> values(double a1, double a2) {
    Eigen::Matrix<double, kBasisSize, 1> h;
    h << 1.0, a1, a2, a1 * a1 - 1.0, a2 * a2 - 1.0, a1 * a2, a1 * a1 * a1 - 3.0 * a1,
        a2 * a2 * a2 - 3.0 * a2, a1 * a2 * a2 - a1, a1 * a1 * a2 - a2;
    return h;
}

inline Eigen::Matrix<double, kBasisSize, 2> gradients(double a1, double a2) {
    Eigen::Matrix<double, kBasisSize, 2> g;
    g << 0.0, 0.0,
        1.0, 0.0,
        0.0, 1.0,
        2.0 * a1, 0.0,
        0.0, 2.0 * a2,
        a2, a1,
        3.0 * a1 * a1 - 3.0, 0.0,
        0.0, 3.0 * a2 * a2 - 3.0,
        a2 * a2 - 1.0, 2.0 * a1 * a2,
        2.0 * a1 * a2, a1 * a1 - 1.0;
    return g;
}

} // namespace hermite2

/// The 17 regression points for the (n = 2, p = 3) stochastic response
/// surface, per the high-probability-point heuristic: candidates are the
/// Cartesian square of {0, +-r1, +-r2} with r = sqrt(3 -+ sqrt(6)) the roots
/// of He4, ranked by joint standard-normal density (squared radius
/// ascending) with a lexicographic tie-break, keeping the top 17.
inline Eigen::Matrix<double, 17, 2> collocation_points(int n = 2, int p = 3) {
    if (n != 2 || p != 3) throw InvalidArgument("collocation rule is implemented for n = 2, p = 3 only");
    const double r1 = std::sqrt(3.0 - std::sqrt(6.0));
    const double r2 = std::sqrt(3.0 + std::sqrt(6.0));
    const double axis[5] = {0.0, r1, -r1, r2, -r2};
    struct Cand {
        double x, y, rr;
    };
    std::vector<Cand> cands;
    cands.reserve(25);
    for (double vx : axis)
        for (double vy : axis) cands.push_back({vx, vy, vx * vx + vy * vy});
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (std::abs(a.rr - b.rr) > 1e-12) return a.rr < b.rr;
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    });
    Eigen::Matrix<double, 17, 2> pts;
    for (int i = 0; i < 17; ++i) {
        pts(i, 0) = cands[static_cast<size_t>(i)].x;
        pts(i, 1) = cands[static_cast<size_t>(i)].y;
    }
    return pts;
}

/// Fitted degree-3 Hermite chaos surrogate z(alpha) for a scalar response.
struct ResponseSurface {
    Eigen::Matrix<double, hermite2::kBasisSize, 1> coef = Eigen::Matrix<double, hermite2::kBasisSize, 1>::Zero();
    double residual_rms = 0.0;
    double condition = 0.0;  ///< design-matrix condition number from the fit

    double value(const Eigen::Vector2d& alpha) const {
        return hermite2::values(alpha[0], alpha[1]).dot(coef);
    }

    Eigen::Vector2d gradient(const Eigen::Vector2d& alpha) const {
        return hermite2::gradients(alpha[0], alpha[1]).transpose() * coef;
    }

    /// Mean of z under standard normal inputs: only the constant term survives.
    double mean() const { return coef[0]; }
};

/// Least-squares fit of the 10 chaos coefficients to observations at >= 10
/// points.  Throws on a rank-deficient design matrix; exact (to round-off)
/// when the observations come from a polynomial inside the basis span.
inline ResponseSurface fit_response_surface(const Eigen::MatrixXd& points, const Eigen::VectorXd& observations) {
    if (points.cols() != 2) throw InvalidArgument("collocation points must be 2D");
    if (points.rows() != observations.size()) throw InvalidArgument("point/observation count mismatch");
    if (points.rows() < hermite2::kBasisSize)
        throw InvalidArgument("need at least 10 points to fit the 10-term basis");
    if (!observations.allFinite()) throw InvalidArgument("non-finite observation");

    Eigen::MatrixXd A(points.rows(), hermite2::kBasisSize);
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        A.row(i) = hermite2::values(points(i, 0), points(i, 1)).transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()[0];
    const double smin = svd.singularValues()[svd.singularValues().size() - 1];
    if (!(smin > smax * 1e-10))
        throw NumericalError("rank-deficient collocation design matrix (broken point ranking?)");

    ResponseSurface rs;
    rs.coef = svd.solve(observations);
    rs.condition = smax / smin;
    rs.residual_rms = std::sqrt((A * rs.coef - observations).squaredNorm() /
                                static_cast<double>(points.rows()));
    return rs;
}

} // namespace rrbto
