#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rrbto/errors.hpp"

namespace rrbto {

/// Standard normal CDF.
inline double normal_cdf(double y) { return 0.5 * std::erfc(-y / std::sqrt(2.0)); }

/// Separable exponential covariance exp(-|dx|/l1) * exp(-|dy|/l2) on the
/// rectangle [0, L1] x [0, L2].  Correlation lengths share the units of the
/// domain extents.
struct CovarianceSpec {
    double l1 = 0.6, l2 = 0.6;
    double L1 = 1.0, L2 = 1.0;

    void validate() const {
        if (!(l1 > 0.0 && l2 > 0.0)) throw InvalidArgument("correlation lengths must be positive");
        if (!(L1 > 0.0 && L2 > 0.0)) throw InvalidArgument("domain extents must be positive");
    }
};

/// Eigenpairs of the 1D exponential-kernel Fredholm problem on [0, L],
/// discretized by the Nystrom method on a midpoint rule.  Eigenvalues are
/// Richardson-extrapolated from the n and n/2 point grids (midpoint error is
/// O(h^2)); eigenfunctions are L2-normalized under the fine-grid quadrature.
class Kl1D {
public:
    Kl1D(double L, double l, int n_modes, int n_quad = 512) : L_(L), l_(l) {
        if (!(L > 0.0 && l > 0.0)) throw InvalidArgument("KL domain and correlation length must be positive");
        if (n_modes < 1) throw InvalidArgument("n_modes must be >= 1");
        if (n_quad < 256) throw InvalidArgument("Nystrom rule needs at least 256 quadrature points");
        if (n_quad % 2 != 0) throw InvalidArgument("Nystrom point count must be even");
        if (n_modes > n_quad / 4) throw InvalidArgument("too many modes for the quadrature resolution");

        Eigen::VectorXd coarse = grid_eigenvalues(L, l, n_quad / 2, n_modes, nullptr, nullptr);
        Eigen::VectorXd fine = grid_eigenvalues(L, l, n_quad, n_modes, &vecs_, &pts_);
        h_ = L / n_quad;
        raw_ = fine;
        lam_.resize(n_modes);
        for (int m = 0; m < n_modes; ++m) {
            lam_[m] = (4.0 * fine[m] - coarse[m]) / 3.0;
            if (!(lam_[m] > 0.0) || !std::isfinite(lam_[m]))
                throw NumericalError("KL eigenvalue " + std::to_string(m + 1) + " is not positive");
        }
    }

    int n_modes() const { return static_cast<int>(lam_.size()); }
    double domain_length() const { return L_; }
    /// Extrapolated eigenvalue of mode m (descending order, 0-based).
    double eigenvalue(int m) const { return lam_[m]; }
    /// Discrete eigenfunction values at the quadrature points (column m).
    const Eigen::MatrixXd& eigenfunctions() const { return vecs_; }
    const Eigen::VectorXd& quad_points() const { return pts_; }
    double quad_weight() const { return h_; }

    /// Nystrom extension of eigenfunction m to an arbitrary point x in [0, L].
    double eigenfunction_at(int m, double x) const {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < pts_.size(); ++j)
            acc += std::exp(-std::abs(x - pts_[j]) / l_) * vecs_(j, m);
        return acc * h_ / raw_[m];
    }

private:
    static Eigen::VectorXd grid_eigenvalues(double L, double l, int n, int n_modes, Eigen::MatrixXd* vecs_out,
                                            Eigen::VectorXd* pts_out) {
        const double h = L / n;
        Eigen::VectorXd pts(n);
        for (int i = 0; i < n; ++i) pts[i] = (i + 0.5) * h;
        Eigen::MatrixXd A(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                const double v = std::exp(-std::abs(pts[i] - pts[j]) / l) * h;
                A(i, j) = v;
                A(j, i) = v;
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        if (es.info() != Eigen::Success) throw NumericalError("KL Nystrom eigensolve did not converge");
        Eigen::VectorXd lam(n_modes);
        if (vecs_out) vecs_out->resize(n, n_modes);
        for (int m = 0; m < n_modes; ++m) {
            const int src = n - 1 - m;  // Eigen sorts ascending
            lam[m] = es.eigenvalues()[src];
            if (vecs_out) {
                Eigen::VectorXd v = es.eigenvectors().col(src) / std::sqrt(h);  // discrete L2 norm 1
                Eigen::Index imax = 0;
                v.cwiseAbs().maxCoeff(&imax);
                if (v[imax] < 0.0) v = -v;
                vecs_out->col(m) = v;
            }
        }
        if (pts_out) *pts_out = pts;
        return lam;
    }

    double L_, l_, h_ = 0.0;
    Eigen::VectorXd lam_, raw_, pts_;
    Eigen::MatrixXd vecs_;
};

/// Truncated 2D KL model of the zero-mean, unit-variance Gaussian driver
/// field, with eigenfunctions tabulated at element centroids, plus the
/// bounded-uniform marginal transform to Young's modulus.
struct KlModel {
    int M = 0;
    Eigen::VectorXd eigenvalues;  ///< lambda_1 >= ... >= lambda_M > 0
    Eigen::MatrixXd centroid_table;  ///< n_elems x M eigenfunction values
    double a = 1.0, b = 1.5;      ///< marginal modulus bounds

    /// y(xi, x_e) = sum_m sqrt(lambda_m) xi_m e_m(x_e)
    Eigen::VectorXd realize_field(const Eigen::VectorXd& xi) const {
        if (xi.size() != M) throw InvalidArgument("xi length does not match KL truncation order");
        if (!xi.allFinite()) throw InvalidArgument("xi must be finite");
        Eigen::VectorXd y = Eigen::VectorXd::Zero(centroid_table.rows());
        for (int m = 0; m < M; ++m) y += std::sqrt(eigenvalues[m]) * xi[m] * centroid_table.col(m);
        return y;
    }

    /// E0_e = a + (b - a) Phi(y_e), inside (a, b) for finite xi up to the
    /// floating-point saturation of Phi at extreme drivers (|y| > ~8).
    Eigen::VectorXd realize_modulus(const Eigen::VectorXd& xi) const {
        Eigen::VectorXd y = realize_field(xi);
        for (Eigen::Index e = 0; e < y.size(); ++e) y[e] = a + (b - a) * normal_cdf(y[e]);
        return y;
    }
};

/// Builds the 2D KL model as products of 1D eigenpairs, sorted by descending
/// eigenvalue and truncated to M terms.  Element centroids of the nelx x nely
/// mesh are mapped linearly onto [0, L1] x [0, L2].
inline KlModel build_kl_2d(const CovarianceSpec& cov, int nelx, int nely, int M, double marginal_a,
                           double marginal_b, int n_quad = 512) {
    cov.validate();
    if (M < 1) throw InvalidArgument("KL truncation order must be >= 1");
    if (!(marginal_a < marginal_b)) throw InvalidArgument("marginal bounds must satisfy a < b");
    const int n1d = std::max(8, M + 2);
    Kl1D kx(cov.L1, cov.l1, n1d, n_quad);
    Kl1D ky(cov.L2, cov.l2, n1d, n_quad);

    struct Product {
        double lam;
        int i, j;
    };
    std::vector<Product> prods;
    prods.reserve(static_cast<size_t>(n1d) * n1d);
    for (int i = 0; i < n1d; ++i)
        for (int j = 0; j < n1d; ++j) prods.push_back({kx.eigenvalue(i) * ky.eigenvalue(j), i, j});
    std::stable_sort(prods.begin(), prods.end(), [](const Product& p, const Product& q) { return p.lam > q.lam; });
    if (static_cast<int>(prods.size()) < M) throw InvalidArgument("KL truncation order exceeds available modes");

    KlModel model;
    model.M = M;
    model.a = marginal_a;
    model.b = marginal_b;
    model.eigenvalues.resize(M);
    model.centroid_table.resize(static_cast<Eigen::Index>(nelx) * nely, M);
    // Per-axis eigenfunction values at centroids, evaluated once.
    Eigen::MatrixXd ex_tab(nelx, n1d), ey_tab(nely, n1d);
    for (int m = 0; m < n1d; ++m) {
        for (int ex = 0; ex < nelx; ++ex) ex_tab(ex, m) = kx.eigenfunction_at(m, (ex + 0.5) / nelx * cov.L1);
        for (int ey = 0; ey < nely; ++ey) ey_tab(ey, m) = ky.eigenfunction_at(m, (ey + 0.5) / nely * cov.L2);
    }
    for (int m = 0; m < M; ++m) {
        model.eigenvalues[m] = prods[static_cast<size_t>(m)].lam;
        const int i = prods[static_cast<size_t>(m)].i, j = prods[static_cast<size_t>(m)].j;
        for (int ex = 0; ex < nelx; ++ex)
            for (int ey = 0; ey < nely; ++ey)
                model.centroid_table(static_cast<Eigen::Index>(ex) * nely + ey, m) = ex_tab(ex, i) * ey_tab(ey, j);
    }
    return model;
}

} // namespace rrbto
