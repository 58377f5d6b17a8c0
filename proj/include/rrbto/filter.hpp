#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rrbto/errors.hpp"

namespace rrbto {

/// Density filter (Bruns/Bourdin): physical density = normalized convolution
/// of design densities with the linear decay kernel w_ej = max(0, r_min - d(e, j)),
/// distances measured between element centroids in element lengths.
class FilterKernel {
public:
    FilterKernel(int nelx, int nely, double r_min) : nelx_(nelx), nely_(nely), r_min_(r_min) {
        if (nelx < 1 || nely < 1) throw InvalidArgument("filter mesh must be non-empty");
        if (!(r_min > 0.0)) throw InvalidArgument("r_min must be positive");
        const int n = nelx * nely;
        const int reach = static_cast<int>(std::ceil(r_min)) - 1;
        offsets_.assign(static_cast<size_t>(n) + 1, 0);
        // two passes: count, then fill
        for (int pass = 0; pass < 2; ++pass) {
            int cursor = 0;
            for (int ex = 0; ex < nelx; ++ex)
                for (int ey = 0; ey < nely; ++ey) {
                    const int e = ex * nely + ey;
                    double sum = 0.0;
                    for (int dx = -reach; dx <= reach; ++dx)
                        for (int dy = -reach; dy <= reach; ++dy) {
                            const int jx = ex + dx, jy = ey + dy;
                            if (jx < 0 || jx >= nelx || jy < 0 || jy >= nely) continue;
                            const double w = r_min - std::hypot(static_cast<double>(dx), static_cast<double>(dy));
                            if (w <= 0.0) continue;
                            if (pass == 1) {
                                neighbors_[static_cast<size_t>(cursor)] = jx * nely + jy;
                                weights_[static_cast<size_t>(cursor)] = w;
                            }
                            ++cursor;
                            sum += w;
                        }
                    if (pass == 0) offsets_[static_cast<size_t>(e) + 1] = cursor;
                    else row_sums_[static_cast<size_t>(e)] = sum;
                }
            if (pass == 0) {
                neighbors_.resize(static_cast<size_t>(cursor));
                weights_.resize(static_cast<size_t>(cursor));
                row_sums_.assign(static_cast<size_t>(n), 0.0);
            }
        }
    }

    int nelx() const { return nelx_; }
    int nely() const { return nely_; }
    double r_min() const { return r_min_; }

    /// rho_tilde_e = sum_j w_ej rho_j / sum_j w_ej
    Eigen::VectorXd apply(const Eigen::VectorXd& rho) const {
        check(rho);
        const int n = nelx_ * nely_;
        Eigen::VectorXd out(n);
        for (int e = 0; e < n; ++e) {
            double acc = 0.0;
            for (int k = offsets_[static_cast<size_t>(e)]; k < offsets_[static_cast<size_t>(e) + 1]; ++k)
                acc += weights_[static_cast<size_t>(k)] * rho[neighbors_[static_cast<size_t>(k)]];
            out[e] = acc / row_sums_[static_cast<size_t>(e)];
        }
        return out;
    }

    /// Transpose map: dF/drho_j = sum_e w_ej / (sum_k w_ek) * dF/drho_tilde_e
    Eigen::VectorXd backpropagate(const Eigen::VectorXd& d_phys) const {
        check(d_phys);
        const int n = nelx_ * nely_;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
        for (int e = 0; e < n; ++e) {
            const double scaled = d_phys[e] / row_sums_[static_cast<size_t>(e)];
            for (int k = offsets_[static_cast<size_t>(e)]; k < offsets_[static_cast<size_t>(e) + 1]; ++k)
                out[neighbors_[static_cast<size_t>(k)]] += weights_[static_cast<size_t>(k)] * scaled;
        }
        return out;
    }

private:
    void check(const Eigen::VectorXd& v) const {
        if (v.size() != static_cast<Eigen::Index>(nelx_) * nely_)
            throw InvalidArgument("field length does not match filter mesh");
    }

    int nelx_, nely_;
    double r_min_;
    std::vector<int> offsets_, neighbors_;
    std::vector<double> weights_, row_sums_;
};

/// SIMP interpolation E_e = rho_tilde_e^p * E0_e.
inline Eigen::VectorXd simp_moduli(const Eigen::VectorXd& physical_density, double penal,
                                   const Eigen::VectorXd& moduli_unit) {
    if (physical_density.size() != moduli_unit.size())
        throw InvalidArgument("density and modulus vectors differ in length");
    if (!(penal >= 1.0)) throw InvalidArgument("penalization exponent must be >= 1");
    Eigen::VectorXd out(physical_density.size());
    for (Eigen::Index e = 0; e < out.size(); ++e)
        out[e] = std::pow(physical_density[e], penal) * moduli_unit[e];
    return out;
}

} // namespace rrbto
