#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "rrbto/filter.hpp"

using namespace rrbto;

namespace {

Eigen::VectorXd random_vector(int n, double lo, double hi, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

}  // namespace

TEST_CASE("density filter application", "[filter]") {
    SECTION("uniform fields are fixed points") {
        FilterKernel f(7, 5, 1.5);
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(35, 0.37);
        const Eigen::VectorXd y = f.apply(x);
        REQUIRE((y - x).cwiseAbs().maxCoeff() < 1e-12);
    }

    SECTION("unit radius degenerates to the identity") {
        FilterKernel f(6, 4, 1.0);
        const Eigen::VectorXd x = random_vector(24, 0.001, 1.0, 5);
        REQUIRE((f.apply(x) - x).cwiseAbs().maxCoeff() < 1e-15);
    }

    SECTION("3x3 center value from hand-evaluated kernel weights") {
        FilterKernel f(3, 3, 1.5);
        Eigen::VectorXd x = Eigen::VectorXd::Constant(9, 0.5);
        x[3 * 1 + 1] = 1.0;  // center element (ex, ey) = (1, 1)
        // Center neighborhood at r_min = 1.5: self-weight 1.5, the four edge
        // neighbors at distance 1 with weight 0.5, and the four diagonal
        // neighbors at distance sqrt(2) with weight 1.5 - sqrt(2).
        const double wd = 1.5 - std::sqrt(2.0);
        const double expected =
            (1.5 * 1.0 + 4 * 0.5 * 0.5 + 4 * wd * 0.5) / (1.5 + 4 * 0.5 + 4 * wd);
        const Eigen::VectorXd y = f.apply(x);
        REQUIRE(y[4] == Catch::Approx(expected).epsilon(1e-12));
        REQUIRE(y[4] == Catch::Approx(0.69515024).margin(1e-7));
    }

    SECTION("values stay within the input range") {
        FilterKernel f(12, 4, 1.5);
        const Eigen::VectorXd x = random_vector(48, 0.001, 1.0, 6);
        const Eigen::VectorXd y = f.apply(x);
        REQUIRE(y.minCoeff() >= x.minCoeff() - 1e-14);
        REQUIRE(y.maxCoeff() <= x.maxCoeff() + 1e-14);
    }

    SECTION("rejects mismatched sizes") {
        FilterKernel f(3, 3, 1.5);
        REQUIRE_THROWS_AS(f.apply(Eigen::VectorXd::Ones(8)), InvalidArgument);
    }
}

TEST_CASE("sensitivity backpropagation", "[filter]") {
    FilterKernel f(9, 6, 1.5);
    const int n = 54;

    SECTION("linearity: zero maps to zero") {
        REQUIRE(f.backpropagate(Eigen::VectorXd::Zero(n)).cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("unit radius is the identity") {
        FilterKernel fid(9, 6, 0.8);
        const Eigen::VectorXd g = random_vector(n, -2.0, 2.0, 8);
        REQUIRE((fid.backpropagate(g) - g).cwiseAbs().maxCoeff() < 1e-15);
    }

    SECTION("adjoint identity against apply") {
        const Eigen::VectorXd x = random_vector(n, -1.0, 1.0, 9);
        const Eigen::VectorXd y = random_vector(n, -1.0, 1.0, 10);
        const double lhs = f.apply(x).dot(y);
        const double rhs = x.dot(f.backpropagate(y));
        REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("SIMP modulus interpolation", "[filter]") {
    SECTION("unit density returns the base modulus") {
        const Eigen::VectorXd e0 = Eigen::VectorXd::Constant(4, 1.23);
        const Eigen::VectorXd m = simp_moduli(Eigen::VectorXd::Ones(4), 3.0, e0);
        REQUIRE((m - e0).cwiseAbs().maxCoeff() < 1e-15);
    }

    SECTION("floor density cubes to 1e-9") {
        const Eigen::VectorXd m =
            simp_moduli(Eigen::VectorXd::Constant(1, 0.001), 3.0, Eigen::VectorXd::Ones(1));
        REQUIRE(m[0] == Catch::Approx(1e-9).epsilon(1e-12));
    }

    SECTION("half density with modulus 1.25") {
        const Eigen::VectorXd m =
            simp_moduli(Eigen::VectorXd::Constant(1, 0.5), 3.0, Eigen::VectorXd::Constant(1, 1.25));
        REQUIRE(m[0] == Catch::Approx(0.15625).epsilon(1e-14));
    }
}
