#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rrbto/fem.hpp"
#include "rrbto/filter.hpp"
#include "rrbto/monte_carlo.hpp"
#include "rrbto/random_field.hpp"
#include "rrbto/srsm.hpp"

using namespace rrbto;

namespace {

// Left-clamped cantilever with a unit downward tip load at the bottom-right
// node, monitored at the same DOF.
ProblemDef tip_loaded_cantilever(int nelx, int nely, double u0) {
    ProblemDef p;
    p.nelx = nelx;
    p.nely = nely;
    for (int iy = 0; iy <= nely; ++iy) {
        p.fixed_dofs.push_back(2 * p.node_id(0, iy));
        p.fixed_dofs.push_back(2 * p.node_id(0, iy) + 1);
    }
    const int tip = 2 * p.node_id(nelx, 0) + 1;
    p.loads.push_back({tip, -1.0});
    p.monitored_dof = tip;
    p.u0 = u0;
    return p;
}

KlModel small_kl(int nelx, int nely) {
    CovarianceSpec cov;
    cov.L1 = nelx;
    cov.L2 = nely;
    cov.l1 = cov.l2 = 2.0;
    return build_kl_2d(cov, nelx, nely, 2, 1.0, 1.5);
}

}  // namespace

TEST_CASE("inverse normal CDF", "[monte_carlo]") {
    SECTION("round-trips through the CDF across the usable range") {
        for (double p : {1e-6, 1e-3, 0.025, 0.2, 0.5, 0.8, 0.975, 0.999, 1.0 - 1e-6}) {
            CAPTURE(p);
            REQUIRE(normal_cdf(normal_ppf(p)) == Catch::Approx(p).margin(1e-12));
            REQUIRE(oracles::normal_cdf_ref(normal_ppf(p)) == Catch::Approx(p).margin(1e-12));
        }
    }

    SECTION("median, symmetry, and monotonicity") {
        REQUIRE(normal_ppf(0.5) == 0.0);
        for (double p : {0.01, 0.1, 0.3, 0.45}) {
            REQUIRE(normal_ppf(1.0 - p) == Catch::Approx(-normal_ppf(p)).margin(1e-12));
        }
        double prev = normal_ppf(1e-8);
        for (double p = 1e-4; p < 1.0; p += 7e-3) {
            const double z = normal_ppf(p);
            REQUIRE(z > prev);
            prev = z;
        }
    }

    SECTION("known quantiles") {
        REQUIRE(normal_ppf(0.975) == Catch::Approx(1.959963984540054).margin(1e-12));
        REQUIRE(normal_cdf(-1.0) == Catch::Approx(0.15865525393145705).margin(1e-14));
        REQUIRE(normal_cdf(-3.0) == Catch::Approx(0.0013498980316300933).margin(1e-16));
    }

    SECTION("domain guard") {
        REQUIRE_THROWS_AS(normal_ppf(0.0), InvalidArgument);
        REQUIRE_THROWS_AS(normal_ppf(1.0), InvalidArgument);
        REQUIRE_THROWS_AS(normal_ppf(-0.2), InvalidArgument);
    }
}

TEST_CASE("counter-based generator", "[monte_carlo]") {
    const CounterRng rng(42, 0);

    SECTION("draws are pure functions of the index") {
        const CounterRng again(42, 0);
        for (std::uint64_t i = 0; i < 50; ++i) REQUIRE(rng.uniform(i) == again.uniform(i));
    }

    SECTION("values are strict interior uniforms") {
        for (std::uint64_t i = 0; i < 1000; ++i) {
            const double u = rng.uniform(i);
            REQUIRE(u > 0.0);
            REQUIRE(u < 1.0);
        }
    }

    SECTION("streams decorrelate") {
        const CounterRng other(42, 1);
        int same = 0;
        for (std::uint64_t i = 0; i < 100; ++i)
            if (rng.uniform(i) == other.uniform(i)) ++same;
        REQUIRE(same == 0);
    }

    SECTION("bounded draws stay in range") {
        for (std::uint64_t i = 0; i < 500; ++i) REQUIRE(rng.below(i, 7) < 7);
    }
}

TEST_CASE("Latin hypercube sampling", "[monte_carlo]") {
    SECTION("each margin hits every stratum exactly once") {
        LhsSampler s;
        s.N = 1000;
        s.M = 2;
        s.seed = 5;
        const Eigen::MatrixXd X = lhs_sample(s);
        REQUIRE(X.rows() == 1000);
        REQUIRE(X.cols() == 2);
        for (int j = 0; j < 2; ++j) {
            std::vector<int> hits(1000, 0);
            for (int i = 0; i < 1000; ++i) {
                const int k = static_cast<int>(std::floor(normal_cdf(X(i, j)) * 1000.0));
                REQUIRE(k >= 0);
                REQUIRE(k < 1000);
                ++hits[static_cast<size_t>(k)];
            }
            for (int k = 0; k < 1000; ++k) {
                CAPTURE(j, k);
                REQUIRE(hits[static_cast<size_t>(k)] == 1);
            }
        }
    }

    SECTION("sample moments approach the standard normal") {
        LhsSampler s;  // N = 50000, M = 2, seed = 0
        const Eigen::MatrixXd X = lhs_sample(s);
        for (int j = 0; j < 2; ++j) {
            const double mean = X.col(j).mean();
            const double var = (X.col(j).array() - mean).square().mean();
            CAPTURE(j, mean, var);
            REQUIRE(std::abs(mean) < 3.0 / std::sqrt(50000.0));
            REQUIRE(var > 0.99);
            REQUIRE(var < 1.01);
        }
        const double corr = ((X.col(0).array() - X.col(0).mean()) * (X.col(1).array() - X.col(1).mean())).mean();
        REQUIRE(std::abs(corr) < 0.02);
    }

    SECTION("sampling is deterministic in the seed") {
        LhsSampler s;
        s.N = 256;
        const Eigen::MatrixXd X1 = lhs_sample(s);
        const Eigen::MatrixXd X2 = lhs_sample(s);
        REQUIRE((X1 - X2).cwiseAbs().maxCoeff() == 0.0);

        s.seed = 1;
        const Eigen::MatrixXd Y = lhs_sample(s);
        REQUIRE((X1 - Y).cwiseAbs().maxCoeff() > 0.0);

        // Margins use distinct streams, so the columns differ.
        REQUIRE((X1.col(0) - X1.col(1)).cwiseAbs().maxCoeff() > 0.0);
    }

    SECTION("invalid shapes are rejected") {
        REQUIRE_THROWS_AS(lhs_sample(LhsSampler{0, 2, 0}), InvalidArgument);
        REQUIRE_THROWS_AS(lhs_sample(LhsSampler{10, 0, 0}), InvalidArgument);
    }
}

TEST_CASE("design validation by Monte Carlo", "[monte_carlo]") {
    const int nelx = 8, nely = 4;
    const KlModel kl = small_kl(nelx, nely);
    const Eigen::VectorXd solid = Eigen::VectorXd::Ones(nelx * nely);

    // Reference |u_B| at the mean modulus field, used to place u0 so that
    // both outcomes occur.
    ProblemDef probe = tip_loaded_cantilever(nelx, nely, 1.0);
    const FeaSolver probe_solver(probe);
    const double uB0 = std::abs(probe_solver.solve(simp_moduli(solid, 3.0, kl.realize_modulus(Eigen::VectorXd::Zero(2)))).u_B);

    ProblemDef prob = tip_loaded_cantilever(nelx, nely, uB0);
    const FeaSolver solver(prob);

    LhsSampler s;
    s.N = 2000;
    s.seed = 3;
    const Eigen::MatrixXd samples = lhs_sample(s);

    const McReport full = validate_design(solver, kl, 3.0, solid, prob.u0, samples, McMode::FullFea);

    SECTION("full-FEA report is internally consistent") {
        REQUIRE(full.n == 2000);
        REQUIRE(full.fea_failures == 0);
        REQUIRE(full.mode == McMode::FullFea);
        REQUIRE(full.mu_B < 0.0);  // downward load
        REQUIRE(full.sigma_B > 0.0);
        REQUIRE(full.mu_C > 0.0);
        REQUIRE(full.sigma_C > 0.0);
        REQUIRE(full.pf > 0.2);
        REQUIRE(full.pf < 0.8);
        REQUIRE(full.se_pf == Catch::Approx(std::sqrt(full.pf * (1.0 - full.pf) / 2000.0)).margin(1e-15));
        REQUIRE(full.se_mu_B == Catch::Approx(full.sigma_B / std::sqrt(2000.0)).margin(1e-15));
        REQUIRE(full.se_mu_C == Catch::Approx(full.sigma_C / std::sqrt(2000.0)).margin(1e-15));
    }

    SECTION("failure probability is monotone in the displacement limit") {
        const McReport loose = validate_design(solver, kl, 3.0, solid, 0.1 * uB0, samples, McMode::FullFea);
        const McReport tight = validate_design(solver, kl, 3.0, solid, 10.0 * uB0, samples, McMode::FullFea);
        REQUIRE(loose.pf == 0.0);
        REQUIRE(tight.pf == 1.0);
    }

    SECTION("repeated validation is bit-identical") {
        const McReport again = validate_design(solver, kl, 3.0, solid, prob.u0, samples, McMode::FullFea);
        REQUIRE(again.pf == full.pf);
        REQUIRE(again.mu_B == full.mu_B);
        REQUIRE(again.sigma_B == full.sigma_B);
        REQUIRE(again.mu_C == full.mu_C);
        REQUIRE(again.sigma_C == full.sigma_C);
    }

    SECTION("surrogate mode tracks the full model on a smooth response") {
        const Eigen::Matrix<double, 17, 2> pts = collocation_points();
        Eigen::VectorXd obs(17);
        for (int i = 0; i < 17; ++i) {
            const Eigen::VectorXd e0 = kl.realize_modulus(pts.row(i).transpose());
            obs[i] = solver.solve(simp_moduli(solid, 3.0, e0)).u_B;
        }
        const ResponseSurface rs = fit_response_surface(pts, obs);
        const McReport sur = validate_design(solver, kl, 3.0, solid, prob.u0, samples, McMode::Surrogate, &rs);
        REQUIRE(sur.mode == McMode::Surrogate);
        REQUIRE(std::isnan(sur.mu_C));
        REQUIRE(std::isnan(sur.sigma_C));
        REQUIRE(std::abs(sur.mu_B - full.mu_B) / std::abs(full.mu_B) < 2e-3);
        REQUIRE(std::abs(sur.sigma_B - full.sigma_B) / full.sigma_B < 0.05);
        REQUIRE(std::abs(sur.pf - full.pf) < 0.02);
    }

    SECTION("standard errors shrink like the square root of the sample size") {
        const McReport quarter =
            validate_design(solver, kl, 3.0, solid, prob.u0, samples.topRows(500), McMode::FullFea);
        const double ratio = quarter.se_mu_B / full.se_mu_B;
        REQUIRE(ratio > 1.6);
        REQUIRE(ratio < 2.4);
    }

    SECTION("a degenerate marginal collapses the response distribution") {
        KlModel flat = kl;
        flat.a = flat.b = 1.25;
        const McReport rep = validate_design(solver, flat, 3.0, solid, prob.u0, samples.topRows(100), McMode::FullFea);
        REQUIRE(rep.sigma_B < 1e-12);
        REQUIRE((rep.pf == 0.0 || rep.pf == 1.0));
    }

    SECTION("input guards") {
        REQUIRE_THROWS_AS(validate_design(solver, kl, 3.0, solid, prob.u0, Eigen::MatrixXd(0, 2), McMode::FullFea),
                          InvalidArgument);
        REQUIRE_THROWS_AS(validate_design(solver, kl, 3.0, solid, prob.u0, Eigen::MatrixXd::Zero(10, 3), McMode::FullFea),
                          InvalidArgument);
        REQUIRE_THROWS_AS(validate_design(solver, kl, 3.0, solid, prob.u0, samples, McMode::Surrogate, nullptr),
                          InvalidArgument);
    }
}
