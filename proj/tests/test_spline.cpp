#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "vqkan/rng.hpp"
#include "vqkan/spline.hpp"

using namespace vqkan;

namespace {

// Least-squares representation of f in the given basis; the residual is
// negligible whenever f lies in the spanned space.
ActivationCoefficients represent(const SplineGrid& grid, const std::function<double(double)>& f) {
    const int n = grid.num_basis();
    const int samples = 4 * n;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(samples, n);
    Eigen::VectorXd rhs(samples);
    for (int i = 0; i < samples; ++i) {
        const double x = static_cast<double>(i) / (samples - 1);
        rhs(i) = f(x);
        for (int k = 0; k < n; ++k) a(i, k) = basis_eval(grid, k, x);
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(rhs);
    ActivationCoefficients coeffs(grid.num_grid(), grid.num_splines());
    for (int k = 0; k < n; ++k) coeffs[static_cast<std::size_t>(k)] = c(k);
    return coeffs;
}

}  // namespace

TEST_CASE("partition of unity", "[spline]") {
    const SplineGrid grid(8, 8);
    double sum = 0.0;
    for (int k = 0; k < grid.num_basis(); ++k) sum += basis_eval(grid, k, 0.37);
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));

    Rng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const double x = rng.uniform();
        const int span = grid.find_span(x);
        const auto values = grid.nonzero_basis(x, span);
        double s = 0.0;
        for (double v : values) s += v;
        CHECK(std::fabs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("clamped endpoints", "[spline]") {
    const SplineGrid grid(8, 8);
    CHECK(basis_eval(grid, 0, 0.0) == Catch::Approx(1.0));
    CHECK(basis_eval(grid, grid.num_basis() - 1, 1.0) == Catch::Approx(1.0));
    for (int k = 1; k < grid.num_basis(); ++k) CHECK(basis_eval(grid, k, 0.0) == 0.0);
}

TEST_CASE("nonnegativity and local support", "[spline]") {
    const SplineGrid grid(4, 4);
    const int spans = grid.num_basis() - SplineGrid::kDegree;
    for (int k = 0; k < grid.num_basis(); ++k) {
        int active_spans = 0;
        for (int s = 0; s < spans; ++s) {
            bool nonzero = false;
            for (int i = 1; i < 16; ++i) {
                const double x = (s + i / 16.0) / spans;
                const double v = basis_eval(grid, k, x);
                CHECK(v >= 0.0);
                if (v > 0.0) nonzero = true;
            }
            if (nonzero) ++active_spans;
        }
        CHECK(active_spans <= SplineGrid::kDegree + 1);
    }
}

TEST_CASE("basis matches the recursive definition", "[spline]") {
    const SplineGrid grid(2, 6);
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = rng.uniform(1e-6, 1.0 - 1e-6);
        for (int k = 0; k < grid.num_basis(); ++k) {
            const double mine = basis_eval(grid, k, x);
            const double ref = oracle::recursive_basis(grid.knots(), SplineGrid::kDegree, k, x);
            CHECK(mine == Catch::Approx(ref).margin(1e-13));
        }
    }
}

TEST_CASE("basis is C2 across interior knots", "[spline]") {
    const SplineGrid grid(2, 4);  // 8 basis functions, 5 spans of width 0.2
    const double knot = grid.knots()[SplineGrid::kDegree + 2];
    const double h = 0.004, d = 0.01;
    for (int k = 0; k < grid.num_basis(); ++k) {
        auto f = [&](double x) { return basis_eval(grid, k, x); };
        auto d2 = [&](double x) { return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h); };
        // Piecewise-cubic pieces make the stencils exact; linear
        // extrapolation of B'' to the knot from each side must agree.
        const double left = d2(knot - d) + (d2(knot - d) - d2(knot - 3 * d)) / 2.0;
        const double right = d2(knot + d) + (d2(knot + d) - d2(knot + 3 * d)) / 2.0;
        CHECK(left == Catch::Approx(right).margin(1e-5));
        // value and slope continuity
        CHECK(f(knot - 1e-9) == Catch::Approx(f(knot + 1e-9)).margin(1e-7));
        const double s_left = (f(knot - 1e-6) - f(knot - 3e-6)) / 2e-6;
        const double s_right = (f(knot + 3e-6) - f(knot + 1e-6)) / 2e-6;
        CHECK(s_left == Catch::Approx(s_right).margin(5e-4));
    }
}

TEST_CASE("basis_eval edge handling", "[spline]") {
    const SplineGrid grid(8, 8);
    CHECK_THROWS_AS(basis_eval(grid, 0, -0.01), std::domain_error);
    CHECK_THROWS_AS(basis_eval(grid, 0, 1.01), std::domain_error);
    CHECK_THROWS_AS(basis_eval(grid, grid.num_basis(), 0.5), std::out_of_range);
    CHECK_THROWS_AS(basis_eval(grid, -1, 0.5), std::out_of_range);
    CHECK_THROWS_AS(SplineGrid(0, 8), std::invalid_argument);
}

TEST_CASE("silu values", "[spline]") {
    CHECK(silu(0.0) == 0.0);
    CHECK(silu(1.0) == Catch::Approx(1.0 / (std::exp(-1.0) + 1.0)).margin(1e-16));
    CHECK(silu(1.0) == Catch::Approx(0.73106).margin(1e-5));
    CHECK(std::fabs(silu(-50.0)) < 1e-20);
    CHECK(std::isfinite(silu(-745.0)));
    CHECK(std::isfinite(silu(745.0)));
}

TEST_CASE("activation evaluation", "[spline]") {
    const SplineGrid grid(8, 8);
    SECTION("zero coefficients reduce to silu") {
        const ActivationCoefficients zero(8, 8);
        for (double x : {0.0, 0.1, 0.33, 0.5, 0.9, 1.0})
            CHECK(std::fabs(activation_eval(grid, zero, x) - silu(x)) < 1e-15);
    }
    SECTION("uniform coefficients add a constant") {
        ActivationCoefficients ones(8, 8);
        for (std::size_t k = 0; k < ones.size(); ++k) ones[k] = 1.0;
        for (double x : {0.05, 0.37, 0.77})
            CHECK(activation_eval(grid, ones, x) == Catch::Approx(silu(x) + 1.0).margin(1e-12));
    }
    SECTION("a single coefficient adds a scaled basis function") {
        ActivationCoefficients c(8, 8);
        c.at(3, 5) = 2.0;
        const int flat = static_cast<int>(c.flat(3, 5));
        for (double x : {0.1, 0.42, 0.55, 0.61, 0.88}) {
            CHECK(activation_eval(grid, c, x) ==
                  Catch::Approx(silu(x) + 2.0 * basis_eval(grid, flat, x)).margin(1e-14));
        }
    }
}

TEST_CASE("refinement", "[spline]") {
    const SplineGrid coarse(8, 8);
    SECTION("zero coefficients refit to zero") {
        const ActivationCoefficients zero(8, 8);
        const auto [fine, refit] = refine(coarse, zero, 12);
        CHECK(fine.num_splines() == 12);
        CHECK(fine.num_basis() == 96);
        for (std::size_t k = 0; k < refit.size(); ++k) CHECK(std::fabs(refit[k]) < 1e-12);
    }
    SECTION("cubic polynomials in the coarse space survive refinement") {
        Rng rng(17);
        for (int trial = 0; trial < 5; ++trial) {
            const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1),
                         d = rng.uniform(-1, 1);
            auto poly = [&](double x) { return a + b * x + c * x * x + d * x * x * x; };
            const ActivationCoefficients coarse_coeffs = represent(coarse, poly);
            const auto [fine, refit] = refine(coarse, coarse_coeffs, 12);
            double rms = 0.0;
            const int samples = 1000;
            for (int i = 0; i < samples; ++i) {
                const double x = static_cast<double>(i) / (samples - 1);
                const double diff =
                    spline_part_eval(fine, refit, x) - spline_part_eval(coarse, coarse_coeffs, x);
                rms += diff * diff;
            }
            rms = std::sqrt(rms / samples);
            CHECK(rms < 1e-8);
        }
    }
    SECTION("smooth functions move by less than 1e-6 RMS") {
        const ActivationCoefficients smooth =
            represent(coarse, [](double x) { return std::sin(x) + 0.5 * std::cos(2.0 * x); });
        const auto [fine, refit] = refine(coarse, smooth, 12);
        double rms = 0.0;
        const int samples = 1000;
        for (int i = 0; i < samples; ++i) {
            const double x = static_cast<double>(i) / (samples - 1);
            const double diff = spline_part_eval(fine, refit, x) - spline_part_eval(coarse, smooth, x);
            rms += diff * diff;
        }
        CHECK(std::sqrt(rms / samples) < 1e-6);
    }
    SECTION("schedule N_s = 4(tr+2)") {
        CHECK(4 * (0 + 2) == 8);
        CHECK(4 * (1 + 2) == 12);
        CHECK(4 * (2 + 2) == 16);
    }
    SECTION("shrinking is rejected") {
        const ActivationCoefficients zero(8, 8);
        CHECK_THROWS_AS(refine(coarse, zero, 8), std::invalid_argument);
        CHECK_THROWS_AS(refine(coarse, zero, 4), std::invalid_argument);
    }
}
