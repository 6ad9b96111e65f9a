#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "vqkan/optimizer.hpp"

using namespace vqkan;

namespace {

double quadratic(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += (v - 1.0) * (v - 1.0);
    return s;
}

}  // namespace

TEST_CASE("cobyla minimizes a quadratic", "[optimizer]") {
    const ObjectiveBudget budget{500, 0.5, 1e-8, 0};
    const CobylaResult r = cobyla_minimize(quadratic, std::vector<double>(4, 0.0), budget);
    CHECK(r.f_best < 1e-6);
    CHECK(r.evals_used <= 500);
    for (double v : r.x_best) CHECK(v == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("cobyla budget of one returns the start point", "[optimizer]") {
    const ObjectiveBudget budget{1, 0.5, 1e-8, 0};
    const CobylaResult r = cobyla_minimize(quadratic, {0.3, 0.7}, budget);
    CHECK(r.evals_used == 1);
    CHECK(r.x_best == std::vector<double>{0.3, 0.7});
    CHECK(r.f_best == Catch::Approx(quadratic({0.3, 0.7})));
}

TEST_CASE("cobyla is shift invariant", "[optimizer]") {
    // The algorithm sees f only through comparisons and differences, so a
    // constant shift leaves it invariant in exact arithmetic. In floating
    // point (f + c) - (f' + c) rounds differently from f - f' at the last
    // ulp, so the check is made at the precision the arithmetic supports.
    std::vector<std::vector<double>> points_a, points_b;
    auto skewed = [](const std::vector<double>& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - 0.3 * static_cast<double>(i + 1);
            s += static_cast<double>(i + 1) * d * d;
        }
        return s;
    };
    auto fa = [&](const std::vector<double>& x) {
        points_a.push_back(x);
        return skewed(x);
    };
    auto fb = [&](const std::vector<double>& x) {
        points_b.push_back(x);
        return skewed(x) + 10.0;
    };
    const ObjectiveBudget budget{300, 0.5, 1e-4, 0};
    const CobylaResult ra = cobyla_minimize(fa, {0.05, -0.1, 0.2, 0.35}, budget);
    const CobylaResult rb = cobyla_minimize(fb, {0.05, -0.1, 0.2, 0.35}, budget);
    const std::size_t shared = std::min({points_a.size(), points_b.size(), std::size_t{30}});
    for (std::size_t i = 0; i < shared; ++i) {
        REQUIRE(points_a[i].size() == points_b[i].size());
        for (std::size_t k = 0; k < points_a[i].size(); ++k)
            CHECK(points_a[i][k] == Catch::Approx(points_b[i][k]).margin(1e-9));
    }
    for (std::size_t k = 0; k < ra.x_best.size(); ++k)
        CHECK(ra.x_best[k] == Catch::Approx(rb.x_best[k]).margin(5e-4));
    CHECK(rb.f_best - 10.0 == Catch::Approx(ra.f_best).margin(1e-6));
}

TEST_CASE("cobyla never reports worse than the start", "[optimizer]") {
    auto nasty = [](const std::vector<double>& x) {
        return std::sin(13.0 * x[0]) + 0.3 * x[0] * x[0] + std::cos(7.0 * x[1]);
    };
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<double> x0{0.1 * trial, -0.2 * trial};
        const ObjectiveBudget budget{60 + 30 * trial, 0.5, 1e-8, 0};
        const CobylaResult r = cobyla_minimize(nasty, x0, budget);
        CHECK(r.f_best <= nasty(x0) + 1e-15);
    }
}

TEST_CASE("cobyla best-so-far is non-increasing and runs are reproducible", "[optimizer]") {
    const ObjectiveBudget budget{300, 0.5, 1e-8, 0};
    const CobylaResult a = cobyla_minimize(quadratic, std::vector<double>(4, 0.2), budget);
    const CobylaResult b = cobyla_minimize(quadratic, std::vector<double>(4, 0.2), budget);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i] == b.history[i]);
    CHECK(a.x_best == b.x_best);

    double running = a.history.front();
    for (double f : a.history) {
        running = std::min(running, f);
        CHECK(running <= a.history.front());
    }
    CHECK(a.f_best == Catch::Approx(running));
}

TEST_CASE("cobyla dimension above the budget stays within memory and budget", "[optimizer]") {
    auto sum_sq = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    const ObjectiveBudget budget{50, 0.5, 1e-8, 0};
    const CobylaResult r = cobyla_minimize(sum_sq, std::vector<double>(5000, 1.0), budget);
    CHECK(r.evals_used == 50);
    CHECK(r.x_best.size() == 5000);
    CHECK(r.f_best <= sum_sq(std::vector<double>(5000, 1.0)));
}

TEST_CASE("cobyla input validation", "[optimizer]") {
    const ObjectiveBudget bad_steps{100, 1e-8, 0.5, 0};
    CHECK_THROWS_AS(cobyla_minimize(quadratic, {0.0}, bad_steps), std::invalid_argument);
    const ObjectiveBudget no_budget{0, 0.5, 1e-8, 0};
    CHECK_THROWS_AS(cobyla_minimize(quadratic, {0.0}, no_budget), std::invalid_argument);
    auto nan_at_start = [](const std::vector<double>&) { return std::nan(""); };
    const ObjectiveBudget budget{10, 0.5, 1e-8, 0};
    CHECK_THROWS_AS(cobyla_minimize(nan_at_start, {0.0}, budget), std::domain_error);
}

TEST_CASE("central difference", "[optimizer]") {
    auto square = [](double x) { return x * x; };
    CHECK(central_difference(square, 1.0, 1e-4) == Catch::Approx(2.0).margin(1e-8));
    CHECK(central_difference([](double x) { return std::sin(x); }, 0.0, 1e-4) ==
          Catch::Approx(1.0).margin(1e-8));
    CHECK(central_difference([](double) { return 4.2; }, 0.3, 1e-4) == 0.0);
    CHECK_THROWS_AS(central_difference(square, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("second central difference", "[optimizer]") {
    auto square = [](double x) { return x * x; };
    CHECK(second_central_difference(square, 1.0, 1e-4) == Catch::Approx(2.0).margin(1e-7));
    CHECK(second_central_difference([](double x) { return std::sin(x); }, M_PI / 2.0, 1e-4) ==
          Catch::Approx(-1.0).margin(1e-4));
    CHECK(second_central_difference([](double x) { return 3.0 * x + 1.0; }, 0.5, 1e-4) ==
          Catch::Approx(0.0).margin(1e-6));
    CHECK_THROWS_AS(second_central_difference(square, 0.0, 1e-7), std::invalid_argument);
}
