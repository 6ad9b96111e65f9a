#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace vqkan {

/// Clamped uniform cubic B-spline basis on [0,1] with num_grid * num_splines
/// basis functions. The knot vector carries degree+1 copies of each endpoint
/// and equally spaced interior knots, so the basis is a nonnegative partition
/// of unity and each function is supported on at most degree+1 spans.
class SplineGrid {
public:
    static constexpr int kDegree = 3;

    SplineGrid(int num_grid, int num_splines)
        : num_grid_(num_grid), num_splines_(num_splines) {
        if (num_grid < 1 || num_splines < 1)
            throw std::invalid_argument("SplineGrid: counts must be positive");
        const int n = num_basis();
        if (n < kDegree + 1)
            throw std::invalid_argument("SplineGrid: need at least degree+1 basis functions");
        const int spans = n - kDegree;
        knots_.resize(static_cast<std::size_t>(n) + kDegree + 1);
        for (int i = 0; i <= kDegree; ++i) {
            knots_[i] = 0.0;
            knots_[knots_.size() - 1 - i] = 1.0;
        }
        for (int i = 1; i < spans; ++i)
            knots_[static_cast<std::size_t>(kDegree) + i] = static_cast<double>(i) / spans;
    }

    int num_grid() const { return num_grid_; }
    int num_splines() const { return num_splines_; }
    int num_basis() const { return num_grid_ * num_splines_; }
    const std::vector<double>& knots() const { return knots_; }

    /// Index s with knots[s] <= x < knots[s+1] (x = 1 maps to the last span).
    int find_span(double x) const {
        check_domain(x);
        const int n = num_basis();
        if (x >= 1.0) return n - 1;
        int lo = kDegree, hi = n;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            if (x < knots_[mid]) hi = mid;
            else lo = mid;
        }
        return lo;
    }

    /// Values of the degree+1 basis functions that are nonzero at x
    /// (Cox-de Boor recursion); first nonzero index is find_span(x) - degree.
    std::array<double, kDegree + 1> nonzero_basis(double x, int span) const {
        std::array<double, kDegree + 1> values{};
        std::array<double, kDegree + 1> left{}, right{};
        values[0] = 1.0;
        for (int j = 1; j <= kDegree; ++j) {
            left[j] = x - knots_[static_cast<std::size_t>(span) + 1 - j];
            right[j] = knots_[static_cast<std::size_t>(span) + j] - x;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double tmp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            values[j] = saved;
        }
        return values;
    }

    static void check_domain(double x) {
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("SplineGrid: evaluation point outside [0, 1]");
    }

private:
    int num_grid_;
    int num_splines_;
    std::vector<double> knots_;
};

/// Value of the k-th basis function at x; zero outside its support.
inline double basis_eval(const SplineGrid& grid, int k, double x) {
    if (k < 0 || k >= grid.num_basis())
        throw std::out_of_range("basis_eval: basis index out of range");
    const int span = grid.find_span(x);
    const int first = span - SplineGrid::kDegree;
    if (k < first || k > span) return 0.0;
    return grid.nonzero_basis(x, span)[static_cast<std::size_t>(k - first)];
}

/// Trainable weights of one activation, indexed (s, l) with s < num_grid,
/// l < num_splines; flat index s*num_splines + l matches the basis index.
/// Fresh coefficient sets are all-zero.
class ActivationCoefficients {
public:
    ActivationCoefficients(int num_grid, int num_splines)
        : num_grid_(num_grid),
          num_splines_(num_splines),
          c_(static_cast<std::size_t>(num_grid) * num_splines, 0.0) {}

    int num_grid() const { return num_grid_; }
    int num_splines() const { return num_splines_; }
    std::size_t size() const { return c_.size(); }

    double& at(int s, int l) { return c_[flat(s, l)]; }
    double at(int s, int l) const { return c_[flat(s, l)]; }

    double& operator[](std::size_t k) { return c_[k]; }
    double operator[](std::size_t k) const { return c_[k]; }

    std::vector<double>& values() { return c_; }
    const std::vector<double>& values() const { return c_; }

    std::size_t flat(int s, int l) const {
        if (s < 0 || s >= num_grid_ || l < 0 || l >= num_splines_)
            throw std::out_of_range("ActivationCoefficients: index out of range");
        return static_cast<std::size_t>(s) * num_splines_ + l;
    }

private:
    int num_grid_;
    int num_splines_;
    std::vector<double> c_;
};

/// x * sigmoid(x), written to underflow gracefully for very negative x.
inline double silu(double x) {
    if (x >= 0.0) return x / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return x * e / (1.0 + e);
}

/// Spline-only part Sum_k c_k B_k(x).
inline double spline_part_eval(const SplineGrid& grid, const ActivationCoefficients& coeffs,
                               double x) {
    if (static_cast<int>(coeffs.size()) != grid.num_basis())
        throw std::invalid_argument("spline_part_eval: coefficient/grid shape mismatch");
    const int span = grid.find_span(x);
    const auto values = grid.nonzero_basis(x, span);
    const int first = span - SplineGrid::kDegree;
    double acc = 0.0;
    for (int r = 0; r <= SplineGrid::kDegree; ++r)
        acc += coeffs[static_cast<std::size_t>(first + r)] * values[static_cast<std::size_t>(r)];
    return acc;
}

/// Trainable activation silu(x) + Sum_k c_k B_k(x).
inline double activation_eval(const SplineGrid& grid, const ActivationCoefficients& coeffs,
                              double x) {
    return silu(x) + spline_part_eval(grid, coeffs, x);
}

/// Grows the basis to new_num_splines (same num_grid) and transfers the
/// coefficients by a least-squares fit of the old spline part sampled at
/// 512 uniform points in [0,1]. Shrinking is rejected.
inline std::pair<SplineGrid, ActivationCoefficients> refine(const SplineGrid& grid,
                                                            const ActivationCoefficients& coeffs,
                                                            int new_num_splines) {
    if (new_num_splines <= grid.num_splines())
        throw std::invalid_argument("refine: basis may only grow");
    SplineGrid new_grid(grid.num_grid(), new_num_splines);
    ActivationCoefficients new_coeffs(new_grid.num_grid(), new_grid.num_splines());

    constexpr int kSamples = 512;
    const int n = new_grid.num_basis();
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(kSamples, n);
    Eigen::VectorXd rhs(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        const double x = static_cast<double>(i) / (kSamples - 1);
        rhs[i] = spline_part_eval(grid, coeffs, x);
        const int span = new_grid.find_span(x);
        const auto values = new_grid.nonzero_basis(x, span);
        const int first = span - SplineGrid::kDegree;
        for (int r = 0; r <= SplineGrid::kDegree; ++r)
            design(i, first + r) = values[static_cast<std::size_t>(r)];
    }
    const Eigen::VectorXd solution =
        design.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
    for (int k = 0; k < n; ++k) new_coeffs[static_cast<std::size_t>(k)] = solution[k];
    return {std::move(new_grid), std::move(new_coeffs)};
}

}  // namespace vqkan
