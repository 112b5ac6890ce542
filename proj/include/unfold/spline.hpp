#pragma once

#include "unfold/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

namespace unfold {

/// Natural cubic interpolating spline. Outside the knot range the end
/// polynomials are extended.
class CubicSpline {
public:
    CubicSpline() = default;

    CubicSpline(std::vector<double> knots, std::vector<double> values)
        : x_(std::move(knots)), y_(std::move(values)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw DimensionError("cubic spline needs >= 2 knots and matching values");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw ConfigError("spline knots must be strictly increasing");
        m_.assign(n, 0.0);
        if (n == 2) return;
        // tridiagonal system for the second derivatives, natural end conditions
        const std::size_t k = n - 2;
        std::vector<double> diag(k), upper(k), rhs(k);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
            diag[i - 1] = 2.0 * (h0 + h1);
            upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
        }
        // Thomas algorithm; the matrix is symmetric with sub-diagonal h_{i}
        for (std::size_t i = 1; i < k; ++i) {
            const double sub = x_[i + 1] - x_[i];
            const double w = sub / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        std::vector<double> sol(k);
        sol[k - 1] = rhs[k - 1] / diag[k - 1];
        for (std::size_t i = k - 1; i-- > 0;) sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
        for (std::size_t i = 0; i < k; ++i) m_[i + 1] = sol[i];
    }

    double operator()(double t) const {
        const std::size_t n = x_.size();
        std::size_t i;
        if (t <= x_.front())
            i = 0;
        else if (t >= x_.back())
            i = n - 2;
        else
            i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
        return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    }

    const std::vector<double>& knots() const { return x_; }
    const std::vector<double>& values() const { return y_; }

private:
    std::vector<double> x_, y_, m_;
};

}  // namespace unfold
