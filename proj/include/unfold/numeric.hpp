#pragma once

// Distribution quantiles, Gaussian bin masses and vector-valued adaptive
// Gauss-Kronrod quadrature.

#include "unfold/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace unfold {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Standard normal quantile z_p.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal quantile level must be in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Chi-squared quantile with `dof` degrees of freedom.
inline double chi2_quantile(double dof, double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("chi-squared quantile level must be in (0, 1)");
    if (!(dof > 0.0)) throw ConfigError("chi-squared degrees of freedom must be positive");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// P(a < Z < b) for standard normal Z, accurate in both tails.
inline double normal_mass(double a, double b) {
    if (b <= a) return 0.0;
    const double r = 1.0 / std::sqrt(2.0);
    if (a >= 0.0) return 0.5 * (std::erfc(a * r) - std::erfc(b * r));
    if (b <= 0.0) return 0.5 * (std::erfc(-b * r) - std::erfc(-a * r));
    return 1.0 - 0.5 * (std::erfc(-a * r) + std::erfc(b * r));
}

struct QuadratureSettings {
    double rel_tol = 1e-10;
    // intervals refined before giving up
    int max_intervals = 4000;
};

/// Adaptive Gauss-Kronrod (7/15) integration of a vector-valued integrand.
/// The error target is rel_tol * |I(0)| when `scale_component0` is set (the
/// first component bounds all others), otherwise rel_tol * ||I||_inf.
template <class F>
Eigen::VectorXd integrate_vector(F&& f, double a, double b, Eigen::Index dim, const QuadratureSettings& qs = {},
                                 bool scale_component0 = false) {
    using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
    static const auto& abscissa = Rule::abscissa();
    static const auto& kweights = Rule::weights();
    static const auto& gweights = boost::math::quadrature::gauss<double, 7>::weights();

    struct Piece {
        double a, b;
        Eigen::VectorXd value;
        double error;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    auto eval = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
        Eigen::VectorXd k = Eigen::VectorXd::Zero(dim), g = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i < abscissa.size(); ++i) {
            const double x = abscissa[i];
            if (x == 0.0) {
                Eigen::VectorXd fc = f(c);
                k += kweights[i] * fc;
                if (i % 2 == 0) g += gweights[i / 2] * fc;
            } else {
                Eigen::VectorXd fl = f(c - h * x), fr = f(c + h * x);
                k += kweights[i] * (fl + fr);
                if (i % 2 == 0) g += gweights[i / 2] * (fl + fr);
            }
        }
        Piece p{lo, hi, h * k, (h * (k - g)).lpNorm<Eigen::Infinity>()};
        return p;
    };
    if (!(b > a)) return Eigen::VectorXd::Zero(dim);

    std::priority_queue<Piece> heap;
    Piece first = eval(a, b);
    Eigen::VectorXd total = first.value;
    double err = first.error;
    heap.push(std::move(first));
    auto target = [&] {
        const double s = scale_component0 ? std::abs(total(0)) : total.lpNorm<Eigen::Infinity>();
        return std::max(qs.rel_tol * s, 1e4 * std::numeric_limits<double>::min());
    };
    int count = 1;
    while (err > target()) {
        if (count >= qs.max_intervals) {
            std::ostringstream os;
            os << "quadrature did not converge on [" << a << ", " << b << "]: achieved relative error "
               << err / std::max(target() / qs.rel_tol, std::numeric_limits<double>::min());
            throw NumericalError(os.str());
        }
        Piece worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Piece l = eval(worst.a, mid), r = eval(mid, worst.b);
        total += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        heap.push(std::move(l));
        heap.push(std::move(r));
        ++count;
        if (count % 64 == 0) {
            // resum to avoid drift
            std::priority_queue<Piece> copy = heap;
            total.setZero();
            err = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                err += copy.top().error;
                copy.pop();
            }
        }
    }
    return total;
}

/// Scalar convenience wrapper around integrate_vector.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureSettings& qs = {}) {
    auto fv = [&](double t) {
        Eigen::VectorXd v(1);
        v(0) = f(t);
        return v;
    };
    return integrate_vector(fv, a, b, 1, qs)(0);
}

}  // namespace unfold
