#pragma once

#include "unfold/errors.hpp"
#include "unfold/spline.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace unfold {

/// f(t) = N_c * sum_k pi_k N(t; mu_k, sigma_k^2).
struct GaussianMixture {
    double total = 1.0;
    std::vector<double> weights, means, variances;

    void validate() const {
        if (weights.empty() || weights.size() != means.size() || weights.size() != variances.size())
            throw DimensionError("mixture weights, means and variances must have equal nonzero length");
        double s = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            if (!(weights[k] >= 0.0)) throw ConfigError("mixture weights must be non-negative");
            if (!(variances[k] > 0.0)) throw ConfigError("mixture variances must be positive");
            s += weights[k];
        }
        if (std::abs(s - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
        if (!(total > 0.0)) throw ConfigError("mixture total must be positive");
    }

    double operator()(double t) const {
        double v = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const double z = t - means[k];
            v += weights[k] * std::exp(-0.5 * z * z / variances[k]) / std::sqrt(2.0 * std::numbers::pi * variances[k]);
        }
        return total * v;
    }
};

/// Cubic spline, optionally clamped from below at `floor` (normally zero).
struct TabulatedSpline {
    CubicSpline spline;
    bool clamp_at_zero = true;
    double floor = 0.0;

    double operator()(double t) const {
        const double v = spline(t);
        return clamp_at_zero ? std::max(v, floor) : v;
    }
};

/// Inclusive jet transverse momentum spectrum
/// f(p) = L N0 p^-alpha (1 - 2p/sqrt_s)^beta exp(-gamma/p).
struct PowerLawSpectrum {
    double luminosity = 5.1;
    double norm = 1e17;
    double alpha = 5.0;
    double beta = 10.0;
    double gamma = 10.0;
    double sqrt_s = 7000.0;

    void validate() const {
        if (!(luminosity > 0.0 && norm > 0.0 && sqrt_s > 0.0)) throw ConfigError("spectrum scale parameters must be positive");
    }

    double operator()(double p) const {
        if (!(p > 0.0)) return 0.0;
        const double x = 1.0 - 2.0 * p / sqrt_s;
        if (x <= 0.0) return 0.0;
        return luminosity * norm * std::pow(p, -alpha) * std::pow(x, beta) * std::exp(-gamma / p);
    }
};

class IntensityFunction {
public:
    using Variant = std::variant<GaussianMixture, TabulatedSpline, PowerLawSpectrum>;

    IntensityFunction() : v_(GaussianMixture{1.0, {1.0}, {0.0}, {1.0}}) {}
    IntensityFunction(GaussianMixture g, std::string label = "gmm") : v_(std::move(g)), label_(std::move(label)) {
        std::get<GaussianMixture>(v_).validate();
    }
    IntensityFunction(TabulatedSpline s, std::string label = "spline") : v_(std::move(s)), label_(std::move(label)) {}
    IntensityFunction(PowerLawSpectrum p, std::string label = "spectrum") : v_(std::move(p)), label_(std::move(label)) {
        std::get<PowerLawSpectrum>(v_).validate();
    }

    double operator()(double t) const {
        return std::visit([t](const auto& f) { return f(t); }, v_);
    }

    const Variant& variant() const { return v_; }
    const std::string& label() const { return label_; }

private:
    Variant v_;
    std::string label_ = "gmm";
};

}  // namespace unfold
