#pragma once

#include "unfold/errors.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace unfold {

/// k(s, t) = N(s; t, gamma^2).
struct HomoskedasticGaussian {
    double gamma = 1.0;
};

/// Parameters of sigma(p) = sqrt(N^2 + S^2 p + C^2 p^2).
struct CalorimeterResolution {
    double noise = 1.0;
    double stochastic = 1.0;
    double constant = 0.05;

    double operator()(double p) const {
        return std::sqrt(noise * noise + stochastic * stochastic * p + constant * constant * p * p);
    }
};

/// k(s, t) = N(s; t, sigma(t)^2).
struct HeteroskedasticGaussian {
    std::function<double(double)> sigma;
    std::string description;
    // set when sigma came from a serializable parametrization
    std::optional<CalorimeterResolution> calorimeter;
    std::optional<double> sqrt_scale;
};

inline HeteroskedasticGaussian calorimeter_kernel(CalorimeterResolution r) {
    return {r, "calorimeter", r, std::nullopt};
}

/// sigma(t) = scale * sqrt(t).
inline HeteroskedasticGaussian sqrt_kernel(double scale) {
    if (!(scale > 0.0)) throw ConfigError("resolution scale must be positive");
    return {[scale](double t) { return scale * std::sqrt(std::max(t, 0.0)); }, "sqrt", std::nullopt, scale};
}

using SmearingKernel = std::variant<HomoskedasticGaussian, HeteroskedasticGaussian>;

/// Standard deviation of the kernel at true point t.
inline double kernel_sigma(const SmearingKernel& k, double t) {
    if (const auto* h = std::get_if<HomoskedasticGaussian>(&k)) return h->gamma;
    return std::get<HeteroskedasticGaussian>(k).sigma(t);
}

inline void validate(const SmearingKernel& k) {
    if (const auto* h = std::get_if<HomoskedasticGaussian>(&k)) {
        if (!(h->gamma > 0.0)) throw ConfigError("kernel width must be positive");
    } else if (!std::get<HeteroskedasticGaussian>(k).sigma) {
        throw ConfigError("heteroskedastic kernel needs a sigma function");
    }
}

}  // namespace unfold
