#pragma once

// Forward model: bin means, response matrices, Poisson means and whitening.

#include "unfold/detail/parallel.hpp"
#include "unfold/errors.hpp"
#include "unfold/grid.hpp"
#include "unfold/intensity.hpp"
#include "unfold/kernel.hpp"
#include "unfold/numeric.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>

namespace unfold {

struct ResponseMatrix {
    Eigen::MatrixXd K;
    BinGrid true_grid;
    BinGrid smeared_grid;
    std::string ansatz_id;

    Eigen::Index rows() const { return K.rows(); }
    Eigen::Index cols() const { return K.cols(); }
};

/// lambda_j = integral of f over true bin j.
inline Eigen::VectorXd bin_means(const IntensityFunction& f, const BinGrid& grid, const QuadratureSettings& qs = {}) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd out(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        out(j) = std::max(0.0, integrate([&](double t) { return f(t); }, grid.lower(jj), grid.upper(jj), qs));
    }
    return out;
}

/// K_ij = P(Y in S_i | X in T_j) under the ansatz restricted to T_j. Events
/// smeared outside the smeared grid are lost, so columns may sum to less
/// than one.
inline ResponseMatrix response_matrix(const SmearingKernel& kernel, const IntensityFunction& ansatz,
                                      const BinGrid& true_grid, const BinGrid& smeared_grid,
                                      const QuadratureSettings& qs = {}, unsigned threads = 1) {
    validate(kernel);
    const auto m = static_cast<Eigen::Index>(smeared_grid.size());
    const auto n = static_cast<Eigen::Index>(true_grid.size());
    ResponseMatrix R{Eigen::MatrixXd::Zero(m, n), true_grid, smeared_grid, ansatz.label()};
    const auto& se = smeared_grid.edges();

    detail::parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t j) {
        auto integrand = [&](double t) {
            Eigen::VectorXd v(m + 1);
            const double f = ansatz(t);
            v(0) = f;
            const double sd = kernel_sigma(kernel, t);
            if (!(sd > 0.0)) throw ConfigError("kernel standard deviation must be positive at t = " + std::to_string(t));
            for (Eigen::Index i = 0; i < m; ++i) {
                const auto ii = static_cast<std::size_t>(i);
                v(i + 1) = f == 0.0 ? 0.0 : f * normal_mass((se[ii] - t) / sd, (se[ii + 1] - t) / sd);
            }
            return v;
        };
        const Eigen::VectorXd I = integrate_vector(integrand, true_grid.lower(j), true_grid.upper(j), m + 1, qs, true);
        if (!(I(0) > 0.0)) throw DegenerateBinError(j, "ansatz has no mass in this true bin");
        for (Eigen::Index i = 0; i < m; ++i)
            R.K(i, static_cast<Eigen::Index>(j)) = std::clamp(I(i + 1) / I(0), 0.0, 1.0);
    });
    return R;
}

/// mu = K lambda.
inline Eigen::VectorXd forward_means(const ResponseMatrix& R, const Eigen::VectorXd& lambda) {
    if (lambda.size() != R.cols())
        throw DimensionError("forward_means: lambda has length " + std::to_string(lambda.size()) + ", expected " +
                             std::to_string(R.cols()));
    return R.K * lambda;
}

/// y ~ N(K lambda, Sigma) with Sigma diagonal; an empty covariance means identity.
struct GaussianModel {
    Eigen::MatrixXd K;
    Eigen::VectorXd y;
    std::optional<Eigen::VectorXd> covariance;

    void validate() const {
        if (K.rows() != y.size()) throw DimensionError("model: K has " + std::to_string(K.rows()) + " rows but y has length " + std::to_string(y.size()));
        if (covariance && covariance->size() != y.size()) throw DimensionError("model: covariance length does not match y");
    }
    bool whitened() const { return !covariance.has_value(); }
};

/// Returns (L^-1 K, L^-1 y, I) with L = diag(sqrt(Sigma)).
inline GaussianModel whiten(const GaussianModel& model) {
    model.validate();
    if (!model.covariance) return model;
    const Eigen::VectorXd& s = *model.covariance;
    Eigen::VectorXd inv(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (!(s(i) > 0.0) || !std::isfinite(s(i)))
            throw CovarianceError(static_cast<std::size_t>(i), "variance must be positive and finite");
        inv(i) = 1.0 / std::sqrt(s(i));
    }
    return {inv.asDiagonal() * model.K, inv.cwiseProduct(model.y), std::nullopt};
}

}  // namespace unfold
