#pragma once

// Polyhedral shape constraints A lambda <= b.

#include "unfold/errors.hpp"
#include "unfold/grid.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace unfold {

struct PolyhedralConstraints {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    // one of "N", "D", "C" per row
    std::vector<std::string> labels;

    PolyhedralConstraints() = default;
    explicit PolyhedralConstraints(Eigen::Index n) : A(0, n), b(0) {}
    PolyhedralConstraints(Eigen::MatrixXd A_, Eigen::VectorXd b_, std::vector<std::string> labels_)
        : A(std::move(A_)), b(std::move(b_)), labels(std::move(labels_)) {
        if (A.rows() != b.size() || labels.size() != static_cast<std::size_t>(b.size()))
            throw DimensionError("constraints: A, b and labels must have matching row counts");
    }

    Eigen::Index rows() const { return A.rows(); }
    Eigen::Index cols() const { return A.cols(); }
    bool empty() const { return A.rows() == 0; }

    /// Largest violation max_i (A lambda - b)_i, or -inf with no rows.
    double max_violation(const Eigen::VectorXd& lambda) const {
        if (lambda.size() != A.cols()) throw DimensionError("constraints: lambda length mismatch");
        if (empty()) return -std::numeric_limits<double>::infinity();
        return (A * lambda - b).maxCoeff();
    }
    bool satisfied(const Eigen::VectorXd& lambda, double tol = 0.0) const { return max_violation(lambda) <= tol; }
};

/// A = -I, b = 0.
inline PolyhedralConstraints nonneg(Eigen::Index n) {
    if (n < 1) throw DimensionError("nonneg needs n >= 1");
    return {-Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n), std::vector<std::string>(static_cast<std::size_t>(n), "N")};
}

/// Rows -lambda_i + lambda_{i+1} <= 0.
inline PolyhedralConstraints decreasing(Eigen::Index n) {
    if (n < 2) throw DimensionError("decreasing needs n >= 2");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n - 1, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        A(i, i) = -1.0;
        A(i, i + 1) = 1.0;
    }
    return {std::move(A), Eigen::VectorXd::Zero(n - 1), std::vector<std::string>(static_cast<std::size_t>(n - 1), "D")};
}

/// Discrete convexity. On a uniform grid (or with no grid) the rows are the
/// stencil [-1, 2, -1]. With a non-uniform grid, the rows are second divided
/// differences of the bin densities lambda_j / w_j at the bin centers, scaled
/// so that the uniform case reduces to the same stencil.
inline PolyhedralConstraints convexity(Eigen::Index n, const std::optional<BinGrid>& grid = std::nullopt) {
    if (n < 3) throw DimensionError("convexity needs n >= 3");
    if (grid && static_cast<Eigen::Index>(grid->size()) != n) throw DimensionError("convexity: grid size does not match n");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n - 2, n);
    const bool uniform = !grid || grid->uniform_spacing();
    for (Eigen::Index i = 0; i + 2 < n; ++i) {
        if (uniform) {
            A(i, i) = -1.0;
            A(i, i + 1) = 2.0;
            A(i, i + 2) = -1.0;
            continue;
        }
        const auto j = static_cast<std::size_t>(i);
        const double w0 = grid->width(j), w1 = grid->width(j + 1), w2 = grid->width(j + 2);
        const double h1 = grid->center(j + 1) - grid->center(j);
        const double h2 = grid->center(j + 2) - grid->center(j + 1);
        A(i, i) = -2.0 * h2 / (h1 + h2) * w1 / w0;
        A(i, i + 1) = 2.0;
        A(i, i + 2) = -2.0 * h1 / (h1 + h2) * w1 / w2;
    }
    return {std::move(A), Eigen::VectorXd::Zero(n - 2), std::vector<std::string>(static_cast<std::size_t>(n - 2), "C")};
}

/// Vertical concatenation. An empty list gives an unconstrained system with
/// zero columns; pass `n` to fix the column count in that case.
inline PolyhedralConstraints stack(const std::vector<PolyhedralConstraints>& parts, Eigen::Index n = 0) {
    if (parts.empty()) return PolyhedralConstraints(n);
    const Eigen::Index cols = parts.front().cols();
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw DimensionError("stack: constraint systems have different numbers of columns");
        rows += p.rows();
    }
    Eigen::MatrixXd A(rows, cols);
    Eigen::VectorXd b(rows);
    std::vector<std::string> labels;
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        A.middleRows(r, p.rows()) = p.A;
        b.segment(r, p.rows()) = p.b;
        labels.insert(labels.end(), p.labels.begin(), p.labels.end());
        r += p.rows();
    }
    return {std::move(A), std::move(b), std::move(labels)};
}

/// Builds "none", "N", "ND" or "NDC".
inline PolyhedralConstraints constraints_by_name(const std::string& name, Eigen::Index n,
                                                 const std::optional<BinGrid>& grid = std::nullopt) {
    if (name == "none") return PolyhedralConstraints(n);
    if (name == "N") return nonneg(n);
    if (name == "ND") return stack({nonneg(n), decreasing(n)});
    if (name == "NDC") return stack({nonneg(n), decreasing(n), convexity(n, grid)});
    throw ConfigError("unknown constraint setup '" + name + "' (expected none, N, ND or NDC)");
}

}  // namespace unfold
