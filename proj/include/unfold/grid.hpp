#pragma once

#include "unfold/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace unfold {

/// Partition of an interval into n contiguous bins.
class BinGrid {
public:
    BinGrid() = default;

    explicit BinGrid(std::vector<double> edges) : edges_(std::move(edges)) {
        if (edges_.size() < 2) throw DimensionError("bin grid needs at least two edges");
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            if (!std::isfinite(edges_[i])) throw ConfigError("bin edge " + std::to_string(i) + " is not finite");
            if (i > 0 && !(edges_[i] > edges_[i - 1]))
                throw ConfigError("bin edges must be strictly increasing (edge " + std::to_string(i) + ")");
        }
    }

    static BinGrid uniform(double lo, double hi, std::size_t n) {
        if (n < 1) throw DimensionError("bin grid needs n >= 1");
        if (!(hi > lo)) throw ConfigError("bin grid needs hi > lo");
        std::vector<double> e(n + 1);
        for (std::size_t i = 0; i <= n; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
        e[n] = hi;
        return BinGrid(std::move(e));
    }

    std::size_t size() const { return edges_.empty() ? 0 : edges_.size() - 1; }
    double lower(std::size_t j) const { return edges_.at(j); }
    double upper(std::size_t j) const { return edges_.at(j + 1); }
    double width(std::size_t j) const { return upper(j) - lower(j); }
    double center(std::size_t j) const { return 0.5 * (lower(j) + upper(j)); }
    double front() const { return edges_.front(); }
    double back() const { return edges_.back(); }
    const std::vector<double>& edges() const { return edges_; }

    Eigen::VectorXd widths() const {
        Eigen::VectorXd w(static_cast<Eigen::Index>(size()));
        for (std::size_t j = 0; j < size(); ++j) w(static_cast<Eigen::Index>(j)) = width(j);
        return w;
    }

    bool uniform_spacing(double rel_tol = 1e-9) const {
        const double w0 = width(0);
        for (std::size_t j = 1; j < size(); ++j)
            if (std::abs(width(j) - w0) > rel_tol * std::abs(w0)) return false;
        return true;
    }

    bool operator==(const BinGrid&) const = default;

private:
    std::vector<double> edges_;
};

}  // namespace unfold
