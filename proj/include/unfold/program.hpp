#pragma once

// Solver-neutral description of the convex programs used by the interval
// constructions, and the solve() contract they rely on.

#include "unfold/detail/socp.hpp"
#include "unfold/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace unfold {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Sense { minimize, maximize };

/// ||F x - g||_2 <= f'x + d. An empty f means f = 0.
struct ConeConstraint {
    Mat F;
    Vec g;
    Vec f;
    double d = 0.0;
};

/// weight * ||x[rows]||_2 added to the objective.
struct NormTerm {
    double weight = 0.0;
    std::vector<Index> rows;
};

struct ConicProgram {
    Index num_vars = 0;
    Sense sense = Sense::minimize;
    Vec objective;
    std::vector<ConeConstraint> cones;
    SparseMat G;  // G x <= h
    Vec h;
    SparseMat E;  // E x = d
    Vec d;
    std::vector<NormTerm> norm_terms;

    explicit ConicProgram(Index n = 0) : num_vars(n), objective(Vec::Zero(n)), G(0, n), h(0), E(0, n), d(0) {}

    /// ||F x - g||^2 <= radius2
    void add_ball(Mat F, Vec g, double radius2) {
        if (radius2 < 0.0) throw ConfigError("ball radius^2 must be non-negative");
        ConeConstraint c;
        c.F = std::move(F);
        c.g = std::move(g);
        c.d = std::sqrt(radius2);
        cones.push_back(std::move(c));
    }

    void validate() const {
        if (objective.size() != num_vars) throw DimensionError("objective length differs from num_vars");
        for (const auto& c : cones) {
            if (c.F.cols() != num_vars || c.F.rows() != c.g.size())
                throw DimensionError("cone constraint shape mismatch");
            if (c.f.size() != 0 && c.f.size() != num_vars) throw DimensionError("cone constraint f length mismatch");
        }
        if (G.cols() != num_vars || G.rows() != h.size()) throw DimensionError("inequality block shape mismatch");
        if (E.cols() != num_vars || E.rows() != d.size()) throw DimensionError("equality block shape mismatch");
        for (const auto& t : norm_terms) {
            if (t.rows.empty()) throw DimensionError("norm term without rows");
            for (Index r : t.rows)
                if (r < 0 || r >= num_vars) throw DimensionError("norm term row out of range");
            const double signed_weight = sense == Sense::minimize ? t.weight : -t.weight;
            if (signed_weight < 0.0) throw ConfigError("norm term makes the objective non-convex");
        }
    }

    double evaluate(const Vec& x) const {
        double v = objective.dot(x);
        for (const auto& t : norm_terms) {
            double sq = 0.0;
            for (Index r : t.rows) sq += x(r) * x(r);
            v += t.weight * std::sqrt(sq);
        }
        return v;
    }
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

inline std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

struct Solution {
    SolveStatus status = SolveStatus::numerical_failure;
    Vec x;
    double objective_value = std::numeric_limits<double>::quiet_NaN();
    double solver_tolerance = std::numeric_limits<double>::infinity();
    Vec inequality_duals;
    std::vector<Vec> cone_duals;
    Vec equality_duals;
    int iterations = 0;
};

struct SolverSettings {
    double tolerance = 1e-9;
    double inaccurate_tolerance = 1e-6;
    int max_iterations = 150;
};

namespace detail {

inline StandardForm to_standard_form(const ConicProgram& p) {
    const Index n = p.num_vars;
    const Index nt = static_cast<Index>(p.norm_terms.size());
    const Index N = n + nt;
    const double sign = p.sense == Sense::minimize ? 1.0 : -1.0;
    StandardForm sf;
    sf.c = Vec::Zero(N);
    sf.c.head(n) = sign * p.objective;
    for (Index k = 0; k < nt; ++k) sf.c(n + k) = sign * p.norm_terms[static_cast<std::size_t>(k)].weight;

    sf.G_lin.resize(p.G.rows(), N);
    {
        std::vector<Eigen::Triplet<double>> trips;
        for (Index r = 0; r < p.G.outerSize(); ++r)
            for (SparseMat::InnerIterator it(p.G, r); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
        sf.G_lin.setFromTriplets(trips.begin(), trips.end());
    }
    sf.h_lin = p.h;

    for (const auto& c : p.cones) {
        Mat Gb = Mat::Zero(c.F.rows() + 1, N);
        if (c.f.size()) Gb.row(0).head(n) = -c.f.transpose();
        Gb.bottomLeftCorner(c.F.rows(), n) = c.F;
        Vec hb(c.F.rows() + 1);
        hb(0) = c.d;
        hb.tail(c.F.rows()) = c.g;
        sf.G_soc.push_back(std::move(Gb));
        sf.h_soc.push_back(std::move(hb));
    }
    for (Index k = 0; k < nt; ++k) {
        const auto& t = p.norm_terms[static_cast<std::size_t>(k)];
        const Index kb = static_cast<Index>(t.rows.size()) + 1;
        Mat Gb = Mat::Zero(kb, N);
        Gb(0, n + k) = -1.0;
        for (std::size_t i = 0; i < t.rows.size(); ++i) Gb(static_cast<Index>(i) + 1, t.rows[i]) = -1.0;
        sf.G_soc.push_back(std::move(Gb));
        sf.h_soc.push_back(Vec::Zero(kb));
    }

    sf.E.resize(p.E.rows(), N);
    {
        std::vector<Eigen::Triplet<double>> trips;
        for (Index r = 0; r < p.E.outerSize(); ++r)
            for (SparseMat::InnerIterator it(p.E, r); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
        sf.E.setFromTriplets(trips.begin(), trips.end());
    }
    sf.b = p.d;
    return sf;
}

}  // namespace detail

/// Solves a conic program. Deterministic for identical inputs and settings;
/// holds no state between calls.
inline Solution solve(const ConicProgram& p, const SolverSettings& settings = {}) {
    p.validate();
    const detail::StandardForm sf = detail::to_standard_form(p);
    detail::IpmSettings ipm;
    ipm.feastol = ipm.abstol = ipm.reltol = settings.tolerance;
    ipm.feastol_inaccurate = ipm.abstol_inaccurate = ipm.reltol_inaccurate = settings.inaccurate_tolerance;
    ipm.max_iterations = settings.max_iterations;
    const detail::IpmResult r = detail::solve_standard_form(sf, ipm);

    Solution sol;
    sol.iterations = r.iterations;
    const double inf = std::numeric_limits<double>::infinity();
    switch (r.status) {
        case detail::IpmStatus::optimal: {
            sol.status = SolveStatus::optimal;
            sol.x = r.x.head(p.num_vars);
            sol.objective_value = p.evaluate(sol.x);
            sol.solver_tolerance = r.achieved_tolerance;
            const Index l = p.G.rows();
            sol.inequality_duals = r.z.head(l);
            Index off = l;
            for (const auto& g : sf.G_soc) {
                sol.cone_duals.push_back(r.z.segment(off, g.rows()));
                off += g.rows();
            }
            sol.equality_duals = r.y;
            break;
        }
        case detail::IpmStatus::primal_infeasible:
            sol.status = SolveStatus::infeasible;
            sol.objective_value = p.sense == Sense::minimize ? inf : -inf;
            break;
        case detail::IpmStatus::dual_infeasible:
            sol.status = SolveStatus::unbounded;
            sol.objective_value = p.sense == Sense::minimize ? -inf : inf;
            if (r.x.size()) sol.x = r.x.head(p.num_vars);
            break;
        case detail::IpmStatus::numerical_failure:
            sol.status = SolveStatus::numerical_failure;
            sol.solver_tolerance = r.achieved_tolerance;
            break;
    }
    return sol;
}

}  // namespace unfold
