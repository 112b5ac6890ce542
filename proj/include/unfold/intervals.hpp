#pragma once

// Interval constructions for h'lambda in a whitened model y = K lambda + eps,
// eps ~ N(0, I), with lambda restricted to {A lambda <= b}.

#include "unfold/constraints.hpp"
#include "unfold/errors.hpp"
#include "unfold/model.hpp"
#include "unfold/numeric.hpp"
#include "unfold/program.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>

namespace unfold {

struct FunctionalSpec {
    Vec h;
    std::string label;

    void validate(Index n) const {
        if (h.size() != n) throw DimensionError("functional '" + label + "' has length " + std::to_string(h.size()) + ", expected " + std::to_string(n));
        if (!h.allFinite()) throw ConfigError("functional '" + label + "' has non-finite entries");
    }
};

enum class Method { OSB, PO, LS, SSB, MinimaxLower, MinimaxUpper };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::OSB: return "OSB";
        case Method::PO: return "PO";
        case Method::LS: return "LS";
        case Method::SSB: return "SSB";
        case Method::MinimaxLower: return "MinimaxLower";
        case Method::MinimaxUpper: return "MinimaxUpper";
    }
    return "unknown";
}

inline Method method_from_string(const std::string& s) {
    for (Method m : {Method::OSB, Method::PO, Method::LS, Method::SSB, Method::MinimaxLower, Method::MinimaxUpper})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown method '" + s + "'");
}

struct IntervalDiagnostics {
    std::optional<double> slack_s2;
    std::optional<double> psi2;
    bool pathological = false;
    // "ok", "infeasible" (empty feasible set) or "unbounded" (an infinite endpoint)
    std::string status = "ok";
    std::optional<Vec> dual_vars;
};

struct IntervalResult {
    double lower = std::numeric_limits<double>::quiet_NaN();
    double upper = std::numeric_limits<double>::quiet_NaN();
    Method method = Method::OSB;
    double alpha = 0.05;
    IntervalDiagnostics diagnostics;

    double width() const { return upper - lower; }
    bool covers(double theta) const { return lower <= theta && theta <= upper; }
};

/// Affine interval rule [w_l'y - z||w_l|| - b'c_l, w_u'y + z||w_u|| + b'c_u].
struct DecisionRule {
    Vec w_lower, w_upper;
    Vec c_lower, c_upper;
    Vec b;
    double alpha = 0.05;
    std::string provenance;
    std::string functional;
};

struct Prior {
    Vec mean;
    std::string label;
};

struct IntervalOptions {
    SolverSettings solver;
    // rescale lambda so the columns of K have unit norm before solving
    bool column_scaling = true;
    // solve OSB, SSB and slack through their dual programs; for the
    // orthant constraint these have one variable per smeared bin
    bool prefer_dual = false;
};

namespace detail {

inline void require_whitened(const GaussianModel& model) {
    model.validate();
    if (!model.whitened()) throw ConfigError("interval methods need a whitened model (identity covariance)");
}

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
}

inline void check_shapes(const Mat& K, const FunctionalSpec& h, const PolyhedralConstraints& C) {
    h.validate(K.cols());
    if (C.cols() != K.cols() && !(C.empty() && C.cols() == 0))
        throw DimensionError("constraints have " + std::to_string(C.cols()) + " columns, expected " + std::to_string(K.cols()));
}

inline Mat constraint_matrix(const PolyhedralConstraints& C, Index n) {
    return C.empty() ? Mat(0, n) : C.A;
}

/// lambda = D u with D_j = 1 / ||K_j||.
inline Vec column_scale(const Mat& K, bool enabled) {
    Vec D = Vec::Ones(K.cols());
    if (!enabled) return D;
    for (Index j = 0; j < K.cols(); ++j) {
        const double nj = K.col(j).norm();
        if (nj > 0.0 && std::isfinite(nj)) D(j) = 1.0 / nj;
    }
    return D;
}

inline SparseMat sparse_of(const Mat& M) {
    SparseMat S = M.sparseView(0.0, 0.0);
    S.makeCompressed();
    return S;
}

inline void throw_failure(const std::string& what, const Solution& s) {
    throw NumericalError(what + ": solver reported " + to_string(s.status) + " (achieved tolerance " +
                         std::to_string(s.solver_tolerance) + ")");
}

inline Solution ball_endpoint_once(const Mat& K, const Vec& y, const Vec& h, const Mat& A, const Vec& b, double radius2,
                                   Sense sense, bool scaling, const SolverSettings& settings) {
    const Index n = K.cols();
    const Vec D = column_scale(K, scaling);
    ConicProgram p(n);
    p.sense = sense;
    p.objective = D.cwiseProduct(h);
    p.add_ball(K * D.asDiagonal(), y, radius2);
    if (A.rows() > 0) {
        p.G = sparse_of(A * D.asDiagonal());
        p.h = b;
    }
    Solution s = solve(p, settings);
    if (s.status == SolveStatus::optimal) s.x = D.cwiseProduct(s.x);
    return s;
}

/// min or max of h'lambda over ||y - K lambda||^2 <= radius2, A lambda <= b.
/// A stalled solve is retried once with the column scaling switched.
inline Solution ball_endpoint(const Mat& K, const Vec& y, const Vec& h, const Mat& A, const Vec& b, double radius2,
                              Sense sense, const IntervalOptions& opt) {
    Solution s = ball_endpoint_once(K, y, h, A, b, radius2, sense, opt.column_scaling, opt.solver);
    if (s.status != SolveStatus::numerical_failure) return s;
    Solution t = ball_endpoint_once(K, y, h, A, b, radius2, sense, !opt.column_scaling, opt.solver);
    return t.status == SolveStatus::numerical_failure ? s : t;
}

/// True for the plain orthant constraint A = -I, b = 0.
inline bool is_nonneg(const Mat& A, const Vec& b) {
    return A.rows() > 0 && A.rows() == A.cols() && A.isApprox(-Mat::Identity(A.rows(), A.cols()), 0.0) && b.isZero(0.0);
}

/// Dual form of the lower endpoint with data y and radius psi:
///   max w'y - psi ||w|| - b'c  s.t.  K'w - A'c = h, c >= 0,
/// or, for the upper endpoint,
///   min w'y + psi ||w|| + b'c  s.t.  K'w + A'c = h, c >= 0.
/// Variables are x = (w, c).
inline Solution dual_endpoint_once(const Mat& K, const Vec& y, const Vec& h, const Mat& A, const Vec& b, double psi,
                                   bool lower, const IntervalOptions& opt) {
    const Index m = K.rows(), n = K.cols(), q = A.rows();
    const Vec D = column_scale(K, opt.column_scaling);
    if (is_nonneg(A, b)) {
        // c = +-(h - K'w) is determined by w, leaving K'w <= h (lower) or
        // K'w >= h (upper)
        ConicProgram p(m);
        p.sense = lower ? Sense::maximize : Sense::minimize;
        p.objective = y;
        if (psi > 0.0) {
            NormTerm t;
            t.weight = lower ? -psi : psi;
            for (Index i = 0; i < m; ++i) t.rows.push_back(i);
            p.norm_terms.push_back(std::move(t));
        }
        const double sgn = lower ? 1.0 : -1.0;
        p.G = sparse_of(sgn * (D.asDiagonal() * K.transpose()));
        p.h = sgn * D.cwiseProduct(h);
        Solution s = solve(p, opt.solver);
        if (s.status == SolveStatus::optimal) {
            Vec x(m + q);
            x.head(m) = s.x;
            x.tail(q) = (sgn * (h - K.transpose() * s.x)).cwiseMax(0.0);
            s.x = std::move(x);
        }
        return s;
    }
    ConicProgram p(m + q);
    p.sense = lower ? Sense::maximize : Sense::minimize;
    p.objective.head(m) = y;
    if (q > 0) p.objective.tail(q) = lower ? Vec(-b) : b;
    NormTerm t;
    t.weight = lower ? -psi : psi;
    for (Index i = 0; i < m; ++i) t.rows.push_back(i);
    if (psi > 0.0) p.norm_terms.push_back(std::move(t));
    Mat E(n, m + q);
    E.leftCols(m) = D.asDiagonal() * K.transpose();
    if (q > 0) E.rightCols(q) = (lower ? -1.0 : 1.0) * (D.asDiagonal() * A.transpose());
    p.E = sparse_of(E);
    p.d = D.cwiseProduct(h);
    if (q > 0) {
        Mat G = Mat::Zero(q, m + q);
        G.rightCols(q) = -Mat::Identity(q, q);
        p.G = sparse_of(G);
        p.h = Vec::Zero(q);
    }
    return solve(p, opt.solver);
}

inline Solution dual_endpoint(const Mat& K, const Vec& y, const Vec& h, const Mat& A, const Vec& b, double psi, bool lower,
                              const IntervalOptions& opt) {
    Solution s = dual_endpoint_once(K, y, h, A, b, psi, lower, opt);
    if (s.status != SolveStatus::numerical_failure) return s;
    IntervalOptions alt = opt;
    alt.column_scaling = !opt.column_scaling;
    Solution t = dual_endpoint_once(K, y, h, A, b, psi, lower, alt);
    return t.status == SolveStatus::numerical_failure ? s : t;
}

/// Dual certificate (w, c) read off the primal ball program
///   min / max h'lambda  s.t.  ||y - K lambda|| <= psi, A lambda <= b.
/// For the minimum, stationarity gives K'(-z_ball) - A'z_lin = h, so
/// w = -z_ball; for the maximum w = z_ball. Same output layout as dual_endpoint.
inline Solution certificate_from_primal(const Mat& K, const Vec& y, const Vec& h, const Mat& A, const Vec& b, double psi,
                                        bool lower, const IntervalOptions& opt) {
    const Index m = K.rows(), q = A.rows();
    Solution s = ball_endpoint(K, y, h, A, b, psi * psi, lower ? Sense::minimize : Sense::maximize, opt);
    if (s.status != SolveStatus::optimal) return s;
    const Vec& zc = s.cone_duals.front();
    Vec x(m + q);
    x.head(m) = (lower ? -1.0 : 1.0) * zc.tail(m);
    if (q > 0) x.tail(q) = s.inequality_duals.cwiseMax(0.0);
    s.x = std::move(x);
    return s;
}

}  // namespace detail

/// s^2 = min over A lambda <= b of ||y - K lambda||^2.
inline double slack(const GaussianModel& model, const PolyhedralConstraints& C, const IntervalOptions& opt = {}) {
    detail::require_whitened(model);
    const Mat& K = model.K;
    const Index n = K.cols();
    if (C.cols() != n && !(C.empty() && C.cols() == 0)) throw DimensionError("slack: constraint column count mismatch");
    if (C.empty()) {
        // unconstrained least squares; the residual is orthogonal to range(K)
        const Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
        const Vec r = model.y - K * cod.solve(model.y);
        return r.squaredNorm();
    }
    const Vec D = detail::column_scale(K, opt.column_scaling);
    if (opt.prefer_dual && detail::is_nonneg(C.A, C.b) && n > K.rows()) {
        // min over lambda >= 0 of ||y - K lambda|| = max w'y s.t. ||w|| <= 1, K'w <= 0
        ConicProgram p(K.rows());
        p.sense = Sense::maximize;
        p.objective = model.y;
        p.add_ball(Mat::Identity(K.rows(), K.rows()), Vec::Zero(K.rows()), 1.0);
        p.G = detail::sparse_of(D.asDiagonal() * K.transpose());
        p.h = Vec::Zero(n);
        const Solution s = solve(p, opt.solver);
        if (s.status != SolveStatus::optimal) detail::throw_failure("slack", s);
        const double v = std::max(s.objective_value, 0.0);
        return v * v;
    }
    // variables (u, t): min t s.t. ||K D u - y|| <= t, A D u <= b
    ConicProgram p(n + 1);
    p.objective(n) = 1.0;
    ConeConstraint cone;
    cone.F = Mat::Zero(K.rows(), n + 1);
    cone.F.leftCols(n) = K * D.asDiagonal();
    cone.g = model.y;
    cone.f = Vec::Zero(n + 1);
    cone.f(n) = 1.0;
    p.cones.push_back(std::move(cone));
    Mat G = Mat::Zero(C.rows(), n + 1);
    G.leftCols(n) = C.A * D.asDiagonal();
    p.G = detail::sparse_of(G);
    p.h = C.b;
    const Solution s = solve(p, opt.solver);
    if (s.status == SolveStatus::infeasible) throw InfeasibleError("slack: constraint set is empty");
    if (s.status != SolveStatus::optimal) detail::throw_failure("slack", s);
    const Vec lambda = D.cwiseProduct(s.x.head(n));
    // the residual at the returned point is an upper bound on the optimum
    const double at_point = (model.y - K * lambda).squaredNorm();
    const double t = std::max(s.x(n), 0.0);
    return std::max(at_point, t * t);
}

namespace detail {

/// Fills r.lower / r.upper from the dual programs with radius psi. An
/// infeasible dual means an unbounded endpoint; an unbounded dual means the
/// primal set is empty.
inline void dual_ball_endpoints(IntervalResult& r, const GaussianModel& model, const FunctionalSpec& h, const Mat& A,
                                const Vec& b, double psi, const IntervalOptions& opt) {
    const Solution lo = dual_endpoint(model.K, model.y, h.h, A, b, psi, true, opt);
    const Solution hi = dual_endpoint(model.K, model.y, h.h, A, b, psi, false, opt);
    auto endpoint = [&](const Solution& s, bool lower) {
        switch (s.status) {
            case SolveStatus::optimal: return s.objective_value;
            case SolveStatus::infeasible: return lower ? -kInf : kInf;
            case SolveStatus::unbounded: r.diagnostics.status = "infeasible"; return kNaN;
            case SolveStatus::numerical_failure: throw_failure(to_string(r.method) + " dual endpoint", s);
        }
        return kNaN;
    };
    r.lower = endpoint(lo, true);
    r.upper = endpoint(hi, false);
    if (r.diagnostics.status == "infeasible") {
        r.lower = r.upper = kNaN;
    } else if (!std::isfinite(r.lower) || !std::isfinite(r.upper)) {
        r.diagnostics.status = "unbounded";
    }
    if (lo.status == SolveStatus::optimal && hi.status == SolveStatus::optimal) {
        Vec duals(lo.x.size() + hi.x.size());
        duals << lo.x, hi.x;
        r.diagnostics.dual_vars = duals;
    }
}

inline IntervalResult ball_interval(const GaussianModel& model, const FunctionalSpec& h, const PolyhedralConstraints& C,
                                    double radius2, Method method, double alpha, const IntervalOptions& opt) {
    const Index n = model.K.cols();
    const Mat A = constraint_matrix(C, n);
    const Vec b = C.empty() ? Vec(0) : C.b;
    IntervalResult r;
    r.method = method;
    r.alpha = alpha;
    r.diagnostics.psi2 = radius2;
    if (opt.prefer_dual && is_nonneg(A, b) && model.K.cols() > model.K.rows()) {
        dual_ball_endpoints(r, model, h, A, b, std::sqrt(radius2), opt);
        return r;
    }
    const Solution lo = ball_endpoint(model.K, model.y, h.h, A, b, radius2, Sense::minimize, opt);
    const Solution hi = ball_endpoint(model.K, model.y, h.h, A, b, radius2, Sense::maximize, opt);
    for (const Solution* s : {&lo, &hi}) {
        if (s->status == SolveStatus::infeasible) {
            r.diagnostics.status = "infeasible";
            return r;
        }
        if (s->status == SolveStatus::numerical_failure) throw_failure(to_string(method) + " endpoint", *s);
    }
    r.lower = lo.objective_value;
    r.upper = hi.objective_value;
    if (!std::isfinite(r.lower) || !std::isfinite(r.upper)) r.diagnostics.status = "unbounded";
    return r;
}

}  // namespace detail

/// One-at-a-time strict bounds: extremes of h'lambda over
/// {||y - K lambda||^2 <= z_{1-alpha/2}^2 + s^2, A lambda <= b}.
inline IntervalResult osb_interval(const GaussianModel& model, const FunctionalSpec& h, const PolyhedralConstraints& C,
                                   double alpha, const IntervalOptions& opt = {}) {
    detail::require_whitened(model);
    detail::check_alpha(alpha);
    detail::check_shapes(model.K, h, C);
    const double s2 = slack(model, C, opt);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    IntervalResult r = detail::ball_interval(model, h, C, z * z + s2, Method::OSB, alpha, opt);
    r.diagnostics.slack_s2 = s2;
    return r;
}

/// OSB endpoints computed from the dual programs.
inline IntervalResult osb_dual_interval(const GaussianModel& model, const FunctionalSpec& h, const PolyhedralConstraints& C,
                                        double alpha, const IntervalOptions& opt = {}) {
    detail::require_whitened(model);
    detail::check_alpha(alpha);
    detail::check_shapes(model.K, h, C);
    const double s2 = slack(model, C, opt);
    const double z = normal_quantile(1.0 - alpha / 2.0);
    IntervalResult r;
    r.method = Method::OSB;
    r.alpha = alpha;
    r.diagnostics.slack_s2 = s2;
    r.diagnostics.psi2 = z * z + s2;
    detail::dual_ball_endpoints(r, model, h, detail::constraint_matrix(C, model.K.cols()), C.empty() ? Vec(0) : C.b,
                                std::sqrt(z * z + s2), opt);
    return r;
}

/// Prior-optimized rule: the lower and upper certificates minimize the Bayes
/// risk under a prior with mean m, i.e. the dual programs with y = K m and
/// radius z_{1-alpha/2}. Never looks at data.
inline DecisionRule po_rule(const Mat& K, const FunctionalSpec& h, const PolyhedralConstraints& C, const Prior& prior,
                            double alpha, const IntervalOptions& opt = {}) {
    detail::check_alpha(alpha);
    detail::check_shapes(K, h, C);
    if (prior.mean.size() != K.cols()) throw DimensionError("prior mean has length " + std::to_string(prior.mean.size()) + ", expected " + std::to_string(K.cols()));
    if (!prior.mean.allFinite()) throw ConfigError("prior mean has non-finite entries");
    const Index n = K.cols(), m = K.rows(), q = C.rows();
    const Mat A = detail::constraint_matrix(C, n);
    const Vec b = C.empty() ? Vec(0) : C.b;
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const Vec Km = K * prior.mean;

    DecisionRule rule;
    rule.alpha = alpha;
    rule.provenance = prior.label;
    rule.functional = h.label;
    rule.b = b;
    for (bool lower : {true, false}) {
        // the (w, c) program is poorly conditioned for general shape
        // constraints; its primal is not
        const bool general = q > 0 && !detail::is_nonneg(A, b);
        const Solution s = general ? detail::certificate_from_primal(K, Km, h.h, A, b, z, lower, opt)
                                   : detail::dual_endpoint(K, Km, h.h, A, b, z, lower, opt);
        if (general && s.status == SolveStatus::unbounded)
            throw InfeasibleError("functional '" + h.label + "' admits no coverage certificate (decision space is empty)");
        if (s.status == SolveStatus::infeasible)
            throw InfeasibleError("functional '" + h.label + "' admits no coverage certificate (decision space is empty)");
        if (s.status != SolveStatus::optimal) detail::throw_failure(std::string("PO ") + (lower ? "lower" : "upper") + " rule", s);
        (lower ? rule.w_lower : rule.w_upper) = s.x.head(m);
        (lower ? rule.c_lower : rule.c_upper) = s.x.tail(q).cwiseMax(0.0);
    }
    return rule;
}

/// Evaluates a decision rule on data. No optimization.
inline IntervalResult po_interval(const DecisionRule& rule, const Vec& y) {
    if (rule.w_lower.size() != y.size() || rule.w_upper.size() != y.size())
        throw DimensionError("po_interval: rule expects data of length " + std::to_string(rule.w_lower.size()) + ", got " + std::to_string(y.size()));
    if (rule.c_lower.size() != rule.b.size() || rule.c_upper.size() != rule.b.size())
        throw DimensionError("po_interval: rule constraint multipliers do not match b");
    const double z = normal_quantile(1.0 - rule.alpha / 2.0);
    IntervalResult r;
    r.method = Method::PO;
    r.alpha = rule.alpha;
    r.lower = rule.w_lower.dot(y) - z * rule.w_lower.norm() - rule.b.dot(rule.c_lower);
    r.upper = rule.w_upper.dot(y) + z * rule.w_upper.norm() + rule.b.dot(rule.c_upper);
    r.diagnostics.pathological = r.lower > r.upper;
    return r;
}

/// Bayes risk of a rule under a prior mean:
/// (w_u - w_l)'K m + z(||w_u|| + ||w_l||) + b'(c_u + c_l).
inline double bayes_risk(const DecisionRule& rule, const Mat& K, const Vec& prior_mean) {
    const double z = normal_quantile(1.0 - rule.alpha / 2.0);
    const Vec Km = K * prior_mean;
    return (rule.w_upper - rule.w_lower).dot(Km) + z * (rule.w_upper.norm() + rule.w_lower.norm()) +
           rule.b.dot(rule.c_upper + rule.c_lower);
}

struct DualFeasibility {
    bool feasible = false;
    double max_violation = 0.0;
};

/// Checks h + A'c_l - K'w_l = 0, h - A'c_u - K'w_u = 0 and c >= 0.
inline DualFeasibility dual_feasibility_check(const DecisionRule& rule, const Mat& K, const FunctionalSpec& h,
                                              const PolyhedralConstraints& C) {
    const Index n = K.cols();
    if (rule.w_lower.size() != K.rows() || rule.w_upper.size() != K.rows() || h.h.size() != n ||
        rule.c_lower.size() != C.rows() || rule.c_upper.size() != C.rows())
        throw DimensionError("dual_feasibility_check: inconsistent dimensions");
    Vec rl = h.h - K.transpose() * rule.w_lower;
    Vec ru = h.h - K.transpose() * rule.w_upper;
    if (!C.empty()) {
        rl += C.A.transpose() * rule.c_lower;
        ru -= C.A.transpose() * rule.c_upper;
    }
    DualFeasibility out;
    const double eq = std::max(rl.lpNorm<Eigen::Infinity>(), ru.lpNorm<Eigen::Infinity>());
    double neg = 0.0;
    if (C.rows() > 0) neg = std::max(-rule.c_lower.minCoeff(), -rule.c_upper.minCoeff());
    out.max_violation = std::max(eq, neg);
    out.feasible = eq <= 1e-6 && neg <= 1e-9;
    return out;
}

/// h'lambda_hat -/+ z_{1-alpha/2} sqrt(h'(K'K)^-1 h). Requires full column rank.
inline IntervalResult ls_interval(const GaussianModel& model, const FunctionalSpec& h, double alpha) {
    detail::require_whitened(model);
    detail::check_alpha(alpha);
    h.validate(model.K.cols());
    const Mat& K = model.K;
    const Index n = K.cols();
    if (K.rows() < n) throw RankError("rank_deficient: K has fewer rows than columns");
    Eigen::ColPivHouseholderQR<Mat> qr(K);
    qr.setThreshold(1e-12);
    if (qr.rank() < n) throw RankError("rank_deficient: K has rank " + std::to_string(qr.rank()) + " < " + std::to_string(n));
    const Vec lambda_hat = qr.solve(model.y);
    // (K'K)^-1 = P R^-1 R^-T P'
    const Mat R = qr.matrixR().topLeftCorner(n, n).template triangularView<Eigen::Upper>();
    const Vec Pth = qr.colsPermutation().transpose() * h.h;
    const Vec v = R.transpose().template triangularView<Eigen::Lower>().solve(Pth);
    const double center = h.h.dot(lambda_hat);
    const double half = normal_quantile(1.0 - alpha / 2.0) * v.norm();
    IntervalResult r;
    r.method = Method::LS;
    r.alpha = alpha;
    r.lower = center - half;
    r.upper = center + half;
    return r;
}

/// Simultaneous strict bounds: extremes over {||y - K lambda||^2 <= chi2_{n,1-alpha}}.
inline IntervalResult ssb_interval(const GaussianModel& model, const FunctionalSpec& h, const PolyhedralConstraints& C,
                                   double alpha, const IntervalOptions& opt = {}) {
    detail::require_whitened(model);
    detail::check_alpha(alpha);
    detail::check_shapes(model.K, h, C);
    const double radius2 = chi2_quantile(static_cast<double>(model.K.cols()), 1.0 - alpha);
    IntervalResult r = detail::ball_interval(model, h, C, radius2, Method::SSB, alpha, opt);
    if (r.diagnostics.status == "infeasible") r.diagnostics.slack_s2 = slack(model, C, opt);
    return r;
}

struct MinimaxBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// omega(eps) = sup |h'(l1 - l2)| over ||K(l1 - l2)|| <= eps, A l1 <= b, A l2 <= b.
/// Returns +inf when the supremum is unbounded. With `both_signs` unset, the
/// constraint set is assumed symmetric in (l1, l2) and only h'(l1 - l2) is
/// maximized.
inline double modulus_of_continuity(const Mat& K, const FunctionalSpec& h, const PolyhedralConstraints& C, double eps,
                                    bool both_signs = false, const IntervalOptions& opt = {}) {
    detail::check_shapes(K, h, C);
    if (!(eps >= 0.0)) throw ConfigError("modulus radius must be non-negative");
    const Index n = K.cols(), q = C.rows();
    const Vec D = detail::column_scale(K, opt.column_scaling);
    const Mat KD = K * D.asDiagonal();
    double best = -kInf;
    for (double sign : {1.0, -1.0}) {
        if (sign < 0.0 && !both_signs) break;
        ConicProgram p(2 * n);
        p.sense = Sense::maximize;
        p.objective << sign * D.cwiseProduct(h.h), -sign * D.cwiseProduct(h.h);
        Mat Kt(K.rows(), 2 * n);
        Kt << KD, -KD;
        if (eps > 0.0) {
            p.add_ball(Kt, Vec::Zero(K.rows()), eps * eps);
        } else {
            p.E = detail::sparse_of(Kt);
            p.d = Vec::Zero(K.rows());
        }
        if (q > 0) {
            Mat A2 = Mat::Zero(2 * q, 2 * n);
            A2.topLeftCorner(q, n) = C.A * D.asDiagonal();
            A2.bottomRightCorner(q, n) = C.A * D.asDiagonal();
            p.G = detail::sparse_of(A2);
            p.h.resize(2 * q);
            p.h << C.b, C.b;
        }
        const Solution s = solve(p, opt.solver);
        if (s.status == SolveStatus::unbounded) return kInf;
        if (s.status == SolveStatus::infeasible) throw InfeasibleError("modulus: constraint set is empty");
        if (s.status != SolveStatus::optimal) detail::throw_failure("modulus of continuity", s);
        best = std::max(best, std::max(s.objective_value, 0.0));
    }
    return best;
}

/// (omega(2 z_{1-alpha} sigma), omega(2 z_{1-alpha/2} sigma)), bracketing the
/// half-width of the fixed-width affine minimax interval.
inline MinimaxBounds minimax_halfwidth_bounds(const Mat& K, const FunctionalSpec& h, const PolyhedralConstraints& C,
                                              double alpha, double sigma = 1.0, bool both_signs = false,
                                              const IntervalOptions& opt = {}) {
    detail::check_alpha(alpha);
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    MinimaxBounds out;
    out.lower = modulus_of_continuity(K, h, C, std::max(0.0, 2.0 * normal_quantile(1.0 - alpha) * sigma), both_signs, opt);
    out.upper = out.lower == kInf ? kInf : modulus_of_continuity(K, h, C, 2.0 * normal_quantile(1.0 - alpha / 2.0) * sigma, both_signs, opt);
    return out;
}

}  // namespace unfold
