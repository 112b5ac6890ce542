#pragma once

// Coverage and expected-width studies.

#include "unfold/constraints.hpp"
#include "unfold/detail/parallel.hpp"
#include "unfold/intervals.hpp"
#include "unfold/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace unfold {

/// Independent Poisson draws with the given means.
template <class Rng>
Vec sample_counts(const Vec& mu, Rng& rng) {
    Vec out(mu.size());
    for (Index i = 0; i < mu.size(); ++i) {
        if (!(mu(i) >= 0.0) || !std::isfinite(mu(i)))
            throw ConfigError("sample_counts: mean " + std::to_string(i) + " is negative or not finite");
        if (mu(i) == 0.0) {
            out(i) = 0.0;
            continue;
        }
        std::poisson_distribution<long long> d(mu(i));
        out(i) = static_cast<double>(d(rng));
    }
    return out;
}

/// Generator for replication `rep` of a study seeded with `seed`; `stream`
/// separates independent uses within one replication.
inline std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep, std::uint32_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(rep & 0xffffffffu), static_cast<std::uint32_t>(rep >> 32), stream};
    return std::mt19937_64(seq);
}

inline IntensityFunction make_gmm_truth() {
    return IntensityFunction(GaussianMixture{10000.0, {0.3, 0.7}, {-2.0, 2.0}, {1.0, 1.0}}, "gmm_truth");
}

inline IntensityFunction make_gmm_misspecified() {
    return IntensityFunction(GaussianMixture{10000.0, {0.3, 0.7}, {-1.8, 1.8}, {0.64, 1.44}}, "gmm_misspecified");
}

/// argmin over lambda >= 0 of ||y - K lambda||.
inline Vec nnls(const Mat& K, const Vec& y, const IntervalOptions& opt = {}) {
    if (K.rows() != y.size()) throw DimensionError("nnls: K and y disagree in length");
    const Index n = K.cols();
    const Vec D = detail::column_scale(K, opt.column_scaling);
    ConicProgram p(n + 1);
    p.objective(n) = 1.0;
    ConeConstraint cone;
    cone.F = Mat::Zero(K.rows(), n + 1);
    cone.F.leftCols(n) = K * D.asDiagonal();
    cone.g = y;
    cone.f = Vec::Zero(n + 1);
    cone.f(n) = 1.0;
    p.cones.push_back(std::move(cone));
    Mat G = Mat::Zero(n, n + 1);
    G.leftCols(n) = -Mat::Identity(n, n);
    p.G = detail::sparse_of(G);
    p.h = Vec::Zero(n);
    const Solution s = solve(p, opt.solver);
    if (s.status != SolveStatus::optimal) detail::throw_failure("nnls", s);
    return D.cwiseProduct(s.x.head(n)).cwiseMax(0.0);
}

/// Natural cubic spline through (bin centers, lambda_hat / width) with
/// lambda_hat the non-negative least-squares fit to y. The spline is clamped
/// below at floor_fraction times its largest knot value so that no bin of a
/// finer grid ends up with zero mass.
inline IntensityFunction adversarial_ansatz(const ResponseMatrix& R, const Vec& y, const IntervalOptions& opt = {},
                                            double floor_fraction = 1e-6) {
    const Vec lambda_hat = nnls(R.K, y, opt);
    const BinGrid& g = R.true_grid;
    std::vector<double> x(g.size()), v(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        x[j] = g.center(j);
        v[j] = lambda_hat(static_cast<Index>(j)) / g.width(j);
    }
    const double peak = *std::max_element(v.begin(), v.end());
    return IntensityFunction(TabulatedSpline{CubicSpline(std::move(x), std::move(v)), true, floor_fraction * peak},
                             "adversarial");
}

/// Indicator functionals partitioning the fine bins into wide bins.
struct AggregationSet {
    std::vector<FunctionalSpec> h;
    BinGrid wide_edges;
    // first fine bin of each wide bin, plus n_fine at the end
    std::vector<std::size_t> boundaries;
};

inline AggregationSet aggregation_from_boundaries(const BinGrid& fine, const std::vector<std::size_t>& bounds) {
    const std::size_t n = fine.size();
    if (bounds.size() < 2 || bounds.front() != 0 || bounds.back() != n)
        throw ConfigError("aggregation must start at fine bin 0 and end at the last fine bin");
    AggregationSet out;
    std::vector<double> edges;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        if (bounds[k + 1] <= bounds[k]) throw ConfigError("wide bin " + std::to_string(k) + " contains no fine bins");
        Vec h = Vec::Zero(static_cast<Index>(n));
        h.segment(static_cast<Index>(bounds[k]), static_cast<Index>(bounds[k + 1] - bounds[k])).setOnes();
        out.h.push_back({std::move(h), "widebin_" + std::to_string(k)});
        edges.push_back(fine.edges()[bounds[k]]);
    }
    edges.push_back(fine.back());
    out.wide_edges = BinGrid(std::move(edges));
    out.boundaries = bounds;
    return out;
}

/// Consecutive blocks of n_fine / n_wide fine bins.
inline AggregationSet aggregation_uniform(const BinGrid& fine, std::size_t n_wide) {
    const std::size_t n = fine.size();
    if (n_wide == 0 || n % n_wide != 0)
        throw ConfigError("aggregation: " + std::to_string(n_wide) + " wide bins do not divide " + std::to_string(n) + " fine bins");
    std::vector<std::size_t> b;
    for (std::size_t k = 0; k <= n_wide; ++k) b.push_back(k * (n / n_wide));
    return aggregation_from_boundaries(fine, b);
}

inline AggregationSet aggregation_uniform(std::size_t n_fine, std::size_t n_wide) {
    return aggregation_uniform(BinGrid::uniform(0.0, static_cast<double>(n_fine), n_fine), n_wide);
}

/// Wide bins whose width grows like p^exponent from the left edge, each edge
/// snapped to the nearest fine edge.
inline AggregationSet aggregation_sqrt_pt(const BinGrid& fine, std::size_t n_wide, double exponent = 0.5) {
    if (n_wide == 0 || n_wide > fine.size()) throw ConfigError("aggregation: invalid number of wide bins");
    const double lo = fine.front(), hi = fine.back();
    // find c with e_{k+1} = e_k + c e_k^exponent reaching hi after n_wide steps
    auto last_edge = [&](double c) {
        double e = lo;
        for (std::size_t k = 0; k < n_wide; ++k) e += c * std::pow(e, exponent);
        return e;
    };
    double a = 0.0, b = (hi - lo) / std::pow(std::max(std::abs(lo), 1e-300), exponent);
    while (last_edge(b) < hi) b *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double c = 0.5 * (a + b);
        (last_edge(c) < hi ? a : b) = c;
    }
    const double c = 0.5 * (a + b);
    const auto& fe = fine.edges();
    std::vector<std::size_t> bounds{0};
    double e = lo;
    for (std::size_t k = 1; k < n_wide; ++k) {
        e += c * std::pow(e, exponent);
        std::size_t best = 0;
        for (std::size_t i = 1; i < fe.size(); ++i)
            if (std::abs(fe[i] - e) < std::abs(fe[best] - e)) best = i;
        bounds.push_back(best);
    }
    bounds.push_back(fine.size());
    return aggregation_from_boundaries(fine, bounds);
}

/// Every component equal to the mean bin count of lambda.
inline Prior flat_prior(const Vec& lambda) {
    if (lambda.size() == 0) throw DimensionError("flat_prior: empty vector");
    return {Vec::Constant(lambda.size(), lambda.sum() / static_cast<double>(lambda.size())), "flat"};
}

struct PriorSpec {
    // "flat", "truth", "ansatz" or "intensity"
    std::string kind = "flat";
    std::string label = "flat";
    std::optional<IntensityFunction> intensity;
};

struct WideBinSpec {
    // "uniform", "sqrt_pt" or "ranges"
    std::string kind = "uniform";
    std::size_t count = 10;
    double exponent = 0.5;
    std::vector<std::size_t> boundaries;
};

struct ExperimentConfig {
    std::string name = "study";
    IntensityFunction truth = make_gmm_truth();
    IntensityFunction ansatz = make_gmm_misspecified();
    SmearingKernel kernel = HomoskedasticGaussian{0.35};
    double true_lo = -7.0, true_hi = 7.0;
    double smeared_lo = -7.0, smeared_hi = 7.0;
    std::size_t true_bins = 40;
    std::size_t smeared_bins = 40;
    WideBinSpec wide_bins;
    std::vector<Method> methods{Method::LS};
    std::vector<std::string> constraints{"none"};
    std::vector<PriorSpec> priors{PriorSpec{}};
    double alpha = 0.05;
    std::size_t replications = 1000;
    std::uint64_t seed = 1;
    bool minimax_both_signs = false;
    // reserved: whiten with a covariance estimated from the data
    bool estimate_covariance = false;
    QuadratureSettings quadrature;
    IntervalOptions interval_options;

    void validate() const {
        if (true_bins < 1 || smeared_bins < 1) throw ConfigError("bin counts must be positive");
        if (replications < 1) throw ConfigError("replications must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
        if (methods.empty()) throw ConfigError("no methods requested");
        if (constraints.empty()) throw ConfigError("no constraint setups requested");
        if (estimate_covariance) throw ConfigError("estimated covariance is not supported");
        for (Method m : methods)
            if (m == Method::PO && priors.empty()) throw ConfigError("PO requested without a prior");
    }
};

/// One line per (wide bin, method, constraint setup, prior).
struct CoverageRow {
    std::size_t bin = 0;
    std::string method;
    std::string constraints;
    std::string prior;
    std::size_t true_bins = 0;
    double theta = 0.0;
    double coverage = 0.0;
    double coverage_se = 0.0;
    double mean_width = 0.0;
    double width_se = 0.0;
    std::size_t pathological_count = 0;
    std::size_t failure_count = 0;
    std::size_t replications = 0;
};

struct MinimaxRow {
    std::size_t bin = 0;
    std::string constraints;
    std::size_t true_bins = 0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
};

/// Interval from the first replication, for display.
struct ExampleInterval {
    std::size_t bin = 0;
    std::string method;
    std::string constraints;
    std::string prior;
    double theta = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::string status;
};

struct CoverageReport {
    std::string name;
    std::string config_hash;
    std::vector<CoverageRow> rows;
    std::vector<MinimaxRow> minimax;
    std::vector<ExampleInterval> example;
    Vec lambda_true;
    Vec theta;
    BinGrid wide_edges;
};

struct StudyProgress {
    std::function<void(std::size_t done, std::size_t total)> callback;
    std::size_t every = 50;
};

/// Coverage estimate per (4.7)-style counting with binomial standard error,
/// and the sample mean width with its standard error.
struct CoverageAccumulator {
    std::size_t covered = 0, total = 0, pathological = 0, failures = 0;
    std::vector<double> widths;

    void add_interval(const IntervalResult& r, double theta) {
        ++total;
        if (r.diagnostics.status == "infeasible") {
            widths.push_back(0.0);
            return;
        }
        if (r.covers(theta)) ++covered;
        if (r.diagnostics.pathological) ++pathological;
        widths.push_back(r.width());
    }
    void add_failure() {
        ++total;
        ++failures;
    }
    double coverage() const { return total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0; }
    double coverage_se() const {
        const double g = coverage();
        return total ? std::sqrt(g * (1.0 - g) / static_cast<double>(total)) : 0.0;
    }
    double mean_width() const {
        if (widths.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (double w : widths) s += w;
        return s / static_cast<double>(widths.size());
    }
    double width_se() const {
        const std::size_t k = widths.size();
        if (k < 2) return 0.0;
        const double mu = mean_width();
        if (!std::isfinite(mu)) return std::numeric_limits<double>::quiet_NaN();
        double ss = 0.0;
        for (double w : widths) ss += (w - mu) * (w - mu);
        return std::sqrt(ss / static_cast<double>(k - 1) / static_cast<double>(k));
    }
};

namespace detail {

inline Vec prior_mean(const PriorSpec& p, const ExperimentConfig& cfg, const BinGrid& grid, const Vec& lambda_true) {
    if (p.kind == "flat") return flat_prior(lambda_true).mean;
    if (p.kind == "truth") return bin_means(cfg.truth, grid, cfg.quadrature);
    if (p.kind == "ansatz") return bin_means(cfg.ansatz, grid, cfg.quadrature);
    if (p.kind == "intensity") {
        if (!p.intensity) throw ConfigError("prior '" + p.label + "' needs an intensity");
        return bin_means(*p.intensity, grid, cfg.quadrature);
    }
    throw ConfigError("unknown prior kind '" + p.kind + "'");
}

// one interval-producing slot per (constraint setup, method, prior)
struct Slot {
    std::size_t constraint;
    Method method;
    std::size_t prior;
};

}  // namespace detail

inline AggregationSet build_aggregation(const WideBinSpec& w, const BinGrid& fine) {
    if (w.kind == "uniform") return aggregation_uniform(fine, w.count);
    if (w.kind == "sqrt_pt") return aggregation_sqrt_pt(fine, w.count, w.exponent);
    if (w.kind == "ranges") return aggregation_from_boundaries(fine, w.boundaries);
    throw ConfigError("unknown wide-bin kind '" + w.kind + "'");
}

/// Runs the replication study. Results are identical for any thread count.
inline CoverageReport run_study(const ExperimentConfig& cfg_in, unsigned threads = 1, const StudyProgress& progress = {}) {
    cfg_in.validate();
    ExperimentConfig cfg = cfg_in;
    cfg.interval_options.prefer_dual = true;
    const BinGrid true_grid = BinGrid::uniform(cfg.true_lo, cfg.true_hi, cfg.true_bins);
    const BinGrid smeared_grid = BinGrid::uniform(cfg.smeared_lo, cfg.smeared_hi, cfg.smeared_bins);
    const Vec lambda_true = bin_means(cfg.truth, true_grid, cfg.quadrature);
    // the data-generating means do not depend on the binning of the true space
    const ResponseMatrix K_true = response_matrix(cfg.kernel, cfg.truth, true_grid, smeared_grid, cfg.quadrature, threads);
    const Vec mu = forward_means(K_true, lambda_true);
    const ResponseMatrix K_ans = response_matrix(cfg.kernel, cfg.ansatz, true_grid, smeared_grid, cfg.quadrature, threads);
    const GaussianModel base = whiten(GaussianModel{K_ans.K, mu, mu});
    const Mat& Kw = base.K;
    const Vec inv_sd = mu.cwiseSqrt().cwiseInverse();

    const AggregationSet agg = build_aggregation(cfg.wide_bins, true_grid);
    const std::size_t nb = agg.h.size();
    Vec theta(static_cast<Index>(nb));
    for (std::size_t j = 0; j < nb; ++j) theta(static_cast<Index>(j)) = agg.h[j].h.dot(lambda_true);

    std::vector<PolyhedralConstraints> setups;
    for (const auto& name : cfg.constraints)
        setups.push_back(constraints_by_name(name, static_cast<Index>(cfg.true_bins), true_grid));

    CoverageReport report;
    report.name = cfg.name;
    report.lambda_true = lambda_true;
    report.theta = theta;
    report.wide_edges = agg.wide_edges;

    std::vector<detail::Slot> slots;
    bool want_minimax = false;
    for (std::size_t c = 0; c < setups.size(); ++c) {
        for (Method m : cfg.methods) {
            if (m == Method::MinimaxLower || m == Method::MinimaxUpper) {
                want_minimax = true;
                continue;
            }
            if (m == Method::LS && c > 0) continue;  // LS ignores constraints
            if (m == Method::PO)
                for (std::size_t p = 0; p < cfg.priors.size(); ++p) slots.push_back({c, m, p});
            else
                slots.push_back({c, m, 0});
        }
    }

    // data-independent pieces
    std::vector<Vec> prior_means;
    for (const auto& p : cfg.priors) prior_means.push_back(detail::prior_mean(p, cfg, true_grid, lambda_true));
    // rules[slot][bin]
    std::vector<std::vector<std::optional<DecisionRule>>> rules(slots.size());
    for (std::size_t s = 0; s < slots.size(); ++s) {
        if (slots[s].method != Method::PO) continue;
        rules[s].resize(nb);
        const Prior prior{prior_means[slots[s].prior], cfg.priors[slots[s].prior].label};
        detail::parallel_for(nb, threads, [&](std::size_t j) {
            try {
                rules[s][j] = po_rule(Kw, agg.h[j], setups[slots[s].constraint], prior, cfg.alpha, cfg.interval_options);
            } catch (const Error&) {
                rules[s][j].reset();
            }
        });
    }
    if (want_minimax) {
        for (std::size_t c = 0; c < setups.size(); ++c) {
            std::vector<MinimaxRow> rows(nb);
            detail::parallel_for(nb, threads, [&](std::size_t j) {
                MinimaxRow r{j, cfg.constraints[c], cfg.true_bins, kNaN, kNaN};
                try {
                    const auto mb = minimax_halfwidth_bounds(Kw, agg.h[j], setups[c], cfg.alpha, 1.0, cfg.minimax_both_signs, cfg.interval_options);
                    r.lower_bound = mb.lower;
                    r.upper_bound = mb.upper;
                } catch (const Error&) {
                }
                rows[j] = r;
            });
            report.minimax.insert(report.minimax.end(), rows.begin(), rows.end());
        }
    }

    const bool ls_ok = [&] {
        if (Kw.rows() < Kw.cols()) return false;
        Eigen::ColPivHouseholderQR<Mat> qr(Kw);
        qr.setThreshold(1e-12);
        return qr.rank() == Kw.cols();
    }();

    // results[rep][slot][bin]; nullopt marks a failed replication
    const std::size_t M = cfg.replications;
    std::vector<std::vector<std::vector<std::optional<IntervalResult>>>> results(
        M, std::vector<std::vector<std::optional<IntervalResult>>>(slots.size(), std::vector<std::optional<IntervalResult>>(nb)));
    std::atomic<std::size_t> done{0};
    detail::parallel_for(M, threads, [&](std::size_t rep) {
        auto rng = replication_rng(cfg.seed, rep);
        const Vec y = sample_counts(mu, rng);
        const GaussianModel model{Kw, inv_sd.cwiseProduct(y), std::nullopt};
        std::vector<std::optional<double>> s2(setups.size());
        for (std::size_t s = 0; s < slots.size(); ++s) {
            const auto& slot = slots[s];
            const auto& C = setups[slot.constraint];
            for (std::size_t j = 0; j < nb; ++j) {
                auto& out = results[rep][s][j];
                try {
                    switch (slot.method) {
                        case Method::LS:
                            if (ls_ok) out = ls_interval(model, agg.h[j], cfg.alpha);
                            break;
                        case Method::OSB: {
                            if (!s2[slot.constraint]) s2[slot.constraint] = slack(model, C, cfg.interval_options);
                            const double z = normal_quantile(1.0 - cfg.alpha / 2.0);
                            IntervalResult r = detail::ball_interval(model, agg.h[j], C, z * z + *s2[slot.constraint], Method::OSB,
                                                                     cfg.alpha, cfg.interval_options);
                            r.diagnostics.slack_s2 = *s2[slot.constraint];
                            if (r.diagnostics.status != "infeasible") out = r;
                            break;
                        }
                        case Method::SSB: {
                            IntervalResult r = ssb_interval(model, agg.h[j], C, cfg.alpha, cfg.interval_options);
                            // an empty chi-squared set is a valid outcome that covers nothing
                            out = r;
                            break;
                        }
                        case Method::PO:
                            if (rules[s][j]) out = po_interval(*rules[s][j], model.y);
                            break;
                        default:
                            break;
                    }
                } catch (const Error&) {
                    out.reset();
                }
            }
        }
        const std::size_t d = ++done;
        if (progress.callback && (d % progress.every == 0 || d == M)) progress.callback(d, M);
    });

    // deterministic reduction in replication order
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto& slot = slots[s];
        for (std::size_t j = 0; j < nb; ++j) {
            CoverageAccumulator acc;
            for (std::size_t rep = 0; rep < M; ++rep) {
                const auto& r = results[rep][s][j];
                if (r)
                    acc.add_interval(*r, theta(static_cast<Index>(j)));
                else
                    acc.add_failure();
            }
            CoverageRow row;
            row.bin = j;
            row.method = to_string(slot.method);
            row.constraints = slot.method == Method::LS ? "none" : cfg.constraints[slot.constraint];
            row.prior = slot.method == Method::PO ? cfg.priors[slot.prior].label : "";
            row.true_bins = cfg.true_bins;
            row.theta = theta(static_cast<Index>(j));
            row.coverage = acc.coverage();
            row.coverage_se = acc.coverage_se();
            row.mean_width = acc.mean_width();
            row.width_se = acc.width_se();
            row.pathological_count = acc.pathological;
            row.failure_count = acc.failures;
            row.replications = M;
            report.rows.push_back(row);

            const auto& first = results[0][s][j];
            ExampleInterval ex{j, row.method, row.constraints, row.prior, row.theta, kNaN, kNaN, "failed"};
            if (first) {
                ex.lower = first->lower;
                ex.upper = first->upper;
                ex.status = first->diagnostics.pathological ? "pathological" : first->diagnostics.status;
            }
            report.example.push_back(ex);
        }
    }
    return report;
}

}  // namespace unfold
