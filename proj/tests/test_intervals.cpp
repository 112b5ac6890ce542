#include "unfold/intervals.hpp"
#include "unfold/model.hpp"
#include "unfold/sim.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace unfold;
using Catch::Approx;

namespace {

GaussianModel identity1(double y) { return {Mat::Identity(1, 1), Vec::Constant(1, y), std::nullopt}; }

FunctionalSpec fn(Vec h, std::string label = "h") { return {std::move(h), std::move(label)}; }

Mat random_matrix(std::mt19937_64& rng, Index m, Index n) {
    std::normal_distribution<double> z(0.0, 1.0);
    Mat K(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) K(i, j) = z(rng);
    return K;
}

Vec random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = z(rng);
    return v;
}

// min and max of h'lambda over {||y - K lambda||^2 <= r2, lambda in box}, brute force in 2-D
std::pair<double, double> grid_extremes(const Mat& K, const Vec& y, const Vec& h, double r2, bool nonneg, double lo,
                                        double hi, int steps) {
    double mn = kInf, mx = -kInf;
    Vec l(2);
    for (int a = 0; a <= steps; ++a) {
        for (int b = 0; b <= steps; ++b) {
            l << lo + (hi - lo) * a / steps, lo + (hi - lo) * b / steps;
            if (nonneg && (l.array() < 0.0).any()) continue;
            if ((y - K * l).squaredNorm() > r2) continue;
            mn = std::min(mn, h.dot(l));
            mx = std::max(mx, h.dot(l));
        }
    }
    return {mn, mx};
}

struct GmmSetup {
    Mat K;
    Vec lambda_true, mu;
    AggregationSet agg;
};

GmmSetup gmm_setup(std::size_t n_true, std::size_t n_smeared) {
    const BinGrid tg = BinGrid::uniform(-7.0, 7.0, n_true), sg = BinGrid::uniform(-7.0, 7.0, n_smeared);
    const auto truth = make_gmm_truth(), ansatz = make_gmm_misspecified();
    const SmearingKernel k = HomoskedasticGaussian{0.35};
    GmmSetup s;
    s.lambda_true = bin_means(truth, tg);
    s.mu = forward_means(response_matrix(k, truth, tg, sg), s.lambda_true);
    s.K = whiten(GaussianModel{response_matrix(k, ansatz, tg, sg).K, s.mu, s.mu}).K;
    s.agg = aggregation_uniform(tg, 10);
    return s;
}

}  // namespace

TEST_CASE("slack", "[intervals]") {
    CHECK(slack(identity1(-2.0), nonneg(1)) == Approx(4.0).margin(1e-7));
    CHECK(slack(identity1(3.0), nonneg(1)) == Approx(0.0).margin(1e-7));

    std::mt19937_64 rng(11);
    const Mat K = random_matrix(rng, 5, 3).cwiseAbs();
    const Vec l0 = Vec::LinSpaced(3, 1.0, 2.0);
    CHECK(slack(GaussianModel{K, K * l0, std::nullopt}, nonneg(3)) == Approx(0.0).margin(1e-7));
    CHECK(slack(GaussianModel{K, K * l0, std::nullopt}, PolyhedralConstraints{}) == Approx(0.0).margin(1e-12));

    CHECK_THROWS_AS(slack(GaussianModel{K, K * l0, Vec::Ones(5)}, nonneg(3)), ConfigError);
}

TEST_CASE("slack matches a grid oracle over the orthant", "[intervals][oracle]") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        const Mat K = random_matrix(rng, 4, 3);
        const Vec y = random_vector(rng, 4, 2.0);
        const GaussianModel model{K, y, std::nullopt};
        const double s2 = slack(model, nonneg(3));
        // coarse grid over [0, 20]^3, then local refinement around the best point
        Vec best = Vec::Zero(3);
        double best_v = y.squaredNorm();
        double step = 0.2;
        for (int level = 0; level < 5; ++level) {
            const Vec c = best;
            const int r = level == 0 ? 100 : 30;
            for (int a = -r; a <= r; ++a)
                for (int b = -r; b <= r; ++b)
                    for (int d = -r; d <= r; ++d) {
                        Vec l(3);
                        if (level == 0)
                            l << (a + r) * step, (b + r) * step, (d + r) * step;
                        else
                            l << c(0) + a * step, c(1) + b * step, c(2) + d * step;
                        if ((l.array() < 0.0).any()) continue;
                        const double v = (y - K * l).squaredNorm();
                        if (v < best_v) best_v = v, best = l;
                    }
            step /= 10.0;
        }
        CHECK(s2 <= best_v * (1.0 + 1e-8) + 1e-9);
        CHECK(s2 == Approx(best_v).margin(1e-4));
    }
}

TEST_CASE("OSB on a one-dimensional ball", "[intervals]") {
    const auto r = osb_interval(identity1(5.0), fn(Vec::Ones(1)), PolyhedralConstraints{}, 0.05);
    CHECK(r.lower == Approx(5.0 - 1.959963985).margin(1e-6));
    CHECK(r.upper == Approx(5.0 + 1.959963985).margin(1e-6));
    CHECK(r.diagnostics.slack_s2.value() == Approx(0.0).margin(1e-12));
    CHECK(r.diagnostics.psi2.value() == Approx(1.959963985 * 1.959963985).epsilon(1e-8));

    const auto d = osb_dual_interval(identity1(5.0), fn(Vec::Ones(1)), PolyhedralConstraints{}, 0.05);
    CHECK(d.lower == Approx(r.lower).margin(1e-6));
    CHECK(d.upper == Approx(r.upper).margin(1e-6));

    CHECK_THROWS_AS(osb_interval(identity1(5.0), fn(Vec::Ones(1)), PolyhedralConstraints{}, 1.0), ConfigError);
    CHECK_THROWS_AS(osb_interval(identity1(5.0), fn(Vec::Ones(2)), PolyhedralConstraints{}, 0.05), DimensionError);
}

TEST_CASE("OSB, SSB and LS agree without constraints at full rank", "[intervals][property]") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<int> dn(1, 6);
        const Index n = dn(rng), m = n + dn(rng) - 1;
        const Mat K = random_matrix(rng, m, n) + Mat::Identity(m, n) * 2.0;
        const Vec y = K * random_vector(rng, n, 3.0) + random_vector(rng, m);
        const GaussianModel model{K, y, std::nullopt};
        const auto h = fn(random_vector(rng, n));
        const auto ls = ls_interval(model, h, 0.05);
        const auto osb = osb_interval(model, h, PolyhedralConstraints{}, 0.05);
        CHECK(std::abs(osb.lower - ls.lower) < 1e-5);
        CHECK(std::abs(osb.upper - ls.upper) < 1e-5);
        const auto dual = osb_dual_interval(model, h, PolyhedralConstraints{}, 0.05);
        CHECK(std::abs(dual.lower - ls.lower) < 1e-5);
        CHECK(std::abs(dual.upper - ls.upper) < 1e-5);
    }
}

TEST_CASE("OSB and SSB match a 2-D grid oracle", "[intervals][oracle]") {
    Mat K(2, 2);
    K << 1.0, 0.4, 0.3, 1.0;
    Vec y(2);
    y << 0.8, 0.5;
    const GaussianModel model{K, y, std::nullopt};
    Vec h(2);
    h << 1.0, -0.5;
    const auto osb = osb_interval(model, fn(h), nonneg(2), 0.05);
    const auto [olo, ohi] = grid_extremes(K, y, h, osb.diagnostics.psi2.value(), true, -1.0, 4.0, 2000);
    CHECK(osb.lower == Approx(olo).margin(1e-3 * 5));
    CHECK(osb.upper == Approx(ohi).margin(1e-3 * 5));
    CHECK(osb.lower <= olo + 1e-7);
    CHECK(osb.upper >= ohi - 1e-7);

    const auto ssb = ssb_interval(model, fn(h), nonneg(2), 0.05);
    CHECK(ssb.diagnostics.psi2.value() == Approx(chi2_quantile(2.0, 0.95)).epsilon(1e-12));
    const auto [slo, shi] = grid_extremes(K, y, h, ssb.diagnostics.psi2.value(), true, -1.0, 4.0, 2000);
    CHECK(ssb.lower == Approx(slo).margin(5e-3));
    CHECK(ssb.upper == Approx(shi).margin(5e-3));
}

TEST_CASE("SSB on a one-dimensional ball", "[intervals]") {
    const auto r = ssb_interval(identity1(5.0), fn(Vec::Ones(1)), PolyhedralConstraints{}, 0.05);
    CHECK(r.lower == Approx(5.0 - 1.959963985).margin(1e-6));
    CHECK(r.upper == Approx(5.0 + 1.959963985).margin(1e-6));
}

TEST_CASE("SSB reports an empty chi-squared set", "[intervals]") {
    // y far outside the orthant: s^2 = 100 > chi2_{1,0.95}
    const auto r = ssb_interval(identity1(-10.0), fn(Vec::Ones(1)), nonneg(1), 0.05);
    CHECK(r.diagnostics.status == "infeasible");
    CHECK(r.diagnostics.slack_s2.value() == Approx(100.0).margin(1e-5));
    CHECK_FALSE(r.covers(0.0));
}

TEST_CASE("SSB contains OSB when its radius is larger", "[intervals][property]") {
    std::mt19937_64 rng(14);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Mat K = random_matrix(rng, 6, 4).cwiseAbs() + Mat::Identity(6, 4);
        const Vec y = K * random_vector(rng, 4).cwiseAbs() + 0.5 * random_vector(rng, 6);
        const GaussianModel model{K, y, std::nullopt};
        const auto h = fn(random_vector(rng, 4));
        const auto osb = osb_interval(model, h, nonneg(4), 0.05);
        if (chi2_quantile(4.0, 0.95) < osb.diagnostics.psi2.value()) continue;
        const auto ssb = ssb_interval(model, h, nonneg(4), 0.05);
        CHECK(ssb.lower <= osb.lower + 1e-6);
        CHECK(ssb.upper >= osb.upper - 1e-6);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("OSB intervals are nested in alpha", "[intervals][property]") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat K = random_matrix(rng, 5, 5).cwiseAbs() + Mat::Identity(5, 5);
        const Vec y = K * random_vector(rng, 5).cwiseAbs() + random_vector(rng, 5);
        const GaussianModel model{K, y, std::nullopt};
        const auto h = fn(random_vector(rng, 5));
        const auto wide = osb_interval(model, h, constraints_by_name("ND", 5), 0.01);
        const auto narrow = osb_interval(model, h, constraints_by_name("ND", 5), 0.2);
        CHECK(wide.lower <= narrow.lower + 1e-7);
        CHECK(wide.upper >= narrow.upper - 1e-7);
        CHECK(narrow.lower <= narrow.upper);
    }
}

TEST_CASE("primal and dual OSB agree on constrained instances", "[intervals][property]") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 20; ++trial) {
        const Index m = 6, n = 8;
        const Mat K = random_matrix(rng, m, n).cwiseAbs();
        const Vec y = K * random_vector(rng, n).cwiseAbs() + 0.3 * random_vector(rng, m);
        const GaussianModel model{K, y, std::nullopt};
        const auto h = fn(random_vector(rng, n).cwiseAbs());
        const auto p = osb_interval(model, h, nonneg(n), 0.05);
        const auto d = osb_dual_interval(model, h, nonneg(n), 0.05);
        REQUIRE(d.diagnostics.dual_vars.has_value());
        if (std::isfinite(p.upper)) CHECK(std::abs(p.upper - d.upper) < 1e-4);
        CHECK(std::abs(p.lower - d.lower) < 1e-4);
    }
}

TEST_CASE("unbounded endpoints are recorded", "[intervals]") {
    // the second coordinate is invisible to K
    Mat K(1, 2);
    K << 1.0, 0.0;
    const GaussianModel model{K, Vec::Constant(1, 1.0), std::nullopt};
    Vec h(2);
    h << 0.0, 1.0;
    const auto r = osb_interval(model, fn(h), nonneg(2), 0.05);
    CHECK(r.lower == Approx(0.0).margin(1e-6));
    CHECK(r.upper == kInf);
    CHECK(r.diagnostics.status == "unbounded");
    CHECK(r.covers(123.0));
}

TEST_CASE("LS intervals", "[intervals]") {
    const GaussianModel id{Mat::Identity(3, 3), Vec::LinSpaced(3, 1.0, 3.0), std::nullopt};
    Vec e = Vec::Zero(3);
    e(1) = 1.0;
    const auto r = ls_interval(id, fn(e), 0.05);
    CHECK(r.lower == Approx(2.0 - 1.959963985).margin(1e-9));
    CHECK(r.upper == Approx(2.0 + 1.959963985).margin(1e-9));
    const auto zero = ls_interval(id, fn(Vec::Zero(3)), 0.05);
    CHECK(zero.lower == 0.0);
    CHECK(zero.upper == 0.0);

    // independent oracle through the normal equations
    std::mt19937_64 rng(17);
    const Mat K = random_matrix(rng, 6, 4);
    const Vec y = random_vector(rng, 6);
    const Vec h = random_vector(rng, 4);
    const Mat KtK = K.transpose() * K;
    const Eigen::LDLT<Mat> ldlt(KtK);
    const double center = h.dot(ldlt.solve(K.transpose() * y));
    const double half = 1.959963984540054 * std::sqrt(h.dot(ldlt.solve(h)));
    const auto q = ls_interval(GaussianModel{K, y, std::nullopt}, fn(h), 0.05);
    CHECK(q.lower == Approx(center - half).margin(1e-10));
    CHECK(q.upper == Approx(center + half).margin(1e-10));

    const GaussianModel wide{random_matrix(rng, 3, 5), random_vector(rng, 3), std::nullopt};
    CHECK_THROWS_AS(ls_interval(wide, fn(Vec::Ones(5)), 0.05), RankError);
    Mat dup = random_matrix(rng, 6, 3);
    dup.col(2) = dup.col(0);
    CHECK_THROWS_AS(ls_interval(GaussianModel{dup, random_vector(rng, 6), std::nullopt}, fn(Vec::Ones(3)), 0.05), RankError);
}

TEST_CASE("PO reduces to LS for square invertible K", "[intervals][property]") {
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 1 + trial % 6;
        const Mat K = random_matrix(rng, n, n) + 3.0 * Mat::Identity(n, n);
        const auto h = fn(random_vector(rng, n));
        const Prior prior{random_vector(rng, n, 10.0), "random"};
        const auto rule = po_rule(K, h, PolyhedralConstraints{}, prior, 0.05);
        const Vec w = K.transpose().fullPivLu().solve(h.h);
        CHECK((rule.w_lower - w).norm() < 1e-6 * (1.0 + w.norm()));
        CHECK((rule.w_upper - w).norm() < 1e-6 * (1.0 + w.norm()));
        for (int k = 0; k < 3; ++k) {
            const Vec y = random_vector(rng, n, 5.0);
            const auto po = po_interval(rule, y);
            const auto ls = ls_interval(GaussianModel{K, y, std::nullopt}, h, 0.05);
            CHECK(std::abs(po.lower - ls.lower) < 1e-5);
            CHECK(std::abs(po.upper - ls.upper) < 1e-5);
        }
    }
}

TEST_CASE("PO rule on an underdetermined toy", "[intervals]") {
    Mat K(1, 2);
    K << 1.0, 1.0;
    Vec h(2);
    h << 1.0, 0.0;
    const auto rule = po_rule(K, fn(h), nonneg(2), Prior{Vec::Ones(2), "flat"}, 0.05);
    const auto f = dual_feasibility_check(rule, K, fn(h), nonneg(2));
    CHECK(f.feasible);
    CHECK(f.max_violation <= 1e-6);
    // the lower endpoint can always be certified by zero
    const auto r = po_interval(rule, Vec::Constant(1, 3.0));
    CHECK(r.lower <= 1e-6);
    CHECK(r.upper >= 3.0 - 1e-6);
}

TEST_CASE("PO without a certificate", "[intervals]") {
    // h is not in the row space of K and nothing bounds it from above
    Mat K(1, 2);
    K << 1.0, 0.0;
    Vec h(2);
    h << 0.0, 1.0;
    CHECK_THROWS_AS(po_rule(K, fn(h), nonneg(2), Prior{Vec::Ones(2), "flat"}, 0.05), InfeasibleError);
    CHECK_THROWS_AS(po_rule(K, fn(h), constraints_by_name("NDC", 2 + 0), Prior{Vec::Ones(2), "flat"}, 0.05), DimensionError);
}

TEST_CASE("PO under shape constraints", "[intervals]") {
    std::mt19937_64 rng(19);
    const Index m = 8, n = 12;
    Mat K = Mat::Zero(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) K(i, j) = std::exp(-0.5 * std::pow((j + 0.5) * m / double(n) - (i + 0.5), 2.0));
    Vec lambda(n);
    for (Index j = 0; j < n; ++j) lambda(j) = 50.0 * std::exp(-0.2 * j) + 1.0;
    Vec h = Vec::Zero(n);
    h.segment(4, 4).setOnes();
    for (const char* name : {"N", "ND", "NDC"}) {
        const auto C = constraints_by_name(name, n);
        const auto rule = po_rule(K, fn(h), C, Prior{lambda, "truth"}, 0.05);
        const auto f = dual_feasibility_check(rule, K, fn(h), C);
        INFO(name << " violation " << f.max_violation);
        CHECK(f.feasible);
        // noise-free data at a feasible truth
        const auto r = po_interval(rule, K * lambda);
        CHECK(r.covers(h.dot(lambda)));
    }
}

TEST_CASE("PO rules are data independent and affine in y", "[intervals][property]") {
    std::mt19937_64 rng(20);
    const Mat K = random_matrix(rng, 6, 8).cwiseAbs();
    const auto h = fn(Vec::Ones(8));
    const Prior prior{Vec::Constant(8, 3.0), "flat"};
    const auto a = po_rule(K, h, nonneg(8), prior, 0.05);
    const auto b = po_rule(K, h, nonneg(8), prior, 0.05);
    CHECK(a.w_lower == b.w_lower);
    CHECK(a.w_upper == b.w_upper);
    CHECK(a.c_lower == b.c_lower);
    CHECK(a.c_upper == b.c_upper);

    const Vec y1 = random_vector(rng, 6, 4.0), y2 = random_vector(rng, 6, 4.0);
    const auto r12 = po_interval(a, y1 + y2), r2 = po_interval(a, y2), r0 = po_interval(a, Vec::Zero(6));
    // f(y1 + y2) - f(y2) + f(0) = f(y1)
    const auto r1 = po_interval(a, y1);
    CHECK(r12.lower - r2.lower + r0.lower == Approx(r1.lower).margin(1e-9));
    CHECK(r12.upper - r2.upper + r0.upper == Approx(r1.upper).margin(1e-9));
    CHECK(r1.lower == Approx(a.w_lower.dot(y1) + r0.lower).margin(1e-9));
    CHECK_THROWS_AS(po_interval(a, Vec::Zero(5)), DimensionError);
}

TEST_CASE("degenerate rule", "[intervals]") {
    DecisionRule rule;
    rule.w_lower = rule.w_upper = Vec::Zero(3);
    rule.c_lower = rule.c_upper = rule.b = Vec::Zero(0);
    const auto r = po_interval(rule, Vec::Ones(3));
    CHECK(r.lower == 0.0);
    CHECK(r.upper == 0.0);
    CHECK_FALSE(r.diagnostics.pathological);
}

TEST_CASE("pathological PO intervals are flagged, not repaired", "[intervals]") {
    DecisionRule rule;
    rule.w_lower = Vec::Constant(1, 1.0);
    rule.w_upper = Vec::Constant(1, -1.0);
    rule.c_lower = rule.c_upper = rule.b = Vec::Zero(0);
    const auto r = po_interval(rule, Vec::Constant(1, 10.0));
    CHECK(r.lower > r.upper);
    CHECK(r.diagnostics.pathological);
}

TEST_CASE("dual feasibility check", "[intervals]") {
    std::mt19937_64 rng(21);
    const Mat K = random_matrix(rng, 5, 7).cwiseAbs();
    const auto h = fn(Vec::Ones(7));
    const auto C = nonneg(7);
    const auto rule = po_rule(K, h, C, Prior{Vec::Ones(7), "flat"}, 0.05);
    REQUIRE(dual_feasibility_check(rule, K, h, C).feasible);

    auto bad = rule;
    Vec d = random_vector(rng, 5);
    d *= 1e-3 / d.norm();
    bad.w_lower += d;
    const auto f = dual_feasibility_check(bad, K, h, C);
    CHECK_FALSE(f.feasible);
    // violation oracle: ||K'd||_inf, up to what the optimizer left behind
    CHECK(f.max_violation == Approx((K.transpose() * d).lpNorm<Eigen::Infinity>()).margin(1e-6));

    auto neg = rule;
    neg.c_upper(0) = -1e-3;
    CHECK_FALSE(dual_feasibility_check(neg, K, h, C).feasible);
    CHECK_THROWS_AS(dual_feasibility_check(rule, K, fn(Vec::Ones(6)), C), DimensionError);
}

TEST_CASE("PO minimizes the Bayes risk on the GMM setup", "[intervals][oracle]") {
    const GmmSetup s = gmm_setup(40, 40);
    const Prior prior = flat_prior(s.lambda_true);
    const auto C = nonneg(40);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t j : {0u, 4u, 9u}) {
        const auto& h = s.agg.h[j];
        const auto rule = po_rule(s.K, h, C, prior, 0.05);
        REQUIRE(dual_feasibility_check(rule, s.K, h, C).feasible);
        const double best = bayes_risk(rule, s.K, prior.mean);
        // random dual-feasible rules: K >= 0, so any w_l <= 0 certifies the lower
        // side and any w_u with K'w_u >= h the upper; mixtures with the optimum stay feasible
        const Vec colsum = s.K.colwise().sum().transpose();
        const double scale = (h.h.array() / colsum.array()).maxCoeff();
        for (int k = 0; k < 100; ++k) {
            Vec wl(40), wu(40);
            for (Index i = 0; i < 40; ++i) wl(i) = -scale * u(rng), wu(i) = scale * (1.0 + u(rng));
            const double t = u(rng);
            DecisionRule r = rule;
            r.w_lower = t * rule.w_lower + (1.0 - t) * wl;
            r.w_upper = t * rule.w_upper + (1.0 - t) * wu;
            r.c_lower = h.h - s.K.transpose() * r.w_lower;
            r.c_upper = s.K.transpose() * r.w_upper - h.h;
            REQUIRE(dual_feasibility_check(r, s.K, h, C).feasible);
            CHECK(best <= bayes_risk(r, s.K, prior.mean) + 1e-6 * std::abs(best));
        }
    }
}

TEST_CASE("minimax bounds", "[intervals]") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        const Index n = 2 + trial;
        const auto h = fn(random_vector(rng, n));
        const auto mb = minimax_halfwidth_bounds(Mat::Identity(n, n), h, nonneg(n), 0.05);
        CHECK(mb.lower == Approx(2.0 * normal_quantile(0.95) * h.h.norm()).margin(1e-5));
        CHECK(mb.upper == Approx(2.0 * normal_quantile(0.975) * h.h.norm()).margin(1e-5));
        CHECK(mb.lower <= mb.upper);
    }
    const Mat K = random_matrix(rng, 6, 4);
    CHECK(modulus_of_continuity(K, fn(Vec::Ones(4)), PolyhedralConstraints{}, 0.0) == Approx(0.0).margin(1e-7));
    const auto both = modulus_of_continuity(K, fn(Vec::Ones(4)), nonneg(4), 1.0, true);
    const auto one = modulus_of_continuity(K, fn(Vec::Ones(4)), nonneg(4), 1.0, false);
    CHECK(both == Approx(one).epsilon(1e-6));
    CHECK_THROWS_AS(modulus_of_continuity(K, fn(Vec::Ones(4)), nonneg(4), -1.0), ConfigError);
}

TEST_CASE("minimax lower bound is infinite at rank deficiency", "[intervals]") {
    const GmmSetup s = gmm_setup(80, 40);
    const auto mb = minimax_halfwidth_bounds(s.K, s.agg.h[4], nonneg(80), 0.05);
    CHECK(mb.lower == kInf);
    CHECK(mb.upper == kInf);
}

TEST_CASE("minimax bounds bracket on full-rank instances", "[intervals][property]") {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 10; ++trial) {
        const Mat K = random_matrix(rng, 6, 5) + 2.0 * Mat::Identity(6, 5);
        const auto h = fn(random_vector(rng, 5));
        const auto mb = minimax_halfwidth_bounds(K, h, constraints_by_name(trial % 2 ? "N" : "ND", 5), 0.05);
        CHECK(std::isfinite(mb.lower));
        CHECK(mb.lower <= mb.upper + 1e-9);
    }
}
