#include "unfold/sim.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace unfold;
using Catch::Approx;

TEST_CASE("sample_counts", "[sim]") {
    auto rng = replication_rng(1, 0);
    CHECK(sample_counts(Vec::Zero(5), rng).isZero(0.0));

    auto a = replication_rng(7, 3), b = replication_rng(7, 3), c = replication_rng(7, 4);
    const Vec mu = Vec::LinSpaced(20, 1.0, 500.0);
    const Vec ya = sample_counts(mu, a), yb = sample_counts(mu, b), yc = sample_counts(mu, c);
    CHECK(ya == yb);
    CHECK(ya != yc);
    CHECK((ya.array() == ya.array().round()).all());

    Vec bad = Vec::Ones(3);
    bad(1) = -1.0;
    CHECK_THROWS_AS(sample_counts(bad, rng), ConfigError);
}

TEST_CASE("Poisson moments", "[sim][oracle]") {
    auto rng = replication_rng(99, 0);
    const Vec mu = Vec::Constant(100000, 1000.0);
    const Vec y = sample_counts(mu, rng);
    const double mean = y.mean();
    const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
    CHECK(mean == Approx(1000.0).epsilon(0.01));
    CHECK(var == Approx(1000.0).epsilon(0.05));
}

TEST_CASE("replication streams", "[sim]") {
    auto a = replication_rng(5, 0, 0), b = replication_rng(5, 0, 1), c = replication_rng(6, 0, 0);
    const auto x = a(), y = b(), z = c();
    CHECK(x != y);
    CHECK(x != z);
}

TEST_CASE("GMM intensities", "[sim]") {
    const auto truth = make_gmm_truth(), miss = make_gmm_misspecified();
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const double at0 = 10000.0 * (0.3 * norm * std::exp(-2.0) + 0.7 * norm * std::exp(-2.0));
    CHECK(truth(0.0) == Approx(at0).epsilon(1e-12));
    const double m1 = 10000.0 * 0.3 * norm / 0.8;  // component peak at -1.8
    CHECK(miss(-1.8) == Approx(m1 + 10000.0 * 0.7 * norm / 1.2 * std::exp(-0.5 * 3.6 * 3.6 / 1.44)).epsilon(1e-12));
    const auto lam = bin_means(truth, BinGrid::uniform(-40.0, 40.0, 1));
    CHECK(lam(0) == Approx(10000.0).epsilon(1e-9));
    bool differs = false;
    for (double t = -7.0; t <= 7.0; t += 0.25) {
        CHECK(truth(t) >= 0.0);
        CHECK(miss(t) >= 0.0);
        differs = differs || std::abs(truth(t) - miss(t)) > 1.0;
    }
    CHECK(differs);
}

TEST_CASE("uniform aggregation", "[sim]") {
    const auto a = aggregation_uniform(40, 10);
    REQUIRE(a.h.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
        CHECK(a.h[k].h.sum() == 4.0);
        CHECK(a.h[k].h.segment(static_cast<Index>(4 * k), 4).isOnes(0.0));
    }
    const auto b = aggregation_uniform(80, 10);
    CHECK(b.h[3].h.segment(24, 8).isOnes(0.0));
    CHECK(b.h[3].h.sum() == 8.0);
    const auto c = aggregation_uniform(7, 7);
    for (std::size_t k = 0; k < 7; ++k) CHECK(c.h[k].h == Vec::Unit(7, static_cast<Index>(k)));
    CHECK_THROWS_AS(aggregation_uniform(40, 7), ConfigError);

    const auto g = aggregation_uniform(BinGrid::uniform(-7.0, 7.0, 40), 10);
    CHECK(g.wide_edges.size() == 10);
    CHECK(g.wide_edges.front() == -7.0);
    CHECK(g.wide_edges.back() == 7.0);
    CHECK(g.wide_edges.edges()[1] == Approx(-5.6));
}

TEST_CASE("sqrt_pt aggregation", "[sim]") {
    const BinGrid fine = BinGrid::uniform(400.0, 1000.0, 60);
    const auto a = aggregation_sqrt_pt(fine, 10);
    REQUIRE(a.h.size() == 10);
    CHECK(a.h.front().h.sum() == 5.0);
    CHECK(a.h.back().h.sum() == 7.0);
    double total = 0.0;
    for (const auto& h : a.h) {
        CHECK(h.h.sum() >= 1.0);
        total += h.h.sum();
    }
    CHECK(total == 60.0);
    const auto flat = aggregation_sqrt_pt(fine, 10, 0.0);
    for (const auto& h : flat.h) CHECK(h.h.sum() == 6.0);
    // more wide bins than the fine grid can resolve
    CHECK_THROWS_AS(aggregation_sqrt_pt(BinGrid::uniform(400.0, 1000.0, 6), 10), ConfigError);
    CHECK_THROWS_AS(aggregation_sqrt_pt(BinGrid::uniform(1.0, 1000.0, 12), 11, 2.0), ConfigError);
}

TEST_CASE("aggregation partitions the fine bins", "[sim][property]") {
    const BinGrid fine = BinGrid::uniform(400.0, 1000.0, 60);
    const Vec lambda = Vec::LinSpaced(60, 3.0, -1.0).array().exp();
    for (const auto& agg : {aggregation_sqrt_pt(fine, 10), aggregation_uniform(fine, 12), aggregation_uniform(fine, 60),
                            aggregation_from_boundaries(fine, {0, 1, 30, 59, 60})}) {
        Vec cover = Vec::Zero(60);
        double s = 0.0;
        for (const auto& h : agg.h) {
            CHECK(((h.h.array() == 0.0) || (h.h.array() == 1.0)).all());
            cover += h.h;
            s += h.h.dot(lambda);
        }
        CHECK(cover.isOnes(0.0));
        CHECK(s == Approx(lambda.sum()).epsilon(1e-14));
    }
    CHECK_THROWS_AS(aggregation_from_boundaries(fine, {0, 5, 5, 60}), ConfigError);
    CHECK_THROWS_AS(aggregation_from_boundaries(fine, {0, 5, 59}), ConfigError);
}

TEST_CASE("flat prior", "[sim]") {
    Vec l(3);
    l << 1.0, 2.0, 3.0;
    CHECK(flat_prior(l).mean == Vec::Constant(3, 2.0));
    CHECK(flat_prior(Vec::Constant(4, 1.5)).mean == Vec::Constant(4, 1.5));
    const Vec lam = bin_means(make_gmm_truth(), BinGrid::uniform(-7.0, 7.0, 40));
    const Prior p = flat_prior(lam);
    CHECK(p.mean(0) == Approx(lam.sum() / 40.0).epsilon(1e-14));
    CHECK(p.mean(0) < 250.0);
    CHECK(p.mean(0) > 249.0);
}

TEST_CASE("NNLS and the adversarial ansatz", "[sim]") {
    const BinGrid tg = BinGrid::uniform(-2.0, 2.0, 8), sg = BinGrid::uniform(-2.0, 2.0, 10);
    Mat K(10, 8);
    for (Index i = 0; i < 10; ++i)
        for (Index j = 0; j < 8; ++j) K(i, j) = std::exp(-0.5 * std::pow((sg.center(i) - tg.center(j)) / 0.5, 2.0));
    const ResponseMatrix R{K, tg, sg, "test"};
    Vec l0(8);
    l0 << 3.0, 5.0, 8.0, 12.0, 10.0, 7.0, 4.0, 2.0;
    const Vec fit = nnls(K, K * l0);
    CHECK((fit - l0).lpNorm<Eigen::Infinity>() < 1e-5);

    Vec y(10);
    y << 40.0, 0.0, 30.0, 90.0, 10.0, 0.0, 70.0, 5.0, 0.0, 60.0;
    const Vec lh = nnls(K, y);
    CHECK((lh.array() >= 0.0).all());
    const auto f = adversarial_ansatz(R, y);
    for (std::size_t j = 0; j < 8; ++j) {
        const double expect = lh(static_cast<Index>(j)) / tg.width(j);
        if (expect > 1e-6) CHECK(f(tg.center(j)) == Approx(expect).margin(1e-8));
        CHECK(f(tg.center(j)) > 0.0);
    }
    for (double t = -2.0; t <= 2.0; t += 0.01) CHECK(f(t) > 0.0);
}

TEST_CASE("coverage accumulator", "[sim]") {
    CoverageAccumulator at;
    CoverageAccumulator off;
    CoverageAccumulator wide;
    for (int i = 0; i < 10; ++i) {
        IntervalResult r;
        r.lower = r.upper = 3.0;
        at.add_interval(r, 3.0);
        r.lower = 4.0;
        r.upper = 5.0 + i;
        off.add_interval(r, 3.0);
        r.lower = -kInf;
        r.upper = kInf;
        wide.add_interval(r, 3.0);
    }
    CHECK(at.coverage() == 1.0);
    CHECK(at.mean_width() == 0.0);
    CHECK(off.coverage() == 0.0);
    CHECK(off.coverage_se() == 0.0);
    CHECK(off.mean_width() == Approx(5.5));
    // widths 1..10: sample variance 55/6
    CHECK(off.width_se() == Approx(std::sqrt(55.0 / 6.0 / 10.0)).epsilon(1e-12));
    CHECK(wide.coverage() == 1.0);
    CHECK(std::isinf(wide.mean_width()));

    CoverageAccumulator half;
    IntervalResult yes, no;
    yes.lower = 0.0, yes.upper = 2.0;
    no.lower = 5.0, no.upper = 6.0;
    for (int i = 0; i < 50; ++i) half.add_interval(yes, 1.0), half.add_interval(no, 1.0);
    half.add_failure();
    CHECK(half.total == 101);
    CHECK(half.failures == 1);
    CHECK(half.coverage() == Approx(50.0 / 101.0));
    CHECK(half.coverage_se() == Approx(std::sqrt(half.coverage() * (1.0 - half.coverage()) / 101.0)));

    CoverageAccumulator patho;
    IntervalResult p;
    p.lower = 2.0;
    p.upper = 1.0;
    p.diagnostics.pathological = true;
    patho.add_interval(p, 1.5);
    CHECK(patho.pathological == 1);
    CHECK(patho.coverage() == 0.0);
    CHECK(patho.mean_width() == -1.0);
}

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.name = "small";
    cfg.true_bins = 20;
    cfg.smeared_bins = 20;
    cfg.wide_bins.count = 5;
    cfg.methods = {Method::LS, Method::OSB, Method::PO, Method::SSB, Method::MinimaxLower};
    cfg.constraints = {"N", "ND"};
    cfg.replications = 24;
    cfg.seed = 42;
    return cfg;
}

}  // namespace

TEST_CASE("study output is independent of the thread count", "[sim][property]") {
    const ExperimentConfig cfg = small_config();
    const auto a = run_study(cfg, 1);
    const auto b = run_study(cfg, 3);
    REQUIRE(a.rows.size() == b.rows.size());
    // LS once, then OSB, PO, SSB per constraint setup, 5 wide bins each
    CHECK(a.rows.size() == (1 + 3 * 2) * 5);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].method == b.rows[i].method);
        CHECK(a.rows[i].coverage == b.rows[i].coverage);
        CHECK(a.rows[i].mean_width == b.rows[i].mean_width);
        CHECK(a.rows[i].width_se == b.rows[i].width_se);
        CHECK(a.rows[i].failure_count == 0);
        CHECK(a.rows[i].coverage >= 0.0);
        CHECK(a.rows[i].coverage <= 1.0);
    }
    REQUIRE(a.minimax.size() == 10);
    for (std::size_t i = 0; i < a.minimax.size(); ++i) {
        CHECK(a.minimax[i].lower_bound == b.minimax[i].lower_bound);
        CHECK(a.minimax[i].lower_bound <= a.minimax[i].upper_bound);
    }
    CHECK(a.theta.sum() == Approx(a.lambda_true.sum()).epsilon(1e-13));
}

TEST_CASE("single replication gives 0/1 coverage", "[sim]") {
    ExperimentConfig cfg = small_config();
    cfg.replications = 1;
    const auto r = run_study(cfg, 1);
    for (const auto& row : r.rows) {
        CHECK((row.coverage == 0.0 || row.coverage == 1.0));
        CHECK(row.width_se == 0.0);
    }
    CHECK(r.example.size() == r.rows.size());
}

TEST_CASE("LS is reported as failed at rank deficiency", "[sim]") {
    ExperimentConfig cfg = small_config();
    cfg.true_bins = 40;
    cfg.methods = {Method::LS};
    cfg.constraints = {"none"};
    cfg.replications = 3;
    const auto r = run_study(cfg, 1);
    for (const auto& row : r.rows) {
        CHECK(row.failure_count == 3);
        CHECK(row.coverage == 0.0);
    }
}

TEST_CASE("invalid study configs", "[sim]") {
    ExperimentConfig cfg = small_config();
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(run_study(cfg), ConfigError);
    cfg = small_config();
    cfg.replications = 0;
    CHECK_THROWS_AS(run_study(cfg), ConfigError);
    cfg = small_config();
    cfg.priors.clear();
    CHECK_THROWS_AS(run_study(cfg), ConfigError);
    cfg = small_config();
    cfg.wide_bins.count = 3;
    CHECK_THROWS_AS(run_study(cfg), ConfigError);
}
