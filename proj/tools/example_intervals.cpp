// One simulated sample from the Gaussian-mixture setup: 40 smeared x 40 true
// bins on [-7, 7], intervals for ten wide bins under non-negativity.
#include "unfold/unfold.hpp"

#include <cstdio>

using namespace unfold;

int main() {
    const BinGrid grid = BinGrid::uniform(-7.0, 7.0, 40);
    const HomoskedasticGaussian kernel{0.35};
    const ResponseMatrix R = response_matrix(kernel, make_gmm_misspecified(), grid, grid);

    const Vec lambda = bin_means(make_gmm_truth(), grid);
    const Vec mu = response_matrix(kernel, make_gmm_truth(), grid, grid).K * lambda;
    auto rng = replication_rng(11, 0);
    const Vec y = sample_counts(mu, rng);

    const GaussianModel model = whiten(GaussianModel{R.K, y, mu});
    const auto C = nonneg(40);
    const auto agg = aggregation_uniform(grid, 10);
    const double alpha = 0.05;

    std::printf("%-4s %9s  %-20s %-20s %-20s %-20s\n", "bin", "truth", "OSB", "PO (flat)", "SSB", "LS");
    for (std::size_t j = 0; j < agg.h.size(); ++j) {
        const auto& h = agg.h[j];
        const auto osb = osb_interval(model, h, C, alpha);
        const auto rule = po_rule(model.K, h, C, flat_prior(lambda), alpha);
        const auto po = po_interval(rule, model.y);
        const auto ssb = ssb_interval(model, h, C, alpha);
        const auto ls = ls_interval(model, h, alpha);
        auto cell = [](const IntervalResult& r) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "[%.0f, %.0f]", r.lower, r.upper);
            return std::string(buf);
        };
        std::printf("%-4zu %9.1f  %-20s %-20s %-20s %-20s\n", j, h.h.dot(lambda), cell(osb).c_str(), cell(po).c_str(),
                    cell(ssb).c_str(), cell(ls).c_str());
    }
}
