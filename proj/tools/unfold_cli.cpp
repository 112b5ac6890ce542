// unfold: response matrices, confidence intervals, decision rules and
// coverage studies from a JSON configuration.

#include "unfold/unfold.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using namespace unfold;
using unfold::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Options {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string format = "both";
    std::string data;
    std::string rules;
    bool quiet = false;
};

bool want_csv(const Options& o) { return o.format == "csv" || o.format == "both"; }
bool want_json(const Options& o) { return o.format == "json" || o.format == "both"; }

class Output {
public:
    Output(const Options& o, std::string command) : opt_(o), command_(std::move(command)) {
        std::error_code ec;
        fs::create_directories(opt_.out, ec);
        if (ec) throw IoError("cannot create output directory '" + opt_.out + "': " + ec.message());
    }

    void write(const std::string& name, const std::string& content) {
        io::write_file(fs::path(opt_.out) / name, content);
        files_.push_back({{"path", name}, {"sha256", io::sha256_hex(content)}});
    }

    /// Writes the resolved configuration and the manifest of every file.
    void finish(const json& snapshot) {
        const std::string snap = snapshot.dump(2) + "\n";
        write("config_snapshot.json", snap);
        json m;
        m["command"] = command_;
        m["config"] = opt_.config;
        m["config_sha256"] = io::sha256_hex(snapshot.dump());
        m["seed"] = snapshot.value("seed", std::uint64_t{1});
        m["threads"] = detail::resolve_threads(opt_.threads);
        m["format"] = opt_.format;
        m["files"] = files_;
        io::write_file(fs::path(opt_.out) / "manifest.json", m.dump(2) + "\n");
    }

private:
    const Options& opt_;
    std::string command_;
    json files_ = json::array();
};

struct Loaded {
    json snapshot;
    std::vector<ExperimentConfig> configs;
};

Loaded load(const Options& o) {
    Loaded l;
    const fs::path base = fs::path(o.config).parent_path();
    l.snapshot = io::inline_references(io::load_config(o.config), base);
    if (o.seed) l.snapshot["seed"] = *o.seed;
    if (!o.data.empty()) l.snapshot["data"] = json{{"values", io::json_vec(io::load_vector(o.data))}};
    if (!o.rules.empty()) {
        const json r = io::parse_json(io::read_file(o.rules), o.rules);
        if (!r.contains("rules")) throw ConfigError(o.rules + ": missing \"rules\" array");
        l.snapshot["rules"] = r.at("rules");
    }
    l.configs = io::experiments_from_json(l.snapshot, base);
    return l;
}

std::string size_suffix(const std::vector<ExperimentConfig>& cs, const ExperimentConfig& c) {
    return cs.size() > 1 ? "_n" + std::to_string(c.true_bins) : "";
}

// ------------------------------------------------------------------ matrix

int cmd_matrix(const Options& o) {
    const Loaded l = load(o);
    Output out(o, "matrix");
    const unsigned threads = detail::resolve_threads(o.threads);
    for (const auto& c : l.configs) {
        const BinGrid tg = BinGrid::uniform(c.true_lo, c.true_hi, c.true_bins);
        const BinGrid sg = BinGrid::uniform(c.smeared_lo, c.smeared_hi, c.smeared_bins);
        const ResponseMatrix R = response_matrix(c.kernel, c.ansatz, tg, sg, c.quadrature, threads);
        const std::string stem = "matrix" + size_suffix(l.configs, c);
        if (want_csv(o)) out.write(stem + ".csv", io::matrix_to_csv(R));
        if (want_json(o)) out.write(stem + ".json", io::matrix_to_json(R).dump() + "\n");
        const Vec cs = R.K.colwise().sum().transpose();
        Eigen::ColPivHouseholderQR<Mat> qr(R.K);
        qr.setThreshold(1e-12);
        std::cout << stem << ": " << R.rows() << " x " << R.cols() << ", column sums in [" << io::format_double(cs.minCoeff())
                  << ", " << io::format_double(cs.maxCoeff()) << "], rank " << qr.rank() << '\n';
    }
    out.finish(l.snapshot);
    return kOk;
}

// ------------------------------------------------------------------ model setup

struct Problem {
    ResponseMatrix R;
    Vec lambda_true;
    Vec mu_true;
    AggregationSet agg;
    std::vector<PolyhedralConstraints> setups;
};

Problem build_problem(const Loaded& l, const ExperimentConfig& c, unsigned threads) {
    Problem p;
    const json& j = l.snapshot;
    if (j.contains("matrix")) {
        p.R = io::matrix_from_json(j.at("matrix"));
    } else {
        const BinGrid tg = BinGrid::uniform(c.true_lo, c.true_hi, c.true_bins);
        const BinGrid sg = BinGrid::uniform(c.smeared_lo, c.smeared_hi, c.smeared_bins);
        p.R = response_matrix(c.kernel, c.ansatz, tg, sg, c.quadrature, threads);
    }
    const BinGrid& tg = p.R.true_grid;
    p.lambda_true = bin_means(c.truth, tg, c.quadrature);
    if (!j.contains("matrix")) {
        const ResponseMatrix Kt = response_matrix(c.kernel, c.truth, tg, p.R.smeared_grid, c.quadrature, threads);
        p.mu_true = forward_means(Kt, p.lambda_true);
    } else {
        p.mu_true = forward_means(p.R, p.lambda_true);
    }
    p.agg = build_aggregation(c.wide_bins, tg);
    for (const auto& name : c.constraints)
        p.setups.push_back(constraints_by_name(name, static_cast<Index>(tg.size()), tg));
    return p;
}

/// Variances of the counts: "truth" (forward means of the true intensity),
/// "data" (observed counts floored at one), "identity", or an explicit array.
Vec covariance_diag(const json& j, const Problem& p, const std::optional<Vec>& y) {
    const json spec = j.value("covariance", json("truth"));
    const Index m = p.R.rows();
    if (spec.is_array()) {
        Vec v = io::vec_from_json(spec);
        if (v.size() != m) throw DimensionError("covariance has length " + std::to_string(v.size()) + ", expected " + std::to_string(m));
        return v;
    }
    const std::string kind = spec.get<std::string>();
    if (kind == "truth") return p.mu_true;
    if (kind == "identity") return Vec::Ones(m);
    if (kind == "data") {
        if (!y) throw ConfigError("covariance \"data\" needs observed counts");
        return y->cwiseMax(1.0);
    }
    throw ConfigError("unknown covariance '" + kind + "'");
}

Mat whitened_operator(const Mat& K, const Vec& var) {
    // same arithmetic as the intervals path, so stored rules reproduce fresh ones
    return whiten(GaussianModel{K, Vec::Zero(K.rows()), var}).K;
}

/// Observed counts from config "data" as {"values"} or {"simulate": replication};
/// --data and {"path"} were inlined on load.
Vec load_data(const Loaded& l, const ExperimentConfig& c, const Problem& p) {
    if (!l.snapshot.contains("data")) throw ConfigError("no data: pass --data or set \"data\" in the configuration");
    const json& d = l.snapshot.at("data");
    io::check_keys(d, {"values", "simulate"}, "data");
    if (d.contains("values")) return io::vec_from_json(d.at("values"));
    if (d.contains("simulate")) {
        auto rng = replication_rng(c.seed, d.at("simulate").get<std::uint64_t>());
        return sample_counts(p.mu_true, rng);
    }
    throw ConfigError("data: expected one of path, values, simulate");
}

struct RuleKey {
    std::string functional, constraints, prior;
    auto operator<=>(const RuleKey&) const = default;
};

std::map<RuleKey, DecisionRule> load_rules(const json& rules) {
    std::map<RuleKey, DecisionRule> out;
    for (const auto& r : rules) {
        DecisionRule rule = io::rule_from_json(r);
        out[{rule.functional, r.at("constraints").get<std::string>(), rule.provenance}] = std::move(rule);
    }
    return out;
}

std::string error_tag(const Error& e) {
    if (dynamic_cast<const RankError*>(&e)) return "rank_deficient";
    if (dynamic_cast<const InfeasibleError*>(&e)) return "infeasible";
    return "numerical";
}

// ------------------------------------------------------------------ rules

json compute_rules(const ExperimentConfig& c, const Problem& p, const Mat& Kw, unsigned threads) {
    json rules = json::array();
    for (std::size_t s = 0; s < p.setups.size(); ++s) {
        for (const auto& ps : c.priors) {
            const Prior prior{detail::prior_mean(ps, c, p.R.true_grid, p.lambda_true), ps.label};
            std::vector<json> row(p.agg.h.size());
            detail::parallel_for(p.agg.h.size(), threads, [&](std::size_t j) {
                row[j] = io::rule_to_json(po_rule(Kw, p.agg.h[j], p.setups[s], prior, c.alpha, c.interval_options),
                                          c.constraints[s]);
            });
            for (auto& r : row) rules.push_back(std::move(r));
        }
    }
    return rules;
}

int cmd_rules(const Options& o) {
    const Loaded l = load(o);
    Output out(o, "rules");
    const unsigned threads = detail::resolve_threads(o.threads);
    for (const auto& c : l.configs) {
        const Problem p = build_problem(l, c, threads);
        std::optional<Vec> y;
        if (l.snapshot.value("covariance", json("truth")) == json("data")) y = load_data(l, c, p);
        const Mat Kw = whitened_operator(p.R.K, covariance_diag(l.snapshot, p, y));
        json doc;
        doc["m"] = p.R.rows();
        doc["n"] = p.R.cols();
        doc["ansatz_id"] = p.R.ansatz_id;
        doc["rules"] = compute_rules(c, p, Kw, threads);
        out.write("rules" + size_suffix(l.configs, c) + ".json", doc.dump(1) + "\n");
    }
    out.finish(l.snapshot);
    return kOk;
}

// ------------------------------------------------------------------ intervals

int cmd_intervals(const Options& o) {
    const Loaded l = load(o);
    Output out(o, "intervals");
    const unsigned threads = detail::resolve_threads(o.threads);
    std::optional<std::map<RuleKey, DecisionRule>> stored;
    if (l.snapshot.contains("rules")) stored = load_rules(l.snapshot.at("rules"));
    std::size_t total_rows = 0, failed_rows = 0;

    for (const auto& c : l.configs) {
        const Problem p = build_problem(l, c, threads);
        const Vec y = load_data(l, c, p);
        if (y.size() != p.R.rows())
            throw DimensionError("data has length " + std::to_string(y.size()) + ", expected " + std::to_string(p.R.rows()));
        const Vec var = covariance_diag(l.snapshot, p, y);
        const GaussianModel model = whiten(GaussianModel{p.R.K, y, var});
        const std::size_t nb = p.agg.h.size();

        std::vector<io::IntervalRow> rows;
        json new_rules = json::array();
        std::vector<MinimaxRow> minimax;
        for (std::size_t s = 0; s < p.setups.size(); ++s) {
            for (Method m : c.methods) {
                if (m == Method::LS && s > 0) continue;
                if (m == Method::MinimaxLower || m == Method::MinimaxUpper) {
                    for (std::size_t j = 0; j < nb; ++j) {
                        MinimaxRow r{j, c.constraints[s], c.true_bins, kNaN, kNaN};
                        const auto b = minimax_halfwidth_bounds(model.K, p.agg.h[j], p.setups[s], c.alpha, 1.0,
                                                                c.minimax_both_signs, c.interval_options);
                        r.lower_bound = b.lower;
                        r.upper_bound = b.upper;
                        minimax.push_back(r);
                    }
                    continue;
                }
                const std::size_t np = m == Method::PO ? c.priors.size() : 1;
                for (std::size_t q = 0; q < np; ++q) {
                    std::vector<io::IntervalRow> part(nb);
                    std::vector<json> part_rules(nb);
                    detail::parallel_for(nb, threads, [&](std::size_t j) {
                        const FunctionalSpec& h = p.agg.h[j];
                        io::IntervalRow row{h.label, m == Method::LS ? std::string("none") : c.constraints[s],
                                            m == Method::PO ? c.priors[q].label : std::string(), {}, {}};
                        row.result.method = m;
                        row.result.alpha = c.alpha;
                        row.result.lower = kNaN;
                        row.result.upper = kNaN;
                        try {
                            switch (m) {
                                case Method::OSB: row.result = osb_interval(model, h, p.setups[s], c.alpha, c.interval_options); break;
                                case Method::SSB: row.result = ssb_interval(model, h, p.setups[s], c.alpha, c.interval_options); break;
                                case Method::LS: row.result = ls_interval(model, h, c.alpha); break;
                                case Method::PO: {
                                    DecisionRule rule;
                                    const RuleKey key{h.label, c.constraints[s], c.priors[q].label};
                                    if (stored && stored->count(key)) {
                                        rule = stored->at(key);
                                    } else {
                                        const Prior prior{detail::prior_mean(c.priors[q], c, p.R.true_grid, p.lambda_true), c.priors[q].label};
                                        rule = po_rule(model.K, h, p.setups[s], prior, c.alpha, c.interval_options);
                                        part_rules[j] = io::rule_to_json(rule, c.constraints[s]);
                                    }
                                    row.result = po_interval(rule, model.y);
                                    break;
                                }
                                default: break;
                            }
                        } catch (const ConfigError&) {
                            throw;
                        } catch (const DimensionError&) {
                            throw;
                        } catch (const Error& e) {
                            row.error = error_tag(e);
                        }
                        part[j] = std::move(row);
                    });
                    rows.insert(rows.end(), part.begin(), part.end());
                    for (auto& r : part_rules)
                        if (!r.is_null()) new_rules.push_back(std::move(r));
                }
            }
        }
        total_rows += rows.size();
        for (const auto& r : rows) failed_rows += r.error.empty() ? 0 : 1;
        const std::string sfx = size_suffix(l.configs, c);
        if (want_csv(o)) out.write("intervals" + sfx + ".csv", io::intervals_to_csv(rows));
        if (want_json(o)) out.write("intervals" + sfx + ".json", io::intervals_to_json(rows).dump(1) + "\n");
        if (!new_rules.empty()) {
            json doc{{"m", p.R.rows()}, {"n", p.R.cols()}, {"ansatz_id", p.R.ansatz_id}, {"rules", new_rules}};
            out.write("rules" + sfx + ".json", doc.dump(1) + "\n");
        }
        if (!minimax.empty()) {
            CoverageReport tmp;
            tmp.minimax = minimax;
            out.write("minimax" + sfx + ".csv", io::minimax_to_csv(tmp));
        }
    }
    out.finish(l.snapshot);
    if (total_rows > 0 && failed_rows == total_rows) {
        std::cerr << "numerical error: every interval failed\n";
        return kNumerical;
    }
    return kOk;
}

// ------------------------------------------------------------------ study

int cmd_study(const Options& o) {
    const Loaded l = load(o);
    Output out(o, "study");
    const unsigned threads = detail::resolve_threads(o.threads);
    CoverageReport all;
    all.name = l.configs.front().name;
    all.config_hash = io::sha256_hex(l.snapshot.dump());
    std::string truth_csv = "true_bins,bin,lower_edge,upper_edge,lambda_true\n";
    std::string edges_csv = "true_bins,bin,lower_edge,upper_edge,theta\n";
    for (const auto& c : l.configs) {
        const auto t0 = std::chrono::steady_clock::now();
        StudyProgress progress;
        if (!o.quiet) {
            progress.every = std::max<std::size_t>(1, c.replications / 10);
            progress.callback = [&, n = c.true_bins](std::size_t d, std::size_t m) {
                const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::cerr << "[" << c.name << " n=" << n << "] " << d << "/" << m << " replications, " << s << " s\n";
            };
        }
        const CoverageReport r = run_study(c, threads, progress);
        all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
        all.minimax.insert(all.minimax.end(), r.minimax.begin(), r.minimax.end());
        all.wide_edges = r.wide_edges;
        const BinGrid tg = BinGrid::uniform(c.true_lo, c.true_hi, c.true_bins);
        for (std::size_t j = 0; j < tg.size(); ++j)
            truth_csv += std::to_string(c.true_bins) + "," + std::to_string(j) + "," + io::format_double(tg.lower(j)) + "," +
                         io::format_double(tg.upper(j)) + "," + io::format_double(r.lambda_true(static_cast<Index>(j))) + "\n";
        for (std::size_t j = 0; j < r.wide_edges.size(); ++j)
            edges_csv += std::to_string(c.true_bins) + "," + std::to_string(j) + "," + io::format_double(r.wide_edges.lower(j)) +
                         "," + io::format_double(r.wide_edges.upper(j)) + "," + io::format_double(r.theta(static_cast<Index>(j))) + "\n";
        CoverageReport ex = r;
        const std::string sfx = size_suffix(l.configs, c);
        if (!r.example.empty()) out.write(all.name + sfx + "_example.csv", io::example_to_csv(ex));
    }
    if (want_csv(o)) out.write(all.name + "_coverage.csv", io::coverage_to_csv(all, l.snapshot));
    if (want_json(o)) out.write(all.name + "_coverage.json", io::coverage_to_json(all, l.snapshot).dump(1) + "\n");
    if (!all.minimax.empty()) out.write(all.name + "_minimax.csv", io::minimax_to_csv(all));
    out.write(all.name + "_truth.csv", truth_csv);
    out.write(all.name + "_wide_bins.csv", edges_csv);
    out.finish(l.snapshot);
    return kOk;
}

// ------------------------------------------------------------------ adversarial ansatz

int cmd_adversarial(const Options& o, std::uint64_t stream, double floor_fraction, const std::string& file) {
    const Loaded l = load(o);
    const ExperimentConfig& c = l.configs.front();
    const unsigned threads = detail::resolve_threads(o.threads);
    const BinGrid tg = BinGrid::uniform(c.true_lo, c.true_hi, c.true_bins);
    const BinGrid sg = BinGrid::uniform(c.smeared_lo, c.smeared_hi, c.smeared_bins);
    const Vec lt = bin_means(c.truth, tg, c.quadrature);
    const Vec mu = forward_means(response_matrix(c.kernel, c.truth, tg, sg, c.quadrature, threads), lt);
    auto rng = replication_rng(c.seed, 0, static_cast<std::uint32_t>(stream));
    const Vec y = sample_counts(mu, rng);
    const ResponseMatrix R = response_matrix(c.kernel, c.ansatz, tg, sg, c.quadrature, threads);
    const IntensityFunction f = adversarial_ansatz(R, y, c.interval_options, floor_fraction);
    json j = io::spline_to_json(std::get<TabulatedSpline>(f.variant()), "adversarial");
    j["description"] = "natural cubic spline through NNLS fit of one simulated sample, clamped below at floor";
    j["seed"] = c.seed;
    Output out(o, "adversarial");
    out.write(file, j.dump(1) + "\n");
    out.finish(l.snapshot);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Strict-bounds and prior-optimized confidence intervals for Poisson unfolding"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* s) {
        s->add_option("--config", o.config, "configuration file (TOML, or JSON by extension)")->required();
        s->add_option("--out", o.out, "output directory")->capture_default_str();
        s->add_option("--seed", o.seed, "override the configuration seed");
        s->add_option("--threads", o.threads, "worker threads (0 = hardware concurrency)")->capture_default_str();
        s->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json", "both"}))->capture_default_str();
        s->add_flag("--quiet", o.quiet, "suppress progress output");
    };
    auto* matrix = app.add_subcommand("matrix", "compute the response matrix");
    auto* intervals = app.add_subcommand("intervals", "intervals for observed data");
    auto* study = app.add_subcommand("study", "replication coverage study");
    auto* rules = app.add_subcommand("rules", "prior-optimized decision rules");
    auto* adv = app.add_subcommand("adversarial", "regenerate the adversarial ansatz spline");
    for (auto* s : {matrix, intervals, study, rules, adv}) common(s);
    intervals->add_option("--data", o.data, "observed counts (CSV or JSON)");
    intervals->add_option("--rules", o.rules, "stored decision rules (JSON)");
    rules->add_option("--data", o.data, "observed counts, needed for covariance \"data\"");
    std::uint64_t stream = 7;
    double floor_fraction = 1e-6;
    std::string adv_file = "adversarial_ansatz.json";
    adv->add_option("--stream", stream, "random stream of the simulated sample")->capture_default_str();
    adv->add_option("--floor", floor_fraction, "floor as a fraction of the peak")->capture_default_str();
    adv->add_option("--file", adv_file, "output file name")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*matrix) return cmd_matrix(o);
        if (*intervals) return cmd_intervals(o);
        if (*study) return cmd_study(o);
        if (*rules) return cmd_rules(o);
        if (*adv) return cmd_adversarial(o, stream, floor_fraction, adv_file);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const DimensionError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const unfold::json::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
