#pragma once

// CSV/JSON serialization, configuration parsing and content hashing.

#include "unfold/errors.hpp"
#include "unfold/intervals.hpp"
#include "unfold/model.hpp"
#include "unfold/sim.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <toml++/toml.hpp>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace unfold {

using json = nlohmann::ordered_json;

// Unreadable or unwritable files.
class IoError : public Error {
public:
    using Error::Error;
};

namespace io {

/// 17 significant digits; infinities as "inf" / "-inf".
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return kNaN;
    // strtod, unlike stod, accepts subnormal values
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (s.empty() || end != begin + s.size() || std::isspace(static_cast<unsigned char>(s.front())) || std::isinf(v))
        throw ConfigError("not a number: '" + s + "'");
    return v;
}

/// Extended reals as JSON: finite numbers, "inf"/"-inf" strings, NaN as null.
inline json json_real(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double real_from_json(const json& j) {
    if (j.is_null()) return kNaN;
    if (j.is_string()) return parse_double(j.get<std::string>());
    if (!j.is_number()) throw ConfigError("expected a number, got " + j.dump());
    return j.get<double>();
}

inline json json_vec(const Vec& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(json_real(v(i)));
    return a;
}

inline Vec vec_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("expected an array of numbers");
    Vec v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = real_from_json(j[i]);
    return v;
}

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 computation failed");
    std::ostringstream os;
    for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    out << content;
    if (!out) throw IoError("failed writing '" + p.string() + "'");
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// ---------------------------------------------------------------- matrix

inline std::string edges_field(const BinGrid& g) {
    std::string s;
    for (std::size_t i = 0; i < g.edges().size(); ++i) {
        if (i) s += ' ';
        s += format_double(g.edges()[i]);
    }
    return s;
}

inline BinGrid edges_from_field(const std::string& s) {
    std::vector<double> e;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) e.push_back(parse_double(tok));
    return BinGrid(std::move(e));
}

/// Row-major CSV. The first comment line names the metadata fields, the
/// second carries their values (edges space separated).
inline std::string matrix_to_csv(const ResponseMatrix& R) {
    std::ostringstream os;
    os << "# m,n,ansatz_id,true_edges,smeared_edges\n";
    os << "# " << R.rows() << ',' << R.cols() << ',' << R.ansatz_id << ',' << edges_field(R.true_grid) << ','
       << edges_field(R.smeared_grid) << '\n';
    for (Index i = 0; i < R.rows(); ++i) {
        for (Index j = 0; j < R.cols(); ++j) os << (j ? "," : "") << format_double(R.K(i, j));
        os << '\n';
    }
    return os.str();
}

inline ResponseMatrix matrix_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string header, meta;
    if (!std::getline(is, header) || !std::getline(is, meta) || meta.rfind("# ", 0) != 0)
        throw ConfigError("matrix CSV: missing metadata header");
    const auto f = split(meta.substr(2), ',');
    if (f.size() != 5) throw ConfigError("matrix CSV: metadata needs 5 fields");
    ResponseMatrix R;
    const long m = std::stol(f[0]), n = std::stol(f[1]);
    if (m < 1 || n < 1) throw ConfigError("matrix CSV: invalid dimensions");
    R.ansatz_id = f[2];
    R.true_grid = edges_from_field(f[3]);
    R.smeared_grid = edges_from_field(f[4]);
    R.K.resize(m, n);
    std::string line;
    long i = 0;
    while (std::getline(is, line)) {
        if (trim(line).empty() || line[0] == '#') continue;
        if (i >= m) throw ConfigError("matrix CSV: too many rows");
        const auto cells = split(line, ',');
        if (static_cast<long>(cells.size()) != n) throw ConfigError("matrix CSV: row " + std::to_string(i) + " has wrong length");
        for (long j = 0; j < n; ++j) R.K(i, j) = parse_double(trim(cells[static_cast<std::size_t>(j)]));
        ++i;
    }
    if (i != m) throw ConfigError("matrix CSV: expected " + std::to_string(m) + " rows, found " + std::to_string(i));
    if (R.true_grid.size() != static_cast<std::size_t>(n) || R.smeared_grid.size() != static_cast<std::size_t>(m))
        throw ConfigError("matrix CSV: grids do not match dimensions");
    return R;
}

inline json matrix_to_json(const ResponseMatrix& R) {
    json j;
    j["m"] = R.rows();
    j["n"] = R.cols();
    j["ansatz_id"] = R.ansatz_id;
    j["true_edges"] = R.true_grid.edges();
    j["smeared_edges"] = R.smeared_grid.edges();
    json rows = json::array();
    for (Index i = 0; i < R.rows(); ++i) rows.push_back(json_vec(R.K.row(i).transpose()));
    j["entries"] = rows;
    return j;
}

inline ResponseMatrix matrix_from_json(const json& j) {
    try {
        ResponseMatrix R;
        R.ansatz_id = j.at("ansatz_id").get<std::string>();
        R.true_grid = BinGrid(j.at("true_edges").get<std::vector<double>>());
        R.smeared_grid = BinGrid(j.at("smeared_edges").get<std::vector<double>>());
        const auto m = j.at("m").get<Index>(), n = j.at("n").get<Index>();
        const json& rows = j.at("entries");
        if (static_cast<Index>(rows.size()) != m) throw ConfigError("matrix JSON: row count mismatch");
        R.K.resize(m, n);
        for (Index i = 0; i < m; ++i) {
            const Vec r = vec_from_json(rows[static_cast<std::size_t>(i)]);
            if (r.size() != n) throw ConfigError("matrix JSON: row length mismatch");
            R.K.row(i) = r.transpose();
        }
        return R;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("matrix JSON: ") + e.what());
    }
}

inline ResponseMatrix load_matrix(const std::filesystem::path& p) {
    const std::string text = read_file(p);
    if (p.extension() == ".json") return matrix_from_json(parse_json(text, p.string()));
    return matrix_from_csv(text);
}

/// Counts from a JSON array, a JSON object {"y": [...]}, or CSV/whitespace
/// separated numbers ('#' starts a comment).
inline Vec load_vector(const std::filesystem::path& p) {
    const std::string text = read_file(p);
    if (p.extension() == ".json") {
        const json j = parse_json(text, p.string());
        return vec_from_json(j.is_object() ? j.at("y") : j);
    }
    std::vector<double> v;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        for (char& c : line)
            if (c == ',' || c == ';') c = ' ';
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) v.push_back(parse_double(tok));
    }
    return Eigen::Map<Vec>(v.data(), static_cast<Index>(v.size()));
}

// ---------------------------------------------------------------- intervals

struct IntervalRow {
    std::string functional;
    std::string constraints;
    std::string prior;
    IntervalResult result;
    // empty on success, otherwise a short error tag such as "rank_deficient"
    std::string error;
};

inline std::string intervals_to_csv(const std::vector<IntervalRow>& rows) {
    std::ostringstream os;
    os << "method,functional,alpha,lower,upper,s2,pathological,constraints,prior,status,error\n";
    for (const auto& r : rows) {
        const auto& x = r.result;
        os << to_string(x.method) << ',' << r.functional << ',' << format_double(x.alpha) << ',' << format_double(x.lower)
           << ',' << format_double(x.upper) << ',' << (x.diagnostics.slack_s2 ? format_double(*x.diagnostics.slack_s2) : "")
           << ',' << (x.diagnostics.pathological ? "true" : "false") << ',' << r.constraints << ',' << r.prior << ','
           << (r.error.empty() ? x.diagnostics.status : "error") << ',' << r.error << '\n';
    }
    return os.str();
}

inline json interval_to_json(const IntervalRow& r) {
    json j;
    j["method"] = to_string(r.result.method);
    j["functional"] = r.functional;
    j["alpha"] = r.result.alpha;
    j["lower"] = json_real(r.result.lower);
    j["upper"] = json_real(r.result.upper);
    j["s2"] = r.result.diagnostics.slack_s2 ? json(*r.result.diagnostics.slack_s2) : json(nullptr);
    j["psi2"] = r.result.diagnostics.psi2 ? json(*r.result.diagnostics.psi2) : json(nullptr);
    j["pathological"] = r.result.diagnostics.pathological;
    j["constraints"] = r.constraints;
    j["prior"] = r.prior;
    j["status"] = r.error.empty() ? r.result.diagnostics.status : "error";
    j["error"] = r.error;
    return j;
}

inline json intervals_to_json(const std::vector<IntervalRow>& rows) {
    json a = json::array();
    for (const auto& r : rows) a.push_back(interval_to_json(r));
    return a;
}

// ---------------------------------------------------------------- rules

inline json rule_to_json(const DecisionRule& r, const std::string& constraints) {
    json j;
    j["functional"] = r.functional;
    j["constraints"] = constraints;
    j["provenance"] = r.provenance;
    j["alpha"] = r.alpha;
    j["w_lower"] = json_vec(r.w_lower);
    j["w_upper"] = json_vec(r.w_upper);
    j["c_lower"] = json_vec(r.c_lower);
    j["c_upper"] = json_vec(r.c_upper);
    j["b"] = json_vec(r.b);
    return j;
}

inline DecisionRule rule_from_json(const json& j) {
    try {
        DecisionRule r;
        r.functional = j.at("functional").get<std::string>();
        r.provenance = j.at("provenance").get<std::string>();
        r.alpha = j.at("alpha").get<double>();
        r.w_lower = vec_from_json(j.at("w_lower"));
        r.w_upper = vec_from_json(j.at("w_upper"));
        r.c_lower = vec_from_json(j.at("c_lower"));
        r.c_upper = vec_from_json(j.at("c_upper"));
        r.b = vec_from_json(j.at("b"));
        return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("decision rule JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------- programs

inline json dense_json(const Mat& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) rows.push_back(json_vec(M.row(i).transpose()));
    return rows;
}

/// Debug dump of a conic program for solver triage.
inline json program_to_json(const ConicProgram& p) {
    json j;
    j["num_vars"] = p.num_vars;
    j["sense"] = p.sense == Sense::minimize ? "min" : "max";
    j["objective"] = json_vec(p.objective);
    json cones = json::array();
    for (const auto& c : p.cones)
        cones.push_back({{"F", dense_json(c.F)}, {"g", json_vec(c.g)}, {"f", json_vec(c.f)}, {"d", c.d}});
    j["cones"] = cones;
    j["G"] = dense_json(Mat(p.G));
    j["h"] = json_vec(p.h);
    j["E"] = dense_json(Mat(p.E));
    j["d"] = json_vec(p.d);
    json terms = json::array();
    for (const auto& t : p.norm_terms) terms.push_back({{"weight", t.weight}, {"rows", t.rows}});
    j["norm_terms"] = terms;
    return j;
}

// ---------------------------------------------------------------- reports

inline std::string coverage_csv_body(const CoverageReport& rep) {
    std::ostringstream os;
    os << "bin,method,constraints,coverage,coverage_se,mean_width,width_se,pathological_count,failure_count,prior,"
          "true_bins,theta,replications\n";
    for (const auto& r : rep.rows)
        os << r.bin << ',' << r.method << ',' << r.constraints << ',' << format_double(r.coverage) << ','
           << format_double(r.coverage_se) << ',' << format_double(r.mean_width) << ',' << format_double(r.width_se) << ','
           << r.pathological_count << ',' << r.failure_count << ',' << r.prior << ',' << r.true_bins << ','
           << format_double(r.theta) << ',' << r.replications << '\n';
    return os.str();
}

/// Coverage CSV with the configuration and the body hash as leading comments.
inline std::string coverage_to_csv(const CoverageReport& rep, const json& config) {
    const std::string body = coverage_csv_body(rep);
    std::ostringstream os;
    os << "# study: " << rep.name << '\n';
    os << "# config: " << config.dump() << '\n';
    os << "# config_sha256: " << rep.config_hash << '\n';
    os << "# content_sha256: " << sha256_hex(body) << '\n';
    os << body;
    return os.str();
}

inline json coverage_to_json(const CoverageReport& rep, const json& config) {
    json j;
    j["study"] = rep.name;
    j["config"] = config;
    j["config_sha256"] = rep.config_hash;
    j["content_sha256"] = sha256_hex(coverage_csv_body(rep));
    json rows = json::array();
    for (const auto& r : rep.rows) {
        json x;
        x["bin"] = r.bin;
        x["method"] = r.method;
        x["constraints"] = r.constraints;
        x["coverage"] = json_real(r.coverage);
        x["coverage_se"] = json_real(r.coverage_se);
        x["mean_width"] = json_real(r.mean_width);
        x["width_se"] = json_real(r.width_se);
        x["pathological_count"] = r.pathological_count;
        x["failure_count"] = r.failure_count;
        x["prior"] = r.prior;
        x["true_bins"] = r.true_bins;
        x["theta"] = json_real(r.theta);
        x["replications"] = r.replications;
        rows.push_back(x);
    }
    j["rows"] = rows;
    json mm = json::array();
    for (const auto& r : rep.minimax)
        mm.push_back({{"bin", r.bin}, {"constraints", r.constraints}, {"true_bins", r.true_bins},
                      {"lower_bound", json_real(r.lower_bound)}, {"upper_bound", json_real(r.upper_bound)}});
    j["minimax"] = mm;
    j["wide_edges"] = rep.wide_edges.edges();
    return j;
}

inline std::string minimax_to_csv(const CoverageReport& rep) {
    std::ostringstream os;
    os << "bin,constraints,true_bins,halfwidth_lower_bound,halfwidth_upper_bound,width_lower_bound,width_upper_bound\n";
    for (const auto& r : rep.minimax)
        os << r.bin << ',' << r.constraints << ',' << r.true_bins << ',' << format_double(r.lower_bound) << ','
           << format_double(r.upper_bound) << ',' << format_double(2.0 * r.lower_bound) << ','
           << format_double(2.0 * r.upper_bound) << '\n';
    return os.str();
}

inline std::string example_to_csv(const CoverageReport& rep) {
    std::ostringstream os;
    os << "bin,method,constraints,prior,true_bins,theta,lower,upper,status,wide_lower_edge,wide_upper_edge\n";
    for (const auto& e : rep.example)
        os << e.bin << ',' << e.method << ',' << e.constraints << ',' << e.prior << ',' << rep.lambda_true.size() << ','
           << format_double(e.theta) << ',' << format_double(e.lower) << ',' << format_double(e.upper) << ',' << e.status
           << ',' << format_double(rep.wide_edges.lower(e.bin)) << ',' << format_double(rep.wide_edges.upper(e.bin)) << '\n';
    return os.str();
}

// ---------------------------------------------------------------- config

/// Throws on keys outside `allowed`, so that typos do not go unnoticed.
inline void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

template <class T>
T get_required(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + ": key '" + key + "': " + e.what());
    }
}

inline json spline_to_json(const TabulatedSpline& s, const std::string& label) {
    return {{"type", "spline"}, {"label", label}, {"knots", s.spline.knots()}, {"values", s.spline.values()}, {"floor", s.floor}};
}

inline IntensityFunction intensity_from_json(const json& j, const std::filesystem::path& base_dir);

inline IntensityFunction spline_from_json(const json& j, const std::string& where) {
    check_keys(j, {"type", "label", "knots", "values", "floor", "clamp_at_zero", "description", "seed"}, where);
    TabulatedSpline s{CubicSpline(get_required<std::vector<double>>(j, "knots", where),
                                  get_required<std::vector<double>>(j, "values", where)),
                      get_or<bool>(j, "clamp_at_zero", true), get_or<double>(j, "floor", 0.0)};
    if (s.floor < 0.0) throw ConfigError(where + ": floor must be non-negative");
    return IntensityFunction(std::move(s), get_or<std::string>(j, "label", "spline"));
}

inline IntensityFunction intensity_from_json(const json& j, const std::filesystem::path& base_dir) {
    const std::string type = get_required<std::string>(j, "type", "intensity");
    if (type == "gmm") {
        check_keys(j, {"type", "label", "total", "weights", "means", "variances"}, "gmm intensity");
        GaussianMixture g{get_required<double>(j, "total", "gmm"), get_required<std::vector<double>>(j, "weights", "gmm"),
                          get_required<std::vector<double>>(j, "means", "gmm"),
                          get_required<std::vector<double>>(j, "variances", "gmm")};
        return IntensityFunction(std::move(g), get_or<std::string>(j, "label", "gmm"));
    }
    if (type == "gmm_truth") return make_gmm_truth();
    if (type == "gmm_misspecified") return make_gmm_misspecified();
    if (type == "power_law") {
        check_keys(j, {"type", "label", "luminosity", "norm", "alpha", "beta", "gamma", "sqrt_s"}, "power_law intensity");
        PowerLawSpectrum p;
        p.luminosity = get_or<double>(j, "luminosity", p.luminosity);
        p.norm = get_or<double>(j, "norm", p.norm);
        p.alpha = get_or<double>(j, "alpha", p.alpha);
        p.beta = get_or<double>(j, "beta", p.beta);
        p.gamma = get_or<double>(j, "gamma", p.gamma);
        p.sqrt_s = get_or<double>(j, "sqrt_s", p.sqrt_s);
        return IntensityFunction(p, get_or<std::string>(j, "label", "power_law"));
    }
    if (type == "spline") return spline_from_json(j, "spline intensity");
    if (type == "spline_file") {
        check_keys(j, {"type", "label", "path"}, "spline_file intensity");
        const std::filesystem::path p = base_dir / get_required<std::string>(j, "path", "spline_file");
        IntensityFunction f = spline_from_json(parse_json(read_file(p), p.string()), p.string());
        if (j.contains("label")) f = IntensityFunction(std::get<TabulatedSpline>(f.variant()), j.at("label").get<std::string>());
        return f;
    }
    throw ConfigError("unknown intensity type '" + type + "'");
}

inline SmearingKernel kernel_from_json(const json& j) {
    const std::string type = get_required<std::string>(j, "type", "kernel");
    if (type == "gaussian") {
        check_keys(j, {"type", "gamma"}, "gaussian kernel");
        HomoskedasticGaussian k{get_required<double>(j, "gamma", "gaussian kernel")};
        if (!(k.gamma > 0.0)) throw ConfigError("kernel gamma must be positive");
        return k;
    }
    if (type == "calorimeter") {
        check_keys(j, {"type", "noise", "stochastic", "constant"}, "calorimeter kernel");
        CalorimeterResolution r;
        r.noise = get_or<double>(j, "noise", r.noise);
        r.stochastic = get_or<double>(j, "stochastic", r.stochastic);
        r.constant = get_or<double>(j, "constant", r.constant);
        return calorimeter_kernel(r);
    }
    if (type == "sqrt") {
        check_keys(j, {"type", "scale"}, "sqrt kernel");
        return sqrt_kernel(get_required<double>(j, "scale", "sqrt kernel"));
    }
    throw ConfigError("unknown kernel type '" + type + "'");
}

inline std::pair<double, double> domain_from_json(const json& j, const std::string& key) {
    const auto v = get_required<std::vector<double>>(j, key, "config");
    if (v.size() != 2 || !(v[1] > v[0])) throw ConfigError(key + " must be [lo, hi] with lo < hi");
    return {v[0], v[1]};
}

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "name", "description", "truth", "ansatz", "kernel", "true_domain", "smeared_domain", "true_bins", "smeared_bins",
        "wide_bins", "methods", "constraints", "priors", "alpha", "replications", "seed", "quadrature",
        "minimax_both_signs", "estimate_covariance", "data", "covariance", "matrix_file", "matrix", "rules_file", "rules",
        "solver"};
    return keys;
}

/// Parses a study configuration. A "true_bins" array expands into one
/// configuration per entry.
inline std::vector<ExperimentConfig> experiments_from_json(const json& j, const std::filesystem::path& base_dir) {
    check_keys(j, config_keys(), "config");
    ExperimentConfig c;
    c.name = get_or<std::string>(j, "name", "study");
    if (j.contains("truth")) c.truth = intensity_from_json(j.at("truth"), base_dir);
    if (j.contains("ansatz")) c.ansatz = intensity_from_json(j.at("ansatz"), base_dir);
    if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
    if (j.contains("true_domain")) std::tie(c.true_lo, c.true_hi) = domain_from_json(j, "true_domain");
    if (j.contains("smeared_domain")) std::tie(c.smeared_lo, c.smeared_hi) = domain_from_json(j, "smeared_domain");
    c.smeared_bins = get_or<std::size_t>(j, "smeared_bins", c.smeared_bins);
    if (j.contains("wide_bins")) {
        const json& w = j.at("wide_bins");
        check_keys(w, {"type", "count", "exponent", "boundaries"}, "wide_bins");
        c.wide_bins.kind = get_or<std::string>(w, "type", "uniform");
        c.wide_bins.count = get_or<std::size_t>(w, "count", 10);
        c.wide_bins.exponent = get_or<double>(w, "exponent", 0.5);
        c.wide_bins.boundaries = get_or<std::vector<std::size_t>>(w, "boundaries", {});
    }
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& m : j.at("methods")) {
            const std::string s = m.get<std::string>();
            if (s == "MINIMAX")
                c.methods.push_back(Method::MinimaxLower);
            else
                c.methods.push_back(method_from_string(s));
        }
    }
    if (j.contains("constraints")) {
        c.constraints.clear();
        const json& cs = j.at("constraints");
        if (cs.is_string())
            c.constraints.push_back(cs.get<std::string>());
        else
            for (const auto& s : cs) c.constraints.push_back(s.get<std::string>());
        for (const auto& s : c.constraints)
            if (s != "none" && s != "N" && s != "ND" && s != "NDC") throw ConfigError("unknown constraint setup '" + s + "'");
    }
    if (j.contains("priors")) {
        c.priors.clear();
        for (const auto& p : j.at("priors")) {
            check_keys(p, {"type", "label", "intensity"}, "prior");
            PriorSpec ps;
            ps.kind = get_required<std::string>(p, "type", "prior");
            ps.label = get_or<std::string>(p, "label", ps.kind);
            if (ps.kind != "flat" && ps.kind != "truth" && ps.kind != "ansatz" && ps.kind != "intensity")
                throw ConfigError("unknown prior type '" + ps.kind + "'");
            if (ps.kind == "intensity") ps.intensity = intensity_from_json(get_required<json>(p, "intensity", "prior"), base_dir);
            c.priors.push_back(std::move(ps));
        }
    }
    c.alpha = get_or<double>(j, "alpha", c.alpha);
    c.replications = get_or<std::size_t>(j, "replications", c.replications);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.minimax_both_signs = get_or<bool>(j, "minimax_both_signs", false);
    c.estimate_covariance = get_or<bool>(j, "estimate_covariance", false);
    if (j.contains("quadrature")) {
        check_keys(j.at("quadrature"), {"rel_tol", "max_intervals"}, "quadrature");
        c.quadrature.rel_tol = get_or<double>(j.at("quadrature"), "rel_tol", c.quadrature.rel_tol);
        c.quadrature.max_intervals = get_or<int>(j.at("quadrature"), "max_intervals", c.quadrature.max_intervals);
    }
    if (j.contains("solver")) {
        check_keys(j.at("solver"), {"tolerance", "inaccurate_tolerance", "max_iterations"}, "solver");
        auto& s = c.interval_options.solver;
        s.tolerance = get_or<double>(j.at("solver"), "tolerance", s.tolerance);
        s.inaccurate_tolerance = get_or<double>(j.at("solver"), "inaccurate_tolerance", s.inaccurate_tolerance);
        s.max_iterations = get_or<int>(j.at("solver"), "max_iterations", s.max_iterations);
    }

    std::vector<std::size_t> sizes;
    if (!j.contains("true_bins"))
        sizes.push_back(c.true_bins);
    else if (j.at("true_bins").is_array())
        sizes = get_or<std::vector<std::size_t>>(j, "true_bins", {});
    else
        sizes.push_back(get_or<std::size_t>(j, "true_bins", c.true_bins));
    if (sizes.empty()) throw ConfigError("true_bins must not be empty");
    std::vector<ExperimentConfig> out;
    for (std::size_t n : sizes) {
        ExperimentConfig e = c;
        e.true_bins = n;
        e.validate();
        out.push_back(std::move(e));
    }
    return out;
}

inline json toml_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json j = json::object();
        for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
        return j;
    }
    if (const auto* a = node.as_array()) {
        json j = json::array();
        for (const auto& v : *a) j.push_back(toml_to_json(v));
        return j;
    }
    if (const auto* v = node.as_string()) return v->get();
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return json_real(v->get());
    if (const auto* v = node.as_boolean()) return v->get();
    throw ConfigError("unsupported TOML value (dates and times are not used)");
}

/// TOML, or JSON when the extension is .json.
inline json parse_config(const std::string& text, const std::string& name, bool is_json) {
    if (is_json) return parse_json(text, name);
    try {
        return toml_to_json(toml::parse(text, name));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << name << ':' << e.source().begin.line << ':' << e.source().begin.column << ": " << e.description();
        throw ConfigError(os.str());
    }
}

inline json load_config(const std::filesystem::path& p) {
    return parse_config(read_file(p), p.string(), p.extension() == ".json");
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
    return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : base / p;
}

/// Replaces file references (spline_file intensities, data paths, matrix and
/// rule files) by their contents, so that the result determines a run on its own.
inline json inline_references(json j, const std::filesystem::path& base_dir) {
    auto inline_intensity = [&](json& f) {
        if (!f.is_object() || f.value("type", "") != "spline_file") return;
        check_keys(f, {"type", "label", "path"}, "spline_file intensity");
        const auto p = resolve_path(base_dir, get_required<std::string>(f, "path", "spline_file"));
        json s = parse_json(read_file(p), p.string());
        s["type"] = "spline";
        if (f.contains("label")) s["label"] = f.at("label");
        f = s;
    };
    if (!j.is_object()) throw ConfigError("configuration must be a table");
    if (j.contains("truth")) inline_intensity(j["truth"]);
    if (j.contains("ansatz")) inline_intensity(j["ansatz"]);
    if (j.contains("priors") && j["priors"].is_array())
        for (auto& p : j["priors"])
            if (p.contains("intensity")) inline_intensity(p["intensity"]);
    if (j.contains("data") && j["data"].is_object() && j["data"].contains("path")) {
        const Vec y = load_vector(resolve_path(base_dir, j["data"]["path"].get<std::string>()));
        j["data"] = json{{"values", json_vec(y)}};
    }
    if (j.contains("matrix_file")) {
        j["matrix"] = matrix_to_json(load_matrix(resolve_path(base_dir, j["matrix_file"].get<std::string>())));
        j.erase("matrix_file");
    }
    if (j.contains("rules_file")) {
        const auto p = resolve_path(base_dir, j["rules_file"].get<std::string>());
        j["rules"] = parse_json(read_file(p), p.string()).at("rules");
        j.erase("rules_file");
    }
    return j;
}

}  // namespace io
}  // namespace unfold
