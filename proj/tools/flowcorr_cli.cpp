// flowcorr: compute shared-endpoint correlations and flow variances by every
// implemented route, run Monte Carlo validations, decompose edge flows, and
// sample kernel paths. Outputs are deterministic functions of (config, seed).

#include "CLI11.hpp"
#include "json.hpp"

#include "flowcorr/asymptotics.hpp"
#include "flowcorr/correlation.hpp"
#include "flowcorr/graphflow.hpp"
#include "flowcorr/kernels.hpp"
#include "flowcorr/montecarlo.hpp"
#include "flowcorr/parallel.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using nlohmann::json;
using namespace flowcorr;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown field \"" + key + "\" in " + where);
    }
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw ConfigError("missing or non-numeric \"" + key + "\" in " + where);
    return obj[key].get<double>();
}

IsotropicKernel parse_kernel(const json& cfg) {
    if (!cfg.contains("kernel")) throw ConfigError("config needs a \"kernel\" object");
    const json& k = cfg["kernel"];
    reject_unknown_keys(k, {"family", "l", "shape", "amplitude"}, "kernel");
    try {
        return kernel_from_json(k);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("kernel: ") + e.what());
    }
}

struct TraitSpec {
    TraitFamily family = TraitFamily::Gaussian;
    double scale = 1.0;
    double dof = 3.0;
};

TraitSpec parse_trait(const json& cfg) {
    TraitSpec out;
    if (!cfg.contains("trait")) return out;
    const json& t = cfg["trait"];
    reject_unknown_keys(t, {"family", "scale", "dof"}, "trait");
    if (t.contains("family")) {
        try {
            out.family = trait_family_from_string(t["family"].get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    out.scale = t.value("scale", 1.0);
    out.dof = t.value("dof", 3.0);
    if (!(out.scale >= 0)) throw ConfigError("trait.scale must be >= 0");
    return out;
}

std::vector<double> parse_axis(const json& grid, const std::string& key) {
    if (!grid.contains(key)) return {};
    const json& ax = grid[key];
    reject_unknown_keys(ax, {"values", "logspace", "linspace"}, "grid." + key);
    std::vector<double> out;
    if (ax.contains("values")) {
        for (const auto& v : ax["values"]) out.push_back(v.get<double>());
    } else if (ax.contains("logspace")) {
        const auto& ls = ax["logspace"];
        if (!ls.is_array() || ls.size() != 3)
            throw ConfigError("grid." + key + ".logspace must be [lo_exp, hi_exp, count]");
        const double lo = ls[0].get<double>(), hi = ls[1].get<double>();
        const int n = ls[2].get<int>();
        if (n < 1) throw ConfigError("grid." + key + " count must be >= 1");
        for (int i = 0; i < n; ++i)
            out.push_back(std::pow(10.0, lo + (n == 1 ? 0.0 : (hi - lo) * i / (n - 1))));
    } else if (ax.contains("linspace")) {
        const auto& ls = ax["linspace"];
        if (!ls.is_array() || ls.size() != 3)
            throw ConfigError("grid." + key + ".linspace must be [lo, hi, count]");
        const double lo = ls[0].get<double>(), hi = ls[1].get<double>();
        const int n = ls[2].get<int>();
        if (n < 1) throw ConfigError("grid." + key + " count must be >= 1");
        for (int i = 0; i < n; ++i)
            out.push_back(lo + (n == 1 ? 0.0 : (hi - lo) * i / (n - 1)));
    } else {
        throw ConfigError("grid." + key + " needs values/logspace/linspace");
    }
    return out;
}

struct OutputSink {
    std::ofstream file;
    std::ostream* os = &std::cout;

    explicit OutputSink(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw ConfigError("cannot open output file: " + path);
            os = &file;
        }
    }
    std::ostream& stream() { return *os; }
};

// ---------------------------------------------------------------------------

struct RhoRow {
    std::string method;
    double r, nu;
    int T;
    double rho, sigma2, error;
};

void emit_rho_rows(const std::vector<RhoRow>& rows, const std::string& format, std::ostream& os) {
    if (format == "csv") {
        os << "method,r,nu,T,rho,sigma2,error\n";
        for (const RhoRow& row : rows)
            os << row.method << ',' << fmt(row.r) << ',' << fmt(row.nu) << ',' << row.T << ','
               << fmt(row.rho) << ',' << fmt(row.sigma2) << ',' << fmt(row.error) << '\n';
    } else {
        json arr = json::array();
        for (const RhoRow& row : rows)
            arr.push_back({{"method", row.method},
                           {"r", row.r},
                           {"nu", row.nu},
                           {"T", row.T},
                           {"rho", row.rho},
                           {"sigma2", row.sigma2},
                           {"error", row.error}});
        os << arr.dump(2) << '\n';
    }
}

ScaleMixture mixture_from(const TraitSpec& trait, const IsotropicKernel& kernel, double r) {
    // r rescales the trait spread against the kernel length scale
    return mixture_rep(trait.family, kernel.family, trait.scale * r * kernel.length_scale,
                       kernel.length_scale, kernel.shape, trait.dof);
}

TraitDistribution trait_distribution_for(const TraitSpec& trait, int T, double sigma_x) {
    switch (trait.family) {
        case TraitFamily::Laplace: return TraitDistribution::laplace(T, sigma_x);
        case TraitFamily::StudentT: return TraitDistribution::student_t(T, sigma_x, trait.dof);
        case TraitFamily::Gaussian: break;
    }
    return TraitDistribution::gaussian_iso(T, sigma_x);
}

QuadratureSpec parse_quadrature(const json& cfg) {
    QuadratureSpec qspec;
    if (!cfg.contains("quadrature")) return qspec;
    const json& q = cfg["quadrature"];
    reject_unknown_keys(
        q, {"relative_tolerance", "absolute_tolerance", "max_subdivisions", "node_count_hint"},
        "quadrature");
    qspec.relative_tolerance = q.value("relative_tolerance", qspec.relative_tolerance);
    qspec.absolute_tolerance = q.value("absolute_tolerance", qspec.absolute_tolerance);
    qspec.max_subdivisions = q.value("max_subdivisions", qspec.max_subdivisions);
    qspec.node_count_hint = q.value("node_count_hint", qspec.node_count_hint);
    try {
        qspec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return qspec;
}

int run_rho(const json& cfg, std::uint64_t seed, const std::string& out,
            const std::string& format, bool require_grid) {
    reject_unknown_keys(cfg, {"command", "kernel", "trait", "methods", "grid", "replicates",
                              "quadrature", "seed", "out", "format", "rademacher"},
                        "config");
    const IsotropicKernel kernel = parse_kernel(cfg);
    const TraitSpec trait = parse_trait(cfg);
    const QuadratureSpec qspec = parse_quadrature(cfg);

    std::vector<std::string> methods;
    if (cfg.contains("methods"))
        for (const auto& m : cfg["methods"]) methods.push_back(m.get<std::string>());
    if (methods.empty()) methods = {"closed_form"};

    json grid = cfg.value("grid", json::object());
    reject_unknown_keys(grid, {"r", "nu", "T", "r1", "r2"}, "grid");
    std::vector<double> rs = parse_axis(grid, "r");
    std::vector<double> nus = parse_axis(grid, "nu");
    std::vector<double> Ts_d = parse_axis(grid, "T");
    std::vector<double> r1s = parse_axis(grid, "r1");
    std::vector<double> r2s = parse_axis(grid, "r2");
    if (require_grid && rs.empty() && r1s.empty())
        throw ConfigError("sweep needs a grid with an r axis (or r1/r2 axes)");
    if (rs.empty() && r1s.empty()) rs = {1.0};
    if (nus.empty()) nus = {kernel.shape};
    std::vector<int> Ts;
    for (double t : Ts_d) Ts.push_back(static_cast<int>(t));
    if (Ts.empty()) Ts = {2};
    const long replicates = cfg.value("replicates", 100000L);
    const bool rademacher = cfg.value("rademacher", false);

    // anisotropic heat-map mode: closed-form SE over an (r1, r2) grid
    if (!r1s.empty() || !r2s.empty()) {
        if (r1s.empty() || r2s.empty()) throw ConfigError("need both r1 and r2 axes");
        OutputSink sink(out);
        std::ostream& os = sink.stream();
        if (format == "csv") os << "method,r1,r2,T,rho,sigma2,error\n";
        json arr = json::array();
        for (double r1 : r1s)
            for (double r2 : r2s) {
                const CorrelationResult c = rho_se_anisotropic({r1, r2});
                const double s2 = sigma2_se_anisotropic({r1, r2}, kernel.amplitude);
                if (format == "csv")
                    os << "closed_form," << fmt(r1) << ',' << fmt(r2) << ",2," << fmt(c.rho)
                       << ',' << fmt(s2) << ',' << fmt(c.error_estimate) << '\n';
                else
                    arr.push_back({{"method", "closed_form"},
                                   {"r1", r1},
                                   {"r2", r2},
                                   {"T", 2},
                                   {"rho", c.rho},
                                   {"sigma2", s2},
                                   {"error", c.error_estimate}});
            }
        if (format != "csv") os << arr.dump(2) << '\n';
        return 0;
    }

    struct Point {
        std::string method;
        int T;
        double nu, r;
    };
    std::vector<Point> points;
    for (const std::string& method : methods)
        for (int T : Ts)
            for (double nu : nus)
                for (double r : rs) points.push_back({method, T, nu, r});

    std::vector<RhoRow> rows(points.size());
    std::atomic<bool> numeric_failure{false};
    std::mutex msg_mutex;
    std::string numeric_msg;
    // quadrature/closed-form points run in parallel; monte_carlo points run
    // serially because the estimator parallelizes its own batches. Output
    // order stays the deterministic grid order either way.
    const auto eval_point = [&](size_t idx) {
        const Point& pt = points[idx];
        const std::string& method = pt.method;
        const int T = pt.T;
        const double nu = pt.nu, r = pt.r;
        RhoRow row{method, r, nu, T, 0.0, 0.0, 0.0};
                    try {
                        if (method == "closed_form") {
                            const CorrelationResult c = rho_se_isotropic_ex(r, T);
                            row.rho = c.rho;
                            row.sigma2 = sigma2_se_anisotropic(
                                std::vector<double>(static_cast<size_t>(T), r), kernel.amplitude);
                            row.error = c.error_estimate;
                        } else if (method == "chi2_quadrature") {
                            IsotropicKernel k = kernel;
                            if (k.family == KernelFamily::Matern) k.shape = nu;
                            const CorrelationResult c =
                                rho_sigma_chi2(k, r * k.length_scale, T, qspec);
                            if (!c.converged) throw NumericError("chi2 quadrature did not converge");
                            row.rho = c.rho;
                            row.sigma2 = c.sigma2;
                            row.error = c.error_estimate;
                        } else if (method == "matern_quadrature") {
                            const CorrelationResult c =
                                rho_matern(r, nu, T, qspec, kernel.amplitude);
                            if (!c.converged)
                                throw NumericError("matern quadrature did not converge");
                            row.rho = c.rho;
                            row.sigma2 = c.sigma2;
                            row.error = c.error_estimate;
                        } else if (method == "matern_lower_bound") {
                            const CorrelationResult c = rho_matern_lower_bound(r, nu, T, qspec);
                            if (!c.converged)
                                throw NumericError("lower-bound quadrature did not converge");
                            row.rho = c.rho;
                            row.sigma2 = kernel.amplitude * c.sigma2;
                            row.error = c.error_estimate;
                        } else if (method == "mixture_quadrature") {
                            const ScaleMixture mix = mixture_from(trait, kernel, r);
                            const CorrelationResult c = rho_mixture(mix, T, qspec);
                            if (!c.converged)
                                throw NumericError("mixture quadrature did not converge");
                            row.rho = c.rho;
                            row.sigma2 = c.sigma2;
                            row.error = c.error_estimate;
                        } else if (method == "pade") {
                            const PadeFamily fam = kernel.family == KernelFamily::Matern
                                                       ? PadeFamily::Matern
                                                       : PadeFamily::SquaredExponential;
                            row.rho = pade_rho(fam, r, T, nu);
                            row.sigma2 = std::numeric_limits<double>::quiet_NaN();
                        } else if (method == "limit_smooth" || method == "limit_rough") {
                            const LimitKind kind =
                                method == "limit_smooth" ? LimitKind::smooth : LimitKind::rough;
                            row.rho = kernel.family == KernelFamily::Matern
                                          ? limit_matern(r, nu, T, kind)
                                          : limit_se_isotropic(r, T, kind);
                            row.sigma2 = std::numeric_limits<double>::quiet_NaN();
                        } else if (method == "monte_carlo") {
                            IsotropicKernel k = kernel;
                            if (k.family == KernelFamily::Matern) k.shape = nu;
                            RhoSigmaOptions opt;
                            opt.replicates = replicates;
                            opt.rademacher = rademacher;
                            const TraitDistribution td =
                                trait_distribution_for(trait, T, r * k.length_scale);
                            RngStream rng(seed, 17 + static_cast<std::uint64_t>(idx));
                            const RhoSigmaEstimate est = estimate_rho_sigma(k, td, opt, rng);
                            row.rho = est.rho.mean;
                            row.sigma2 = est.sigma2.mean;
                            row.error = est.rho.stderr_;
                        } else {
                            throw ConfigError("unknown method \"" + method + "\"");
                        }
                    } catch (const std::exception& e) {
                        numeric_failure = true;
                        {
                            std::lock_guard<std::mutex> lock(msg_mutex);
                            numeric_msg = e.what();
                        }
                        row.rho = std::numeric_limits<double>::quiet_NaN();
                        row.sigma2 = std::numeric_limits<double>::quiet_NaN();
                        row.error = std::numeric_limits<double>::quiet_NaN();
                    }
        rows[idx] = row;
    };

    std::vector<size_t> parallel_idx, serial_idx;
    for (size_t i = 0; i < points.size(); ++i)
        (points[i].method == "monte_carlo" ? serial_idx : parallel_idx).push_back(i);
    // validate method names up front so config errors beat numeric ones
    for (const std::string& m : methods)
        if (m != "closed_form" && m != "chi2_quadrature" && m != "matern_quadrature" &&
            m != "matern_lower_bound" && m != "mixture_quadrature" && m != "pade" &&
            m != "limit_smooth" && m != "limit_rough" && m != "monte_carlo")
            throw ConfigError("unknown method \"" + m + "\"");
    parallel_chunks(static_cast<int>(parallel_idx.size()),
                    [&](int c) { eval_point(parallel_idx[static_cast<size_t>(c)]); });
    for (size_t i : serial_idx) eval_point(i);

    OutputSink sink(out);
    emit_rho_rows(rows, format, sink.stream());
    if (numeric_failure) throw NumericError(numeric_msg);
    return 0;
}

int run_mc(const json& cfg, std::uint64_t seed, const std::string& out, const std::string& format) {
    reject_unknown_keys(cfg, {"command", "kernel", "trait", "grid", "T", "replicates", "rademacher",
                              "seed", "out", "format"},
                        "config");
    const IsotropicKernel kernel = parse_kernel(cfg);
    const TraitSpec trait = parse_trait(cfg);
    json grid = cfg.value("grid", json::object());
    reject_unknown_keys(grid, {"r"}, "grid");
    std::vector<double> rs = parse_axis(grid, "r");
    if (rs.empty()) rs = {1.0};
    const int T = cfg.value("T", 2);
    if (T < 1) throw ConfigError("T must be >= 1");
    RhoSigmaOptions opt;
    opt.replicates = cfg.value("replicates", 100000L);
    opt.rademacher = cfg.value("rademacher", false);
    if (opt.replicates < 2) throw ConfigError("replicates must be >= 2");

    OutputSink sink(out);
    std::ostream& os = sink.stream();
    json arr = json::array();
    if (format == "csv")
        os << "method,r,nu,T,rho,rho_stderr,sigma2,sigma2_stderr,replicates,seed,stream\n";
    for (size_t i = 0; i < rs.size(); ++i) {
        const double r = rs[i];
        const TraitDistribution td = trait_distribution_for(trait, T, r * kernel.length_scale);
        RngStream rng(seed, 1000 + i);
        const RhoSigmaEstimate est = estimate_rho_sigma(kernel, td, opt, rng);
        if (format == "csv") {
            os << "monte_carlo," << fmt(r) << ',' << fmt(kernel.shape) << ',' << T << ','
               << fmt(est.rho.mean) << ',' << fmt(est.rho.stderr_) << ',' << fmt(est.sigma2.mean)
               << ',' << fmt(est.sigma2.stderr_) << ',' << est.rho.replicates << ',' << seed << ','
               << (1000 + i) << '\n';
        } else {
            arr.push_back({{"method", "monte_carlo"},
                           {"r", r},
                           {"nu", kernel.shape},
                           {"T", T},
                           {"rho", est.rho.mean},
                           {"rho_stderr", est.rho.stderr_},
                           {"sigma2", est.sigma2.mean},
                           {"sigma2_stderr", est.sigma2.stderr_},
                           {"replicates", est.rho.replicates},
                           {"seed", seed},
                           {"stream", 1000 + i},
                           {"degenerate", est.degenerate}});
        }
    }
    if (format != "csv") os << arr.dump(2) << '\n';
    return 0;
}

Graph parse_graph_model(const json& cfg, RngStream& rng) {
    if (!cfg.contains("graph")) throw ConfigError("config needs \"graph\" or \"input\"");
    const json& g = cfg["graph"];
    reject_unknown_keys(g, {"model", "V", "p"}, "graph");
    const std::string model = g.value("model", "complete");
    const int V = static_cast<int>(require_number(g, "V", "graph"));
    try {
        if (model == "complete") return complete_graph(V);
        if (model == "erdos_renyi")
            return erdos_renyi_graph(V, require_number(g, "p", "graph"), rng);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const std::runtime_error& e) {
        throw NumericError(e.what());
    }
    throw ConfigError("graph.model must be complete or erdos_renyi");
}

int run_hhd(const json& cfg, std::uint64_t seed, const std::string& out) {
    reject_unknown_keys(cfg, {"command", "input", "graph", "kernel", "trait", "T", "replicates",
                              "seed", "out", "format"},
                        "config");
    if (cfg.contains("input")) {
        const std::string path = cfg["input"].get<std::string>();
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open edge list: " + path);
        EdgeListFile ef;
        try {
            ef = read_edge_list(in);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
        if (!ef.graph.connected) throw ConfigError("edge list graph is not connected");
        if (!ef.has_flow) throw ConfigError("edge list carries no flow column to decompose");
        const HHDResult h = hhd_decompose(ef.graph, ef.flow);
        OutputSink sink(out);
        write_hhd_csv(sink.stream(), ef.graph, ef.flow, h);
        return 0;
    }

    RngStream rng(seed, 7);
    const Graph g = parse_graph_model(cfg, rng);
    const IsotropicKernel kernel = parse_kernel(cfg);
    const int T = cfg.value("T", 2);
    if (T < 1) throw ConfigError("T must be >= 1");
    const TraitSpec trait = parse_trait(cfg);
    if (trait.family != TraitFamily::Gaussian)
        throw ConfigError("hhd predictions need gaussian traits");
    const TraitDistribution td = TraitDistribution::gaussian_iso(T, trait.scale);

    if (cfg.contains("replicates")) {
        const long reps = cfg["replicates"].get<long>();
        if (reps < 100) throw ConfigError("ensemble mode needs replicates >= 100");
        FlowEnsembleReport rep;
        try {
            rep = validate_trait_performance(g, kernel, td, reps, rng);
        } catch (const std::exception& e) {
            throw NumericError(e.what());
        }
        json j{{"graph", {{"V", g.vertex_count}, {"E", g.edge_count()}, {"L", g.cycle_dim()}}},
               {"replicates", rep.replicates},
               {"sigma2", rep.sigma2},
               {"rho", rep.rho},
               {"transitive",
                {{"mean", rep.mean_transitive_norm2},
                 {"stderr", rep.stderr_transitive},
                 {"predicted", rep.predicted_transitive}}},
               {"cyclic",
                {{"mean", rep.mean_cyclic_norm2},
                 {"stderr", rep.stderr_cyclic},
                 {"predicted", rep.predicted_cyclic}}},
               {"total",
                {{"mean", rep.mean_total_norm2},
                 {"stderr", rep.stderr_total},
                 {"predicted", rep.predicted_total}}},
               {"seed", seed}};
        OutputSink sink(out);
        sink.stream() << j.dump(2) << '\n';
        return 0;
    }

    // single sampled flow, decomposed
    EdgeFlow f;
    try {
        f = sample_graph_flow(g, kernel, td, rng);
    } catch (const std::exception& e) {
        throw NumericError(e.what());
    }
    const HHDResult h = hhd_decompose(g, f);
    OutputSink sink(out);
    write_hhd_csv(sink.stream(), g, f, h);
    return 0;
}

int run_paths(const json& cfg, std::uint64_t seed, const std::string& out) {
    reject_unknown_keys(cfg, {"command", "nu", "l", "grid", "zoom_levels", "zoom_factor", "seed",
                              "out", "format"},
                        "config");
    std::vector<double> nus;
    if (cfg.contains("nu")) {
        if (cfg["nu"].is_array())
            for (const auto& v : cfg["nu"]) nus.push_back(v.get<double>());
        else
            nus.push_back(cfg["nu"].get<double>());
    }
    if (nus.empty()) throw ConfigError("paths needs a nu list");
    const double l = cfg.value("l", 1.0);
    if (!(l > 0)) throw ConfigError("l must be > 0");
    if (!cfg.contains("grid")) throw ConfigError("paths needs a grid {start, stop, count}");
    const json& gj = cfg["grid"];
    reject_unknown_keys(gj, {"start", "stop", "count"}, "grid");
    const double start = require_number(gj, "start", "grid");
    const double stop = require_number(gj, "stop", "grid");
    const int count = static_cast<int>(require_number(gj, "count", "grid"));
    if (!(stop > start) || count < 1) throw ConfigError("grid needs stop > start and count >= 1");
    if (count > 10000) throw ConfigError("grid too large (count <= 10000)");
    const int zoom_levels = cfg.value("zoom_levels", 1);
    const double zoom_factor = cfg.value("zoom_factor", 3.0);
    if (zoom_levels < 1 || !(zoom_factor > 1.0))
        throw ConfigError("zoom_levels >= 1 and zoom_factor > 1 required");

    const std::string prefix = out.empty() ? "paths" : out;
    for (size_t ni = 0; ni < nus.size(); ++ni) {
        const double nu = nus[ni];
        if (!(nu > 0)) throw ConfigError("nu must be > 0");
        RngStream rng = RngStream(seed, 42).substream(ni);
        // conditioning set accumulated across zoom levels keeps the views
        // consistent: each finer panel refines the same sample path
        std::vector<double> known_x;
        Eigen::VectorXd known_f;
        double lo = start, hi = stop;
        for (int level = 0; level < zoom_levels; ++level) {
            std::vector<double> grid(static_cast<size_t>(count));
            for (int i = 0; i < count; ++i)
                grid[static_cast<size_t>(i)] =
                    lo + (count == 1 ? 0.0 : (hi - lo) * i / (count - 1));
            Eigen::VectorXd vals;
            try {
                vals = sample_matern_path_conditional(nu, l, grid, known_x, known_f, rng);
            } catch (const std::exception& e) {
                throw NumericError(e.what());
            }
            std::ostringstream name;
            name << prefix << "_nu" << nu << "_zoom" << level << ".csv";
            std::ofstream fout(name.str());
            if (!fout) throw ConfigError("cannot open output file: " + name.str());
            fout << "x,f\n";
            for (int i = 0; i < count; ++i)
                fout << fmt(grid[static_cast<size_t>(i)]) << ',' << fmt(vals(i)) << '\n';
            const Eigen::Index old = known_f.size();
            known_f.conservativeResize(old + count);
            for (int i = 0; i < count; ++i) {
                known_x.push_back(grid[static_cast<size_t>(i)]);
                known_f(old + i) = vals(i);
            }
            const double mid = 0.5 * (lo + hi);
            const double half = 0.5 * (hi - lo) / zoom_factor;
            lo = mid - half;
            hi = mid + half;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"random edge-flow correlation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out, format;
    std::uint64_t seed = 0;
    bool seed_given = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
            seed_given = true;
        });
        cmd->add_option("--out", out, "output path (default stdout)");
        cmd->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };

    CLI::App* rho = app.add_subcommand("rho", "correlation by any route at given points");
    CLI::App* sweep = app.add_subcommand("sweep", "parameter sweeps emitting figure-ready tables");
    CLI::App* mc = app.add_subcommand("mc", "Monte Carlo rho/sigma^2 estimates");
    CLI::App* hhd = app.add_subcommand("hhd", "Helmholtz-Hodge decomposition and ensembles");
    CLI::App* paths = app.add_subcommand("paths", "sample 1-D kernel paths with nested zooms");
    for (CLI::App* c : {rho, sweep, mc, hhd, paths}) add_common(c);

    // quick single-point flags for `rho` without a config file
    double flag_r = 1.0, flag_nu = 1.5;
    int flag_T = 2;
    std::string flag_method = "closed_form";
    rho->add_option("--r", flag_r, "roughness coefficient");
    rho->add_option("--nu", flag_nu, "matern shape");
    rho->add_option("--T", flag_T, "trait dimension");
    rho->add_option("--method", flag_method, "computation route");

    std::string hhd_input;
    hhd->add_option("--in", hhd_input, "edge-list file: 'i j [flow]' per line");

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = json::object();
        if (!config_path.empty()) cfg = load_config(config_path);
        if (!cfg.is_object()) throw ConfigError("config root must be an object");
        if (cfg.contains("seed") && !seed_given) seed = cfg["seed"].get<std::uint64_t>();
        if (cfg.contains("out") && out.empty()) out = cfg["out"].get<std::string>();
        if (cfg.contains("format") && format.empty()) format = cfg["format"].get<std::string>();
        if (format.empty()) format = "csv";
        if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
        if (cfg.contains("command")) {
            const std::string cmd = cfg["command"].get<std::string>();
            const std::string given = app.get_subcommands().front()->get_name();
            if (cmd != given)
                throw ConfigError("config command \"" + cmd + "\" does not match subcommand \"" +
                                  given + "\"");
        }

        if (app.got_subcommand(rho)) {
            if (config_path.empty()) {
                const bool matern_method = flag_method == "matern_quadrature" ||
                                           flag_method == "matern_lower_bound" ||
                                           flag_method == "pade";
                cfg["kernel"] = {{"family", matern_method ? "matern" : "squared_exponential"},
                                 {"l", 1.0},
                                 {"shape", flag_nu},
                                 {"amplitude", 1.0}};
                cfg["methods"] = {flag_method};
                cfg["grid"] = {{"r", {{"values", {flag_r}}}},
                               {"nu", {{"values", {flag_nu}}}},
                               {"T", {{"values", {flag_T}}}}};
            }
            return run_rho(cfg, seed, out, format, false);
        }
        if (app.got_subcommand(sweep)) return run_rho(cfg, seed, out, format, true);
        if (app.got_subcommand(mc)) return run_mc(cfg, seed, out, format);
        if (app.got_subcommand(hhd)) {
            if (!hhd_input.empty()) cfg["input"] = hhd_input;
            return run_hhd(cfg, seed, out);
        }
        if (app.got_subcommand(paths)) return run_paths(cfg, seed, out);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << json{{"error", {{"code", 2}, {"kind", "config"}, {"message", e.what()}}}}.dump()
                  << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << json{{"error", {{"code", 3}, {"kind", "numeric"}, {"message", e.what()}}}}.dump()
                  << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"code", 3}, {"kind", "numeric"}, {"message", e.what()}}}}.dump()
                  << '\n';
        return 3;
    }
}
