#include "flowcorr/quadrature.hpp"
#include "flowcorr/special.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <queue>

namespace flowcorr {

namespace {

// 15-point Kronrod nodes/weights with embedded 7-point Gauss (QUADPACK qk15).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
    double a, b, value, error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

Interval gk15(const ScalarFn& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int j = 0; j < 7; ++j) {
        fv[j] = f(c - h * kXgk[j]);
        fv[14 - j] = f(c + h * kXgk[j]);
    }
    fv[7] = f(c);
    double resk = 0.0, resg = 0.0;
    for (int j = 0; j < 7; ++j) resk += kWgk[j] * (fv[j] + fv[14 - j]);
    resk += kWgk[7] * fv[7];
    for (int j = 0; j < 3; ++j) resg += kWg[j] * (fv[2 * j + 1] + fv[13 - 2 * j]);
    resg += kWg[3] * fv[7];
    const double value = resk * h;
    double err = std::fabs((resk - resg) * h);
    // QUADPACK-style error sharpening
    double resabs = 0.0;
    for (int j = 0; j < 7; ++j) resabs += kWgk[j] * (std::fabs(fv[j]) + std::fabs(fv[14 - j]));
    resabs += kWgk[7] * std::fabs(fv[7]);
    resabs *= std::fabs(h);
    if (resabs > 0.0 && err > 0.0) {
        const double scale = std::pow(200.0 * err / resabs, 1.5);
        if (scale < 1.0) err = resabs * scale;
    }
    return {a, b, value, err};
}

QuadResult adaptive_on_intervals(const ScalarFn& f, std::vector<std::pair<double, double>> segs,
                                 const QuadratureSpec& spec) {
    spec.validate();
    std::priority_queue<Interval> heap;
    double total = 0.0, toterr = 0.0;
    for (auto [a, b] : segs) {
        if (!(b > a)) continue;
        Interval iv = gk15(f, a, b);
        total += iv.value;
        toterr += iv.error;
        heap.push(iv);
    }
    int splits = 0;
    while (!heap.empty() && splits < spec.max_subdivisions) {
        const double tol = std::max(spec.absolute_tolerance, spec.relative_tolerance * std::fabs(total));
        if (toterr <= tol) break;
        Interval worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) continue; // interval exhausted at double resolution
        Interval left = gk15(f, worst.a, mid);
        Interval right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        toterr += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++splits;
    }
    const double tol = std::max(spec.absolute_tolerance, spec.relative_tolerance * std::fabs(total));
    return {total, toterr, toterr <= tol};
}

} // namespace

QuadResult integrate_adaptive(const ScalarFn& f, double a, double b, const QuadratureSpec& spec) {
    return adaptive_on_intervals(f, {{a, b}}, spec);
}

// Geometric interior cuts for an interval starting at zero, so structure at
// any scale down to ~1e-12 of the width is visible to the first Kronrod pass.
static std::vector<double> zero_start_ladder(double b) {
    std::vector<double> pts;
    for (double f : {1e-12, 1e-9, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.4}) pts.push_back(b * f);
    return pts;
}

QuadResult integrate_adaptive_split(const ScalarFn& f, double a, double b,
                                    const std::vector<double>& interior, const QuadratureSpec& spec) {
    std::vector<double> pts = interior;
    pts.push_back(a);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> segs;
    for (size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i] >= a && pts[i + 1] <= b && pts[i + 1] > pts[i]) segs.push_back({pts[i], pts[i + 1]});
    return adaptive_on_intervals(f, segs, spec);
}

const GaussLaguerreRule& gauss_laguerre(int n, double alpha) {
    static std::map<std::pair<int, long long>, GaussLaguerreRule> cache;
    static std::mutex mtx;
    const auto key = std::make_pair(n, static_cast<long long>(alpha * 1e9));
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        J(k, k) = 2.0 * k + alpha + 1.0;
        if (k > 0) {
            const double off = std::sqrt(k * (k + alpha));
            J(k, k - 1) = off;
            J(k - 1, k) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussLaguerreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double mu0 = std::exp(gamma_ln(alpha + 1.0));
    for (int k = 0; k < n; ++k) {
        rule.nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        rule.weights[k] = mu0 * v0 * v0;
    }
    auto [pos, inserted] = cache.emplace(key, std::move(rule));
    return pos->second;
}

double chi2_expect_gl(const ScalarFn& g, int dof, int n) {
    // E[g(S)], S ~ chi2(dof): s = 2x maps the density onto weight x^(T/2-1)e^-x.
    const double alpha = 0.5 * dof - 1.0;
    const GaussLaguerreRule& rule = gauss_laguerre(n, alpha);
    const double norm = std::exp(gamma_ln(0.5 * dof));
    double acc = 0.0;
    for (size_t k = 0; k < rule.nodes.size(); ++k) acc += rule.weights[k] * g(2.0 * rule.nodes[k]);
    return acc / norm;
}

QuadResult chi2_expect_adaptive(const ScalarFn& g, int dof, const QuadratureSpec& spec) {
    // density s^(T/2-1) e^(-s/2) / (2^(T/2) Gamma(T/2)); remove the origin
    // power with s = w^(2/T) and truncate the exponential tail.
    const double p = 0.5 * dof;
    const double lognorm = p * std::log(2.0) + gamma_ln(p);
    const double s_split = std::max(2.0 * dof, 4.0);
    const double s_max = 2.0 * 760.0 + 10.0 * dof;
    const ScalarFn bulk = [&](double w) {
        const double s = std::pow(w, 1.0 / p);
        return g(s) * std::exp(-0.5 * s - lognorm) / p;
    };
    const double w_hi = std::pow(s_split, p);
    QuadResult r1 = integrate_adaptive_split(bulk, 0.0, w_hi, zero_start_ladder(w_hi), spec);
    const ScalarFn tail = [&](double s) {
        return g(s) * std::exp((p - 1.0) * std::log(s) - 0.5 * s - lognorm);
    };
    QuadResult r2 = integrate_adaptive_split(tail, s_split, s_max, {4.0 * s_split, 16.0 * s_split}, spec);
    return {r1.value + r2.value, r1.error + r2.error, r1.converged && r2.converged};
}

// ---------------------------------------------------------------------------

double density_pdf(const Density1D& d, double v) {
    if (v < 0) return 0.0;
    return std::visit(
        [v](const auto& dist) -> double {
            using T = std::decay_t<decltype(dist)>;
            if constexpr (std::is_same_v<T, PointMassDist>) {
                return v == dist.location ? std::numeric_limits<double>::infinity() : 0.0;
            } else if constexpr (std::is_same_v<T, ExponentialDist>) {
                return dist.rate * std::exp(-dist.rate * v);
            } else if constexpr (std::is_same_v<T, GammaDist>) {
                if (v == 0) return 0.0;
                return std::exp(dist.shape * std::log(dist.rate) - gamma_ln(dist.shape) +
                                (dist.shape - 1.0) * std::log(v) - dist.rate * v);
            } else if constexpr (std::is_same_v<T, InverseGammaDist>) {
                if (v == 0) return 0.0;
                return std::exp(dist.shape * std::log(dist.scale) - gamma_ln(dist.shape) -
                                (dist.shape + 1.0) * std::log(v) - dist.scale / v);
            } else if constexpr (std::is_same_v<T, HalfCauchyDist>) {
                const double t = v / dist.scale;
                return 2.0 / (M_PI * dist.scale * (1.0 + t * t));
            } else {
                const double la = std::log(v);
                return std::exp((dist.a - 1.0) * la - (dist.a + dist.b) * std::log1p(v) -
                                (gamma_ln(dist.a) + gamma_ln(dist.b) - gamma_ln(dist.a + dist.b)));
            }
        },
        d);
}

double density_moment(const Density1D& d, int k) {
    return std::visit(
        [k](const auto& dist) -> double {
            using T = std::decay_t<decltype(dist)>;
            if constexpr (std::is_same_v<T, PointMassDist>) {
                return std::pow(dist.location, k);
            } else if constexpr (std::is_same_v<T, ExponentialDist>) {
                return std::exp(gamma_ln(k + 1.0)) / std::pow(dist.rate, k);
            } else if constexpr (std::is_same_v<T, GammaDist>) {
                return std::exp(gamma_ln(dist.shape + k) - gamma_ln(dist.shape)) / std::pow(dist.rate, k);
            } else if constexpr (std::is_same_v<T, InverseGammaDist>) {
                if (dist.shape <= k) throw std::domain_error("inverse-gamma moment requires k < shape");
                return std::pow(dist.scale, k) * std::exp(gamma_ln(dist.shape - k) - gamma_ln(dist.shape));
            } else if constexpr (std::is_same_v<T, HalfCauchyDist>) {
                throw std::domain_error("half-Cauchy has no finite moments");
            } else {
                if (dist.b <= k) throw std::domain_error("beta-prime moment requires k < b");
                return std::exp(gamma_ln(dist.a + k) + gamma_ln(dist.b - k) - gamma_ln(dist.a) -
                                gamma_ln(dist.b));
            }
        },
        d);
}

namespace {

// One transformed finite-interval piece of an expectation integral.
struct Piece {
    ScalarFn f;
    double a, b;
};

double exp_or_zero(double t) { return t < -745.0 ? 0.0 : std::exp(t); }

void add_power_bulk(std::vector<Piece>& pieces, double p, double upper,
                    const std::function<double(double)>& smooth) {
    // int_0^upper v^(p-1) smooth(v) dv  with  v = w^(1/p)
    pieces.push_back({[p, smooth](double w) { return smooth(std::pow(w, 1.0 / p)) / p; }, 0.0,
                      std::pow(upper, p)});
}

// Pieces for int g(u) u^(a-1) e^(-beta u) beta^a/Gamma(a) du over (0, inf).
// Cut points bracket the density bulk (mean +- 8 sd) and the caller's scale
// hint so no later subinterval hides a spike from the first Kronrod pass.
// `inverted` marks that g already absorbed a u = 1/v change of variables,
// flipping where the hint lands.
void add_gamma_pieces(std::vector<Piece>& pieces, double a, double beta, const ScalarFn& g,
                      bool inverted, double hint) {
    const double lognorm = a * std::log(beta) - gamma_ln(a);
    const double mean = a / beta;
    const double sd = std::sqrt(a) / beta;
    const double u_max = (760.0 + std::fabs(a - 1.0) * 50.0) / beta + 10.0 * mean;
    const double hint_u = inverted ? 1.0 / std::max(hint, 1e-300) : hint;

    std::vector<double> cuts{mean, std::max(mean - 8.0 * sd, 0.25 * mean), mean + 8.0 * sd};
    if (hint_u > 0.0 && hint_u < u_max) cuts.push_back(hint_u);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    while (!cuts.empty() && cuts.back() >= u_max) cuts.pop_back();
    cuts.push_back(u_max);

    const auto full = [g, lognorm, a, beta](double u) {
        return g(u) * exp_or_zero(lognorm + (a - 1.0) * std::log(u) - beta * u);
    };
    double lo = 0.0;
    for (double hi : cuts) {
        if (!(hi > lo)) continue;
        if (lo == 0.0 && a < 1.5) {
            const auto smooth = [g, lognorm, beta](double u) {
                return g(u) * exp_or_zero(lognorm - beta * u);
            };
            add_power_bulk(pieces, a, hi, smooth);
        } else {
            pieces.push_back({full, lo, hi});
        }
        lo = hi;
    }
}

} // namespace

QuadResult expect_1d(const Density1D& density, const ScalarFn& f, const QuadratureSpec& spec,
                     std::optional<double> f_scale_hint) {
    spec.validate();
    if (const auto* pm = std::get_if<PointMassDist>(&density)) {
        return {f(pm->location), 0.0, true};
    }

    std::vector<Piece> pieces;
    const double hint = f_scale_hint.value_or(1.0);

    if (const auto* e = std::get_if<ExponentialDist>(&density)) {
        const double rate = e->rate;
        const double vmax = 760.0 / rate;
        const ScalarFn g = [f, rate](double v) { return f(v) * rate * std::exp(-rate * v); };
        const double s = std::clamp(hint, 1e-3 / rate, vmax);
        pieces.push_back({g, 0.0, s});
        if (vmax > s) {
            pieces.push_back({g, s, std::min(vmax, 8.0 * s + 8.0 / rate)});
            if (vmax > 8.0 * s + 8.0 / rate) pieces.push_back({g, 8.0 * s + 8.0 / rate, vmax});
        }
    } else if (const auto* g = std::get_if<GammaDist>(&density)) {
        add_gamma_pieces(pieces, g->shape, g->rate, f, /*inverted=*/false, hint);
    } else if (const auto* ig = std::get_if<InverseGammaDist>(&density)) {
        // u = 1/v turns the density into Gamma(shape, rate=scale); the
        // bulk/tail split of the original variable becomes a split of u.
        add_gamma_pieces(pieces, ig->shape, ig->scale, [f](double u) { return f(1.0 / u); },
                         /*inverted=*/true, hint);
    } else if (const auto* hc = std::get_if<HalfCauchyDist>(&density)) {
        const double s0 = hc->scale;
        const double split = std::max(s0, std::min(hint, 1e9 * s0));
        pieces.push_back({[f, s0](double v) {
                              const double t = v / s0;
                              return f(v) * 2.0 / (M_PI * s0 * (1.0 + t * t));
                          },
                          0.0, split});
        // tail via u = 1/v: pdf(1/u)/u^2 = (2 s0/pi) / (1 + s0^2 u^2)
        pieces.push_back({[f, s0](double u) {
                              return f(1.0 / u) * 2.0 * s0 / (M_PI * (1.0 + s0 * s0 * u * u));
                          },
                          0.0, 1.0 / split});
    } else if (const auto* bp = std::get_if<BetaPrimeDist>(&density)) {
        const double a = bp->a, b = bp->b;
        const double lognorm = gamma_ln(a + b) - gamma_ln(a) - gamma_ln(b);
        const double split = std::max(1.0, std::min(hint, 1e9));
        const auto bulk_smooth = [f, lognorm, a, b](double v) {
            return f(v) * exp_or_zero(lognorm - (a + b) * std::log1p(v));
        };
        if (a < 1.5) {
            add_power_bulk(pieces, a, split, bulk_smooth);
        } else {
            pieces.push_back({[f, lognorm, a, b](double v) {
                                  return f(v) * exp_or_zero(lognorm + (a - 1.0) * std::log(v) -
                                                            (a + b) * std::log1p(v));
                              },
                              0.0, split});
        }
        // tail via u = 1/v: pdf(1/u)/u^2 = u^(b-1)(1+u)^(-(a+b)) / B(a,b)
        const auto tail_smooth = [f, lognorm, a, b](double u) {
            return f(1.0 / u) * exp_or_zero(lognorm - (a + b) * std::log1p(u));
        };
        if (b < 1.5) {
            add_power_bulk(pieces, b, 1.0 / split, tail_smooth);
        } else {
            pieces.push_back({[f, lognorm, a, b](double u) {
                                  return f(1.0 / u) * exp_or_zero(lognorm + (b - 1.0) * std::log(u) -
                                                                  (a + b) * std::log1p(u));
                              },
                              0.0, 1.0 / split});
        }
    }

    double value = 0.0, error = 0.0;
    bool converged = true;
    QuadratureSpec piece_spec = spec;
    piece_spec.max_subdivisions = std::max(1, spec.max_subdivisions / static_cast<int>(pieces.size()));
    for (const Piece& p : pieces) {
        std::vector<double> interior;
        if (p.a == 0.0) {
            interior = zero_start_ladder(p.b);
        } else if (p.b > 100.0 * p.a) {
            // wide ranges integrate better with geometric cuts
            interior = {std::sqrt(p.a * p.b), std::pow(p.a * p.a * p.b, 1.0 / 3.0),
                        std::pow(p.a * p.b * p.b, 1.0 / 3.0)};
        }
        QuadResult r = integrate_adaptive_split(p.f, p.a, p.b, interior, piece_spec);
        value += r.value;
        error += r.error;
        converged = converged && r.converged;
    }
    const double tol = std::max(spec.absolute_tolerance, spec.relative_tolerance * std::fabs(value));
    return {value, error, converged || error <= tol};
}

} // namespace flowcorr
