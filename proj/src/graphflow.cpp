#include "flowcorr/graphflow.hpp"
#include "flowcorr/correlation.hpp"
#include "flowcorr/linalg.hpp"
#include "flowcorr/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

namespace flowcorr {

namespace {

bool is_connected(int V, const std::vector<std::pair<int, int>>& edges) {
    if (V <= 1) return true;
    std::vector<std::vector<int>> adj(static_cast<size_t>(V));
    for (auto [i, j] : edges) {
        adj[static_cast<size_t>(i)].push_back(j);
        adj[static_cast<size_t>(j)].push_back(i);
    }
    std::vector<char> seen(static_cast<size_t>(V), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    int count = 1;
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : adj[static_cast<size_t>(u)])
            if (!seen[static_cast<size_t>(v)]) {
                seen[static_cast<size_t>(v)] = 1;
                ++count;
                q.push(v);
            }
    }
    return count == V;
}

} // namespace

Graph complete_graph(int V) {
    if (V < 2) throw std::invalid_argument("complete_graph: V >= 2 required");
    Graph g;
    g.vertex_count = V;
    g.connected = true;
    for (int i = 0; i < V; ++i)
        for (int j = i + 1; j < V; ++j) g.edges.push_back({i, j});
    return g;
}

Graph erdos_renyi_graph(int V, double p, RngStream& rng, int max_retries) {
    if (V < 2 || p < 0.0 || p > 1.0) throw std::invalid_argument("erdos_renyi_graph: bad parameters");
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        Graph g;
        g.vertex_count = V;
        g.resample_count = attempt;
        for (int i = 0; i < V; ++i)
            for (int j = i + 1; j < V; ++j)
                if (rng.uniform01() < p) g.edges.push_back({i, j});
        if (is_connected(V, g.edges)) {
            g.connected = true;
            return g;
        }
    }
    throw std::runtime_error("erdos_renyi_graph: retry budget exhausted without a connected draw");
}

Eigen::SparseMatrix<double> signed_edge_adjacency(const Graph& g) {
    const int E = g.edge_count();
    std::vector<Eigen::Triplet<double>> trips;
    for (int a = 0; a < E; ++a) {
        const auto [i, j] = g.edges[static_cast<size_t>(a)];
        for (int b = a + 1; b < E; ++b) {
            const auto [u, v] = g.edges[static_cast<size_t>(b)];
            double sign = 0.0;
            if (i == u || j == v) sign = 1.0;        // tail-tail or head-head
            else if (i == v || j == u) sign = -1.0;  // head meets tail
            if (sign != 0.0) {
                trips.push_back({a, b, sign});
                trips.push_back({b, a, sign});
            }
        }
    }
    Eigen::SparseMatrix<double> A(E, E);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

Eigen::VectorXd flow_divergence(const Graph& g, const EdgeFlow& f) {
    Eigen::VectorXd div = Eigen::VectorXd::Zero(g.vertex_count);
    for (int e = 0; e < g.edge_count(); ++e) {
        const auto [i, j] = g.edges[static_cast<size_t>(e)];
        div(i) += f(e);
        div(j) -= f(e);
    }
    return div;
}

namespace {

Eigen::VectorXd solve_laplacian_dense(const Graph& g, const Eigen::VectorXd& rhs) {
    const int V = g.vertex_count;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(V, V);
    for (auto [i, j] : g.edges) {
        L(i, i) += 1.0;
        L(j, j) += 1.0;
        L(i, j) -= 1.0;
        L(j, i) -= 1.0;
    }
    // pin the constant-vector kernel with a rank-one shift
    L.array() += 1.0 / V;
    Eigen::VectorXd s = L.ldlt().solve(rhs);
    s.array() -= s.mean();
    return s;
}

Eigen::VectorXd solve_laplacian_cg(const Graph& g, const Eigen::VectorXd& rhs) {
    const int V = g.vertex_count;
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd deg = Eigen::VectorXd::Zero(V);
    for (auto [i, j] : g.edges) {
        trips.push_back({i, j, -1.0});
        trips.push_back({j, i, -1.0});
        deg(i) += 1.0;
        deg(j) += 1.0;
    }
    for (int i = 0; i < V; ++i) trips.push_back({i, i, deg(i)});
    Eigen::SparseMatrix<double> L(V, V);
    L.setFromTriplets(trips.begin(), trips.end());

    // Jacobi-preconditioned CG on the mean-zero subspace
    Eigen::VectorXd b = rhs;
    b.array() -= b.mean();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(V);
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = r.array() / deg.array();
    z.array() -= z.mean();
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    const double tol2 = 1e-26 * b.squaredNorm();
    for (int it = 0; it < 20 * V && r.squaredNorm() > tol2; ++it) {
        const Eigen::VectorXd Lp = L * p;
        const double alpha = rz / p.dot(Lp);
        x += alpha * p;
        r -= alpha * Lp;
        z = r.array() / deg.array();
        z.array() -= z.mean();
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    x.array() -= x.mean();
    return x;
}

} // namespace

HHDResult hhd_decompose(const Graph& g, const EdgeFlow& f, int dense_limit) {
    if (!g.connected && !is_connected(g.vertex_count, g.edges))
        throw std::invalid_argument("hhd_decompose: graph must be connected");
    if (f.size() != g.edge_count()) throw std::invalid_argument("hhd_decompose: flow size mismatch");

    const Eigen::VectorXd div = flow_divergence(g, f);
    const Eigen::VectorXd s = (g.vertex_count < dense_limit) ? solve_laplacian_dense(g, div)
                                                             : solve_laplacian_cg(g, div);
    HHDResult out;
    out.potential = s;
    out.transitive.resize(g.edge_count());
    for (int e = 0; e < g.edge_count(); ++e) {
        const auto [i, j] = g.edges[static_cast<size_t>(e)];
        out.transitive(e) = s(i) - s(j);
    }
    out.cyclic = f - out.transitive;
    out.transitive_norm2 = out.transitive.squaredNorm();
    out.cyclic_norm2 = out.cyclic.squaredNorm();
    return out;
}

std::pair<double, double> expected_component_norms(int V, int E, double sigma2, double rho) {
    if (rho < -1e-12 || rho > 0.5 + 1e-12)
        throw std::invalid_argument("expected_component_norms: rho must lie in [0, 1/2]");
    const double L = E - (V - 1);
    const double ft = sigma2 * ((V - 1) + 2.0 * rho * L);
    const double fc = sigma2 * (1.0 - 2.0 * rho) * L;
    return {ft, fc};
}

EdgeFlow sample_graph_flow(const Graph& g, const IsotropicKernel& kernel,
                           const TraitDistribution& traits, RngStream& rng) {
    TraitSample ts = sample_traits(g.vertex_count, traits, rng);
    const ProductKernel ku{kernel};
    const Eigen::MatrixXd G = flow_gram(ts, g.edges, ku);
    return sample_flow(G, g.edges, rng).values;
}

FlowEnsembleReport validate_trait_performance(const Graph& g, const IsotropicKernel& kernel,
                                              const TraitDistribution& traits, long replicates,
                                              RngStream& rng) {
    if (replicates < 100)
        throw std::invalid_argument("validate_trait_performance: replicates >= 100 required");
    const int B = 32;
    const long per_batch = (replicates + B - 1) / B;
    const long total = per_batch * B;

    struct Acc {
        double ft = 0, fc = 0, tot = 0;
        long n = 0;
    };
    std::vector<Acc> acc(B);
    parallel_chunks(B, [&](int batch) {
        RngStream local = rng.substream(static_cast<std::uint64_t>(batch) + 101);
        Acc a;
        for (long k = 0; k < per_batch; ++k) {
            const EdgeFlow f = sample_graph_flow(g, kernel, traits, local);
            const HHDResult h = hhd_decompose(g, f);
            a.ft += h.transitive_norm2;
            a.fc += h.cyclic_norm2;
            a.tot += f.squaredNorm();
            ++a.n;
        }
        acc[static_cast<size_t>(batch)] = a;
    });

    FlowEnsembleReport rep;
    rep.replicates = total;
    std::vector<double> bft, bfc, btot;
    double sft = 0, sfc = 0, stot = 0;
    for (const Acc& a : acc) {
        bft.push_back(a.ft / a.n);
        bfc.push_back(a.fc / a.n);
        btot.push_back(a.tot / a.n);
        sft += a.ft;
        sfc += a.fc;
        stot += a.tot;
    }
    rep.mean_transitive_norm2 = sft / total;
    rep.mean_cyclic_norm2 = sfc / total;
    rep.mean_total_norm2 = stot / total;
    const auto bstderr = [B](const std::vector<double>& v, double mean) {
        double ss = 0;
        for (double b : v) ss += (b - mean) * (b - mean);
        return std::sqrt(ss / (B - 1) / B);
    };
    rep.stderr_transitive = bstderr(bft, rep.mean_transitive_norm2);
    rep.stderr_cyclic = bstderr(bfc, rep.mean_cyclic_norm2);
    rep.stderr_total = bstderr(btot, rep.mean_total_norm2);

    // module-computed predictions (Gaussian isotropic traits -> closed/chi2)
    QuadratureSpec spec;
    double sigma_x = 0.0;
    if (traits.kind == TraitDistribution::Kind::Gaussian) {
        const double first = traits.sigma_x(0, 0);
        sigma_x = std::sqrt(first);
    } else {
        sigma_x = traits.scale;
    }
    const CorrelationResult cr = rho_sigma_chi2(kernel, sigma_x, traits.dim, spec);
    rep.sigma2 = cr.sigma2;
    rep.rho = cr.rho;
    auto [pt, pc] = expected_component_norms(g.vertex_count, g.edge_count(), rep.sigma2, rep.rho);
    rep.predicted_transitive = pt;
    rep.predicted_cyclic = pc;
    rep.predicted_total = rep.sigma2 * g.edge_count();
    return rep;
}

EdgeListFile read_edge_list(std::istream& in) {
    EdgeListFile out;
    std::string line;
    std::vector<double> flows;
    int max_vertex = -1;
    int lineno = 0;
    bool any_flow = false, all_flow = true;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        long i, j;
        if (!(ls >> i >> j) || i < 0 || j < 0 || i == j)
            throw std::runtime_error("edge list parse error at line " + std::to_string(lineno) +
                                     ": expected 'i j [flow]' with distinct ids >= 0");
        double fval;
        if (ls >> fval) {
            any_flow = true;
        } else {
            fval = 0.0;
            all_flow = false;
        }
        int a = static_cast<int>(i), b = static_cast<int>(j);
        if (a > b) {
            std::swap(a, b);
            fval = -fval;  // canonical orientation
        }
        for (const auto& e : out.graph.edges)
            if (e.first == a && e.second == b)
                throw std::runtime_error("edge list parse error at line " + std::to_string(lineno) +
                                         ": duplicate undirected edge");
        out.graph.edges.push_back({a, b});
        flows.push_back(fval);
        max_vertex = std::max(max_vertex, b);
    }
    if (out.graph.edges.empty()) throw std::runtime_error("edge list: no edges");
    if (any_flow && !all_flow) throw std::runtime_error("edge list: flow column present on only some lines");
    out.graph.vertex_count = max_vertex + 1;
    out.graph.connected = is_connected(out.graph.vertex_count, out.graph.edges);
    out.has_flow = any_flow;
    out.flow = Eigen::Map<Eigen::VectorXd>(flows.data(), static_cast<Eigen::Index>(flows.size()));
    return out;
}

void write_hhd_csv(std::ostream& out, const Graph& g, const EdgeFlow& f, const HHDResult& hhd) {
    out << "edge_src,edge_dst,f,f_t,f_c\n";
    char buf[128];
    for (int e = 0; e < g.edge_count(); ++e) {
        const auto [i, j] = g.edges[static_cast<size_t>(e)];
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", i, j, f(e), hhd.transitive(e),
                      hhd.cyclic(e));
        out << buf;
    }
}

} // namespace flowcorr
