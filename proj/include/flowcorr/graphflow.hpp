#pragma once

#include "flowcorr/kernels.hpp"
#include "flowcorr/montecarlo.hpp"
#include "flowcorr/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace flowcorr {

// Undirected graph with canonical edge orientation i < j.
struct Graph {
    int vertex_count = 0;
    std::vector<std::pair<int, int>> edges;
    bool connected = false;
    int resample_count = 0;  // Erdos-Renyi connectivity retries

    int edge_count() const { return static_cast<int>(edges.size()); }
    int cycle_dim() const { return edge_count() - (vertex_count - 1); }  // L = E - (V-1)
};

Graph complete_graph(int V);
Graph erdos_renyi_graph(int V, double p, RngStream& rng, int max_retries = 1000);

// Edge flow: one value per canonical edge; f(j,i) = -f(i,j) implicit.
using EdgeFlow = Eigen::VectorXd;

struct HHDResult {
    EdgeFlow transitive;           // F_t(i->j) = s(i) - s(j)
    EdgeFlow cyclic;               // F_c = f - F_t, divergence-free
    Eigen::VectorXd potential;     // mean-zero gauge
    double transitive_norm2 = 0.0;
    double cyclic_norm2 = 0.0;
};

// Signed edge adjacency: +1 when two edges meet tail-tail or head-head,
// -1 when head meets tail, 0 when disjoint.
Eigen::SparseMatrix<double> signed_edge_adjacency(const Graph& g);

// Least-squares Helmholtz-Hodge split on the graph Laplacian; dense solve
// below `dense_limit` vertices, conjugate gradient above.
HHDResult hhd_decompose(const Graph& g, const EdgeFlow& f, int dense_limit = 2000);

// Divergence of a flow at every vertex (out-flow minus in-flow).
Eigen::VectorXd flow_divergence(const Graph& g, const EdgeFlow& f);

// Expected transitive/cyclic norms from (V, E, sigma^2, rho) alone.
std::pair<double, double> expected_component_norms(int V, int E, double sigma2, double rho);

// One joint flow draw over all edges of g from the trait-performance model.
EdgeFlow sample_graph_flow(const Graph& g, const IsotropicKernel& kernel,
                           const TraitDistribution& traits, RngStream& rng);

struct FlowEnsembleReport {
    double mean_transitive_norm2 = 0, stderr_transitive = 0;
    double mean_cyclic_norm2 = 0, stderr_cyclic = 0;
    double mean_total_norm2 = 0, stderr_total = 0;
    double predicted_transitive = 0, predicted_cyclic = 0, predicted_total = 0;
    double sigma2 = 0, rho = 0;
    long replicates = 0;
};

FlowEnsembleReport validate_trait_performance(const Graph& g, const IsotropicKernel& kernel,
                                              const TraitDistribution& traits, long replicates,
                                              RngStream& rng);

// Edge-list text I/O: "i j [flow]" per line, 0-based vertex ids.
struct EdgeListFile {
    Graph graph;
    EdgeFlow flow;     // empty when the file carries no flow column
    bool has_flow = false;
};

EdgeListFile read_edge_list(std::istream& in);
void write_hhd_csv(std::ostream& out, const Graph& g, const EdgeFlow& f, const HHDResult& hhd);

} // namespace flowcorr
