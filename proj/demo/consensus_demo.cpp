// Plain DeGroot averaging on a scale-free graph: opinions contract to the
// stationary-distribution average of the initial opinions.
#include <cstdio>
#include <numeric>

#include <gsmdg/gsmdg.hpp>

int main() {
    using namespace gsmdg;
    GraphGenSpec spec;
    spec.family = GraphFamily::barabasi_albert;
    spec.nodes = 30;
    spec.seed = 1;
    const auto g = generate(spec);
    const auto report = validate(g);
    std::printf("graph: %zu nodes, %zu edges, strongly connected %d, aperiodic %d\n", g.node_count(),
                g.edge_count(), report.strongly_connected, report.aperiodic);

    const auto pop = Population::make(std::vector<double>(30, 1.0), init_opinions(30, 0.0, 2.0, 2));
    const auto pi = stationary_distribution(g);
    const double target = std::inner_product(pi.begin(), pi.end(), pop.initial_opinions.begin(), 0.0);

    const auto tr = simulate(g, pop, ModelParams{}, 200, 3);  // gamma = 0: no event steering
    std::printf("%5s %12s %12s %12s\n", "t", "min", "max", "mean");
    for (std::size_t t : {0, 1, 2, 5, 10, 20, 50, 100, 199}) {
        std::printf("%5zu %12.6f %12.6f %12.6f\n", t, tr.min_opinion[t], tr.max_opinion[t], tr.mean_opinion[t]);
    }
    std::printf("pi . X0 = %.6f\n", target);
}
