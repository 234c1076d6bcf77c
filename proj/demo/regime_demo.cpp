// Event steering in the two regimes: mostly negative reactions damp the
// events (self-cooling), mostly positive ones amplify them (self-exciting).
#include <cstdio>

#include <gsmdg/gsmdg.hpp>

int main() {
    using namespace gsmdg;
    ExperimentConfig cfg;
    cfg.graph.family = GraphFamily::barabasi_albert;
    cfg.graph.nodes = 100;
    cfg.params.lambda = 1.0;
    cfg.params.gamma = 0.5;
    cfg.horizon = 500;
    cfg.seed = 4;

    std::printf("%6s %8s %14s %10s %10s %10s %10s\n", "beta", "realized", "regime", "S_0", "S_tail", "D_max", "D_max_inf");
    for (double beta : {0.05, 0.3, 0.5, 0.7, 0.95}) {
        cfg.population.positive_fraction = beta;
        const auto rep = run_replicate(cfg, cfg.seed);
        const auto& tr = rep.trajectory;
        const auto idx = polarization_indices(tr);
        std::printf("%6.2f %8.2f %14s %10.4f %10.4f %10.4f %10.4f\n", beta, rep.population.positive_fraction(),
                    std::string(to_string(regime(rep.population))).c_str(), tr.event_fraction.front(),
                    tail_mean(tr.event_fraction), idx.d_max, idx.d_max_inf);
    }
}
