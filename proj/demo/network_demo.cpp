// Minimal library walk-through: simulate configuration 1, sample the posterior
// with a short ladder, print the inclusion probabilities of every edge.
//
//   network_demo [n_sweeps]

#include <cstdio>
#include <cstdlib>

#include "ssdyn/experiments.hpp"
#include "ssdyn/io.hpp"

int main(int argc, char** argv) {
    using namespace ssdyn;
    const long sweeps = argc > 1 ? std::atol(argv[1]) : 2000;

    const auto exp = paper_configuration(1, /*seed=*/42);
    const auto traj = simulate_network(exp.truth, exp.sim);

    InferenceSettings s;
    s.replicas = 16;
    s.sampler.n_sweeps = sweeps;
    s.sampler.burn_in = sweeps / 2;
    s.sampler.thinning = 5;
    s.sampler.seed = 7;
    const auto r = infer_network(traj, s);

    for (const auto& d : r.dicts)
        for (std::size_t e = 0; e < d.edges.size(); ++e)
            std::printf("%-9s %-7s %.3f\n", to_string(d.edges[e].kind), edge_label(d.edges[e]).c_str(),
                        r.table.edges[static_cast<std::size_t>(d.node)][e]);
    const auto m = evaluate_metrics(exp.truth, r.dicts, r.layout, r.estimate);
    std::printf("E_c = %.4f  E_theta = %.4f\n", m.e_c, m.e_theta);
}
