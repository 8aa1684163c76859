// Builds a 4-qubit path graph state on the cross layout through the shared
// control register and prints its fidelity and flip ledger.
#include <cstdio>

#include "rce/presets.hpp"
#include "rce/protocols.hpp"
#include "rce/verify.hpp"

int main() {
  using namespace rce;
  const std::vector<std::pair<int, int>> edges{{0, 1}, {1, 2}, {2, 3}};
  EngineOptions opts;
  opts.mode = SimulationMode::physical;
  opts.seed = 7;
  const auto trace = graph_state_prep(cross8(), edges, opts);

  std::printf("fidelity %.12f\n", verify::target_fidelity(trace.final_state, verify::graph_state(4, edges)));
  std::printf("elapsed %.6f, flips %d, outcomes:", trace.elapsed(), trace.total_flips());
  for (int m : trace.outcomes()) std::printf(" %+d", m);
  const auto L = flip_budget(trace);
  std::printf("\nledger ok: %s (eta_lambda %d, |E| N = %d)\n", L.all_ok() ? "yes" : "no", L.eta_lambda,
              static_cast<int>(edges.size()) * L.N);
}
