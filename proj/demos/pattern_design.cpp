// Solves for the control spin values that realize a coupling pattern on the
// cross layout, then compiles them to a flip schedule.
#include <cstdio>

#include "rce/pattern_solver.hpp"
#include "rce/presets.hpp"

int main() {
  using namespace rce;
  const auto F = build_coupling_matrix(cross8());
  for (const InteractionPattern& p : {InteractionPattern{1, 1, 1, 1}, InteractionPattern{1, 1, 0, 0},
                                      InteractionPattern{1, 0, 1, 0}}) {
    const auto c = solve_pattern(F, p);
    std::printf("pattern (");
    for (int j = 0; j < p.size(); ++j) std::printf("%s%g", j ? "," : "", p.lambdas(j));
    std::printf(")  lambda_max %.5f  c =", 1 / c.scale);
    for (double x : c.c) std::printf(" %+.4f", x);
    const auto sched = compile_flip_schedule(c, 1.0);
    std::printf("  flips %d\n", sched.flip_count());
  }
}
