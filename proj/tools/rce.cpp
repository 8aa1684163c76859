// Command-line front end for the remote-control toolkit.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "rce/io.hpp"
#include "rce/noise.hpp"
#include "rce/presets.hpp"
#include "rce/protocols.hpp"
#include "rce/verify.hpp"

namespace {

using rce::io::json;

enum Exit { ok = 0, acceptance_failure = 1, config_error = 2, resource_cap = 3 };

// Every option as text, so a JSON config can override any of them by name.
struct Options {
  std::map<std::string, std::string> v;
  std::string& operator[](const std::string& k) { return v[k]; }
  bool has(const std::string& k) const {
    auto it = v.find(k);
    return it != v.end() && !it->second.empty();
  }
  const std::string& get(const std::string& k) const {
    static const std::string empty;
    auto it = v.find(k);
    return it == v.end() ? empty : it->second;
  }
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

double number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw rce::InvalidInput("bad number for " + what + ": '" + s + "'");
  }
}

long integer(const std::string& s, const std::string& what) {
  const double x = number(s, what);
  if (x != std::floor(x)) throw rce::InvalidInput(what + " must be an integer");
  return static_cast<long>(x);
}

std::vector<double> numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& x : split(s, ',')) out.push_back(number(x, what));
  return out;
}

// 1-based target list -> 0-based indices.
std::vector<int> indices(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& x : split(s, ',')) {
    const long k = integer(x, what);
    if (k < 1) throw rce::InvalidInput(what + " indices start at 1");
    out.push_back(static_cast<int>(k - 1));
  }
  return out;
}

std::vector<std::pair<int, int>> edge_list(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : split(s, ',')) {
    const auto ends = split(e, '-');
    if (ends.size() != 2) throw rce::InvalidInput("edges look like 1-2,2-3");
    out.push_back({static_cast<int>(integer(ends[0], "edge")) - 1, static_cast<int>(integer(ends[1], "edge")) - 1});
  }
  return out;
}

void apply_config(Options& o) {
  if (!o.has("config")) return;
  std::ifstream in(o.get("config"));
  if (!in) throw rce::InvalidInput("cannot open config " + o.get("config"));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw rce::InvalidInput(std::string("malformed config: ") + e.what());
  }
  if (!j.is_object()) throw rce::InvalidInput("config must be a JSON object");
  for (auto& [key, value] : j.items()) {
    if (!o.v.count(key)) throw rce::InvalidInput("unknown config key: " + key);
    if (value.is_string()) o[key] = value.get<std::string>();
    else if (value.is_array()) {
      std::string joined;
      for (const auto& x : value) joined += (joined.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
      o[key] = joined;
    } else o[key] = value.dump();
  }
}

rce::Layout layout_of(const Options& o) {
  if (o.has("layout")) return rce::io::load_layout(o.get("layout"));
  return rce::preset(o.has("preset") ? o.get("preset") : "linear4");
}

void emit(const Options& o, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (o.has("json")) {
    if (o.get("json") == "-") std::cout << text;
    else rce::io::write_file(o.get("json"), text);
  }
}

rce::SolveStrategy strategy_of(const Options& o) {
  const auto s = o.has("strategy") ? o.get("strategy") : "max-coupling";
  if (s == "max-coupling") return rce::SolveStrategy::max_coupling;
  if (s == "min-norm") return rce::SolveStrategy::min_norm;
  throw rce::InvalidInput("strategy is max-coupling or min-norm");
}

rce::SubspaceVector solve_for(const Options& o, const rce::Layout& layout) {
  const auto pattern = numbers(o.get("pattern"), "pattern");
  if (pattern.empty()) throw rce::InvalidInput("--pattern is required");
  const rce::InteractionPattern target(Eigen::Map<const rce::Vec>(pattern.data(), pattern.size()));
  const auto method = o.has("method") ? o.get("method") : "point";
  if (method == "point") {
    if (target.size() != layout.num_targets()) throw rce::InvalidInput("pattern length must equal the target count");
    return rce::solve_pattern(rce::build_coupling_matrix(layout), target, strategy_of(o));
  }
  if (method == "taylor") {
    const int order = o.has("order") ? static_cast<int>(integer(o.get("order"), "order")) : 1;
    return rce::taylor_robust_solve(layout, rce::regions_at_targets(layout, rce::TaylorRegion{order}), target,
                                    strategy_of(o));
  }
  if (method == "discretized") {
    const double sigma = number(o.get("sigma"), "sigma");
    if (!(sigma > 0)) throw rce::InvalidInput("discretized regions need sigma > 0");
    return rce::discretized_robust_solve(
        layout, rce::regions_at_targets(layout, rce::DiscretizedRegion{rce::default_virtual_offsets(sigma, layout.dim())}),
        target, strategy_of(o));
  }
  throw rce::InvalidInput("method is point, taylor or discretized");
}

int cmd_list_presets(const Options& o) {
  json j = json::array();
  for (const auto& p : rce::preset_catalog()) {
    const auto l = rce::preset(p.name);
    std::printf("%-14s N=%d n=%d D=%d  %s\n", p.name.c_str(), l.num_controls(), l.num_targets(), l.dim(),
                p.description.c_str());
    j.push_back({{"name", p.name}, {"description", p.description}, {"layout", rce::io::to_json(l)}});
  }
  emit(o, j);
  return ok;
}

int cmd_solve(const Options& o) {
  const auto layout = layout_of(o);
  const auto c = solve_for(o, layout);
  const rce::Vec realized = rce::build_coupling_matrix(layout).F * c.c;
  std::optional<rce::FlipSchedule> sched;
  if (o.has("duration")) sched = rce::compile_flip_schedule(c, number(o.get("duration"), "duration"));
  std::cout << "c = (";
  for (int i = 0; i < c.size(); ++i) std::cout << (i ? ", " : "") << c.c(i);
  std::cout << ")\nlambda_max = " << 1.0 / c.scale << "\n";
  emit(o, rce::io::solve_json(c, realized, sched));
  return ok;
}

int cmd_compile_flips(const Options& o) {
  rce::SubspaceVector c;
  if (o.has("c")) {
    const auto v = numbers(o.get("c"), "c");
    c = rce::SubspaceVector{Eigen::Map<const rce::Vec>(v.data(), v.size()), 1.0};
    for (double x : v)
      if (std::abs(x) > 1.0) throw rce::InvalidInput("subspace vector entries must lie in [-1, 1]");
  } else {
    c = solve_for(o, layout_of(o));
  }
  if (!o.has("duration")) throw rce::InvalidInput("--duration is required");
  std::vector<int> frame;
  if (o.has("frame"))
    for (double x : numbers(o.get("frame"), "frame")) frame.push_back(static_cast<int>(x));
  const auto sched = rce::compile_flip_schedule(c, number(o.get("duration"), "duration"), frame);
  for (const auto& e : sched.events)
    for (int q : e.qubits) std::printf("t=%.12g flip C%d\n", e.t, q + 1);
  std::printf("flips=%d\n", sched.flip_count());
  json j = rce::io::to_json(sched);
  j["c"] = rce::io::to_json(c.c);
  emit(o, j);
  return ok;
}

rce::EngineOptions engine_options(const Options& o) {
  rce::EngineOptions e;
  const auto mode = o.has("mode") ? o.get("mode") : "logical";
  if (mode == "physical") e.mode = rce::SimulationMode::physical;
  else if (mode != "logical") throw rce::InvalidInput("mode is logical or physical");
  const auto control = o.has("control") ? o.get("control") : "global";
  if (control == "local") e.control = rce::LogicalControl::local;
  else if (control != "global") throw rce::InvalidInput("control is global or local");
  if (o.has("topology")) {
    if (o.get("topology") == "chain") e.topology = rce::CxTopology::chain;
    else if (o.get("topology") != "star") throw rce::InvalidInput("topology is star or chain");
  }
  if (o.has("seed")) e.seed = static_cast<std::uint64_t>(integer(o.get("seed"), "seed"));
  if (o.has("forced"))
    for (double x : numbers(o.get("forced"), "forced")) {
      if (x != 1 && x != -1) throw rce::InvalidInput("forced outcomes are +1 or -1");
      e.forced_outcomes.push_back(static_cast<int>(x));
    }
  if (o.has("field")) e.field_strength = number(o.get("field"), "field");
  if (!(e.field_strength > 0)) throw rce::InvalidInput("field strength must be positive");
  if (o.has("trotter")) e.trotter_steps = static_cast<int>(integer(o.get("trotter"), "trotter"));
  if (o.has("t-v")) e.logical_gate_time = number(o.get("t-v"), "t-v");
  if (o.has("t-m")) e.measurement_time = number(o.get("t-m"), "t-m");
  if (o.get("target-self") == "true" || o.get("target-self") == "1") e.target_self = true;
  e.strategy = strategy_of(o);
  return e;
}

rce::PhaseTable table_of(const Options& o, int n) {
  if (o.has("phases")) {
    const auto v = numbers(o.get("phases"), "phases");
    return rce::phase_table_from_basis_phases(Eigen::Map<const rce::Vec>(v.data(), v.size()));
  }
  // "1:0.3;1,2:0.2"
  rce::PhaseTable t;
  for (const auto& entry : split(o.get("table"), ';')) {
    const auto parts = split(entry, ':');
    if (parts.size() != 2) throw rce::InvalidInput("table entries look like 1,2:0.3");
    t.entries.push_back({indices(parts[0], "table"), number(parts[1], "table phase")});
  }
  if (t.entries.empty()) throw rce::InvalidInput("synthesis needs --phases or --table");
  t.validate(n);
  return t;
}

int cmd_run(const Options& o) {
  const auto layout = layout_of(o);
  const auto opts = engine_options(o);
  const auto protocol = o.get("protocol");
  const int n = layout.num_targets();
  const double tol = 1e-9;
  rce::ProtocolTrace trace;
  std::vector<std::pair<std::string, double>> checks;  // name, fidelity-like value (want 1)
  std::vector<std::pair<std::string, double>> info;
  auto subset = [&](std::vector<int> fallback) { return o.has("subset") ? indices(o.get("subset"), "subset") : fallback; };
  if (protocol == "gate") {
    const auto s = subset({0, 1});
    const double phase = o.has("phase") ? number(o.get("phase"), "phase") : rce::pi / 4;
    trace = rce::gate_sequence_multi_z(layout, s, phase, opts);
    checks.push_back({"fidelity exp(-i phase Z..Z)|+>", rce::verify::target_fidelity(trace.final_state, rce::verify::multi_z_state(n, s, phase))});
  } else if (protocol == "cz") {
    const auto s = subset({0, 1});
    trace = rce::measurement_cz(layout, s, opts);
    checks.push_back({"fidelity CZ clique", rce::verify::target_fidelity(trace.final_state, rce::verify::cz_clique_state(n, s))});
  } else if (protocol == "graph") {
    const auto edges = edge_list(o.has("edges") ? o.get("edges") : "1-2");
    trace = rce::graph_state_prep(layout, edges, opts);
    const auto logical = trace.final_state;
    const rce::CVec g = rce::verify::graph_state(n, edges);
    checks.push_back({"fidelity graph state", rce::verify::target_fidelity(logical, g)});
    // C ends in |0>, so the S block is the first half of the register.
    const rce::CVec s = logical.amplitudes().head(Eigen::Index(1) << n);
    const auto ks = rce::verify::stabilizer_expectations(s, n, edges);
    for (std::size_t k = 0; k < ks.size(); ++k) checks.push_back({"stabilizer " + std::to_string(k + 1), ks[k]});
  } else if (protocol == "ghz") {
    std::vector<int> q(n);
    for (int j = 0; j < n; ++j) q[j] = j;
    q = subset(q);
    trace = rce::df_ghz_prep(layout, q, opts);
    checks.push_back({"fidelity GHZ(s-bar)", rce::verify::target_fidelity(trace.final_state, rce::verify::ghz_state(n, q, trace.frame_record))});
  } else if (protocol == "rotation") {
    const auto s = subset({0, 1});
    if (s.size() != 2) throw rce::InvalidInput("rotation needs a pair");
    const double phi = o.has("phase") ? number(o.get("phase"), "phase") : rce::pi / 4;
    trace = rce::control_rotation_entangler(layout, {s[0], s[1]}, phi, opts);
    checks.push_back({"fidelity exp(-i phi ZZ)|+>", rce::verify::target_fidelity(trace.final_state, rce::verify::multi_z_state(n, s, phi))});
  } else if (protocol == "rotation3") {
    const auto s = subset({0, 1, 2});
    trace = rce::control_rotation_three_qubit(layout, s, opts);
    rce::PhaseTable t{{{{s[0], s[1]}, rce::pi / 4}, {{s[1], s[2]}, rce::pi / 4}, {{s[0], s[2]}, rce::pi / 4}}};
    checks.push_back({"fidelity three-qubit GHZ class", rce::verify::target_fidelity(trace.final_state, rce::verify::phase_table_state(n, t))});
  } else if (protocol == "bell") {
    const auto s = subset({0, 1});
    if (s.size() != 2) throw rce::InvalidInput("bell needs a pair");
    trace = rce::alternating_pattern_bell(layout, {s[0], s[1]}, opts);
    rce::CVec v = rce::CVec::Zero(Eigen::Index(1) << n);
    const rce::cplx I(0, 1);
    for (Eigen::Index b = 0; b < v.size(); ++b) {
      const int bi = (b >> (n - 1 - s[0])) & 1, bj = (b >> (n - 1 - s[1])) & 1;
      // (|0 0_y> - i |1 1_y>)/sqrt2, |0_y> = (|0> + i|1>)/sqrt2, |1_y> = (|0> - i|1>)/sqrt2
      const rce::cplx yj0 = bj ? I : 1.0, yj1 = bj ? -I : 1.0;
      v(b) = (bi == 0 ? yj0 : -I * yj1) * 0.5 * std::pow(2.0, -(n - 2) / 2.0);
    }
    checks.push_back({"fidelity alternating-pattern Bell state", rce::verify::target_fidelity(trace.final_state, v)});
  } else if (protocol == "commutator") {
    const auto lam = numbers(o.has("lambda") ? o.get("lambda") : "1,0.5", "lambda");
    const auto mu = numbers(o.has("mu") ? o.get("mu") : "0.5,1", "mu");
    const double t = o.has("time") ? number(o.get("time"), "time") : 0.1;
    const int k = o.has("cycles") ? static_cast<int>(integer(o.get("cycles"), "cycles")) : 1000;
    const rce::InteractionPattern L(Eigen::Map<const rce::Vec>(lam.data(), lam.size()));
    const rce::InteractionPattern M(Eigen::Map<const rce::Vec>(mu.data(), mu.size()));
    trace = rce::commutator_three_body(layout, L, M, t, k, opts);
    const double J = rce::commutator_effective_coupling(trace.final_state, t);
    info.push_back({"effective coupling", J});
    info.push_back({"expected 2(l1 m2 + l2 m1)", 2 * (lam.at(0) * mu.at(1) + lam.at(1) * mu.at(0))});
  } else if (protocol == "cancel") {
    const double T = o.has("time") ? number(o.get("time"), "time") : 100.0;
    trace = rce::self_interaction_cancellation(layout, T, opts);
    checks.push_back({"fidelity |+>^n after H^S", rce::verify::target_fidelity(trace.final_state, rce::verify::plus_state(n))});
  } else if (protocol == "synthesis") {
    const auto table = table_of(o, n);
    trace = rce::diagonal_state_synthesis(layout, table, opts);
    checks.push_back({"fidelity diagonal state", rce::verify::target_fidelity(trace.final_state, rce::verify::phase_table_state(n, table))});
  } else if (protocol == "heisenberg") {
    const auto F = rce::build_coupling_matrix(layout).F.transpose().eval();
    const double t = o.has("time") ? number(o.get("time"), "time") : 1.0;
    const int k = o.has("cycles") ? static_cast<int>(integer(o.get("cycles"), "cycles")) : 64;
    auto r = rce::heisenberg_to_zz({F, F, F}, t, k);
    trace = r.trace;
    info.push_back({"residual", r.residual});
  } else {
    throw rce::InvalidInput("unknown protocol '" + protocol +
                            "' (gate, cz, graph, ghz, rotation, rotation3, bell, commutator, cancel, synthesis, heisenberg)");
  }
  const auto ledger = rce::flip_budget(trace);
  bool pass = ledger.all_ok();
  json j = rce::io::to_json(trace);
  j["checks"] = json::array();
  std::printf("protocol %s: time %.12g, flips %d\n", trace.protocol.c_str(), trace.elapsed(), trace.total_flips());
  for (const auto& [name, v] : checks) {
    const bool good = v >= 1.0 - tol;
    pass = pass && good;
    std::printf("check %-40s %.12f %s\n", name.c_str(), v, good ? "pass" : "FAIL");
    j["checks"].push_back({{"check", name}, {"value", v}, {"pass", good}});
  }
  for (const auto& [name, v] : info) {
    std::printf("%-46s %.12g\n", name.c_str(), v);
    j["values"][name] = v;
  }
  std::printf("resource ledger %s\n", ledger.all_ok() ? "pass" : "FAIL");
  emit(o, j);
  return pass ? ok : acceptance_failure;
}

rce::NoiseMethod noise_method(const Options& o) {
  const auto est = o.has("estimator") ? o.get("estimator") : "quadrature";
  if (est == "quadrature") {
    const int p = o.has("points") ? static_cast<int>(integer(o.get("points"), "points")) : 9;
    if (p < 1 || p > 64) throw rce::InvalidInput("points must lie in 1..64");
    return rce::GaussHermiteMethod{p};
  }
  if (est == "monte-carlo") {
    if (!o.has("seed")) throw rce::InvalidInput("Monte Carlo needs --seed");
    rce::MonteCarloMethod m;
    m.seed = static_cast<std::uint64_t>(integer(o.get("seed"), "seed"));
    if (o.has("samples")) m.samples = integer(o.get("samples"), "samples");
    if (o.has("threads")) m.threads = static_cast<int>(integer(o.get("threads"), "threads"));
    if (m.samples < 2) throw rce::InvalidInput("samples must be at least 2");
    return m;
  }
  throw rce::InvalidInput("estimator is quadrature or monte-carlo");
}

int cmd_noise(const Options& o) {
  const auto scenario = o.has("scenario") ? o.get("scenario") : "cross";
  const double sigma = o.has("sigma") ? number(o.get("sigma"), "sigma") : 0.1;
  rce::NoiseScenario sc = scenario == "cross" ? rce::cross_bell_scenario() : [&] {
    if (scenario.rfind("grid", 0) != 0 || scenario.size() != 5) throw rce::InvalidInput("scenario is cross or grid0..grid3");
    return rce::grid_bell_scenario(scenario[4] - '0', sigma);
  }();
  rce::PositionNoiseModel model{sigma, {}, rce::NoiseCorrelation::per_segment};
  if (o.has("correlation")) {
    if (o.get("correlation") == "static") model.correlation = rce::NoiseCorrelation::static_draw;
    else if (o.get("correlation") != "per-segment") throw rce::InvalidInput("correlation is per-segment or static");
  }
  const auto method = noise_method(o);
  const auto est = rce::noisy_fidelity(sc.protocol, model, rce::bell_target(), {1, 2}, method);
  std::printf("scenario %s sigma %.6g: F = %.6f +- %.6f (%s)\n", sc.label.c_str(), sigma, est.fidelity, est.std_error,
              rce::describe(method).c_str());
  json j = rce::io::to_json(est);
  j["config"] = {{"scenario", scenario}, {"sigma", sigma}, {"correlation", rce::to_string(model.correlation)},
                 {"lambda", sc.lambda}, {"c", rce::io::to_json(sc.c)}};
  emit(o, j);
  if (o.has("csv"))
    rce::io::write_file(o.get("csv"), "scenario,sigma,fidelity,std_error,method\n" + scenario + "," +
                                          rce::io::csv_number(sigma) + "," + rce::io::csv_number(est.fidelity) + "," +
                                          rce::io::csv_number(est.std_error) + ",\"" + rce::describe(method) + "\"\n");
  return ok;
}

int cmd_reproduce(const Options& o) {
  std::vector<std::string> ids = split(o.get("id"), ',');
  if (ids.empty() || (ids.size() == 1 && ids[0] == "all")) ids = rce::table_ids();
  rce::ReproduceOptions ro;
  if (o.has("points")) ro.quadrature_points = static_cast<int>(integer(o.get("points"), "points"));
  if (o.has("samples")) {
    rce::MonteCarloMethod m;
    m.samples = integer(o.get("samples"), "samples");
    m.seed = o.has("seed") ? static_cast<std::uint64_t>(integer(o.get("seed"), "seed")) : 1;
    if (!o.has("seed")) throw rce::InvalidInput("Monte Carlo cross-check needs --seed");
    ro.monte_carlo = m;
  }
  bool pass = true;
  json all = json::array();
  std::string csv;
  for (const auto& id : ids) {
    const auto r = rce::reproduce_table(id, ro);
    std::printf("%s: %s\n", id.c_str(), r.pass() ? "pass" : "FAIL");
    for (const auto& row : r.rows)
      std::printf("  %-40s computed %.6f published %.6f dev %+.2e %s\n", row.label.c_str(), row.computed,
                  row.published, row.deviation(), row.pass() ? "pass" : "FAIL");
    for (const auto& [name, good] : r.checks) std::printf("  %-40s %s\n", name.c_str(), good ? "pass" : "FAIL");
    pass = pass && r.pass();
    all.push_back(rce::io::to_json(r));
    const auto part = rce::io::to_csv(r);
    csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
  }
  emit(o, all);
  if (o.has("csv")) rce::io::write_file(o.get("csv"), csv);
  return pass ? ok : acceptance_failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote control of target spins through a mediating control register"};
  app.require_subcommand(1);
  Options o;
  auto opt = [&](CLI::App* sub, const std::string& name, const std::string& help) {
    o[name];
    sub->add_option("--" + name, o[name], help);
  };
  auto common = [&](CLI::App* sub) {
    opt(sub, "preset", "preset layout (see list-presets)");
    opt(sub, "layout", "layout JSON file {controls, targets, J, alpha}");
    opt(sub, "config", "JSON file; its keys override flags of the same name");
    opt(sub, "json", "write JSON output to this path (- for stdout)");
  };
  auto* list = app.add_subcommand("list-presets", "list built-in layouts");
  opt(list, "json", "write JSON output to this path (- for stdout)");
  o["config"];

  auto* solve = app.add_subcommand("solve", "subspace vector for an interaction pattern");
  common(solve);
  opt(solve, "pattern", "target pattern, comma separated (one entry per target)");
  opt(solve, "strategy", "max-coupling (default) or min-norm");
  opt(solve, "method", "point (default), taylor or discretized");
  opt(solve, "order", "Taylor order (default 1)");
  opt(solve, "sigma", "virtual-qubit distance for discretized regions");
  opt(solve, "duration", "also compile a flip schedule of this length");

  auto* flips = app.add_subcommand("compile-flips", "flip schedule for a subspace vector");
  common(flips);
  opt(flips, "c", "subspace vector, entries in [-1, 1]");
  opt(flips, "pattern", "solve this pattern instead of giving --c");
  opt(flips, "strategy", "max-coupling or min-norm");
  opt(flips, "method", "point, taylor or discretized");
  opt(flips, "order", "Taylor order");
  opt(flips, "sigma", "virtual-qubit distance");
  opt(flips, "duration", "segment length");
  opt(flips, "frame", "current frame, +1/-1 per control");

  auto* run = app.add_subcommand("run", "run a protocol and check it against its closed-form target");
  common(run);
  for (auto [name, help] : std::vector<std::pair<const char*, const char*>>{
           {"protocol", "gate, cz, graph, ghz, rotation, rotation3, bell, commutator, cancel, synthesis, heisenberg"},
           {"subset", "target qubits, 1-based"},
           {"edges", "graph edges, e.g. 1-2,2-3"},
           {"phase", "rotation angle / entangling phase"},
           {"mode", "logical (default) or physical"},
           {"control", "global (default) or local"},
           {"topology", "star (default) or chain CX layout"},
           {"seed", "RNG seed for measurements"},
           {"forced", "forced measurement outcomes, e.g. 1,-1"},
           {"field", "X-rotation field strength (default 1)"},
           {"trotter", "Trotter steps for control rotations"},
           {"t-v", "logical gate time override"},
           {"t-m", "measurement time"},
           {"target-self", "true to keep H^S on"},
           {"strategy", "max-coupling or min-norm"},
           {"lambda", "commutator: first pattern"},
           {"mu", "commutator: second pattern"},
           {"time", "commutator / heisenberg evolution time, cancel window T"},
           {"cycles", "commutator / heisenberg step count"},
           {"phases", "synthesis: 2^n basis phases"},
           {"table", "synthesis: subset:phase entries, e.g. 1,2:0.3;3:0.1"}})
    opt(run, name, help);

  auto* noise = app.add_subcommand("noise", "fidelity under Gaussian target-position noise");
  opt(noise, "config", "JSON file; its keys override flags");
  opt(noise, "json", "write JSON output");
  opt(noise, "csv", "write CSV output");
  opt(noise, "scenario", "cross (default) or grid0..grid3");
  opt(noise, "sigma", "position standard deviation");
  opt(noise, "estimator", "quadrature (default) or monte-carlo");
  opt(noise, "points", "quadrature points per axis (default 9)");
  opt(noise, "samples", "Monte Carlo samples (default 100000)");
  opt(noise, "seed", "Monte Carlo seed");
  opt(noise, "threads", "Monte Carlo worker threads");
  opt(noise, "correlation", "per-segment (default) or static");

  auto* repro = app.add_subcommand("reproduce", "compare against published values");
  o["id"];
  repro->add_option("id", o["id"], "appG, appH, table1, table2, table3 or all (comma separated)");
  opt(repro, "config", "JSON file; its keys override flags");
  opt(repro, "json", "write JSON report");
  opt(repro, "csv", "write CSV report");
  opt(repro, "points", "quadrature points per axis (default 15)");
  opt(repro, "samples", "add a Monte Carlo cross-check to table1");
  opt(repro, "seed", "Monte Carlo seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return config_error;
  }
  try {
    apply_config(o);
    if (*list) return cmd_list_presets(o);
    if (*solve) return cmd_solve(o);
    if (*flips) return cmd_compile_flips(o);
    if (*run) return cmd_run(o);
    if (*noise) return cmd_noise(o);
    if (*repro) return cmd_reproduce(o);
  } catch (const rce::CapacityExceeded& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return resource_cap;
  } catch (const rce::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config_error;
  }
  return ok;
}
