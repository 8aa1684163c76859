#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "rce/logical_control.hpp"
#include "rce/noise.hpp"
#include "rce/pattern_solver.hpp"
#include "rce/trace.hpp"

namespace rce::io {

using json = nlohmann::json;

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const CVec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

inline Vec vec_from_json(const json& a) {
  if (!a.is_array()) throw InvalidInput("expected a number array");
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw InvalidInput("expected a number array");
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

inline json to_json(const Layout& l) {
  json j;
  j["dim"] = l.dim();
  j["J"] = l.J();
  j["alpha"] = l.alpha();
  j["controls"] = json::array();
  j["targets"] = json::array();
  for (const auto& p : l.controls()) j["controls"].push_back(to_json(Vec(p)));
  for (const auto& p : l.targets()) j["targets"].push_back(to_json(Vec(p)));
  return j;
}

// {"controls": [[x, y], ...], "targets": [...], "J": 1, "alpha": 1}
inline Layout layout_from_json(const json& j) {
  if (!j.is_object() || !j.contains("controls") || !j.contains("targets"))
    throw InvalidInput("layout JSON needs controls and targets");
  std::vector<Position> c, t;
  for (const auto& p : j.at("controls")) c.push_back(vec_from_json(p));
  for (const auto& p : j.at("targets")) t.push_back(vec_from_json(p));
  for (const auto* list : {&c, &t})
    for (const auto& p : *list)
      if (p.size() == 0) throw InvalidInput("empty position");
  return Layout(c, t, j.value("J", 1.0), j.value("alpha", 1.0));
}

inline Layout load_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open layout file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed layout JSON: ") + e.what());
  }
  return layout_from_json(j);
}

// Events flattened to one entry per qubit flip.
inline json to_json(const FlipSchedule& s) {
  json j;
  j["duration"] = s.duration;
  j["flip_count"] = s.flip_count();
  j["events"] = json::array();
  for (const auto& e : s.events)
    for (int q : e.qubits) j["events"].push_back({{"t", e.t}, {"qubit", q}});
  j["initial_frame"] = s.initial_frame;
  j["terminal_frame"] = s.terminal_frame;
  return j;
}

inline json solve_json(const SubspaceVector& c, const Vec& realized, std::optional<FlipSchedule> sched = {}) {
  json j;
  j["c"] = to_json(c.c);
  j["scale"] = c.scale;
  j["lambda_max"] = 1.0 / c.scale;
  j["pattern"] = to_json(realized);
  if (sched) {
    j["events"] = to_json(*sched)["events"];
    j["duration"] = sched->duration;
  }
  return j;
}

inline json to_json(const ResourceLedger& L) {
  json j{{"N", L.N},
         {"n", L.n},
         {"eta_lambda", L.eta_lambda},
         {"eta_lambda_max_use", L.eta_lambda_max_use},
         {"eta_logical", L.eta_logical},
         {"eta_init_max", L.eta_init_max},
         {"eta_gate_max", L.eta_gate_max},
         {"eta_correction", L.eta_correction},
         {"eta_decoupling", L.eta_decoupling},
         {"lambda_per_use_ok", L.lambda_per_use_ok},
         {"init_ok", L.init_ok},
         {"gate_ok", L.gate_ok},
         {"all_ok", L.all_ok()}};
  if (L.synthesis_ok) j["synthesis_ok"] = *L.synthesis_ok;
  if (L.graph_ok) j["graph_ok"] = *L.graph_ok;
  return j;
}

inline json to_json(const ProtocolTrace& t) {
  json j;
  j["protocol"] = t.protocol;
  j["num_controls"] = t.num_controls;
  j["num_targets"] = t.num_targets;
  j["elapsed"] = t.elapsed();
  j["total_flips"] = t.total_flips();
  j["steps"] = json::array();
  for (const auto& s : t.steps) {
    json x{{"kind", s.kind}, {"label", s.label}, {"duration", s.duration}, {"flips", s.flips},
           {"category", to_string(s.category)}};
    if (s.outcome) x["outcome"] = *s.outcome;
    if (!s.c.empty()) x["c"] = s.c;
    if (!s.pattern.empty()) x["pattern"] = s.pattern;
    j["steps"].push_back(std::move(x));
  }
  j["ledger"] = to_json(flip_budget(t));
  j["notes"] = t.notes;
  j["values"] = t.values;
  if (!t.frame_record.empty()) j["frame_record"] = t.frame_record;
  if (t.final_state.num_qubits() > 0) j["final_state"] = to_json(t.final_state.amplitudes());
  return j;
}

inline json to_json(const NoiseEstimate& e) {
  return {{"fidelity", e.fidelity}, {"std_error", e.std_error}, {"method", describe(e.method)}};
}

inline json to_json(const Report& r) {
  json j;
  j["id"] = r.id;
  j["config"] = r.config;
  j["pass"] = r.pass();
  j["rows"] = json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"label", row.label},
                         {"computed", row.computed},
                         {"published", row.published},
                         {"deviation", row.deviation()},
                         {"tolerance", row.tolerance},
                         {"pass", row.pass()}});
  j["checks"] = json::array();
  for (const auto& [name, ok] : r.checks) j["checks"].push_back({{"check", name}, {"pass", ok}});
  return j;
}

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string to_csv(const Report& r) {
  std::ostringstream out;
  out << "table,label,computed,published,deviation,tolerance,pass\n";
  for (const auto& row : r.rows)
    out << r.id << ",\"" << row.label << "\"," << csv_number(row.computed) << ',' << csv_number(row.published) << ','
        << csv_number(row.deviation()) << ',' << csv_number(row.tolerance) << ',' << (row.pass() ? "pass" : "FAIL")
        << '\n';
  return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path);
  out << content;
}

}  // namespace rce::io
