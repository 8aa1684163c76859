#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rce/simulator.hpp"

namespace rce {

// Which budget a flip is charged to.
enum class FlipCategory { none, subspace, initialization, logical_gate, correction, decoupling, reset };

inline const char* to_string(FlipCategory c) {
  switch (c) {
    case FlipCategory::none: return "none";
    case FlipCategory::subspace: return "subspace";
    case FlipCategory::initialization: return "initialization";
    case FlipCategory::logical_gate: return "logical_gate";
    case FlipCategory::correction: return "correction";
    case FlipCategory::decoupling: return "decoupling";
    case FlipCategory::reset: return "reset";
  }
  return "none";
}

struct TraceStep {
  std::string kind;  // couple, logical_gate, prepare, measure, correction, reset, wait, evolve
  std::string label;
  double duration = 0.0;
  int flips = 0;
  FlipCategory category = FlipCategory::none;
  std::optional<int> outcome;
  std::vector<double> c;        // subspace vector for couple steps
  std::vector<double> pattern;  // realized lambda for couple steps
};

struct ProtocolTrace {
  std::string protocol;
  int num_controls = 1;  // physical N (1 in logical mode)
  int num_targets = 0;
  int edges = 0;         // graph protocols
  bool full_synthesis = false;
  std::vector<TraceStep> steps;
  std::vector<std::string> notes;
  PureState final_state;
  std::map<std::string, double> values;  // protocol-specific outputs (phase, omega, tau, ...)
  std::vector<int> frame_record;         // df_ghz: recorded s-bar

  double elapsed() const {
    double t = 0.0;
    for (const auto& s : steps) t += s.duration;
    return t;
  }
  int flips(FlipCategory c) const {
    int k = 0;
    for (const auto& s : steps)
      if (s.category == c) k += s.flips;
    return k;
  }
  int total_flips() const {
    int k = 0;
    for (const auto& s : steps) k += s.flips;
    return k;
  }
  std::vector<int> outcomes() const {
    std::vector<int> o;
    for (const auto& s : steps)
      if (s.outcome) o.push_back(*s.outcome);
    return o;
  }
  double duration_of(const std::string& kind) const {
    double t = 0.0;
    for (const auto& s : steps)
      if (s.kind == kind) t += s.duration;
    return t;
  }
  void append(const ProtocolTrace& o) {
    steps.insert(steps.end(), o.steps.begin(), o.steps.end());
    notes.insert(notes.end(), o.notes.begin(), o.notes.end());
  }
};

}  // namespace rce
