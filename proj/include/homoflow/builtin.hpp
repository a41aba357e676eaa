#pragma once

#include "homoflow/solver.hpp"

namespace homoflow {

// Curated fragments whose constraint systems are infeasible, each bundled
// with the conclusion the solver is expected to reach.
struct BuiltinFragment {
  enum class Outcome { ForcedZero, ValueClash };

  std::string id;
  std::string name;  // display form, e.g. "S(2)"
  ClassSpec spec;
  std::vector<FiniteStructure> tops;
  Outcome outcome = Outcome::ForcedZero;
  int zero_structure = -1;   // index into the built fragment (ForcedZero)
  Expansion zero_expansion;  // the expansion whose weight is forced to zero
  std::vector<Rat> clash_values;  // the two pinned values (ValueClash)
};

std::vector<std::string> builtin_fragment_ids();

// Accepts an id, optionally with a dash-suffixed qualifier ("p3-small").
// Unknown ids raise Error(Param).
BuiltinFragment builtin_fragment(const std::string& id);

}  // namespace homoflow
