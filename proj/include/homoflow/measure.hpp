#pragma once

#include <map>

#include "homoflow/expansions.hpp"

namespace homoflow {

// Probability weights over the expansions of finitely many structures.
// Entries are keyed by canonical form; each weight vector follows the
// enumeration order of the stored representative's expansions.
struct RandomExpansionMeasure {
  ClassSpec spec;

  struct Entry {
    FiniteStructure rep;
    std::vector<Rat> weights;
  };
  std::map<std::string, Entry> entries;

  bool has(const FiniteStructure& s) const;

  // Weight of an expansion of s, for s isomorphic to a stored representative;
  // throws IncompleteMeasure when s or the expansion is not covered.
  Rat weight_of(const FiniteStructure& s, const Expansion& e) const;
};

RandomExpansionMeasure uniform_measure(const ClassSpec& spec,
                                       const std::vector<FiniteStructure>& structures);

// (P): each weight vector sums to one.
bool measure_satisfies_P(const RandomExpansionMeasure& m);
// (I): expansions isomorphic over the same base get equal weight.
bool measure_satisfies_I(const RandomExpansionMeasure& m);
// Non-degeneracy: every weight strictly positive.
bool measure_positive(const RandomExpansionMeasure& m);
// (E) along one embedding: the weight of each small expansion equals the sum
// of the weights of the big expansions restricting to it.
bool measure_satisfies_E(const RandomExpansionMeasure& m, const FiniteStructure& a,
                         const FiniteStructure& b, const VertexMap& emb);

}  // namespace homoflow
