#pragma once

#include <functional>

#include "homoflow/structures.hpp"

namespace homoflow {

// A precompact expansion of an age member: the optional fields a class adds on
// top of the plain arc structure.
struct Expansion {
  FiniteStructure base;
  std::vector<int> order;    // vertices from least to greatest, when the class adds an order
  std::vector<int> labels;   // per-vertex labels, when the class adds parts
  std::vector<uint64_t> R;   // auxiliary pair relation, when the class adds one

  bool operator==(const Expansion&) const = default;

  bool has_R() const { return !R.empty(); }
  bool R_rel(int i, int j) const {
    int w = (base.n + 63) / 64;
    return (R[size_t(i) * w + (j >> 6)] >> (j & 63)) & 1;
  }
  void set_R(int i, int j) {
    ensure_R();
    int w = (base.n + 63) / 64;
    R[size_t(i) * w + (j >> 6)] |= 1ull << (j & 63);
  }
  // R distinguishes "present but empty" from "absent" via allocation
  void ensure_R() {
    int w = (base.n + 63) / 64;
    if (R.empty()) R.assign(size_t(base.n) * w, 0);
  }
};

json expansion_to_json(const Expansion& e);
Expansion expansion_from_json(const json& j);

// Single structure carrying base arcs plus all expansion fields; the working
// representation for expansion-level embeddings and isomorphism.
FiniteStructure to_structure(const Expansion& e);

std::vector<Expansion> enumerate_expansions(const ClassSpec& spec, const FiniteStructure& a);
void for_each_expansion(const ClassSpec& spec, const FiniteStructure& a,
                        const std::function<void(const Expansion&)>& fn);
Int count_expansions(const ClassSpec& spec, const FiniteStructure& a);

bool validate_expansion(const ClassSpec& spec, const Expansion& e);

// Pullback of a big expansion along an embedding of plain structures.
Expansion restrict_expansion(const Expansion& big, const VertexMap& emb,
                             const FiniteStructure& small_base);

// Number of b-expansions restricting to a_star along emb.
long count_relative_expansions(const ClassSpec& spec, const Expansion& a_star,
                               const FiniteStructure& b, const VertexMap& emb);

// Closed-form totals and relative counts, where the class admits one.
Int closed_form_total(const ClassSpec& spec, const FiniteStructure& a);
Int closed_form_count(const ClassSpec& spec, const FiniteStructure& a, const FiniteStructure& b);

// Parity completion: two non-adjacent pairs with three of the four cross arcs
// decided; returns the oriented fourth arc restoring evenness.
std::pair<int, int> complete_fourth_edge(const FiniteStructure& partial);

// Extends a parity-class member by one transversal vertex per column, joined
// in the given column order; free cross arcs are drawn from the seed.
FiniteStructure amalgamate_transversal(const FiniteStructure& a,
                                       const std::vector<int>& column_order, uint64_t seed);

// Collapse a fully-doubled ordered+labelled cover to an ordered tournament,
// and rebuild the canonical cover of an ordered tournament.
FiniteStructure delta(const Expansion& cover);
Expansion delta_inverse(const FiniteStructure& ordered_tournament);

// The unique base automorphism carrying one cover expansion to another
// (both over the same fully-doubled base); throws Embedding if none exists.
VertexMap qhat_expansion_iso(const Expansion& e1, const Expansion& e2);

struct ExpansionPropertyResult {
  bool found = false;
  FiniteStructure witness;  // meaningful when found
};

// Smallest member b (up to size_bound) such that every expansion of b
// contains a copy of every expansion of a.
ExpansionPropertyResult bounded_expansion_property_search(const ClassSpec& spec,
                                                          const FiniteStructure& a,
                                                          int size_bound);

}  // namespace homoflow
