#pragma once

#include "homoflow/measure.hpp"

namespace homoflow {

// A structure composed over a quotient: one class structure per quotient
// vertex, cross-class arcs dictated entirely by the quotient.
struct CompositeStructure {
  FiniteStructure quotient;
  std::vector<FiniteStructure> classes;

  bool operator==(const CompositeStructure&) const = default;
  int total_vertices() const;
};

json composite_to_json(const CompositeStructure& c);
CompositeStructure composite_from_json(const json& j);

// Plain inputs only; Signature on extra fields or an arity mismatch.
CompositeStructure compose(const FiniteStructure& q, const std::vector<FiniteStructure>& parts);

// Disjoint union in class order; the class index is stored in parts.
FiniteStructure flatten(const CompositeStructure& c);

// Inverse of flatten, classes read off the parts field in ascending label
// order; NotACongruence when cross-class arcs are not class-uniform.
CompositeStructure unflatten(const FiniteStructure& s);
FiniteStructure quotient_structure(const FiniteStructure& s);

// comp(K,L) membership: quotient in K, every class in L.
bool validate_composite(const ClassSpec& comp_spec, const CompositeStructure& c);

// A quotient expansion paired with one expansion per class.
struct ProductExpansion {
  Expansion quotient;
  std::vector<Expansion> parts;

  bool operator==(const ProductExpansion&) const = default;
};

std::vector<ProductExpansion> enumerate_product_expansions(const ClassSpec& comp_spec,
                                                           const CompositeStructure& c);

// Single expansion of the flattening: classes follow the quotient order,
// vertices within a class follow the part order. Order-only factors.
Expansion product_to_expansion(const CompositeStructure& c, const ProductExpansion& pe);

// Pullback along a class-respecting embedding of flattenings.
ProductExpansion restrict_product(const CompositeStructure& big, const ProductExpansion& pe,
                                  const VertexMap& emb, const CompositeStructure& small);

// nu weighs class expansions, mu the quotient expansion; the value is the
// plain product. IncompleteMeasure when a factor weight is missing.
Rat product_measure_eval(const RandomExpansionMeasure& nu, const RandomExpansionMeasure& mu,
                         const CompositeStructure& s, const ProductExpansion& s_star);

// Product-measure analogues of (P) and (E).
bool composite_measure_P(const ClassSpec& comp_spec, const RandomExpansionMeasure& nu,
                         const RandomExpansionMeasure& mu, const CompositeStructure& c);
bool composite_measure_E(const ClassSpec& comp_spec, const RandomExpansionMeasure& nu,
                         const RandomExpansionMeasure& mu, const CompositeStructure& small,
                         const CompositeStructure& big, const VertexMap& emb);

// ---- constructive automorphism-extension lift ------------------------------

using PartialIso = std::vector<std::pair<int, int>>;

struct ExtensionWitness {
  FiniteStructure ambient;
  VertexMap inclusion;           // domain structure -> ambient
  std::vector<VertexMap> autos;  // one ambient automorphism per partial iso
};

// Disjoint union of the parts; when the plain union leaves the class, arcs
// from earlier to later summands are added. Throws Unsupported when neither
// candidate is a member.
FiniteStructure jep_merge(const ClassSpec& lspec, const std::vector<FiniteStructure>& parts,
                          std::vector<VertexMap>& inclusions);

struct ProductLiftInput {
  FiniteStructure d_ambient;               // extends the quotient
  VertexMap q_inclusion;                   // quotient -> d_ambient
  std::vector<VertexMap> q_autos;          // per partial iso
  FiniteStructure t_ambient;               // common target of every class
  std::vector<VertexMap> part_inclusions;  // class i -> t_ambient
  // per partial iso: ambient quotient vertex -> automorphism of t_ambient;
  // missing keys default to the identity
  std::vector<std::map<int, VertexMap>> t_autos;
};

// Builds the composite of d_ambient with t_ambient blown up at every vertex,
// and per-iso automorphisms acting by the quotient witness across blocks and
// the part witnesses inside them. WitnessMismatch when the supplied pieces
// fail to extend the projections of the partial isos.
ExtensionWitness hrushovski_product_lift(const CompositeStructure& s,
                                         const std::vector<PartialIso>& partial_isos,
                                         const ProductLiftInput& in);

}  // namespace homoflow
