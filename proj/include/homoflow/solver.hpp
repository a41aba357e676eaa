#pragma once

#include "homoflow/measure.hpp"

namespace homoflow {

struct FragmentEmbedding {
  int from = -1;
  int to = -1;
  VertexMap map;

  bool operator==(const FragmentEmbedding&) const = default;
};

// A finite family of age members closed under substructures up to isomorphism,
// with one embedding representative per orbit under both automorphism groups.
struct Fragment {
  ClassSpec spec;
  std::vector<FiniteStructure> structures;
  std::vector<FragmentEmbedding> embeddings;
};

// Keeps the given members verbatim in order (exact duplicates dropped), then
// appends one representative per isomorphism class of proper substructure and
// selects embedding representatives for every pair.
Fragment build_fragment(const ClassSpec& spec, const std::vector<FiniteStructure>& tops);

void validate_fragment(const Fragment& frag);

enum class RowKind { Sum, Ext, Iso };

// One linear constraint over expansion weights:
//   Sum: the weights of `structure` add to one.
//   Ext: weight `lhs` equals the sum of `vars`, the expansions of the
//        embedding's codomain restricting to it along the stored map.
//   Iso: weights `lhs` and `rhs` agree; `iso` carries one expansion to the
//        other.
struct Row {
  RowKind kind = RowKind::Sum;
  int structure = -1;
  int emb = -1;
  int lhs = -1;
  int rhs = -1;
  std::vector<int> vars;
  VertexMap iso;
};

// Variables are (structure, expansion) pairs flattened in enumeration order.
struct LinearSystem {
  Fragment frag;
  std::vector<std::vector<Expansion>> expansions;
  std::vector<int> var_base;
  int num_vars = 0;
  std::vector<Row> rows;

  int var(int s, int e) const { return var_base[s] + e; }
  int var_structure(int v) const;
  int var_expansion(int v) const;
};

LinearSystem build_constraints(const ClassSpec& spec, const Fragment& frag);

// Infeasibility conclusions, in the order the engine prefers them:
//   forced_zero — a forcing chain drives some weights to zero, contradicting
//                 non-degeneracy;
//   value_clash — one weight is pinned to two different values;
//   farkas      — a signed combination of rows proves emptiness outright.
struct SolveResult {
  bool feasible = false;
  RandomExpansionMeasure measure;  // set when feasible
  json certificate;                // set when infeasible
};

SolveResult solve_feasibility(const LinearSystem& sys);

// Exact bounds of one coordinate over the feasible region.
struct CoordinateRange {
  Rat lo, hi;
};
CoordinateRange coordinate_range(const LinearSystem& sys, int var);

// Batch form sharing one propagation pass and one feasibility phase.
std::vector<CoordinateRange> coordinate_ranges(const LinearSystem& sys,
                                               const std::vector<int>& vars);

// Re-derives every certificate row by enumeration and replays the conclusion;
// throws Error(Step, index) at the first broken step.
void replay_certificate(const json& cert, const ClassSpec& spec);
bool verify_certificate(const json& cert, const ClassSpec& spec);

struct DensityResult {
  bool pass = true;
  FiniteStructure big;      // member with unequal relative counts
  std::vector<int> subset;  // vertex subset inducing the small structure
  Expansion first, second;  // small expansions with different counts
  long first_count = 0;
  long second_count = 0;
};

// Exhaustively checks, for every member b within the bound and every induced
// substructure, that all expansions of the substructure extend to b in equally
// many ways.
DensityResult check_density_criterion(const ClassSpec& spec, int size_bound);

// Cofinality of the family within the bound, plus pairwise isomorphism of each
// family member's expansions.
bool check_cofinal_isomorphism(const ClassSpec& spec,
                               const std::vector<FiniteStructure>& family, int size_bound);

}  // namespace homoflow
