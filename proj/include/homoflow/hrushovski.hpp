#pragma once

#include <optional>

#include "homoflow/structures.hpp"

namespace homoflow {

// A finite system of partial isomorphisms over one ambient structure. Each
// map has length ambient.n with -1 marking vertices outside its domain; the
// defined entries must form an isomorphism between the induced substructures.
struct PartialIsoSystem {
  FiniteStructure ambient;
  std::vector<std::vector<int>> maps;
};

// Throws unless the ambient belongs to the class and every map is a partial
// isomorphism of it.
void validate_system(const PartialIsoSystem& sys, const ClassSpec& spec);

json system_to_json(const PartialIsoSystem& sys);
PartialIsoSystem system_from_json(const json& j);

struct ExtensionWitness {
  FiniteStructure witness;               // class member containing the ambient
  VertexMap embedding;                   // ambient into witness
  std::vector<VertexMap> automorphisms;  // one per map, each extending it
};

// Bounded search for a member in which every map of the system extends to a
// full automorphism. Exhaustive over isomorphism types up to size_bound and
// deterministic (members by size then canonical form, embeddings and
// automorphism completions in lexicographic order), so equal inputs return
// the identical witness. An empty result certifies only that no witness of
// size <= size_bound exists, never that the class lacks the property.
std::optional<ExtensionWitness> extend_partial_isos(const PartialIsoSystem& sys,
                                                    const ClassSpec& spec, int size_bound);

// Cross-check of the two amenability routes on a deterministic sample of
// small systems: if every sampled system extends within the bound but the
// expansion-density criterion fails, something is wrong (extension witnesses
// imply invariant measures). The converse direction carries no signal at a
// finite bound, so it is recorded without judgement.
struct HrushovskiReport {
  std::string class_tag;
  int bound = 0;
  long systems = 0;
  long extended = 0;
  bool all_extended = false;
  bool density_pass = false;
  bool divergence = false;
};

HrushovskiReport hrushovski_implies_uniform_ok(const ClassSpec& spec, int size_bound);

}  // namespace homoflow
