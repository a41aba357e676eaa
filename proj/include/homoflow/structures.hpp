#pragma once

#include <optional>
#include <string>
#include <vector>

#include "homoflow/common.hpp"

namespace homoflow {

// A finite binary-relational structure: an irreflexive asymmetric arc relation
// plus three optional fields — vertex parts (exact labels), an auxiliary binary
// relation, and a total order (stored as the vertex list in ascending order).
struct FiniteStructure {
  int n = 0;
  std::vector<uint64_t> adj;    // n rows of ceil(n/64) words; bit j of row i = arc i->j
  std::vector<int> parts;       // size n when present
  std::vector<uint64_t> aux;    // same layout as adj when present
  std::vector<int> order;       // permutation of 0..n-1: vertices from least to greatest

  int words() const { return (n + 63) / 64; }

  bool arc(int i, int j) const { return (adj[size_t(i) * words() + (j >> 6)] >> (j & 63)) & 1; }
  void set_arc(int i, int j) { adj[size_t(i) * words() + (j >> 6)] |= 1ull << (j & 63); }
  void clear_arc(int i, int j) { adj[size_t(i) * words() + (j >> 6)] &= ~(1ull << (j & 63)); }

  bool has_aux() const { return !aux.empty(); }
  bool aux_rel(int i, int j) const { return (aux[size_t(i) * words() + (j >> 6)] >> (j & 63)) & 1; }
  void set_aux(int i, int j) {
    if (aux.empty()) aux.assign(size_t(n) * words(), 0);
    aux[size_t(i) * words() + (j >> 6)] |= 1ull << (j & 63);
  }

  bool has_parts() const { return !parts.empty(); }
  bool has_order() const { return !order.empty(); }

  bool adjacent(int i, int j) const { return arc(i, j) || arc(j, i); }
  bool perp(int i, int j) const { return i != j && !adjacent(i, j); }

  // position of each vertex in the total order (lower = earlier)
  std::vector<int> order_pos() const;

  bool before(int i, int j) const;  // i strictly precedes j in the order

  static FiniteStructure empty(int n);
  FiniteStructure restrict_to(const std::vector<int>& verts) const;
  FiniteStructure apply_perm(const std::vector<int>& p) const;  // vertex v -> p[v]

  bool operator==(const FiniteStructure&) const = default;
};

json structure_to_json(const FiniteStructure& s);
FiniteStructure structure_from_json(const json& j);

// Age / class selector.
struct ClassSpec {
  enum class Kind {
    Tournaments,
    Q,          // transitive tournaments
    S2,
    S3,
    Poset,
    P3,
    Dn,         // param = n
    Domega,
    HatT,
    HatQ,
    SemiGeneric,
    Gn,         // param = n (independence bound)
    FT,         // tournaments omitting `forbidden`
    Composition,
    TreeLeaf,
    OrderedTreeLeaf,
  };

  Kind kind = Kind::Tournaments;
  int param = 0;
  std::vector<FiniteStructure> forbidden;
  std::vector<ClassSpec> sub;  // Composition: {quotient class, part class}

  static ClassSpec parse(const std::string& tag);
  std::string tag() const;
};

// Membership test. Malformed structures raise Error(Validation); a well-formed
// non-member simply returns false.
bool validate_structure(const FiniteStructure& s, const ClassSpec& spec);

// Throws Error(Validation) when the basic invariants are broken.
void check_well_formed(const FiniteStructure& s);

// Classes of the non-adjacency relation (reflexive closure). Classes are
// sorted by minimum element, members ascending. Throws NotAnEquivalence when
// non-adjacency fails to be transitive.
std::vector<std::vector<int>> perp_partition(const FiniteStructure& s);

// ---- maps -----------------------------------------------------------------

using VertexMap = std::vector<int>;  // m[i] = image of vertex i

struct EmbedOpts {
  // When set, the parts field is treated as a partition to be preserved
  // (x,y share a part iff their images do) instead of exact label equality.
  bool parts_as_equivalence = false;
};

// Embeddings preserve and reflect every relation present in BOTH structures;
// a relation present in the domain but absent from the codomain yields no
// embeddings at all.
std::vector<VertexMap> enumerate_embeddings(const FiniteStructure& a, const FiniteStructure& b,
                                            const EmbedOpts& opts = {});
long count_embeddings(const FiniteStructure& a, const FiniteStructure& b,
                      const EmbedOpts& opts = {});
long count_embeddings_parallel(const FiniteStructure& a, const FiniteStructure& b,
                               const EmbedOpts& opts = {});
bool is_embedding(const FiniteStructure& a, const FiniteStructure& b, const VertexMap& m,
                  const EmbedOpts& opts = {});

std::vector<VertexMap> automorphisms(const FiniteStructure& s);

// Brute-force canonical labeling; throws BoundExceeded for n > iso_bound().
int iso_bound();
std::string canonical_form(const FiniteStructure& s);
bool is_isomorphic(const FiniteStructure& a, const FiniteStructure& b);
std::optional<VertexMap> find_isomorphism(const FiniteStructure& a, const FiniteStructure& b);

// Isomorphism representatives of all members with 1..max_n vertices, ordered
// by (size, canonical form). Throws Unsupported for composition/leaf classes.
std::vector<FiniteStructure> enumerate_age_members(const ClassSpec& spec, int max_n);

// Doubles every singleton non-adjacency class with a twist-rule partner.
// orig_of_full[i] = source vertex of full-structure vertex i, or -1 if added.
FiniteStructure hatt_completion(const FiniteStructure& s, std::vector<int>& orig_of_full);

// Recognizes the fully-doubled column pattern of the two-cover of the dense
// linear order; optionally reports a witnessing (position, letter) assignment.
bool hatq_pattern_search(const FiniteStructure& full, std::vector<int>* out_posn,
                         std::vector<int>* out_letter);

}  // namespace homoflow
