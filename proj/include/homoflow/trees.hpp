#pragma once

#include <array>
#include <vector>

#include "homoflow/structures.hpp"

namespace homoflow {

// Rooted tree in which every node has at most two children.  Serialized as a
// parent array: parents[i] is the parent node of i, -1 for the root.
struct RootedBinaryTree {
  std::vector<int> parents;
  int root = 0;

  bool operator==(const RootedBinaryTree&) const = default;
  int size() const { return int(parents.size()); }
};

void validate_tree(const RootedBinaryTree& t);
RootedBinaryTree tree_from_json(const json& j);
json tree_to_json(const RootedBinaryTree& t);

std::vector<std::vector<int>> tree_children(const RootedBinaryTree& t);
int tree_level(const RootedBinaryTree& t, int node);
// Terminal nodes in canonical DFS order (children visited by canonical
// subtree encoding, so isomorphic trees list their leaves compatibly).
std::vector<int> tree_leaves(const RootedBinaryTree& t);

// Terminal nodes of a tree together with the ternary separation relation:
// rel(x, y, z) holds when x, y, z are distinct and the path from x to the
// root is disjoint from the path from y to z.  The relation is symmetric in
// (y, z); triples are stored with y < z.
struct LeafStructure {
  int n = 0;
  std::vector<std::array<int, 3>> triples;

  bool operator==(const LeafStructure&) const = default;
  bool rel(int x, int y, int z) const;
  void add(int x, int y, int z);
};

void validate_leaf_structure(const LeafStructure& ls);
LeafStructure leaf_structure_from_json(const json& j);
json leaf_structure_to_json(const LeafStructure& ls);

// Leaves are numbered in canonical DFS order of the tree.
LeafStructure tree_to_leaf_structure(const RootedBinaryTree& t);

// The unique fewest-node tree realizing a leaf structure, together with the
// tree node carrying each structure vertex.  Throws Error(Validation) when no
// tree realizes the triples.
struct MinimalTreeResult {
  RootedBinaryTree tree;
  std::vector<int> leaf_node;  // leaf_node[v] = node of vertex v
};
MinimalTreeResult minimal_tree(const LeafStructure& ls);
int internal_node_count(const RootedBinaryTree& t);

// Orders are vertex sequences, first to last.  A convex order must keep the
// leaf set of every subtree contiguous: rel(x,y,z) forces x before both y,z
// or after both.  enumerate_convex_orders walks the minimal tree and emits
// one order per left/right choice at each internal node (2^b orders);
// brute_force_convex_orders filters all n! orders as an independent check.
bool order_is_convex(const LeafStructure& ls, const std::vector<int>& order);
std::vector<std::vector<int>> enumerate_convex_orders(const LeafStructure& ls);
std::vector<std::vector<int>> brute_force_convex_orders(const LeafStructure& ls);

// Complete binary tree of depth n in heap layout.
RootedBinaryTree build_nice_tree(int n);
// True when every terminal node sits at level n and there are 2^n of them.
bool is_nice(const RootedBinaryTree& t, int n);

// Induced-substructure embedding search between leaf structures.
bool leaf_embeds(const LeafStructure& a, const LeafStructure& b);
// True when the automorphism group acts transitively on convex orders, i.e.
// all convex expansions are pairwise isomorphic.
bool convex_orders_pairwise_isomorphic(const LeafStructure& ls);

// All leaf structures with at most max_leaves vertices, one per isomorphism
// class, ordered by (size, canonical encoding).
std::vector<LeafStructure> enumerate_leaf_structures(int max_leaves);
// All trees with at most max_nodes nodes, one per isomorphism class
// (single-child nodes allowed).
std::vector<RootedBinaryTree> enumerate_trees(int max_nodes);

// Cofinality + rigidity check for the leaf-structure age: every structure
// with at most leaf_bound leaves embeds into a family member, and every
// family member's convex expansions are pairwise isomorphic.
bool check_cofinal_isomorphism_leaf(const std::vector<LeafStructure>& family,
                                    int leaf_bound);

// Equidistribution witness for an ordered leaf structure (a, base_order):
// a big leaf structure with its own linear order, plus one embedding per
// convex order of a, such that every convex order of the big structure is
// respected by exactly one embedding.
struct OhQopWitness {
  LeafStructure big;
  std::vector<int> base_order;         // linear order on big, all embeddings preserve base_order of a
  std::vector<VertexMap> embeddings;   // |embeddings| = number of convex orders of a
};
OhQopWitness build_oh_qop_witness(const LeafStructure& a,
                                  const std::vector<int>& a_base_order,
                                  const std::vector<std::vector<int>>& convex_list);

}  // namespace homoflow
