#include "homoflow/trees.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>

namespace homoflow {

namespace {

std::string subtree_encode(const std::vector<std::vector<int>>& ch, int v) {
  std::vector<std::string> parts;
  for (int c : ch[v]) parts.push_back(subtree_encode(ch, c));
  std::sort(parts.begin(), parts.end());
  std::string out = "(";
  for (auto& p : parts) out += p;
  out += ")";
  return out;
}

std::vector<int> ancestors(const RootedBinaryTree& t, int v) {
  std::vector<int> out;
  for (int u = v; u != -1; u = t.parents[u]) out.push_back(u);
  return out;
}

int lca(const RootedBinaryTree& t, int a, int b) {
  auto pa = ancestors(t, a);
  std::vector<char> seen(t.size(), 0);
  for (int u : pa) seen[u] = 1;
  for (int u = b; u != -1; u = t.parents[u])
    if (seen[u]) return u;
  throw Error(ErrorKind::Validation, "tree nodes share no ancestor");
}

bool separated(const RootedBinaryTree& t, int x, int y, int z) {
  // path from x to the root vs the path from y to z
  std::vector<char> on_root_path(t.size(), 0);
  for (int u = x; u != -1; u = t.parents[u]) on_root_path[u] = 1;
  int m = lca(t, y, z);
  for (int u = y;; u = t.parents[u]) {
    if (on_root_path[u]) return false;
    if (u == m) break;
  }
  for (int u = z;; u = t.parents[u]) {
    if (on_root_path[u]) return false;
    if (u == m) break;
  }
  return true;
}

LeafStructure leaf_structure_from(const RootedBinaryTree& t,
                                  const std::vector<int>& leaf_of_vertex) {
  LeafStructure ls;
  ls.n = int(leaf_of_vertex.size());
  for (int x = 0; x < ls.n; ++x)
    for (int y = 0; y < ls.n; ++y)
      for (int z = y + 1; z < ls.n; ++z) {
        if (x == y || x == z) continue;
        if (separated(t, leaf_of_vertex[x], leaf_of_vertex[y], leaf_of_vertex[z]))
          ls.add(x, y, z);
      }
  std::sort(ls.triples.begin(), ls.triples.end());
  return ls;
}

}  // namespace

void validate_tree(const RootedBinaryTree& t) {
  int n = t.size();
  if (n <= 0) throw Error(ErrorKind::Validation, "tree needs at least one node");
  if (t.root < 0 || t.root >= n)
    throw Error(ErrorKind::Validation, "tree root out of range");
  std::vector<int> deg(n, 0);
  for (int i = 0; i < n; ++i) {
    int p = t.parents[i];
    if (i == t.root) {
      if (p != -1) throw Error(ErrorKind::Validation, "root must have parent -1");
      continue;
    }
    if (p < 0 || p >= n || p == i)
      throw Error(ErrorKind::Validation, "bad parent for node " + std::to_string(i));
    ++deg[p];
  }
  for (int i = 0; i < n; ++i)
    if (deg[i] > 2)
      throw Error(ErrorKind::Validation,
                  "node " + std::to_string(i) + " has more than two children");
  // every node must reach the root (no cycles, single component)
  for (int i = 0; i < n; ++i) {
    int u = i, steps = 0;
    while (u != t.root) {
      u = t.parents[u];
      if (u < 0 || ++steps > n)
        throw Error(ErrorKind::Validation, "tree has a cycle or stray component");
    }
  }
}

RootedBinaryTree tree_from_json(const json& j) {
  if (!j.is_object() || !j.contains("parents") || !j["parents"].is_array())
    throw Error(ErrorKind::Validation, "tree json needs a parents array");
  RootedBinaryTree t;
  for (auto& e : j["parents"]) {
    if (!e.is_number_integer())
      throw Error(ErrorKind::Validation, "tree parents must be integers");
    t.parents.push_back(e.get<int>());
  }
  if (j.contains("root")) {
    if (!j["root"].is_number_integer())
      throw Error(ErrorKind::Validation, "tree root must be an integer");
    t.root = j["root"].get<int>();
  } else {
    t.root = -1;
    for (int i = 0; i < t.size(); ++i)
      if (t.parents[i] == -1) {
        t.root = i;
        break;
      }
  }
  validate_tree(t);
  return t;
}

json tree_to_json(const RootedBinaryTree& t) {
  json j;
  j["parents"] = t.parents;
  j["root"] = t.root;
  return j;
}

std::vector<std::vector<int>> tree_children(const RootedBinaryTree& t) {
  std::vector<std::vector<int>> ch(t.size());
  for (int i = 0; i < t.size(); ++i)
    if (i != t.root) ch[t.parents[i]].push_back(i);
  return ch;
}

int tree_level(const RootedBinaryTree& t, int node) {
  int lev = 0;
  for (int u = node; u != t.root; u = t.parents[u]) ++lev;
  return lev;
}

std::vector<int> tree_leaves(const RootedBinaryTree& t) {
  auto ch = tree_children(t);
  std::vector<int> out;
  std::function<void(int)> dfs = [&](int v) {
    if (ch[v].empty()) {
      out.push_back(v);
      return;
    }
    std::vector<std::pair<std::string, int>> ord;
    for (int c : ch[v]) ord.push_back({subtree_encode(ch, c), c});
    std::sort(ord.begin(), ord.end());
    for (auto& [enc, c] : ord) dfs(c);
  };
  dfs(t.root);
  return out;
}

bool LeafStructure::rel(int x, int y, int z) const {
  if (y > z) std::swap(y, z);
  return std::binary_search(triples.begin(), triples.end(),
                            std::array<int, 3>{x, y, z});
}

void LeafStructure::add(int x, int y, int z) {
  if (y > z) std::swap(y, z);
  triples.push_back({x, y, z});
}

void validate_leaf_structure(const LeafStructure& ls) {
  if (ls.n <= 0) throw Error(ErrorKind::Validation, "leaf structure needs vertices");
  std::set<std::array<int, 3>> seen;
  for (auto& tr : ls.triples) {
    auto [x, y, z] = tr;
    if (x < 0 || x >= ls.n || y < 0 || y >= ls.n || z < 0 || z >= ls.n)
      throw Error(ErrorKind::Validation, "triple vertex out of range");
    if (x == y || x == z || y == z)
      throw Error(ErrorKind::Validation, "triple vertices must be distinct");
    if (y > z) throw Error(ErrorKind::Validation, "triples must store y < z");
    if (!seen.insert(tr).second)
      throw Error(ErrorKind::Validation, "duplicate triple");
  }
  if (!std::is_sorted(ls.triples.begin(), ls.triples.end()))
    throw Error(ErrorKind::Validation, "triples must be sorted");
  minimal_tree(ls);  // realizability
}

LeafStructure leaf_structure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j["n"].is_number_integer())
    throw Error(ErrorKind::Validation, "leaf structure json needs n");
  LeafStructure ls;
  ls.n = j["n"].get<int>();
  if (j.contains("triples")) {
    if (!j["triples"].is_array())
      throw Error(ErrorKind::Validation, "triples must be an array");
    for (auto& e : j["triples"]) {
      if (!e.is_array() || e.size() != 3)
        throw Error(ErrorKind::Validation, "each triple must have three entries");
      ls.add(e[0].get<int>(), e[1].get<int>(), e[2].get<int>());
    }
  }
  std::sort(ls.triples.begin(), ls.triples.end());
  validate_leaf_structure(ls);
  return ls;
}

json leaf_structure_to_json(const LeafStructure& ls) {
  json j;
  j["n"] = ls.n;
  auto arr = json::array();
  for (auto& [x, y, z] : ls.triples) arr.push_back({x, y, z});
  j["triples"] = arr;
  return j;
}

LeafStructure tree_to_leaf_structure(const RootedBinaryTree& t) {
  validate_tree(t);
  return leaf_structure_from(t, tree_leaves(t));
}

MinimalTreeResult minimal_tree(const LeafStructure& ls) {
  if (ls.n <= 0) throw Error(ErrorKind::Validation, "leaf structure needs vertices");
  MinimalTreeResult res;
  res.leaf_node.assign(ls.n, -1);
  auto& par = res.tree.parents;

  std::function<int(const std::vector<int>&)> build =
      [&](const std::vector<int>& S) -> int {
    int id = int(par.size());
    par.push_back(-1);
    if (S.size() == 1) {
      res.leaf_node[S[0]] = id;
      return id;
    }
    // vertices fall on the same side exactly when some third vertex of the
    // set is jointly separated from them
    std::map<int, int> uf;
    for (int v : S) uf[v] = v;
    std::function<int(int)> find = [&](int v) {
      while (uf[v] != v) v = uf[v] = uf[uf[v]];
      return v;
    };
    for (size_t i = 0; i < S.size(); ++i)
      for (size_t j = i + 1; j < S.size(); ++j)
        for (int x : S) {
          if (x == S[i] || x == S[j]) continue;
          if (ls.rel(x, S[i], S[j])) {
            uf[find(S[i])] = find(S[j]);
            break;
          }
        }
    std::map<int, std::vector<int>> classes;
    for (int v : S) classes[find(v)].push_back(v);
    if (classes.size() != 2)
      throw Error(ErrorKind::Validation,
                  "triples do not describe a binary tree split");
    std::vector<std::vector<int>> parts;
    for (auto& [rep, members] : classes) parts.push_back(members);
    if (parts[1][0] < parts[0][0]) std::swap(parts[0], parts[1]);
    for (auto& p : parts) {
      int c = build(p);
      par[c] = id;
    }
    return id;
  };

  std::vector<int> all(ls.n);
  for (int v = 0; v < ls.n; ++v) all[v] = v;
  res.tree.root = build(all);
  if (res.tree.root != 0) {
    // root is created first, so this cannot happen; keep the invariant explicit
    throw Error(ErrorKind::Validation, "tree construction out of order");
  }
  LeafStructure back = leaf_structure_from(res.tree, res.leaf_node);
  if (back.triples != ls.triples)
    throw Error(ErrorKind::Validation,
                "triples are not realized by any binary tree");
  return res;
}

int internal_node_count(const RootedBinaryTree& t) {
  auto ch = tree_children(t);
  int count = 0;
  for (auto& c : ch)
    if (!c.empty()) ++count;
  return count;
}

bool order_is_convex(const LeafStructure& ls, const std::vector<int>& order) {
  std::vector<int> pos(ls.n, -1);
  for (int i = 0; i < int(order.size()); ++i) pos[order[i]] = i;
  for (auto& [x, y, z] : ls.triples) {
    bool before = pos[x] < pos[y] && pos[x] < pos[z];
    bool after = pos[x] > pos[y] && pos[x] > pos[z];
    if (!before && !after) return false;
  }
  return true;
}

std::vector<std::vector<int>> enumerate_convex_orders(const LeafStructure& ls) {
  auto mt = minimal_tree(ls);
  auto ch = tree_children(mt.tree);
  std::vector<int> vertex_of_node(mt.tree.size(), -1);
  for (int v = 0; v < ls.n; ++v) vertex_of_node[mt.leaf_node[v]] = v;
  std::vector<int> internals;
  std::function<void(int)> collect = [&](int v) {
    if (ch[v].empty()) return;
    internals.push_back(v);
    for (int c : ch[v]) collect(c);
  };
  collect(mt.tree.root);
  int b = int(internals.size());
  if (b > 25) throw Error(ErrorKind::BoundExceeded, "too many internal nodes");
  std::vector<int> which(mt.tree.size(), -1);
  for (int i = 0; i < b; ++i) which[internals[i]] = i;

  std::vector<std::vector<int>> out;
  for (uint32_t bits = 0; bits < (1u << b); ++bits) {
    std::vector<int> order;
    std::function<void(int)> emit = [&](int v) {
      if (ch[v].empty()) {
        order.push_back(vertex_of_node[v]);
        return;
      }
      bool flip = (bits >> which[v]) & 1;
      emit(ch[v][flip ? 1 : 0]);
      emit(ch[v][flip ? 0 : 1]);
    };
    emit(mt.tree.root);
    out.push_back(order);
  }
  return out;
}

std::vector<std::vector<int>> brute_force_convex_orders(const LeafStructure& ls) {
  if (ls.n > 8) throw Error(ErrorKind::BoundExceeded, "brute force limited to 8 leaves");
  std::vector<int> order(ls.n);
  for (int i = 0; i < ls.n; ++i) order[i] = i;
  std::vector<std::vector<int>> out;
  do {
    if (order_is_convex(ls, order)) out.push_back(order);
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

RootedBinaryTree build_nice_tree(int n) {
  if (n < 0) throw Error(ErrorKind::Param, "depth must be nonnegative");
  if (n > 20) throw Error(ErrorKind::BoundExceeded, "tree too deep");
  RootedBinaryTree t;
  int total = (1 << (n + 1)) - 1;
  t.parents.assign(total, -1);
  for (int i = 1; i < total; ++i) t.parents[i] = (i - 1) / 2;
  t.root = 0;
  return t;
}

bool is_nice(const RootedBinaryTree& t, int n) {
  validate_tree(t);
  auto ch = tree_children(t);
  int leaves = 0;
  for (int v = 0; v < t.size(); ++v) {
    if (!ch[v].empty()) continue;
    if (tree_level(t, v) != n) return false;
    ++leaves;
  }
  return leaves == (1 << n);
}

bool leaf_embeds(const LeafStructure& a, const LeafStructure& b) {
  if (a.n > b.n) return false;
  std::vector<int> map(a.n, -1);
  std::vector<char> used(b.n, 0);
  std::function<bool(int)> go = [&](int i) {
    if (i == a.n) return true;
    for (int w = 0; w < b.n; ++w) {
      if (used[w]) continue;
      map[i] = w;
      bool ok = true;
      for (int p = 0; p < i && ok; ++p)
        for (int q = p + 1; q < i && ok; ++q)
          ok = a.rel(i, p, q) == b.rel(w, map[p], map[q]) &&
               a.rel(p, i, q) == b.rel(map[p], w, map[q]) &&
               a.rel(q, p, i) == b.rel(map[q], map[p], w);
      if (ok) {
        used[w] = 1;
        if (go(i + 1)) return true;
        used[w] = 0;
      }
    }
    map[i] = -1;
    return false;
  };
  return go(0);
}

bool convex_orders_pairwise_isomorphic(const LeafStructure& ls) {
  auto mt = minimal_tree(ls);
  auto ch = tree_children(mt.tree);
  std::vector<int> vertex_of_node(mt.tree.size(), -1);
  for (int v = 0; v < ls.n; ++v) vertex_of_node[mt.leaf_node[v]] = v;

  // pair up two isomorphic subtrees leaf-for-leaf, matching children by
  // canonical encoding
  std::function<void(int, int, std::vector<int>&)> pair_leaves =
      [&](int u, int v, std::vector<int>& perm) {
        if (ch[u].empty()) {
          perm[vertex_of_node[u]] = vertex_of_node[v];
          perm[vertex_of_node[v]] = vertex_of_node[u];
          return;
        }
        std::vector<std::pair<std::string, int>> cu, cv;
        for (int c : ch[u]) cu.push_back({subtree_encode(ch, c), c});
        for (int c : ch[v]) cv.push_back({subtree_encode(ch, c), c});
        std::sort(cu.begin(), cu.end());
        std::sort(cv.begin(), cv.end());
        for (size_t i = 0; i < cu.size(); ++i)
          pair_leaves(cu[i].second, cv[i].second, perm);
      };

  std::vector<std::vector<int>> gens;
  for (int v = 0; v < mt.tree.size(); ++v) {
    if (ch[v].size() != 2) continue;
    if (subtree_encode(ch, ch[v][0]) != subtree_encode(ch, ch[v][1])) continue;
    std::vector<int> perm(ls.n);
    for (int i = 0; i < ls.n; ++i) perm[i] = i;
    pair_leaves(ch[v][0], ch[v][1], perm);
    gens.push_back(perm);
  }

  auto orders = enumerate_convex_orders(ls);
  std::set<std::vector<int>> orbit;
  std::vector<std::vector<int>> frontier{orders[0]};
  orbit.insert(orders[0]);
  while (!frontier.empty()) {
    auto cur = frontier.back();
    frontier.pop_back();
    for (auto& g : gens) {
      std::vector<int> nxt(cur.size());
      for (size_t i = 0; i < cur.size(); ++i) nxt[i] = g[cur[i]];
      if (orbit.insert(nxt).second) frontier.push_back(nxt);
    }
  }
  return orbit.size() == orders.size();
}

std::vector<RootedBinaryTree> enumerate_trees(int max_nodes) {
  // trees[n] holds one parent-array representative per isomorphism class
  std::vector<std::vector<RootedBinaryTree>> by_size(max_nodes + 1);
  auto encode = [](const RootedBinaryTree& t) {
    return subtree_encode(tree_children(t), t.root);
  };
  auto graft = [](const std::vector<const RootedBinaryTree*>& subs) {
    RootedBinaryTree t;
    t.parents.push_back(-1);
    t.root = 0;
    for (auto* s : subs) {
      int off = t.size();
      for (int i = 0; i < s->size(); ++i) {
        int p = s->parents[i];
        t.parents.push_back(p == -1 ? -1 : p + off);
      }
      t.parents[off + s->root] = 0;
    }
    return t;
  };
  if (max_nodes >= 1) {
    RootedBinaryTree leaf;
    leaf.parents = {-1};
    leaf.root = 0;
    by_size[1].push_back(leaf);
  }
  for (int n = 2; n <= max_nodes; ++n) {
    std::map<std::string, RootedBinaryTree> found;
    for (auto& s : by_size[n - 1]) {
      auto t = graft({&s});
      found.emplace(encode(t), t);
    }
    for (int a = 1; 2 * a <= n - 1; ++a) {
      int b = n - 1 - a;
      for (auto& s1 : by_size[a])
        for (auto& s2 : by_size[b]) {
          auto t = graft({&s1, &s2});
          found.emplace(encode(t), t);
        }
    }
    for (auto& [enc, t] : found) by_size[n].push_back(t);
  }
  std::vector<RootedBinaryTree> out;
  for (auto& level : by_size)
    for (auto& t : level) out.push_back(t);
  return out;
}

std::vector<LeafStructure> enumerate_leaf_structures(int max_leaves) {
  // strict shapes only: a minimal tree with b internal nodes has b+1 leaves
  std::vector<LeafStructure> out;
  std::set<std::string> seen;
  for (auto& t : enumerate_trees(std::max(0, 2 * max_leaves - 1))) {
    auto ch = tree_children(t);
    bool strict = true;
    for (auto& c : ch)
      if (c.size() == 1) strict = false;
    if (!strict) continue;
    auto ls = tree_to_leaf_structure(t);
    if (ls.n > max_leaves) continue;
    std::string key = subtree_encode(ch, t.root);
    if (seen.insert(key).second) out.push_back(ls);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LeafStructure& a, const LeafStructure& b) {
                     return a.n < b.n;
                   });
  return out;
}

bool check_cofinal_isomorphism_leaf(const std::vector<LeafStructure>& family,
                                    int leaf_bound) {
  for (auto& m : family) validate_leaf_structure(m);
  for (auto& ls : enumerate_leaf_structures(leaf_bound)) {
    bool covered = false;
    for (auto& m : family)
      if (leaf_embeds(ls, m)) {
        covered = true;
        break;
      }
    if (!covered) return false;
  }
  for (auto& m : family)
    if (!convex_orders_pairwise_isomorphic(m)) return false;
  return true;
}

OhQopWitness build_oh_qop_witness(const LeafStructure& a,
                                  const std::vector<int>& a_base_order,
                                  const std::vector<std::vector<int>>& convex_list) {
  validate_leaf_structure(a);
  {
    std::vector<int> sorted = a_base_order;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < a.n; ++i)
      if (i >= int(sorted.size()) || sorted[i] != i)
        throw Error(ErrorKind::Param, "base order must be a permutation of the vertices");
    auto expect = enumerate_convex_orders(a);
    auto got = convex_list;
    std::sort(expect.begin(), expect.end());
    std::sort(got.begin(), got.end());
    if (expect != got)
      throw Error(ErrorKind::Param, "convex order list must be complete");
  }

  auto mt = minimal_tree(a);
  auto ch = tree_children(mt.tree);
  std::vector<int> vertex_of_node(mt.tree.size(), -1);
  for (int v = 0; v < a.n; ++v) vertex_of_node[mt.leaf_node[v]] = v;

  OhQopWitness w;
  RootedBinaryTree big;
  auto fresh = [&](int parent) {
    big.parents.push_back(parent);
    return big.size() - 1;
  };

  // One gadget per node of the minimal tree.  An internal node doubles into
  // left/right merge nodes, each holding fresh copies of both child gadgets;
  // a map with the top twist bit clear routes the first child left and the
  // second right, a set bit routes the opposite way.  Every big convex order
  // then agrees with exactly one map on how it arranges the image.
  struct Gadget {
    int root;
    std::vector<std::vector<int>> maps;  // a-vertex -> big node, -1 off domain
  };
  std::function<Gadget(int, int)> build = [&](int u, int parent) -> Gadget {
    if (ch[u].empty()) {
      int id = fresh(parent);
      std::vector<int> m(a.n, -1);
      m[vertex_of_node[u]] = id;
      return {id, {m}};
    }
    int id = fresh(parent);
    int ml = fresh(id), mr = fresh(id);
    Gadget l1 = build(ch[u][0], ml), l2 = build(ch[u][1], ml);
    Gadget r1 = build(ch[u][0], mr), r2 = build(ch[u][1], mr);
    Gadget out{id, {}};
    auto merge = [&](const std::vector<int>& x, const std::vector<int>& y) {
      std::vector<int> m(a.n, -1);
      for (int v = 0; v < a.n; ++v) m[v] = x[v] != -1 ? x[v] : y[v];
      return m;
    };
    for (auto& m1 : l1.maps)
      for (auto& m2 : r2.maps) out.maps.push_back(merge(m1, m2));
    for (auto& m1 : r1.maps)
      for (auto& m2 : l2.maps) out.maps.push_back(merge(m1, m2));
    return out;
  };
  Gadget top = build(mt.tree.root, -1);
  big.root = top.root;

  std::vector<int> leaf_vertex(big.size(), -1);
  {
    auto bch = tree_children(big);
    std::vector<int> leaves;
    for (int v = 0; v < big.size(); ++v)
      if (bch[v].empty()) leaves.push_back(v);
    for (size_t i = 0; i < leaves.size(); ++i) leaf_vertex[leaves[i]] = int(i);
    w.big = leaf_structure_from(big, leaves);
  }
  for (auto& m : top.maps) {
    VertexMap emb(a.n, -1);
    for (int v = 0; v < a.n; ++v) emb[v] = leaf_vertex[m[v]];
    w.embeddings.push_back(emb);
  }

  // linear order on the big structure making every map order-preserving:
  // topological sort of the union of the per-map order constraints
  std::vector<std::vector<int>> succ(w.big.n);
  std::vector<int> indeg(w.big.n, 0);
  for (auto& emb : w.embeddings)
    for (size_t i = 0; i + 1 < a_base_order.size(); ++i) {
      succ[emb[a_base_order[i]]].push_back(emb[a_base_order[i + 1]]);
      ++indeg[emb[a_base_order[i + 1]]];
    }
  std::set<int> ready;
  for (int v = 0; v < w.big.n; ++v)
    if (indeg[v] == 0) ready.insert(v);
  while (!ready.empty()) {
    int v = *ready.begin();
    ready.erase(ready.begin());
    w.base_order.push_back(v);
    for (int s : succ[v])
      if (--indeg[s] == 0) ready.insert(s);
  }
  if (int(w.base_order.size()) != w.big.n)
    throw Error(ErrorKind::Validation, "order constraints are cyclic");
  return w;
}

}  // namespace homoflow
