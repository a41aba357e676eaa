#include "homoflow/structures.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace homoflow {

std::vector<int> FiniteStructure::order_pos() const {
  std::vector<int> pos(n, -1);
  for (int i = 0; i < (int)order.size(); ++i) pos[order[i]] = i;
  return pos;
}

bool FiniteStructure::before(int i, int j) const {
  int pi = -1, pj = -1;
  for (int t = 0; t < (int)order.size(); ++t) {
    if (order[t] == i) pi = t;
    if (order[t] == j) pj = t;
  }
  return pi < pj;
}

FiniteStructure FiniteStructure::empty(int n) {
  FiniteStructure s;
  s.n = n;
  s.adj.assign(size_t(n) * ((n + 63) / 64), 0);
  return s;
}

FiniteStructure FiniteStructure::restrict_to(const std::vector<int>& verts) const {
  FiniteStructure r = FiniteStructure::empty((int)verts.size());
  for (int i = 0; i < r.n; ++i)
    for (int j = 0; j < r.n; ++j)
      if (i != j && arc(verts[i], verts[j])) r.set_arc(i, j);
  if (has_parts()) {
    r.parts.resize(r.n);
    for (int i = 0; i < r.n; ++i) r.parts[i] = parts[verts[i]];
  }
  if (has_aux()) {
    for (int i = 0; i < r.n; ++i)
      for (int j = 0; j < r.n; ++j)
        if (i != j && aux_rel(verts[i], verts[j])) r.set_aux(i, j);
  }
  if (has_order()) {
    std::vector<char> keep(n, 0);
    std::vector<int> idx(n, -1);
    for (int i = 0; i < r.n; ++i) keep[verts[i]] = 1, idx[verts[i]] = i;
    for (int v : order)
      if (keep[v]) r.order.push_back(idx[v]);
  }
  return r;
}

FiniteStructure FiniteStructure::apply_perm(const std::vector<int>& p) const {
  FiniteStructure r = FiniteStructure::empty(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && arc(i, j)) r.set_arc(p[i], p[j]);
  if (has_parts()) {
    r.parts.resize(n);
    for (int i = 0; i < n; ++i) r.parts[p[i]] = parts[i];
  }
  if (has_aux()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && aux_rel(i, j)) r.set_aux(p[i], p[j]);
  }
  if (has_order()) {
    for (int v : order) r.order.push_back(p[v]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// JSON

json structure_to_json(const FiniteStructure& s) {
  json j;
  j["n"] = s.n;
  std::vector<std::pair<int, int>> arcs;
  for (int i = 0; i < s.n; ++i)
    for (int k = 0; k < s.n; ++k)
      if (i != k && s.arc(i, k)) arcs.push_back({i, k});
  std::sort(arcs.begin(), arcs.end());
  j["arcs"] = json::array();
  for (auto& [a, b] : arcs) j["arcs"].push_back({a, b});
  if (s.has_parts()) {
    json p = json::object();
    for (int i = 0; i < s.n; ++i) p[std::to_string(i)] = s.parts[i];
    j["parts"] = p;
  }
  if (s.has_aux()) {
    std::vector<std::pair<int, int>> rs;
    for (int i = 0; i < s.n; ++i)
      for (int k = 0; k < s.n; ++k)
        if (i != k && s.aux_rel(i, k)) rs.push_back({i, k});
    std::sort(rs.begin(), rs.end());
    j["R"] = json::array();
    for (auto& [a, b] : rs) j["R"].push_back({a, b});
  }
  if (s.has_order()) j["order"] = s.order;
  return j;
}

FiniteStructure structure_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j["n"].is_number_integer())
    throw Error(ErrorKind::Validation, "structure JSON needs integer field 'n'");
  int n = j["n"].get<int>();
  if (n < 0) throw Error(ErrorKind::Validation, "negative vertex count");
  FiniteStructure s = FiniteStructure::empty(n);
  if (j.contains("arcs")) {
    if (!j["arcs"].is_array()) throw Error(ErrorKind::Validation, "'arcs' must be an array");
    for (auto& e : j["arcs"]) {
      if (!e.is_array() || e.size() != 2)
        throw Error(ErrorKind::Validation, "arc entries must be pairs");
      int a = e[0].get<int>(), b = e[1].get<int>();
      if (a < 0 || a >= n || b < 0 || b >= n)
        throw Error(ErrorKind::Validation, "arc endpoint out of range");
      if (a == b) throw Error(ErrorKind::Validation, "self-arc");
      if (s.arc(b, a)) throw Error(ErrorKind::Validation, "arcs in both directions");
      s.set_arc(a, b);
    }
  }
  if (j.contains("parts")) {
    if (!j["parts"].is_object()) throw Error(ErrorKind::Validation, "'parts' must be an object");
    s.parts.assign(n, INT_MIN);
    for (auto& [k, v] : j["parts"].items()) {
      int idx;
      try {
        idx = std::stoi(k);
      } catch (...) {
        throw Error(ErrorKind::Validation, "non-integer parts key");
      }
      if (idx < 0 || idx >= n) throw Error(ErrorKind::Validation, "parts key out of range");
      s.parts[idx] = v.get<int>();
    }
    for (int i = 0; i < n; ++i)
      if (s.parts[i] == INT_MIN)
        throw Error(ErrorKind::Validation, "parts must label every vertex");
  }
  if (j.contains("R")) {
    if (!j["R"].is_array()) throw Error(ErrorKind::Validation, "'R' must be an array");
    for (auto& e : j["R"]) {
      if (!e.is_array() || e.size() != 2)
        throw Error(ErrorKind::Validation, "R entries must be pairs");
      int a = e[0].get<int>(), b = e[1].get<int>();
      if (a < 0 || a >= n || b < 0 || b >= n)
        throw Error(ErrorKind::Validation, "R endpoint out of range");
      if (a == b) throw Error(ErrorKind::Validation, "reflexive R pair");
      s.set_aux(a, b);
    }
  }
  if (j.contains("order")) {
    if (!j["order"].is_array()) throw Error(ErrorKind::Validation, "'order' must be an array");
    s.order = j["order"].get<std::vector<int>>();
    check_well_formed(s);
  }
  return s;
}

void check_well_formed(const FiniteStructure& s) {
  if ((int)s.adj.size() != s.n * s.words())
    throw Error(ErrorKind::Validation, "adjacency storage size mismatch");
  for (int i = 0; i < s.n; ++i) {
    if (s.arc(i, i)) throw Error(ErrorKind::Validation, "self-arc");
    for (int j = i + 1; j < s.n; ++j)
      if (s.arc(i, j) && s.arc(j, i)) throw Error(ErrorKind::Validation, "arcs in both directions");
  }
  if (s.has_parts() && (int)s.parts.size() != s.n)
    throw Error(ErrorKind::Validation, "parts must label every vertex");
  if (s.has_aux() && (int)s.aux.size() != s.n * s.words())
    throw Error(ErrorKind::Validation, "aux storage size mismatch");
  if (s.has_order()) {
    if ((int)s.order.size() != s.n)
      throw Error(ErrorKind::Validation, "order must list every vertex");
    std::vector<char> seen(s.n, 0);
    for (int v : s.order) {
      if (v < 0 || v >= s.n || seen[v])
        throw Error(ErrorKind::Validation, "order is not a permutation of the vertices");
      seen[v] = 1;
    }
  }
}

// ---------------------------------------------------------------------------
// Non-adjacency classes

std::vector<std::vector<int>> perp_partition(const FiniteStructure& s) {
  std::vector<int> cls(s.n, -1);
  std::vector<std::vector<int>> out;
  for (int v = 0; v < s.n; ++v) {
    if (cls[v] >= 0) continue;
    int id = (int)out.size();
    out.push_back({});
    // non-adjacency is symmetric, so one sweep collects the candidate class
    cls[v] = id;
    out[id].push_back(v);
    for (int u = v + 1; u < s.n; ++u)
      if (!s.adjacent(v, u)) {
        if (cls[u] >= 0)
          throw Error(ErrorKind::NotAnEquivalence, "non-adjacency is not transitive");
        cls[u] = id;
        out[id].push_back(u);
      }
  }
  // transitivity <=> non-adjacency holds exactly within classes
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j)
      if (s.adjacent(i, j) == (cls[i] == cls[j]))
        throw Error(ErrorKind::NotAnEquivalence, "non-adjacency is not transitive");
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings

namespace {

struct EmbedCtx {
  const FiniteStructure& a;
  const FiniteStructure& b;
  EmbedOpts opts;
  bool use_parts = false, use_aux = false, use_order = false;
  std::vector<int> apos, bpos;  // order positions when used
  bool feasible = true;
};

EmbedCtx make_ctx(const FiniteStructure& a, const FiniteStructure& b, const EmbedOpts& opts) {
  EmbedCtx c{a, b, opts, false, false, false, {}, {}, true};
  if (a.has_parts()) {
    if (!b.has_parts()) { c.feasible = false; return c; }
    c.use_parts = true;
  }
  if (a.has_aux()) {
    if (!b.has_aux()) { c.feasible = false; return c; }
    c.use_aux = true;
  }
  if (a.has_order()) {
    if (!b.has_order()) { c.feasible = false; return c; }
    c.use_order = true;
    c.apos = a.order_pos();
    c.bpos = b.order_pos();
  }
  return c;
}

bool pair_ok(const EmbedCtx& c, int i, int j, int fi, int fj) {
  if (c.a.arc(i, j) != c.b.arc(fi, fj)) return false;
  if (c.a.arc(j, i) != c.b.arc(fj, fi)) return false;
  if (c.use_aux &&
      (c.a.aux_rel(i, j) != c.b.aux_rel(fi, fj) || c.a.aux_rel(j, i) != c.b.aux_rel(fj, fi)))
    return false;
  if (c.use_order && ((c.apos[i] < c.apos[j]) != (c.bpos[fi] < c.bpos[fj]))) return false;
  if (c.use_parts && c.opts.parts_as_equivalence &&
      ((c.a.parts[i] == c.a.parts[j]) != (c.b.parts[fi] == c.b.parts[fj])))
    return false;
  return true;
}

bool vertex_ok(const EmbedCtx& c, int i, int fi) {
  if (c.use_parts && !c.opts.parts_as_equivalence && c.a.parts[i] != c.b.parts[fi]) return false;
  return true;
}

template <typename Sink>
void embed_dfs(const EmbedCtx& c, std::vector<int>& map, std::vector<char>& used, int depth,
               Sink&& sink) {
  if (depth == c.a.n) {
    sink(map);
    return;
  }
  for (int img = 0; img < c.b.n; ++img) {
    if (used[img] || !vertex_ok(c, depth, img)) continue;
    bool ok = true;
    for (int t = 0; t < depth && ok; ++t) ok = pair_ok(c, t, depth, map[t], img);
    if (!ok) continue;
    map[depth] = img;
    used[img] = 1;
    embed_dfs(c, map, used, depth + 1, sink);
    used[img] = 0;
  }
}

}  // namespace

std::vector<VertexMap> enumerate_embeddings(const FiniteStructure& a, const FiniteStructure& b,
                                            const EmbedOpts& opts) {
  std::vector<VertexMap> out;
  if (a.n > b.n) return out;
  EmbedCtx c = make_ctx(a, b, opts);
  if (!c.feasible) return out;
  std::vector<int> map(a.n, -1);
  std::vector<char> used(b.n, 0);
  embed_dfs(c, map, used, 0, [&](const std::vector<int>& m) { out.push_back(m); });
  return out;
}

long count_embeddings(const FiniteStructure& a, const FiniteStructure& b, const EmbedOpts& opts) {
  if (a.n > b.n) return 0;
  EmbedCtx c = make_ctx(a, b, opts);
  if (!c.feasible) return 0;
  long total = 0;
  std::vector<int> map(a.n, -1);
  std::vector<char> used(b.n, 0);
  embed_dfs(c, map, used, 0, [&](const std::vector<int>&) { ++total; });
  return total;
}

long count_embeddings_parallel(const FiniteStructure& a, const FiniteStructure& b,
                               const EmbedOpts& opts) {
  if (a.n > b.n) return 0;
  if (a.n == 0) return 1;
  EmbedCtx c = make_ctx(a, b, opts);
  if (!c.feasible) return 0;
  long total = 0;
#pragma omp parallel for reduction(+ : total) schedule(dynamic)
  for (int img0 = 0; img0 < b.n; ++img0) {
    if (!vertex_ok(c, 0, img0)) continue;
    std::vector<int> map(a.n, -1);
    std::vector<char> used(b.n, 0);
    map[0] = img0;
    used[img0] = 1;
    long local = 0;
    embed_dfs(c, map, used, 1, [&](const std::vector<int>&) { ++local; });
    total += local;
  }
  return total;
}

bool is_embedding(const FiniteStructure& a, const FiniteStructure& b, const VertexMap& m,
                  const EmbedOpts& opts) {
  if ((int)m.size() != a.n) return false;
  EmbedCtx c = make_ctx(a, b, opts);
  if (!c.feasible) return false;
  std::vector<char> used(b.n, 0);
  for (int i = 0; i < a.n; ++i) {
    if (m[i] < 0 || m[i] >= b.n || used[m[i]] || !vertex_ok(c, i, m[i])) return false;
    used[m[i]] = 1;
  }
  for (int i = 0; i < a.n; ++i)
    for (int j = i + 1; j < a.n; ++j)
      if (!pair_ok(c, i, j, m[i], m[j])) return false;
  return true;
}

std::vector<VertexMap> automorphisms(const FiniteStructure& s) {
  return enumerate_embeddings(s, s);
}

// ---------------------------------------------------------------------------
// Canonical form

int iso_bound() { return 10; }

namespace {

// per-ordered-pair relation code (fits in a few bits)
int rel_code(const FiniteStructure& s, const std::vector<int>& pos, int i, int j) {
  int code = 0;
  if (s.arc(i, j)) code |= 1;
  if (s.arc(j, i)) code |= 2;
  if (s.has_aux()) {
    if (s.aux_rel(i, j)) code |= 4;
    if (s.aux_rel(j, i)) code |= 8;
  }
  if (s.has_order() && pos[i] < pos[j]) code |= 16;
  return code;
}

std::vector<int> invariant_cells(const FiniteStructure& s, const std::vector<int>& pos) {
  int n = s.n;
  std::vector<std::vector<long>> sig(n);
  for (int v = 0; v < n; ++v) {
    long outd = 0, ind = 0, aout = 0, ain = 0;
    for (int u = 0; u < n; ++u) {
      if (u == v) continue;
      outd += s.arc(v, u);
      ind += s.arc(u, v);
      if (s.has_aux()) {
        aout += s.aux_rel(v, u);
        ain += s.aux_rel(u, v);
      }
    }
    sig[v] = {s.has_parts() ? s.parts[v] : -1, s.has_order() ? pos[v] : -1, outd, ind, aout, ain};
  }
  std::vector<int> cell(n);
  for (int round = 0; round < 2; ++round) {
    std::vector<std::vector<long>> ordered = sig;
    std::sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
    for (int v = 0; v < n; ++v)
      cell[v] = (int)(std::lower_bound(ordered.begin(), ordered.end(), sig[v]) - ordered.begin());
    // refine by the multiset of (relation, neighbour cell)
    std::vector<std::vector<long>> next(n);
    for (int v = 0; v < n; ++v) {
      std::vector<long> ext;
      for (int u = 0; u < n; ++u)
        if (u != v) ext.push_back(rel_code(s, pos, v, u) * 1024L + cell[u]);
      std::sort(ext.begin(), ext.end());
      next[v] = {cell[v]};
      next[v].insert(next[v].end(), ext.begin(), ext.end());
    }
    sig = std::move(next);
  }
  return cell;
}

struct CanonCtx {
  const FiniteStructure& s;
  std::vector<int> pos;
  std::vector<int> cell;
  std::vector<int> best;       // canonical encoding so far
  bool have_best = false;
  std::vector<int> cur;
  std::vector<int> perm;       // perm[depth] = original vertex with new label `depth`
  std::vector<char> used;
};

void canon_dfs(CanonCtx& c, int depth) {
  int n = c.s.n;
  if (depth == n) {
    if (!c.have_best || c.cur < c.best) {
      c.best = c.cur;
      c.have_best = true;
    }
    return;
  }
  size_t mark = c.cur.size();
  for (int v = 0; v < n; ++v) {
    if (c.used[v]) continue;
    c.cur.push_back(c.cell[v]);
    for (int t = 0; t < depth; ++t) c.cur.push_back(rel_code(c.s, c.pos, v, c.perm[t]));
    // prefix pruning against the best encoding found so far
    if (c.have_best) {
      bool worse = false, better = false;
      for (size_t i = mark; i < c.cur.size(); ++i) {
        if (c.cur[i] < c.best[i]) { better = true; break; }
        if (c.cur[i] > c.best[i]) { worse = true; break; }
      }
      if (worse) {
        c.cur.resize(mark);
        continue;
      }
      if (better) {
        // anything extending this prefix beats best; clear it so deeper
        // levels compare against the new champion only at completion
        c.have_best = false;
      }
    }
    c.used[v] = 1;
    c.perm[depth] = v;
    canon_dfs(c, depth + 1);
    c.used[v] = 0;
    c.cur.resize(mark);
    if (!c.have_best) {
      // restore: best was invalidated, but a full candidate has been recorded
      c.have_best = true;
    }
  }
}

}  // namespace

std::string canonical_form(const FiniteStructure& s) {
  if (s.n > iso_bound())
    throw Error(ErrorKind::BoundExceeded, "canonical form limited to " +
                                              std::to_string(iso_bound()) + " vertices");
  CanonCtx c{s, {}, {}, {}, false, {}, {}, {}};
  c.pos = s.has_order() ? s.order_pos() : std::vector<int>(s.n, 0);
  c.cell = invariant_cells(s, c.pos);
  c.perm.assign(s.n, -1);
  c.used.assign(s.n, 0);
  canon_dfs(c, 0);
  std::string enc;
  enc.reserve(c.best.size() + 16);
  enc += "n" + std::to_string(s.n);
  enc += s.has_parts() ? 'p' : '.';
  enc += s.has_aux() ? 'r' : '.';
  enc += s.has_order() ? 'o' : '.';
  enc += ';';
  // cells are structure-derived ints; parts labels enter via the cell values,
  // so record the sorted label list too to keep label identity exact
  if (s.has_parts()) {
    std::vector<int> lab = s.parts;
    std::sort(lab.begin(), lab.end());
    for (int l : lab) enc += std::to_string(l) + ",";
    enc += ';';
  }
  for (int x : c.best) enc += std::to_string(x) + ",";
  return enc;
}

bool is_isomorphic(const FiniteStructure& a, const FiniteStructure& b) {
  if (a.n != b.n) return false;
  if (a.has_parts() != b.has_parts() || a.has_aux() != b.has_aux() ||
      a.has_order() != b.has_order())
    return false;
  return canonical_form(a) == canonical_form(b);
}

std::optional<VertexMap> find_isomorphism(const FiniteStructure& a, const FiniteStructure& b) {
  if (a.n != b.n) return std::nullopt;
  auto embs = enumerate_embeddings(a, b);
  if (embs.empty()) return std::nullopt;
  return embs.front();
}

// ---------------------------------------------------------------------------
// Membership

namespace {

bool is_tournament(const FiniteStructure& s) {
  for (int i = 0; i < s.n; ++i)
    for (int j = i + 1; j < s.n; ++j)
      if (!s.adjacent(i, j)) return false;
  return true;
}

bool is_transitive(const FiniteStructure& s) {
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      if (!s.arc(i, j)) continue;
      for (int k = 0; k < s.n; ++k)
        if (s.arc(j, k) && !s.arc(i, k)) return false;
    }
  return true;
}

// Existence of a circular slot assignment: values in Z_{m*n}, pairwise
// distinct residues mod n, and an arc x->y exactly when (s_y - s_x) mod m*n
// lies in 1..n-1. Rotation invariance lets us pin vertex 0 to slot 0.
bool circle_realizable(const FiniteStructure& s, int m) {
  int n = s.n;
  if (n == 0) return true;
  int mod = m * n;
  std::vector<int> slot(n, -1);
  std::vector<char> res_used(n, 0);
  auto consistent = [&](int u, int v) {
    int diff = ((slot[v] - slot[u]) % mod + mod) % mod;
    bool fwd = diff >= 1 && diff <= n - 1;
    bool bwd = diff >= mod - n + 1 && diff <= mod - 1;
    if (s.arc(u, v)) return fwd;
    if (s.arc(v, u)) return bwd;
    return !fwd && !bwd;
  };
  auto dfs = [&](auto&& self, int v) -> bool {
    if (v == n) return true;
    for (int t = 0; t < mod; ++t) {
      if (res_used[t % n]) continue;
      slot[v] = t;
      bool ok = true;
      for (int u = 0; u < v && ok; ++u) ok = consistent(u, v);
      if (ok) {
        res_used[t % n] = 1;
        if (self(self, v + 1)) return true;
        res_used[t % n] = 0;
      }
      slot[v] = -1;
    }
    return false;
  };
  slot[0] = 0;
  res_used[0] = 1;
  return dfs(dfs, 1);
}

// -1: y below x, 0: incomparable, +1: x below y, for vertices labelled i and j.
int p3_rel(bool xy, bool yx, int i, int j) {
  if (i == j) return xy ? +1 : (yx ? -1 : 0);
  if ((i + 1) % 3 == j) {
    if (xy) return -1;
    if (yx) return 0;
    return +1;
  }
  if (yx) return +1;
  if (xy) return 0;
  return -1;
}

bool p3_realizable(const FiniteStructure& s) {
  int n = s.n;
  std::vector<int> lab(n, -1);
  // lt[x][y]: derived strict relation among assigned vertices
  std::vector<std::vector<char>> lt(n, std::vector<char>(n, 0));
  auto dfs = [&](auto&& self, int v) -> bool {
    if (v == n) return true;
    for (int l = 0; l < 3; ++l) {
      lab[v] = l;
      bool ok = true;
      for (int u = 0; u < v; ++u) {
        int r = p3_rel(s.arc(u, v), s.arc(v, u), lab[u], l);
        lt[u][v] = r > 0 ? 1 : 0;
        lt[v][u] = r < 0 ? 1 : 0;
      }
      // the derived relation must be transitive as given
      for (int a = 0; a < v && ok; ++a) {
        for (int b = 0; b < v && ok; ++b) {
          if (a == b) continue;
          if (lt[a][v] && lt[v][b] && !lt[a][b]) ok = false;
          if (lt[a][b] && lt[b][v] && !lt[a][v]) ok = false;
          if (lt[v][a] && lt[a][b] && !lt[v][b]) ok = false;
        }
      }
      if (ok && self(self, v + 1)) return true;
    }
    lab[v] = -1;
    for (int u = 0; u < v; ++u) lt[u][v] = lt[v][u] = 0;
    return false;
  };
  return dfs(dfs, 0);
}

std::vector<std::vector<int>> perp_classes_or_empty(const FiniteStructure& s, bool& ok) {
  ok = true;
  try {
    return perp_partition(s);
  } catch (const Error&) {
    ok = false;
    return {};
  }
}

bool hatt_local_member(const FiniteStructure& s) {
  bool ok;
  auto classes = perp_classes_or_empty(s, ok);
  if (!ok) return false;
  for (auto& c : classes)
    if (c.size() > 2) return false;
  for (int v = 0; v < s.n; ++v)
    for (auto& d : classes) {
      if (d.size() != 2) continue;
      if (std::find(d.begin(), d.end(), v) != d.end()) continue;
      int outs = (s.arc(v, d[0]) ? 1 : 0) + (s.arc(v, d[1]) ? 1 : 0);
      if (outs != 1) return false;
    }
  return true;
}

bool semigeneric_member(const FiniteStructure& s) {
  bool ok;
  auto classes = perp_classes_or_empty(s, ok);
  if (!ok) return false;
  for (size_t p = 0; p < classes.size(); ++p)
    for (size_t q = p + 1; q < classes.size(); ++q) {
      auto& P = classes[p];
      auto& Q = classes[q];
      if (P.size() < 2 || Q.size() < 2) continue;
      for (size_t i = 0; i < P.size(); ++i)
        for (size_t i2 = i + 1; i2 < P.size(); ++i2)
          for (size_t k = 0; k < Q.size(); ++k)
            for (size_t k2 = k + 1; k2 < Q.size(); ++k2) {
              int cnt = s.arc(P[i], Q[k]) + s.arc(P[i], Q[k2]) + s.arc(P[i2], Q[k]) +
                        s.arc(P[i2], Q[k2]);
              if (cnt % 2) return false;
            }
    }
  return true;
}

int max_independent_size(const FiniteStructure& s) {
  int n = s.n;
  std::vector<std::vector<char>> perp(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) perp[i][j] = (i != j && s.perp(i, j));
  int best = 0;
  std::vector<int> cand(n);
  for (int i = 0; i < n; ++i) cand[i] = i;
  auto rec = [&](auto&& self, std::vector<int>& cs, int size) -> void {
    if (size > best) best = size;
    if (size + (int)cs.size() <= best) return;
    while (!cs.empty()) {
      int v = cs.back();
      cs.pop_back();
      std::vector<int> next;
      for (int u : cs)
        if (perp[v][u]) next.push_back(u);
      self(self, next, size + 1);
      if (size + (int)cs.size() <= best) return;
    }
  };
  rec(rec, cand, 0);
  return best;
}

}  // namespace

// Doubles every singleton non-adjacency class with a partner vertex. Arcs obey
// the two-cover twist: for a in class of x (bit p_a) and b in class of u (bit
// p_b), a->b iff (p_a == p_b ? x->u : u->x) among the original base vertices.
FiniteStructure hatt_completion(const FiniteStructure& s, std::vector<int>& orig_of_full) {
  auto classes = perp_partition(s);
  struct V { int base; int bit; int orig; };
  std::vector<V> verts;
  for (auto& c : classes) {
    verts.push_back({c[0], 0, c[0]});
    if (c.size() == 2)
      verts.push_back({c[0], 1, c[1]});
    else
      verts.push_back({c[0], 1, -1});
  }
  FiniteStructure full = FiniteStructure::empty((int)verts.size());
  for (size_t i = 0; i < verts.size(); ++i)
    for (size_t j = 0; j < verts.size(); ++j) {
      if (i == j || verts[i].base == verts[j].base) continue;
      int x = verts[i].base, u = verts[j].base;
      bool a;
      if (verts[i].orig >= 0 && verts[j].orig >= 0)
        a = s.arc(verts[i].orig, verts[j].orig);
      else
        a = (verts[i].bit == verts[j].bit) ? s.arc(x, u) : s.arc(u, x);
      if (a) full.set_arc((int)i, (int)j);
    }
  orig_of_full.assign(verts.size(), -1);
  for (size_t i = 0; i < verts.size(); ++i) orig_of_full[i] = verts[i].orig;
  return full;
}

// The fully-doubled pattern the two-cover of the rationals realises: columns
// carry a position 1..k and a letter bit; same-letter arcs run high->low
// across columns, mixed-letter arcs run low->high.
bool hatq_pattern_search(const FiniteStructure& full, std::vector<int>* out_posn,
                         std::vector<int>* out_letter) {
  auto classes = perp_partition(full);
  int k = (int)classes.size();
  for (auto& c : classes)
    if (c.size() != 2) return false;
  // assign positions 0..k-1 to classes with a letter bit for c[0]
  std::vector<int> pos_of_class(k, -1), letter0(k, 0);
  std::vector<char> pos_used(k, 0);
  auto arc_expected = [&](int ci, int vi, int cj, int vj) {
    // vi/vj: index within class (0/1); letter = letter0 xor index
    int li = letter0[ci] ^ vi, lj = letter0[cj] ^ vj;
    int pi = pos_of_class[ci], pj = pos_of_class[cj];
    return li == lj ? pi > pj : pi < pj;
  };
  auto consistent = [&](int ci, int cj) {
    for (int vi = 0; vi < 2; ++vi)
      for (int vj = 0; vj < 2; ++vj) {
        bool have = full.arc(classes[ci][vi], classes[cj][vj]);
        if (have != arc_expected(ci, vi, cj, vj)) return false;
      }
    return true;
  };
  auto dfs = [&](auto&& self, int c) -> bool {
    if (c == k) return true;
    for (int p = 0; p < k; ++p) {
      if (pos_used[p]) continue;
      for (int l = 0; l < 2; ++l) {
        pos_of_class[c] = p;
        letter0[c] = l;
        pos_used[p] = 1;
        bool ok = true;
        for (int d = 0; d < c && ok; ++d) ok = consistent(c, d) && consistent(d, c);
        if (ok && self(self, c + 1)) return true;
        pos_used[p] = 0;
      }
    }
    pos_of_class[c] = -1;
    return false;
  };
  if (!dfs(dfs, 0)) return false;
  if (out_posn) {
    out_posn->assign(full.n, -1);
    out_letter->assign(full.n, -1);
    for (int c = 0; c < k; ++c)
      for (int v = 0; v < 2; ++v) {
        (*out_posn)[classes[c][v]] = pos_of_class[c];
        (*out_letter)[classes[c][v]] = letter0[c] ^ v;
      }
  }
  return true;
}

bool validate_structure(const FiniteStructure& s, const ClassSpec& spec) {
  check_well_formed(s);
  if (s.has_parts() || s.has_aux() || s.has_order())
    throw Error(ErrorKind::Validation, "age members carry arcs only");
  using K = ClassSpec::Kind;
  switch (spec.kind) {
    case K::Tournaments:
      return is_tournament(s);
    case K::Q:
      return is_tournament(s) && is_transitive(s);
    case K::S2:
      return is_tournament(s) && circle_realizable(s, 2);
    case K::S3:
      return circle_realizable(s, 3);
    case K::Poset:
      return is_transitive(s);
    case K::P3:
      return p3_realizable(s);
    case K::Dn: {
      bool ok;
      auto cl = perp_classes_or_empty(s, ok);
      return ok && (int)cl.size() <= spec.param;
    }
    case K::Domega: {
      bool ok;
      perp_classes_or_empty(s, ok);
      return ok;
    }
    case K::HatT:
      return hatt_local_member(s);
    case K::HatQ: {
      if (!hatt_local_member(s)) return false;
      std::vector<int> orig;
      FiniteStructure full = hatt_completion(s, orig);
      return hatq_pattern_search(full, nullptr, nullptr);
    }
    case K::SemiGeneric:
      return semigeneric_member(s);
    case K::Gn:
      return max_independent_size(s) <= spec.param;
    case K::FT: {
      for (auto& f : spec.forbidden)
        if (count_embeddings(f, s) > 0) return false;
      return true;
    }
    case K::Composition:
    case K::TreeLeaf:
    case K::OrderedTreeLeaf:
      throw Error(ErrorKind::Unsupported,
                  "membership for this class uses its own representation");
  }
  return false;
}

// ---------------------------------------------------------------------------
// ClassSpec tags

namespace {

FiniteStructure named_tournament(const std::string& name) {
  if (name == "c3") {
    FiniteStructure s = FiniteStructure::empty(3);
    s.set_arc(0, 1);
    s.set_arc(1, 2);
    s.set_arc(2, 0);
    return s;
  }
  throw Error(ErrorKind::Param, "unknown forbidden tournament name: " + name);
}

}  // namespace

ClassSpec ClassSpec::parse(const std::string& tag) {
  ClassSpec c;
  using K = ClassSpec::Kind;
  auto num_after = [&](size_t at) {
    try {
      int v = std::stoi(tag.substr(at));
      return v;
    } catch (...) {
      throw Error(ErrorKind::Param, "bad numeric parameter in tag: " + tag);
    }
  };
  if (tag == "tournaments") c.kind = K::Tournaments;
  else if (tag == "q") c.kind = K::Q;
  else if (tag == "s2") c.kind = K::S2;
  else if (tag == "s3") c.kind = K::S3;
  else if (tag == "poset") c.kind = K::Poset;
  else if (tag == "p3") c.kind = K::P3;
  else if (tag == "d-omega") c.kind = K::Domega;
  else if (tag.rfind("d:", 0) == 0) {
    c.kind = K::Dn;
    c.param = num_after(2);
    if (c.param < 1) throw Error(ErrorKind::Param, "d:<n> needs n >= 1");
  } else if (tag == "hatt") c.kind = K::HatT;
  else if (tag == "hatq") c.kind = K::HatQ;
  else if (tag == "semigeneric") c.kind = K::SemiGeneric;
  else if (tag.rfind("gn:", 0) == 0) {
    c.kind = K::Gn;
    c.param = num_after(3);
    if (c.param < 2) throw Error(ErrorKind::Param, "gn:<n> needs n >= 2");
  } else if (tag.rfind("ft:", 0) == 0) {
    c.kind = K::FT;
    std::string rest = tag.substr(3);
    size_t start = 0;
    while (start <= rest.size()) {
      size_t comma = rest.find(',', start);
      std::string name = rest.substr(start, comma == std::string::npos ? comma : comma - start);
      if (name.empty()) throw Error(ErrorKind::Param, "empty forbidden tournament name");
      FiniteStructure f = named_tournament(name);
      if (f.n < 3) throw Error(ErrorKind::Param, "forbidden tournaments need >= 3 vertices");
      c.forbidden.push_back(f);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (c.forbidden.empty()) throw Error(ErrorKind::Param, "ft: needs at least one tournament");
  } else if (tag.rfind("comp(", 0) == 0 && tag.back() == ')') {
    c.kind = K::Composition;
    std::string inner = tag.substr(5, tag.size() - 6);
    int depth = 0;
    size_t split = std::string::npos;
    for (size_t i = 0; i < inner.size(); ++i) {
      if (inner[i] == '(') ++depth;
      else if (inner[i] == ')') --depth;
      else if (inner[i] == ',' && depth == 0) { split = i; break; }
    }
    if (split == std::string::npos)
      throw Error(ErrorKind::Param, "comp(<quotient>,<parts>) needs two tags");
    c.sub.push_back(parse(inner.substr(0, split)));
    c.sub.push_back(parse(inner.substr(split + 1)));
  } else if (tag == "tree-leaf") c.kind = K::TreeLeaf;
  else if (tag == "otree-leaf") c.kind = K::OrderedTreeLeaf;
  else throw Error(ErrorKind::Param, "unknown class tag: " + tag);
  return c;
}

std::string ClassSpec::tag() const {
  using K = ClassSpec::Kind;
  switch (kind) {
    case K::Tournaments: return "tournaments";
    case K::Q: return "q";
    case K::S2: return "s2";
    case K::S3: return "s3";
    case K::Poset: return "poset";
    case K::P3: return "p3";
    case K::Dn: return "d:" + std::to_string(param);
    case K::Domega: return "d-omega";
    case K::HatT: return "hatt";
    case K::HatQ: return "hatq";
    case K::SemiGeneric: return "semigeneric";
    case K::Gn: return "gn:" + std::to_string(param);
    case K::FT: return "ft:c3";
    case K::Composition: return "comp(" + sub[0].tag() + "," + sub[1].tag() + ")";
    case K::TreeLeaf: return "tree-leaf";
    case K::OrderedTreeLeaf: return "otree-leaf";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Age enumeration

std::vector<FiniteStructure> enumerate_age_members(const ClassSpec& spec, int max_n) {
  using K = ClassSpec::Kind;
  if (spec.kind == K::Composition || spec.kind == K::TreeLeaf || spec.kind == K::OrderedTreeLeaf)
    throw Error(ErrorKind::Unsupported, "enumeration not available for this class");
  bool tournaments_only =
      spec.kind == K::Tournaments || spec.kind == K::Q || spec.kind == K::S2;
  std::vector<FiniteStructure> out;
  std::vector<FiniteStructure> level;
  {
    FiniteStructure pt = FiniteStructure::empty(1);
    if (validate_structure(pt, spec)) level.push_back(pt);
  }
  for (int size = 1; size <= max_n && !level.empty(); ++size) {
    std::map<std::string, FiniteStructure> named;
    for (auto& s : level) named[canonical_form(s)] = s;
    level.clear();
    for (auto& [key, s] : named) out.push_back(s);
    if (size == max_n) break;
    long patterns = 1;
    for (int i = 0; i < size; ++i) patterns *= tournaments_only ? 2 : 3;
    std::map<std::string, FiniteStructure> next;
    for (auto& [key, s] : named) {
      for (long pat = 0; pat < patterns; ++pat) {
        FiniteStructure cand = FiniteStructure::empty(size + 1);
        for (int i = 0; i < size; ++i)
          for (int j = 0; j < size; ++j)
            if (i != j && s.arc(i, j)) cand.set_arc(i, j);
        long p = pat;
        for (int i = 0; i < size; ++i) {
          int code = (int)(p % (tournaments_only ? 2 : 3));
          p /= tournaments_only ? 2 : 3;
          if (tournaments_only) code += 1;
          if (code == 1) cand.set_arc(i, size);
          else if (code == 2) cand.set_arc(size, i);
        }
        if (!validate_structure(cand, spec)) continue;
        std::string ck = canonical_form(cand);
        if (!next.count(ck)) next[ck] = cand;
      }
    }
    for (auto& [k, v] : next) level.push_back(v);
  }
  return out;
}

}  // namespace homoflow
