#include "homoflow/expansions.hpp"

#include <algorithm>
#include <climits>
#include <numeric>
#include <set>

namespace homoflow {

// ---------------------------------------------------------------------------
// JSON and conversions

json expansion_to_json(const Expansion& e) {
  json j;
  j["base"] = structure_to_json(e.base);
  if (!e.order.empty()) j["order"] = e.order;
  if (!e.labels.empty()) {
    json l = json::object();
    for (int i = 0; i < e.base.n; ++i) l[std::to_string(i)] = e.labels[i];
    j["labels"] = l;
  }
  if (e.has_R()) {
    std::vector<std::pair<int, int>> rs;
    for (int i = 0; i < e.base.n; ++i)
      for (int k = 0; k < e.base.n; ++k)
        if (i != k && e.R_rel(i, k)) rs.push_back({i, k});
    std::sort(rs.begin(), rs.end());
    j["R"] = json::array();
    for (auto& [a, b] : rs) j["R"].push_back({a, b});
  }
  return j;
}

Expansion expansion_from_json(const json& j) {
  if (!j.is_object() || !j.contains("base"))
    throw Error(ErrorKind::Validation, "expansion JSON needs a 'base' structure");
  Expansion e;
  e.base = structure_from_json(j["base"]);
  int n = e.base.n;
  if (j.contains("order")) {
    e.order = j["order"].get<std::vector<int>>();
    if ((int)e.order.size() != n) throw Error(ErrorKind::Validation, "order must list every vertex");
    std::vector<char> seen(n, 0);
    for (int v : e.order) {
      if (v < 0 || v >= n || seen[v])
        throw Error(ErrorKind::Validation, "order is not a permutation");
      seen[v] = 1;
    }
  }
  if (j.contains("labels")) {
    e.labels.assign(n, INT_MIN);
    for (auto& [k, v] : j["labels"].items()) {
      int idx;
      try {
        idx = std::stoi(k);
      } catch (...) {
        throw Error(ErrorKind::Validation, "non-integer labels key");
      }
      if (idx < 0 || idx >= n) throw Error(ErrorKind::Validation, "labels key out of range");
      e.labels[idx] = v.get<int>();
    }
    for (int i = 0; i < n; ++i)
      if (e.labels[i] == INT_MIN) throw Error(ErrorKind::Validation, "labels must cover every vertex");
  }
  if (j.contains("R")) {
    e.ensure_R();
    for (auto& p : j["R"]) {
      if (!p.is_array() || p.size() != 2) throw Error(ErrorKind::Validation, "R entries must be pairs");
      int a = p[0].get<int>(), b = p[1].get<int>();
      if (a < 0 || a >= n || b < 0 || b >= n || a == b)
        throw Error(ErrorKind::Validation, "bad R pair");
      e.set_R(a, b);
    }
  }
  return e;
}

FiniteStructure to_structure(const Expansion& e) {
  FiniteStructure s = e.base;
  if (!e.order.empty()) {
    if (s.has_order()) throw Error(ErrorKind::Signature, "base already carries an order");
    s.order = e.order;
  }
  if (!e.labels.empty()) {
    if (s.has_parts()) throw Error(ErrorKind::Signature, "base already carries parts");
    s.parts = e.labels;
  }
  if (e.has_R()) {
    if (s.has_aux()) throw Error(ErrorKind::Signature, "base already carries an aux relation");
    s.aux = e.R;
  }
  check_well_formed(s);
  return s;
}

// ---------------------------------------------------------------------------
// Enumeration helpers

namespace {

using Sink = std::function<void(const Expansion&)>;

// class-index sequence plus within-class permutations, lexicographically
template <typename F>
void for_each_convex_order(const std::vector<std::vector<int>>& classes, F&& fn) {
  int k = (int)classes.size();
  std::vector<int> cidx(k);
  std::iota(cidx.begin(), cidx.end(), 0);
  std::vector<int> acc;
  auto rec = [&](auto&& self, int pos) -> void {
    if (pos == k) {
      fn(acc, cidx);
      return;
    }
    std::vector<int> mem = classes[cidx[pos]];
    do {
      size_t mark = acc.size();
      acc.insert(acc.end(), mem.begin(), mem.end());
      self(self, pos + 1);
      acc.resize(mark);
    } while (std::next_permutation(mem.begin(), mem.end()));
  };
  do {
    rec(rec, 0);
  } while (std::next_permutation(cidx.begin(), cidx.end()));
}

void emit_all_orders(const FiniteStructure& a, const Sink& fn) {
  std::vector<int> perm(a.n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    fn(Expansion{a, perm, {}, {}});
  } while (std::next_permutation(perm.begin(), perm.end()));
}

// linear extensions of the arc relation read as u -> v meaning u below v
void emit_linear_extensions(const FiniteStructure& a, const Sink& fn) {
  int n = a.n;
  std::vector<int> order;
  std::vector<char> placed(n, 0);
  auto rec = [&](auto&& self) -> void {
    if ((int)order.size() == n) {
      fn(Expansion{a, order, {}, {}});
      return;
    }
    for (int v = 0; v < n; ++v) {
      if (placed[v]) continue;
      bool minimal = true;
      for (int u = 0; u < n && minimal; ++u)
        if (!placed[u] && a.arc(u, v)) minimal = false;
      if (!minimal) continue;
      placed[v] = 1;
      order.push_back(v);
      self(self);
      order.pop_back();
      placed[v] = 0;
    }
  };
  rec(rec);
}

void emit_circle_labelings(const FiniteStructure& a, int m, const Sink& fn) {
  int n = a.n;
  int block = n + 1;
  int mod = m * block;
  std::vector<int> slot(n, -1);
  std::vector<char> res_used(block, 0);
  std::set<std::vector<int>> seen;
  auto consistent = [&](int u, int v) {
    int diff = ((slot[v] - slot[u]) % mod + mod) % mod;
    bool fwd = diff >= 1 && diff <= n;
    bool bwd = diff >= mod - n && diff <= mod - 1;
    if (a.arc(u, v)) return fwd;
    if (a.arc(v, u)) return bwd;
    return !fwd && !bwd;
  };
  auto rec = [&](auto&& self, int v) -> void {
    if (v == n) {
      std::vector<int> lab(n);
      for (int i = 0; i < n; ++i) lab[i] = slot[i] / block;
      seen.insert(lab);
      return;
    }
    for (int t = 0; t < mod; ++t) {
      if (t % block == 0 || res_used[t % block]) continue;
      slot[v] = t;
      bool ok = true;
      for (int u = 0; u < v && ok; ++u) ok = consistent(u, v);
      if (ok) {
        res_used[t % block] = 1;
        self(self, v + 1);
        res_used[t % block] = 0;
      }
      slot[v] = -1;
    }
  };
  rec(rec, 0);
  for (auto& lab : seen) fn(Expansion{a, {}, lab, {}});
}

// -1: y below x, 0: incomparable, +1: x below y (three-part twist)
int p3_pair_rel(bool xy, bool yx, int i, int j) {
  if (i == j) return xy ? 1 : (yx ? -1 : 0);
  if ((i + 1) % 3 == j) return xy ? -1 : (yx ? 0 : 1);
  return yx ? 1 : (xy ? 0 : -1);
}

bool p3_derived(const FiniteStructure& a, const std::vector<int>& lab,
                std::vector<std::vector<char>>& lt) {
  int n = a.n;
  lt.assign(n, std::vector<char>(n, 0));
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      int r = p3_pair_rel(a.arc(x, y), a.arc(y, x), lab[x], lab[y]);
      if (r > 0) lt[x][y] = 1;
      if (r < 0) lt[y][x] = 1;
    }
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z)
        if (x != y && y != z && x != z && lt[x][y] && lt[y][z] && !lt[x][z]) return false;
  return true;
}

void emit_p3(const FiniteStructure& a, const Sink& fn) {
  int n = a.n;
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    std::vector<int> lab(n);
    long c = code;
    for (int i = 0; i < n; ++i) {
      lab[i] = (int)(c % 3);
      c /= 3;
    }
    std::vector<std::vector<char>> lt;
    if (!p3_derived(a, lab, lt)) continue;
    FiniteStructure po = FiniteStructure::empty(n);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (lt[x][y]) po.set_arc(x, y);
    emit_linear_extensions(po, [&](const Expansion& oe) {
      fn(Expansion{a, oe.order, lab, {}});
    });
  }
}

void emit_hatt(const FiniteStructure& a, const Sink& fn) {
  auto classes = perp_partition(a);
  int k = (int)classes.size();
  std::vector<int> cidx(k);
  std::iota(cidx.begin(), cidx.end(), 0);
  do {
    for (int bits = 0; bits < (1 << k); ++bits) {
      std::vector<int> order;
      std::vector<int> labels(a.n, 0);
      for (int pos = 0; pos < k; ++pos) {
        auto& c = classes[cidx[pos]];
        int bit = (bits >> pos) & 1;
        if (c.size() == 2) {
          int first = c[bit], second = c[1 - bit];
          order.push_back(first);
          order.push_back(second);
          labels[first] = 0;
          labels[second] = 1;
        } else {
          order.push_back(c[0]);
          labels[c[0]] = bit;
        }
      }
      fn(Expansion{a, order, labels, {}});
    }
  } while (std::next_permutation(cidx.begin(), cidx.end()));
}

void emit_hatq(const FiniteStructure& a, const Sink& fn) {
  std::vector<int> orig;
  FiniteStructure full = hatt_completion(a, orig);
  std::vector<int> pos, letter;
  if (!hatq_pattern_search(full, &pos, &letter))
    throw Error(ErrorKind::Validation, "completion matches no column pattern");
  int k = full.n / 2;
  std::vector<std::vector<int>> vert(k, std::vector<int>(2, -1));
  for (int v = 0; v < full.n; ++v) vert[pos[v]][letter[v]] = v;

  // canonical expansion: columns in pattern order, letter 0 below letter 1,
  // letter 1 marked; the admissible set is its orbit under the 2k rotations
  std::vector<int> corder;
  std::vector<int> clabels(full.n, 0);
  for (int p = 0; p < k; ++p) {
    corder.push_back(vert[p][0]);
    corder.push_back(vert[p][1]);
    clabels[vert[p][1]] = 1;
  }

  std::set<std::pair<std::vector<int>, std::vector<int>>> seen;
  std::vector<Expansion> out;
  for (int t = 0; t < 2 * k; ++t) {
    std::vector<int> m(full.n);
    for (int v = 0; v < full.n; ++v)
      m[v] = vert[(pos[v] + t) % k][letter[v] ^ (((pos[v] + t) / k) & 1)];
    std::vector<int> forder(full.n);
    std::vector<int> flabels(full.n, 0);
    for (int i = 0; i < full.n; ++i) forder[i] = m[corder[i]];
    for (int v = 0; v < full.n; ++v) flabels[m[v]] = clabels[v];
    // restrict to the original vertices
    std::vector<int> rorder;
    std::vector<int> rlabels(a.n, 0);
    for (int v : forder)
      if (orig[v] >= 0) rorder.push_back(orig[v]);
    for (int v = 0; v < full.n; ++v)
      if (orig[v] >= 0) rlabels[orig[v]] = flabels[v];
    if (seen.insert({rorder, rlabels}).second) out.push_back(Expansion{a, rorder, rlabels, {}});
  }
  for (auto& e : out) fn(e);
}

void emit_semigeneric(const FiniteStructure& a, const Sink& fn) {
  auto classes = perp_partition(a);
  int k = (int)classes.size();
  int pairs = k * (k - 1) / 2;
  for_each_convex_order(classes, [&](const std::vector<int>& order, const std::vector<int>& cidx) {
    for (uint64_t bits = 0; bits < (1ull << pairs); ++bits) {
      Expansion e{a, order, {}, {}};
      e.ensure_R();
      int pix = 0;
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j, ++pix) {
          int beta = (int)((bits >> pix) & 1);
          auto& colI = classes[cidx[i]];
          auto& colJ = classes[cidx[j]];
          int x0 = colI[0], y0 = colJ[0];
          for (int y : colJ) {
            int rxy = beta ^ (a.arc(x0, y) ? 1 : 0) ^ (a.arc(x0, y0) ? 1 : 0);
            if (rxy)
              for (int x : colI) e.set_R(x, y);
          }
          for (int x : colI) {
            int ryx = beta ^ (a.arc(x, y0) ? 1 : 0);
            if (ryx)
              for (int y : colJ) e.set_R(y, x);
          }
        }
      fn(e);
    }
  });
}

void emit_dn(const FiniteStructure& a, int n, const Sink& fn) {
  auto classes = perp_partition(a);
  int k = (int)classes.size();
  // all strictly increasing label sequences of length k drawn from 1..n
  std::vector<std::vector<int>> combos;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if ((int)cur.size() == k) {
      combos.push_back(cur);
      return;
    }
    for (int v = start; v <= n; ++v) {
      cur.push_back(v);
      self(self, v + 1);
      cur.pop_back();
    }
  };
  rec(rec, 1);
  for_each_convex_order(classes, [&](const std::vector<int>& order, const std::vector<int>& cidx) {
    for (auto& combo : combos) {
      std::vector<int> labels(a.n, 0);
      for (int posn = 0; posn < k; ++posn)
        for (int v : classes[cidx[posn]]) labels[v] = combo[posn];
      fn(Expansion{a, order, labels, {}});
    }
  });
}

}  // namespace

void for_each_expansion(const ClassSpec& spec, const FiniteStructure& a, const Sink& fn) {
  check_well_formed(a);
  if (!validate_structure(a, spec))
    throw Error(ErrorKind::Validation, "structure is not a member of " + spec.tag());
  using K = ClassSpec::Kind;
  switch (spec.kind) {
    case K::Tournaments:
    case K::Gn:
    case K::FT:
      emit_all_orders(a, fn);
      return;
    case K::Q:
    case K::Poset:
      emit_linear_extensions(a, fn);
      return;
    case K::Domega:
      for_each_convex_order(perp_partition(a),
                            [&](const std::vector<int>& order, const std::vector<int>&) {
                              fn(Expansion{a, order, {}, {}});
                            });
      return;
    case K::Dn:
      emit_dn(a, spec.param, fn);
      return;
    case K::S2:
      emit_circle_labelings(a, 2, fn);
      return;
    case K::S3:
      emit_circle_labelings(a, 3, fn);
      return;
    case K::P3:
      emit_p3(a, fn);
      return;
    case K::HatT:
      emit_hatt(a, fn);
      return;
    case K::HatQ:
      emit_hatq(a, fn);
      return;
    case K::SemiGeneric:
      emit_semigeneric(a, fn);
      return;
    case K::Composition:
    case K::TreeLeaf:
    case K::OrderedTreeLeaf:
      throw Error(ErrorKind::Unsupported, "expansions for this class live in their own module");
  }
}

std::vector<Expansion> enumerate_expansions(const ClassSpec& spec, const FiniteStructure& a) {
  std::vector<Expansion> out;
  for_each_expansion(spec, a, [&](const Expansion& e) { out.push_back(e); });
  return out;
}

Int count_expansions(const ClassSpec& spec, const FiniteStructure& a) {
  long c = 0;
  for_each_expansion(spec, a, [&](const Expansion&) { ++c; });
  return Int(c);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool order_is_perm(const Expansion& e) {
  if ((int)e.order.size() != e.base.n) return false;
  std::vector<char> seen(e.base.n, 0);
  for (int v : e.order) {
    if (v < 0 || v >= e.base.n || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

bool order_convex(const Expansion& e, const std::vector<std::vector<int>>& classes) {
  std::vector<int> cls(e.base.n, -1);
  for (int i = 0; i < (int)classes.size(); ++i)
    for (int v : classes[i]) cls[v] = i;
  std::vector<char> closed((int)classes.size(), 0);
  int current = -1;
  for (int v : e.order) {
    int c = cls[v];
    if (c == current) continue;
    if (closed[c]) return false;
    if (current >= 0) closed[current] = 1;
    current = c;
  }
  return true;
}

// class sequence induced by the order
std::vector<int> class_sequence(const Expansion& e, const std::vector<std::vector<int>>& classes) {
  std::vector<int> cls(e.base.n, -1);
  for (int i = 0; i < (int)classes.size(); ++i)
    for (int v : classes[i]) cls[v] = i;
  std::vector<int> seq;
  for (int v : e.order)
    if (seq.empty() || seq.back() != cls[v]) seq.push_back(cls[v]);
  return seq;
}

bool circle_labels_realizable(const FiniteStructure& a, int m, const std::vector<int>& labels) {
  int n = a.n;
  int block = n + 1;
  int mod = m * block;
  std::vector<int> slot(n, -1);
  std::vector<char> res_used(block, 0);
  auto consistent = [&](int u, int v) {
    int diff = ((slot[v] - slot[u]) % mod + mod) % mod;
    bool fwd = diff >= 1 && diff <= n;
    bool bwd = diff >= mod - n && diff <= mod - 1;
    if (a.arc(u, v)) return fwd;
    if (a.arc(v, u)) return bwd;
    return !fwd && !bwd;
  };
  auto rec = [&](auto&& self, int v) -> bool {
    if (v == n) return true;
    for (int r = 1; r <= n; ++r) {
      if (res_used[r]) continue;
      int t = labels[v] * block + r;
      slot[v] = t;
      bool ok = true;
      for (int u = 0; u < v && ok; ++u) ok = consistent(u, v);
      if (ok) {
        res_used[r] = 1;
        if (self(self, v + 1)) return true;
        res_used[r] = 0;
      }
      slot[v] = -1;
    }
    return false;
  };
  return rec(rec, 0);
}

}  // namespace

bool validate_expansion(const ClassSpec& spec, const Expansion& e) {
  check_well_formed(e.base);
  if (!validate_structure(e.base, spec)) return false;
  using K = ClassSpec::Kind;
  int n = e.base.n;
  switch (spec.kind) {
    case K::Tournaments:
    case K::Gn:
    case K::FT:
      return order_is_perm(e) && e.labels.empty() && !e.has_R();
    case K::Q:
    case K::Poset: {
      if (!order_is_perm(e) || !e.labels.empty() || e.has_R()) return false;
      std::vector<int> posn(n);
      for (int i = 0; i < n; ++i) posn[e.order[i]] = i;
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          if (u != v && e.base.arc(u, v) && posn[u] > posn[v]) return false;
      return true;
    }
    case K::Domega:
      return order_is_perm(e) && e.labels.empty() && !e.has_R() &&
             order_convex(e, perp_partition(e.base));
    case K::Dn: {
      if (!order_is_perm(e) || (int)e.labels.size() != n || e.has_R()) return false;
      auto classes = perp_partition(e.base);
      for (auto& c : classes)
        for (int v : c)
          if (e.labels[v] < 1 || e.labels[v] > spec.param || e.labels[v] != e.labels[c[0]])
            return false;
      if (!order_convex(e, classes)) return false;
      auto seq = class_sequence(e, classes);
      for (size_t i = 1; i < seq.size(); ++i)
        if (e.labels[classes[seq[i]][0]] <= e.labels[classes[seq[i - 1]][0]]) return false;
      return true;
    }
    case K::S2:
    case K::S3: {
      int m = spec.kind == K::S2 ? 2 : 3;
      if (!e.order.empty() || e.has_R() || (int)e.labels.size() != n) return false;
      for (int l : e.labels)
        if (l < 0 || l >= m) return false;
      return circle_labels_realizable(e.base, m, e.labels);
    }
    case K::P3: {
      if (!order_is_perm(e) || (int)e.labels.size() != n || e.has_R()) return false;
      for (int l : e.labels)
        if (l < 0 || l > 2) return false;
      std::vector<std::vector<char>> lt;
      if (!p3_derived(e.base, e.labels, lt)) return false;
      std::vector<int> posn(n);
      for (int i = 0; i < n; ++i) posn[e.order[i]] = i;
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          if (u != v && lt[u][v] && posn[u] > posn[v]) return false;
      return true;
    }
    case K::HatT: {
      if (!order_is_perm(e) || (int)e.labels.size() != n || e.has_R()) return false;
      for (int l : e.labels)
        if (l < 0 || l > 1) return false;
      auto classes = perp_partition(e.base);
      if (!order_convex(e, classes)) return false;
      std::vector<int> posn(n);
      for (int i = 0; i < n; ++i) posn[e.order[i]] = i;
      for (auto& c : classes) {
        if (c.size() == 2) {
          int first = posn[c[0]] < posn[c[1]] ? c[0] : c[1];
          int second = first == c[0] ? c[1] : c[0];
          if (e.labels[first] != 0 || e.labels[second] != 1) return false;
        }
      }
      return true;
    }
    case K::HatQ: {
      bool found = false;
      for_each_expansion(spec, e.base, [&](const Expansion& x) {
        if (x == e) found = true;
      });
      return found;
    }
    case K::SemiGeneric: {
      if (!order_is_perm(e) || !e.labels.empty() || !e.has_R()) return false;
      auto classes = perp_partition(e.base);
      if (!order_convex(e, classes)) return false;
      std::vector<int> cls(n, -1);
      for (int i = 0; i < (int)classes.size(); ++i)
        for (int v : classes[i]) cls[v] = i;
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          if (x != y && e.R_rel(x, y) && cls[x] == cls[y]) return false;
      // column-uniformity in the first coordinate
      for (int y = 0; y < n; ++y)
        for (auto& c : classes) {
          if (cls[y] == cls[c[0]]) continue;
          for (int x : c)
            if (e.R_rel(x, y) != e.R_rel(c[0], y)) return false;
        }
      // build the transversal amalgam forced by (order, R) and check parity
      auto seq = class_sequence(e, classes);
      int k = (int)seq.size();
      FiniteStructure b = FiniteStructure::empty(n + k);
      for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
          if (x != y && e.base.arc(x, y)) b.set_arc(x, y);
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) b.set_arc(n + i, n + j);
      for (int i = 0; i < k; ++i) {
        int ci = seq[i];
        for (int y = 0; y < n; ++y) {
          if (cls[y] == ci) continue;
          if (e.R_rel(classes[ci][0], y))
            b.set_arc(n + i, y);
          else
            b.set_arc(y, n + i);
        }
      }
      try {
        return validate_structure(b, spec);
      } catch (const Error&) {
        return false;
      }
    }
    case K::Composition:
    case K::TreeLeaf:
    case K::OrderedTreeLeaf:
      throw Error(ErrorKind::Unsupported, "expansions for this class live in their own module");
  }
  return false;
}

// ---------------------------------------------------------------------------
// Restriction and relative counting

Expansion restrict_expansion(const Expansion& big, const VertexMap& emb,
                             const FiniteStructure& small_base) {
  Expansion r;
  r.base = small_base;
  int n = small_base.n;
  std::vector<int> inv(big.base.n, -1);
  for (int i = 0; i < n; ++i) inv[emb[i]] = i;
  if (!big.order.empty()) {
    for (int v : big.order)
      if (inv[v] >= 0) r.order.push_back(inv[v]);
  }
  if (!big.labels.empty()) {
    r.labels.resize(n);
    for (int i = 0; i < n; ++i) r.labels[i] = big.labels[emb[i]];
  }
  if (big.has_R()) {
    r.ensure_R();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && big.R_rel(emb[i], emb[j])) r.set_R(i, j);
  }
  return r;
}

long count_relative_expansions(const ClassSpec& spec, const Expansion& a_star,
                               const FiniteStructure& b, const VertexMap& emb) {
  if (!is_embedding(a_star.base, b, emb))
    throw Error(ErrorKind::Embedding, "map is not an embedding of the small base");
  long cnt = 0;
  for_each_expansion(spec, b, [&](const Expansion& B) {
    if (restrict_expansion(B, emb, a_star.base) == a_star) ++cnt;
  });
  return cnt;
}

// ---------------------------------------------------------------------------
// Closed forms

Int closed_form_total(const ClassSpec& spec, const FiniteStructure& a) {
  using K = ClassSpec::Kind;
  check_well_formed(a);
  if (!validate_structure(a, spec))
    throw Error(ErrorKind::Validation, "structure is not a member of " + spec.tag());
  switch (spec.kind) {
    case K::Tournaments:
    case K::Gn:
    case K::FT:
      return factorial(a.n);
    case K::Q:
      return 1;
    case K::Domega: {
      auto cl = perp_partition(a);
      Int r = factorial((int)cl.size());
      for (auto& c : cl) r *= factorial((int)c.size());
      return r;
    }
    case K::Dn: {
      auto cl = perp_partition(a);
      Int r = falling(spec.param, (int)cl.size());
      for (auto& c : cl) r *= factorial((int)c.size());
      return r;
    }
    case K::HatT: {
      auto cl = perp_partition(a);
      return factorial((int)cl.size()) * int_pow(2, (int)cl.size());
    }
    case K::HatQ: {
      auto cl = perp_partition(a);
      for (auto& c : cl)
        if (c.size() != 2)
          throw Error(ErrorKind::Unsupported, "closed form needs fully doubled columns");
      return Int(2 * (int)cl.size());
    }
    case K::SemiGeneric: {
      auto cl = perp_partition(a);
      int k = (int)cl.size();
      Int r = factorial(k) * int_pow(2, k * (k - 1) / 2);
      for (auto& c : cl) r *= factorial((int)c.size());
      return r;
    }
    default:
      throw Error(ErrorKind::Unsupported, "no closed form for " + spec.tag());
  }
}

Int closed_form_count(const ClassSpec& spec, const FiniteStructure& a, const FiniteStructure& b) {
  using K = ClassSpec::Kind;
  check_well_formed(a);
  check_well_formed(b);
  if (!validate_structure(a, spec) || !validate_structure(b, spec))
    throw Error(ErrorKind::Validation, "inputs must be members of " + spec.tag());
  auto prod_fact = [](const std::vector<std::vector<int>>& cl) {
    Int r = 1;
    for (auto& c : cl) r *= factorial((int)c.size());
    return r;
  };
  switch (spec.kind) {
    case K::Domega: {
      auto ca = perp_partition(a), cb = perp_partition(b);
      Rat r = Rat(factorial((int)cb.size()), factorial((int)ca.size()));
      r *= Rat(prod_fact(cb), prod_fact(ca));
      return numerator(r) / denominator(r);
    }
    case K::Dn: {
      auto ca = perp_partition(a), cb = perp_partition(b);
      int ka = (int)ca.size(), kb = (int)cb.size();
      Int pre = falling(spec.param - ka, kb - ka);
      Rat r = Rat(pre * prod_fact(cb), prod_fact(ca));
      return numerator(r) / denominator(r);
    }
    case K::HatT: {
      auto ca = perp_partition(a), cb = perp_partition(b);
      int ka = (int)ca.size(), kb = (int)cb.size();
      Rat r = Rat(factorial(kb), factorial(ka));
      r *= int_pow(2, kb - ka);
      return numerator(r) / denominator(r);
    }
    case K::SemiGeneric: {
      auto ca = perp_partition(a), cb = perp_partition(b);
      int ka = (int)ca.size(), kb = (int)cb.size();
      Rat r = Rat(factorial(kb) * int_pow(2, kb * (kb - 1) / 2) * prod_fact(cb),
                  factorial(ka) * int_pow(2, ka * (ka - 1) / 2) * prod_fact(ca));
      return numerator(r) / denominator(r);
    }
    default:
      throw Error(ErrorKind::Unsupported, "no closed relative form for " + spec.tag());
  }
}

// ---------------------------------------------------------------------------
// Parity completion and transversal amalgams

std::pair<int, int> complete_fourth_edge(const FiniteStructure& partial) {
  check_well_formed(partial);
  if (partial.n != 4) throw Error(ErrorKind::Config, "expects exactly four vertices");
  static const int pairings[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
  int found = -1;
  for (int p = 0; p < 3; ++p) {
    int a = pairings[p][0], b = pairings[p][1], c = pairings[p][2], d = pairings[p][3];
    if (partial.adjacent(a, b) || partial.adjacent(c, d)) continue;
    int arced = (partial.adjacent(a, c) ? 1 : 0) + (partial.adjacent(a, d) ? 1 : 0) +
                (partial.adjacent(b, c) ? 1 : 0) + (partial.adjacent(b, d) ? 1 : 0);
    if (arced != 3) continue;
    if (found >= 0) throw Error(ErrorKind::Config, "ambiguous column shape");
    found = p;
  }
  if (found < 0) throw Error(ErrorKind::Config, "not two columns with three decided cross arcs");
  int a = pairings[found][0], b = pairings[found][1], c = pairings[found][2],
      d = pairings[found][3];
  int u = -1, v = -1;
  for (int x : {a, b})
    for (int y : {c, d})
      if (!partial.adjacent(x, y)) u = x, v = y;
  int fwd = (partial.arc(a, c) ? 1 : 0) + (partial.arc(a, d) ? 1 : 0) +
            (partial.arc(b, c) ? 1 : 0) + (partial.arc(b, d) ? 1 : 0);
  // evenness of arcs directed from the first column into the second
  return (fwd % 2) ? std::make_pair(u, v) : std::make_pair(v, u);
}

FiniteStructure amalgamate_transversal(const FiniteStructure& a,
                                       const std::vector<int>& column_order, uint64_t seed) {
  check_well_formed(a);
  ClassSpec sg = ClassSpec::parse("semigeneric");
  if (!validate_structure(a, sg))
    throw Error(ErrorKind::Validation, "input is not a parity-class member");
  auto classes = perp_partition(a);
  int k = (int)classes.size();
  if ((int)column_order.size() != k)
    throw Error(ErrorKind::Param, "column order must list every column once");
  std::vector<char> seen(k, 0);
  for (int c : column_order) {
    if (c < 0 || c >= k || seen[c]) throw Error(ErrorKind::Param, "bad column order");
    seen[c] = 1;
  }
  FiniteStructure b = FiniteStructure::empty(a.n + k);
  for (int x = 0; x < a.n; ++x)
    for (int y = 0; y < a.n; ++y)
      if (x != y && a.arc(x, y)) b.set_arc(x, y);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) b.set_arc(a.n + i, a.n + j);
  Rng rng(seed);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      int beta = rng.coin() ? 1 : 0;
      auto& colI = classes[column_order[i]];
      auto& colJ = classes[column_order[j]];
      int x0 = colI[0], y0 = colJ[0];
      for (int y : colJ) {
        int tiy = beta ^ (a.arc(x0, y) ? 1 : 0) ^ (a.arc(x0, y0) ? 1 : 0);
        if (tiy)
          b.set_arc(a.n + i, y);
        else
          b.set_arc(y, a.n + i);
      }
      for (int x : colI) {
        int xtj = 1 ^ beta ^ (a.arc(x, y0) ? 1 : 0);
        if (xtj)
          b.set_arc(x, a.n + j);
        else
          b.set_arc(a.n + j, x);
      }
    }
  return b;
}

// ---------------------------------------------------------------------------
// Cover collapse and rebuild

FiniteStructure delta(const Expansion& cover) {
  check_well_formed(cover.base);
  auto classes = perp_partition(cover.base);
  for (auto& c : classes)
    if (c.size() != 2) throw Error(ErrorKind::Domain, "collapse needs fully doubled columns");
  if (!order_is_perm(cover) || (int)cover.labels.size() != cover.base.n)
    throw Error(ErrorKind::Domain, "collapse needs an order and labels");
  if (!order_convex(cover, classes)) throw Error(ErrorKind::Domain, "order must be convex");
  int k = (int)classes.size();
  std::vector<int> zero_of(k, -1), one_of(k, -1);
  for (int ci = 0; ci < k; ++ci) {
    for (int v : classes[ci]) {
      if (cover.labels[v] == 0) zero_of[ci] = v;
      else if (cover.labels[v] == 1) one_of[ci] = v;
    }
    if (zero_of[ci] < 0 || one_of[ci] < 0)
      throw Error(ErrorKind::Domain, "each column needs one 0-label and one 1-label");
  }
  auto seq = class_sequence(cover, classes);
  FiniteStructure t = FiniteStructure::empty(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      if (cover.base.arc(zero_of[seq[i]], one_of[seq[j]])) t.set_arc(i, j);
    }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (t.arc(i, j) == t.arc(j, i)) throw Error(ErrorKind::Domain, "inconsistent cover arcs");
  t.order.resize(k);
  std::iota(t.order.begin(), t.order.end(), 0);
  return t;
}

Expansion delta_inverse(const FiniteStructure& ordered_tournament) {
  check_well_formed(ordered_tournament);
  const FiniteStructure& t = ordered_tournament;
  if (!t.has_order()) throw Error(ErrorKind::Domain, "needs a total order");
  for (int i = 0; i < t.n; ++i)
    for (int j = i + 1; j < t.n; ++j)
      if (!t.adjacent(i, j)) throw Error(ErrorKind::Domain, "needs a tournament");
  int n = t.n;
  FiniteStructure base = FiniteStructure::empty(2 * n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          bool arc = (t.arc(y, x) && i == j) || (t.arc(x, y) && i != j);
          if (arc) base.set_arc(2 * x + i, 2 * y + j);
        }
    }
  Expansion e;
  e.base = base;
  e.labels.assign(2 * n, 0);
  for (int x = 0; x < n; ++x) e.labels[2 * x + 1] = 1;
  for (int x : t.order) {
    e.order.push_back(2 * x);      // 0-labelled element first within its column
    e.order.push_back(2 * x + 1);
  }
  return e;
}

VertexMap qhat_expansion_iso(const Expansion& e1, const Expansion& e2) {
  if (!(e1.base == e2.base)) throw Error(ErrorKind::Domain, "expansions must share a base");
  auto classes = perp_partition(e1.base);
  for (auto& c : classes)
    if (c.size() != 2) throw Error(ErrorKind::Unsupported, "needs fully doubled columns");
  std::vector<int> pos, letter;
  if (!hatq_pattern_search(e1.base, &pos, &letter))
    throw Error(ErrorKind::Domain, "base matches no column pattern");
  int k = e1.base.n / 2;
  std::vector<std::vector<int>> vert(k, std::vector<int>(2, -1));
  for (int v = 0; v < e1.base.n; ++v) vert[pos[v]][letter[v]] = v;
  for (int t = 0; t < 2 * k; ++t) {
    VertexMap m(e1.base.n);
    for (int v = 0; v < e1.base.n; ++v) {
      int np = (pos[v] + t) % k;
      int nl = letter[v] ^ (((pos[v] + t) / k) & 1);
      m[v] = vert[np][nl];
    }
    if (!is_embedding(e1.base, e1.base, m)) continue;
    Expansion moved;
    moved.base = e1.base;
    for (int v : e1.order) moved.order.push_back(m[v]);
    moved.labels.assign(e1.base.n, 0);
    for (int v = 0; v < e1.base.n; ++v) moved.labels[m[v]] = e1.labels[v];
    if (moved == e2) return m;
  }
  throw Error(ErrorKind::Embedding, "no rotation carries one expansion to the other");
}

// ---------------------------------------------------------------------------
// Expansion property search

ExpansionPropertyResult bounded_expansion_property_search(const ClassSpec& spec,
                                                          const FiniteStructure& a,
                                                          int size_bound) {
  check_well_formed(a);
  if (!validate_structure(a, spec))
    throw Error(ErrorKind::Validation, "structure is not a member of " + spec.tag());
  auto aexps = enumerate_expansions(spec, a);
  std::set<std::string> want;
  for (auto& x : aexps) want.insert(canonical_form(to_structure(x)));
  auto members = enumerate_age_members(spec, size_bound);
  for (auto& b : members) {
    if (b.n < a.n) continue;
    auto embs = enumerate_embeddings(a, b);
    if (embs.empty()) continue;
    bool all_ok = true;
    for_each_expansion(spec, b, [&](const Expansion& B) {
      if (!all_ok) return;
      std::set<std::string> got;
      for (auto& phi : embs) got.insert(canonical_form(to_structure(restrict_expansion(B, phi, a))));
      for (auto& w : want)
        if (!got.count(w)) {
          all_ok = false;
          return;
        }
    });
    if (all_ok) return {true, b};
  }
  return {false, {}};
}

}  // namespace homoflow
