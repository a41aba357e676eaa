#include "homoflow/solver.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <set>

namespace homoflow {

namespace {

constexpr long kMaxExpansionsPerStructure = 300000;
constexpr long kMaxVariables = 1000000;

// One embedding per orbit under precomposed domain and postcomposed codomain
// automorphisms; each orbit is represented by its least map.
std::vector<VertexMap> embedding_orbit_reps(const FiniteStructure& dom,
                                            const FiniteStructure& cod) {
  auto maps = enumerate_embeddings(dom, cod);
  if (maps.empty()) return {};
  auto pre = automorphisms(dom);
  auto post = automorphisms(cod);
  std::set<VertexMap> seen;
  std::vector<VertexMap> reps;
  for (auto& m : maps) {
    if (seen.count(m)) continue;
    std::vector<VertexMap> orbit{m};
    seen.insert(m);
    for (size_t q = 0; q < orbit.size(); ++q) {
      VertexMap cur = orbit[q];
      VertexMap next(cur.size());
      for (auto& a : pre) {
        for (size_t v = 0; v < cur.size(); ++v) next[v] = cur[a[v]];
        if (seen.insert(next).second) orbit.push_back(next);
      }
      for (auto& b : post) {
        for (size_t v = 0; v < cur.size(); ++v) next[v] = b[cur[v]];
        if (seen.insert(next).second) orbit.push_back(next);
      }
    }
    reps.push_back(*std::min_element(orbit.begin(), orbit.end()));
  }
  return reps;
}

}  // namespace

Fragment build_fragment(const ClassSpec& spec, const std::vector<FiniteStructure>& tops) {
  if (tops.empty()) throw Error(ErrorKind::Param, "fragment needs at least one structure");
  Fragment frag;
  frag.spec = spec;
  for (auto& t : tops) {
    if (!validate_structure(t, spec))
      throw Error(ErrorKind::Validation, "fragment member outside " + spec.tag());
    if (std::find(frag.structures.begin(), frag.structures.end(), t) == frag.structures.end())
      frag.structures.push_back(t);
  }
  std::vector<std::string> canon;
  for (auto& s : frag.structures) canon.push_back(canonical_form(s));
  for (size_t i = 0; i < frag.structures.size(); ++i) {
    FiniteStructure s = frag.structures[i];  // copy: the vector grows below
    for (int k = s.n - 1; k >= 1; --k) {
      std::vector<int> sel(k);
      std::iota(sel.begin(), sel.end(), 0);
      while (true) {
        FiniteStructure sub = s.restrict_to(sel);
        std::string c = canonical_form(sub);
        if (std::find(canon.begin(), canon.end(), c) == canon.end()) {
          frag.structures.push_back(sub);
          canon.push_back(c);
        }
        int p = k - 1;
        while (p >= 0 && sel[p] == s.n - k + p) --p;
        if (p < 0) break;
        ++sel[p];
        for (int q = p + 1; q < k; ++q) sel[q] = sel[q - 1] + 1;
      }
    }
  }
  for (size_t i = 0; i < frag.structures.size(); ++i)
    for (size_t j = 0; j < frag.structures.size(); ++j) {
      if (i == j || frag.structures[i].n > frag.structures[j].n) continue;
      for (auto& rep : embedding_orbit_reps(frag.structures[i], frag.structures[j]))
        frag.embeddings.push_back({(int)i, (int)j, rep});
    }
  return frag;
}

void validate_fragment(const Fragment& frag) {
  if (frag.structures.empty()) throw Error(ErrorKind::Param, "empty fragment");
  for (auto& s : frag.structures)
    if (!validate_structure(s, frag.spec))
      throw Error(ErrorKind::Validation, "fragment member outside " + frag.spec.tag());
  int m = (int)frag.structures.size();
  std::vector<std::vector<char>> witnessed(m, std::vector<char>(m, 0));
  for (auto& e : frag.embeddings) {
    if (e.from < 0 || e.from >= m || e.to < 0 || e.to >= m || e.from == e.to)
      throw Error(ErrorKind::Validation, "embedding endpoints out of range");
    if (!is_embedding(frag.structures[e.from], frag.structures[e.to], e.map))
      throw Error(ErrorKind::Embedding, "stored map is not an embedding");
    witnessed[e.from][e.to] = 1;
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j || witnessed[i][j] || frag.structures[i].n > frag.structures[j].n) continue;
      if (count_embeddings(frag.structures[i], frag.structures[j]) > 0)
        throw Error(ErrorKind::Validation, "substructure relation without stored embedding");
    }
}

int LinearSystem::var_structure(int v) const {
  int lo = 0, hi = (int)var_base.size() - 1;
  while (lo < hi) {
    int mid = (lo + hi + 1) / 2;
    if (var_base[mid] <= v)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

int LinearSystem::var_expansion(int v) const { return v - var_base[var_structure(v)]; }

LinearSystem build_constraints(const ClassSpec& spec, const Fragment& frag) {
  validate_fragment(frag);
  LinearSystem sys;
  sys.frag = frag;
  long total = 0;
  struct TooMany {};
  for (auto& s : frag.structures) {
    sys.var_base.push_back((int)total);
    long count = 0;  // pre-count with early abort so huge lists never materialize
    try {
      for_each_expansion(spec, s, [&](const Expansion&) {
        if (++count > kMaxExpansionsPerStructure) throw TooMany{};
      });
    } catch (const TooMany&) {
      throw Error(ErrorKind::BoundExceeded, "expansion enumeration too large");
    }
    total += count;
    if (total > kMaxVariables)
      throw Error(ErrorKind::BoundExceeded, "constraint system too large");
    sys.expansions.push_back(enumerate_expansions(spec, s));
  }
  sys.num_vars = (int)total;

  for (int s = 0; s < (int)frag.structures.size(); ++s) {
    Row r;
    r.kind = RowKind::Sum;
    r.structure = s;
    for (int e = 0; e < (int)sys.expansions[s].size(); ++e) r.vars.push_back(sys.var(s, e));
    sys.rows.push_back(std::move(r));
  }

  // one equality chain per isomorphism class of expanded structure
  std::map<std::string, std::pair<int, FiniteStructure>> chain_tail;
  for (int s = 0; s < (int)frag.structures.size(); ++s)
    for (int e = 0; e < (int)sys.expansions[s].size(); ++e) {
      FiniteStructure full = to_structure(sys.expansions[s][e]);
      std::string key = canonical_form(full);
      auto it = chain_tail.find(key);
      if (it == chain_tail.end()) {
        chain_tail.emplace(key, std::make_pair(sys.var(s, e), full));
        continue;
      }
      auto iso = find_isomorphism(it->second.second, full);
      if (!iso)
        throw Error(ErrorKind::Domain, "canonical forms collide without an isomorphism");
      Row r;
      r.kind = RowKind::Iso;
      r.lhs = it->second.first;
      r.rhs = sys.var(s, e);
      r.iso = *iso;
      sys.rows.push_back(std::move(r));
      it->second = {sys.var(s, e), full};
    }

  for (int ei = 0; ei < (int)frag.embeddings.size(); ++ei) {
    auto& fe = frag.embeddings[ei];
    auto& dom_exps = sys.expansions[fe.from];
    auto& cod_exps = sys.expansions[fe.to];
    std::vector<std::vector<int>> summands(dom_exps.size());
    for (int j = 0; j < (int)cod_exps.size(); ++j) {
      Expansion small = restrict_expansion(cod_exps[j], fe.map, frag.structures[fe.from]);
      auto it = std::find(dom_exps.begin(), dom_exps.end(), small);
      if (it == dom_exps.end())
        throw Error(ErrorKind::Domain, "restriction fell outside the enumerated expansions");
      summands[it - dom_exps.begin()].push_back(sys.var(fe.to, j));
    }
    for (int i = 0; i < (int)dom_exps.size(); ++i) {
      Row r;
      r.kind = RowKind::Ext;
      r.emb = ei;
      r.lhs = sys.var(fe.from, i);
      r.vars = std::move(summands[i]);
      sys.rows.push_back(std::move(r));
    }
  }
  return sys;
}

// ---------------------------------------------------------------------------
// Forcing-chain propagation

namespace {

void row_terms(const Row& r, std::vector<std::pair<int, Rat>>& terms, Rat& rhs) {
  terms.clear();
  if (r.kind == RowKind::Sum) {
    rhs = 1;
    for (int v : r.vars) terms.push_back({v, Rat(1)});
  } else if (r.kind == RowKind::Iso) {
    rhs = 0;
    terms.push_back({r.lhs, Rat(1)});
    terms.push_back({r.rhs, Rat(-1)});
  } else {
    rhs = 0;
    terms.push_back({r.lhs, Rat(1)});
    for (int v : r.vars) terms.push_back({v, Rat(-1)});
  }
}

int designated_var(const Row& r) { return r.kind == RowKind::Sum ? r.vars[0] : r.lhs; }

struct PropResult {
  enum class Kind { Open, ForcedZero, ValueClash } kind = Kind::Open;
  std::vector<int> zeros;
  int clash_row = -1;
  int clash_var = -1;
  std::vector<Rat> clash_values;
  // fixpoint state: per-variable class representative and assigned value
  std::vector<int> root_of;
  std::vector<char> root_has;
  std::vector<Rat> root_val;
};

// Applies one deduction at a time, always from the highest-priority actionable
// row: sum and isomorphism rows first, then unique-extension rows, then the
// rest. Deductions: fold assigned classes into the constant, merge a pure
// two-variable equality, assign a lone unknown, zero a same-signed null sum.
// A fully-assigned row with nonzero residue is a clash; when zeros have
// already been derived they stand as the conclusion.
PropResult propagate(int nvars, const std::vector<Row>& rows) {
  PropResult out;
  std::vector<int> parent(nvars);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> rnk(nvars, 0);
  std::vector<char> has(nvars, 0);
  std::vector<Rat> val(nvars);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](int a, int b) {
    if (rnk[a] < rnk[b]) std::swap(a, b);
    parent[b] = a;
    if (rnk[a] == rnk[b]) ++rnk[a];
  };

  std::vector<int> prio(rows.size());
  std::iota(prio.begin(), prio.end(), 0);
  auto tier = [&](const Row& r) {
    if (r.kind != RowKind::Ext) return 0;
    return r.vars.size() <= 1 ? 1 : 2;
  };
  std::stable_sort(prio.begin(), prio.end(),
                   [&](int a, int b) { return tier(rows[a]) < tier(rows[b]); });

  auto collect_zeros = [&]() {
    out.zeros.clear();
    for (int v = 0; v < nvars; ++v) {
      int r = find(v);
      if (has[r] && val[r] == 0) out.zeros.push_back(v);
    }
  };
  auto snapshot = [&]() {
    out.root_of.resize(nvars);
    for (int v = 0; v < nvars; ++v) out.root_of[v] = find(v);
    out.root_has.assign(has.begin(), has.end());
    out.root_val.assign(val.begin(), val.end());
  };

  std::vector<std::pair<int, Rat>> terms;
  Rat rhs;
  bool acted = true;
  while (acted) {
    acted = false;
    for (int idx : prio) {
      const Row& row = rows[idx];
      row_terms(row, terms, rhs);
      std::map<int, Rat> coeff;
      Rat d = rhs;
      for (auto& [v, c] : terms) {
        int r = find(v);
        if (has[r])
          d -= c * val[r];
        else
          coeff[r] += c;
      }
      for (auto it = coeff.begin(); it != coeff.end();)
        it = it->second == 0 ? coeff.erase(it) : std::next(it);

      if (coeff.empty()) {
        if (d == 0) continue;
        // clash: the designated variable is pinned to two values
        int des = designated_var(row);
        int des_root = find(des);
        Rat des_coeff = 0, rest = 0;
        for (auto& [v, c] : terms) {
          if (find(v) == des_root)
            des_coeff += c;
          else
            rest += c * val[find(v)];
        }
        if (des_coeff == 0) continue;  // no single variable to blame; LP decides
        collect_zeros();
        snapshot();
        if (!out.zeros.empty()) {
          out.kind = PropResult::Kind::ForcedZero;
          return out;
        }
        out.kind = PropResult::Kind::ValueClash;
        out.clash_row = idx;
        out.clash_var = des;
        out.clash_values = {val[des_root], (rhs - rest) / des_coeff};
        return out;
      }
      if (coeff.size() == 1) {
        auto [r, c] = *coeff.begin();
        Rat v = d / c;
        if (v < 0) continue;  // sign contradiction; LP decides
        has[r] = 1;
        val[r] = v;
        acted = true;
        break;
      }
      if (coeff.size() == 2 && d == 0) {
        auto it = coeff.begin();
        auto [r1, c1] = *it;
        auto [r2, c2] = *std::next(it);
        if (c1 + c2 == 0) {
          unite(r1, r2);
          acted = true;
          break;
        }
      }
      bool allpos = true, allneg = true;
      for (auto& [r, c] : coeff) {
        allpos = allpos && c > 0;
        allneg = allneg && c < 0;
      }
      if ((allpos || allneg) && d == 0) {
        for (auto& [r, c] : coeff) {
          has[r] = 1;
          val[r] = 0;
        }
        acted = true;
        break;
      }
    }
  }
  collect_zeros();
  snapshot();
  if (!out.zeros.empty()) out.kind = PropResult::Kind::ForcedZero;
  return out;
}

// ---------------------------------------------------------------------------
// Exact rational simplex (Bland's rule)

struct LpForm {
  std::vector<std::pair<int, Rat>> terms;
  Rat rhs;
};

std::vector<LpForm> lp_forms(const std::vector<Row>& rows) {
  std::vector<LpForm> forms(rows.size());
  std::vector<std::pair<int, Rat>> terms;
  Rat rhs;
  for (size_t i = 0; i < rows.size(); ++i) {
    row_terms(rows[i], terms, rhs);
    forms[i].terms = terms;
    forms[i].rhs = rhs;
  }
  return forms;
}

// The system modulo the propagation fixpoint: assigned classes fold into the
// constants, each unassigned class becomes one column. Nonnegativity is
// preserved because a class is nonnegative exactly when its representative is.
struct ReducedLp {
  std::vector<int> col;  // variable -> column, -1 when its class is assigned
  int ncols = 0;
  std::vector<LpForm> forms;
};

ReducedLp build_reduced(int nvars, const std::vector<Row>& rows, const PropResult& pr) {
  ReducedLp red;
  red.col.assign(nvars, -1);
  for (int v = 0; v < nvars; ++v) {
    int r = pr.root_of[v];
    if (pr.root_has[r]) continue;
    if (red.col[r] < 0) red.col[r] = red.ncols++;
    red.col[v] = red.col[r];
  }
  // echelon filter: keep one row per independent equation; a dependent row is
  // redundant unless its residue is nonzero, which marks the system infeasible
  std::vector<std::vector<Rat>> echelon;
  std::vector<int> lead;
  std::vector<std::pair<int, Rat>> terms;
  Rat rhs;
  std::map<int, Rat> coeff;
  for (auto& row : rows) {
    row_terms(row, terms, rhs);
    coeff.clear();
    for (auto& [v, c] : terms) {
      int r = pr.root_of[v];
      if (pr.root_has[r])
        rhs -= c * pr.root_val[r];
      else
        coeff[red.col[r]] += c;
    }
    LpForm f;
    for (auto& [c0, c1] : coeff)
      if (c1 != 0) f.terms.push_back({c0, c1});
    f.rhs = rhs;
    if (f.terms.empty()) {
      if (f.rhs != 0) red.forms.push_back(std::move(f));  // 0 = c: infeasible
      continue;
    }
    std::vector<Rat> dense(red.ncols + 1, Rat(0));
    for (auto& [c0, c1] : f.terms) dense[c0] = c1;
    dense[red.ncols] = f.rhs;
    for (size_t p = 0; p < echelon.size(); ++p) {
      Rat& piv = dense[lead[p]];
      if (piv == 0) continue;
      Rat factor = piv;
      for (int j = 0; j <= red.ncols; ++j)
        if (echelon[p][j] != 0) dense[j] -= factor * echelon[p][j];
    }
    int L = -1;
    for (int j = 0; j < red.ncols && L < 0; ++j)
      if (dense[j] != 0) L = j;
    if (L < 0) {
      if (dense[red.ncols] != 0) red.forms.push_back(std::move(f));
      continue;
    }
    Rat inv = dense[L];
    for (int j = 0; j <= red.ncols; ++j)
      if (dense[j] != 0) dense[j] /= inv;
    echelon.push_back(std::move(dense));
    lead.push_back(L);
    red.forms.push_back(std::move(f));
  }
  return red;
}

class ExactLp {
 public:
  ExactLp(int nvars, const std::vector<LpForm>& forms)
      : n(nvars), m((int)forms.size()), T(m, std::vector<Rat>(n + m + 1, Rat(0))),
        z(n + m + 1, Rat(0)), basis(m), rowsign(m, 1) {
    for (int i = 0; i < m; ++i) {
      int sg = forms[i].rhs < 0 ? -1 : 1;
      rowsign[i] = sg;
      for (auto& [v, c] : forms[i].terms) T[i][v] += sg * c;
      T[i][n + i] = 1;
      T[i][n + m] = sg * forms[i].rhs;
    }
    for (int i = 0; i < m; ++i) basis[i] = n + i;
  }

  // Phase 1; fills a Farkas combination over the original rows on failure.
  bool make_feasible(std::vector<Rat>* farkas) {
    std::vector<Rat> cost(n + m, Rat(0));
    for (int j = n; j < n + m; ++j) cost[j] = 1;
    if (!optimize(cost, true)) throw Error(ErrorKind::Domain, "phase one unbounded");
    Rat obj = 0;
    for (int i = 0; i < m; ++i)
      if (basis[i] >= n) obj += T[i][n + m];
    if (obj > 0) {
      if (farkas) {
        farkas->assign(m, Rat(0));
        for (int i = 0; i < m; ++i) {
          Rat y = 0;
          for (int k = 0; k < m; ++k)
            if (basis[k] >= n) y += T[k][n + i];
          (*farkas)[i] = Rat(rowsign[i]) * y;
        }
      }
      return false;
    }
    // drive leftover artificials out where possible
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n) continue;
      for (int j = 0; j < n; ++j)
        if (T[i][j] != 0) {
          pivot(i, j);
          break;
        }
    }
    return true;
  }

  // Minimizes c over the original variables; artificials are frozen.
  // Returns false when unbounded.
  bool minimize(const std::vector<Rat>& c, Rat* objective, std::vector<Rat>* dual) {
    std::vector<Rat> cost(n + m, Rat(0));
    for (int j = 0; j < n; ++j) cost[j] = c[j];
    if (!optimize(cost, false)) return false;
    if (objective) {
      *objective = 0;
      for (int i = 0; i < m; ++i)
        if (basis[i] < n) *objective += c[basis[i]] * T[i][n + m];
    }
    if (dual) {
      dual->assign(m, Rat(0));
      for (int i = 0; i < m; ++i) {
        Rat y = 0;
        for (int k = 0; k < m; ++k)
          if (basis[k] < n) y += c[basis[k]] * T[k][n + i];
        (*dual)[i] = Rat(rowsign[i]) * y;
      }
    }
    return true;
  }

  std::vector<Rat> solution() const {
    std::vector<Rat> x(n, Rat(0));
    for (int i = 0; i < m; ++i)
      if (basis[i] < n) x[basis[i]] = T[i][n + m];
    return x;
  }

 private:
  void pivot(int row, int col) {
    Rat p = T[row][col];
    for (auto& e : T[row]) e /= p;
    for (int i = 0; i < m; ++i) {
      if (i == row || T[i][col] == 0) continue;
      Rat f = T[i][col];
      for (int j = 0; j <= n + m; ++j)
        if (T[row][j] != 0) T[i][j] -= f * T[row][j];
    }
    if (z[col] != 0) {
      Rat f = z[col];
      for (int j = 0; j <= n + m; ++j)
        if (T[row][j] != 0) z[j] -= f * T[row][j];
    }
    basis[row] = col;
  }

  // Reduced costs live in `z` and are updated per pivot; entering column by
  // steepest cost, switching to Bland's least-index rule after a run of
  // degenerate pivots so cycling is impossible.
  bool optimize(const std::vector<Rat>& cost, bool allow_artificial) {
    int limit = allow_artificial ? n + m : n;
    z.assign(n + m + 1, Rat(0));
    for (int j = 0; j < n + m; ++j) z[j] = cost[j];
    for (int i = 0; i < m; ++i) {
      if (cost[basis[i]] == 0) continue;
      Rat f = cost[basis[i]];
      for (int j = 0; j <= n + m; ++j)
        if (T[i][j] != 0) z[j] -= f * T[i][j];
    }
    int stall = 0;
    while (true) {
      int enter = -1;
      if (stall < 32) {
        for (int j = 0; j < limit; ++j)
          if (z[j] < 0 && (enter < 0 || z[j] < z[enter])) enter = j;
      } else {
        for (int j = 0; j < limit && enter < 0; ++j)
          if (z[j] < 0) enter = j;
      }
      if (enter < 0) return true;
      int leave = -1;
      Rat best = 0;
      for (int i = 0; i < m; ++i) {
        if (T[i][enter] <= 0) continue;
        Rat ratio = T[i][n + m] / T[i][enter];
        if (leave < 0 || ratio < best || (ratio == best && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      stall = best == 0 ? stall + 1 : 0;
      pivot(leave, enter);
    }
  }

  int n, m;
  std::vector<std::vector<Rat>> T;
  std::vector<Rat> z;
  std::vector<int> basis;
  std::vector<int> rowsign;
};

// ---------------------------------------------------------------------------
// Certificates

json row_to_json(const LinearSystem& sys, const Row& r) {
  json j;
  if (r.kind == RowKind::Sum) {
    j["kind"] = "sum";
    j["structure"] = r.structure;
    j["vars"] = r.vars;
  } else if (r.kind == RowKind::Iso) {
    j["kind"] = "iso";
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["map"] = r.iso;
  } else {
    auto& fe = sys.frag.embeddings[r.emb];
    j["kind"] = "ext";
    j["dom"] = fe.from;
    j["cod"] = fe.to;
    j["map"] = fe.map;
    j["lhs"] = r.lhs;
    j["vars"] = r.vars;
  }
  return j;
}

json make_certificate(const LinearSystem& sys, json conclusion) {
  json cert;
  cert["format"] = "homoflow-cert-1";
  cert["class"] = sys.frag.spec.tag();
  cert["structures"] = json::array();
  for (auto& s : sys.frag.structures) cert["structures"].push_back(structure_to_json(s));
  cert["expansions"] = json::array();
  for (auto& list : sys.expansions) {
    json arr = json::array();
    for (auto& e : list) arr.push_back(expansion_to_json(e));
    cert["expansions"].push_back(std::move(arr));
  }
  cert["rows"] = json::array();
  for (auto& r : sys.rows) cert["rows"].push_back(row_to_json(sys, r));
  cert["conclusion"] = std::move(conclusion);
  return cert;
}

json rat_list(const std::vector<Rat>& v) {
  json a = json::array();
  for (auto& r : v) a.push_back(rat_to_string(r));
  return a;
}

}  // namespace

SolveResult solve_feasibility(const LinearSystem& sys) {
  SolveResult out;
  auto pr = propagate(sys.num_vars, sys.rows);
  if (pr.kind == PropResult::Kind::ForcedZero) {
    json concl;
    concl["type"] = "forced_zero";
    concl["zeros"] = pr.zeros;
    out.certificate = make_certificate(sys, std::move(concl));
    return out;
  }
  if (pr.kind == PropResult::Kind::ValueClash) {
    json concl;
    concl["type"] = "value_clash";
    concl["var"] = pr.clash_var;
    concl["values"] = rat_list(pr.clash_values);
    out.certificate = make_certificate(sys, std::move(concl));
    return out;
  }

  auto build_measure = [&](const std::vector<Rat>& x) {
    RandomExpansionMeasure m;
    m.spec = sys.frag.spec;
    for (int s = 0; s < (int)sys.frag.structures.size(); ++s) {
      std::string key = canonical_form(sys.frag.structures[s]);
      if (m.entries.count(key)) continue;
      RandomExpansionMeasure::Entry entry;
      entry.rep = sys.frag.structures[s];
      for (int e = 0; e < (int)sys.expansions[s].size(); ++e)
        entry.weights.push_back(x[sys.var(s, e)]);
      m.entries.emplace(std::move(key), std::move(entry));
    }
    return m;
  };

  // uniform fast path
  {
    std::vector<Rat> uni(sys.num_vars);
    for (int s = 0; s < (int)sys.frag.structures.size(); ++s)
      for (int e = 0; e < (int)sys.expansions[s].size(); ++e)
        uni[sys.var(s, e)] = Rat(1, (long)sys.expansions[s].size());
    bool ok = true;
    std::vector<std::pair<int, Rat>> terms;
    Rat rhs;
    for (auto& r : sys.rows) {
      row_terms(r, terms, rhs);
      Rat acc = 0;
      for (auto& [v, c] : terms) acc += c * uni[v];
      if (acc != rhs) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.feasible = true;
      out.measure = build_measure(uni);
      return out;
    }
  }

  auto red = build_reduced(sys.num_vars, sys.rows, pr);
  ExactLp lp(red.ncols, red.forms);
  if (!lp.make_feasible(nullptr)) {
    // extract the infeasibility witness over the original rows
    ExactLp full(sys.num_vars, lp_forms(sys.rows));
    std::vector<Rat> farkas;
    if (full.make_feasible(&farkas))
      throw Error(ErrorKind::Domain, "reduced and full systems disagree");
    json concl;
    concl["type"] = "farkas";
    concl["coeffs"] = rat_list(farkas);
    out.certificate = make_certificate(sys, std::move(concl));
    return out;
  }

  // non-degeneracy: maximize each remaining class; zero maxima are forced
  // zeros, proved by a dual combination computed on the original rows
  std::vector<char> col_zero(red.ncols, 0);
  std::vector<Rat> accum(red.ncols, Rat(0));
  long points = 0;
  bool any_zero = false;
  for (int c0 = 0; c0 < red.ncols; ++c0) {
    std::vector<Rat> c(red.ncols, Rat(0));
    c[c0] = -1;
    Rat obj;
    if (!lp.minimize(c, &obj, nullptr)) continue;  // unbounded: positive
    if (-obj == 0) {
      col_zero[c0] = 1;
      any_zero = true;
    } else {
      auto x = lp.solution();
      for (int q = 0; q < red.ncols; ++q) accum[q] += x[q];
      ++points;
    }
  }
  if (any_zero) {
    auto forms = lp_forms(sys.rows);
    std::vector<int> zeros;
    json jduals = json::array();
    for (int v = 0; v < sys.num_vars; ++v) {
      if (red.col[v] < 0 || !col_zero[red.col[v]]) continue;
      ExactLp full(sys.num_vars, forms);
      if (!full.make_feasible(nullptr))
        throw Error(ErrorKind::Domain, "feasibility lost between phases");
      std::vector<Rat> c(sys.num_vars, Rat(0));
      c[v] = -1;
      Rat obj;
      std::vector<Rat> dual;
      if (!full.minimize(c, &obj, &dual) || -obj != 0)
        throw Error(ErrorKind::Domain, "reduced and full systems disagree");
      zeros.push_back(v);
      jduals.push_back(rat_list(dual));
    }
    json concl;
    concl["type"] = "forced_zero";
    concl["zeros"] = zeros;
    concl["duals"] = std::move(jduals);
    out.certificate = make_certificate(sys, std::move(concl));
    return out;
  }
  if (points == 0 && red.ncols > 0)
    throw Error(ErrorKind::Domain, "every coordinate is unbounded");
  std::vector<Rat> x(sys.num_vars);
  for (int v = 0; v < sys.num_vars; ++v) {
    int r = pr.root_of[v];
    x[v] = pr.root_has[r] ? pr.root_val[r] : accum[red.col[v]] / points;
  }
  out.feasible = true;
  out.measure = build_measure(x);
  return out;
}

std::vector<CoordinateRange> coordinate_ranges(const LinearSystem& sys,
                                               const std::vector<int>& vars) {
  for (int v : vars)
    if (v < 0 || v >= sys.num_vars) throw Error(ErrorKind::Param, "variable out of range");
  auto pr = propagate(sys.num_vars, sys.rows);
  if (pr.kind == PropResult::Kind::ValueClash)
    throw Error(ErrorKind::Domain, "system is infeasible");
  ReducedLp red;
  std::unique_ptr<ExactLp> lp;
  std::map<int, CoordinateRange> by_col;
  std::vector<CoordinateRange> out;
  out.reserve(vars.size());
  for (int v : vars) {
    int root = pr.root_of[v];
    if (pr.root_has[root]) {
      out.push_back({pr.root_val[root], pr.root_val[root]});
      continue;
    }
    if (!lp) {
      red = build_reduced(sys.num_vars, sys.rows, pr);
      lp = std::make_unique<ExactLp>(red.ncols, red.forms);
      if (!lp->make_feasible(nullptr)) throw Error(ErrorKind::Domain, "system is infeasible");
    }
    auto it = by_col.find(red.col[v]);
    if (it != by_col.end()) {
      out.push_back(it->second);
      continue;
    }
    CoordinateRange r;
    for (int dir = 0; dir < 2; ++dir) {
      std::vector<Rat> c(red.ncols, Rat(0));
      c[red.col[v]] = dir == 0 ? 1 : -1;
      Rat obj;
      if (!lp->minimize(c, &obj, nullptr))
        throw Error(ErrorKind::Domain, "coordinate is unbounded");
      (dir == 0 ? r.lo : r.hi) = dir == 0 ? obj : -obj;
    }
    by_col.emplace(red.col[v], r);
    out.push_back(r);
  }
  return out;
}

CoordinateRange coordinate_range(const LinearSystem& sys, int var) {
  return coordinate_ranges(sys, {var}).front();
}

// ---------------------------------------------------------------------------
// Certificate replay

namespace {

Rat parse_rat(const json& j) {
  if (!j.is_string()) throw Error(ErrorKind::Step, "rational must be a string");
  return rat_from_string(j.get<std::string>());
}

}  // namespace

void replay_certificate(const json& cert, const ClassSpec& spec) {
  auto fail = [](const std::string& msg, int idx = -1) -> void {
    throw Error(ErrorKind::Step, msg, idx);
  };
  if (!cert.is_object() || cert.value("format", std::string()) != "homoflow-cert-1")
    fail("unrecognized certificate format");
  if (cert.value("class", std::string()) != spec.tag()) fail("certificate is for another class");
  if (!cert.contains("structures") || !cert.contains("expansions") || !cert.contains("rows") ||
      !cert.contains("conclusion"))
    fail("certificate is missing a section");

  std::vector<FiniteStructure> structures;
  for (auto& js : cert["structures"]) {
    FiniteStructure s = structure_from_json(js);
    if (!validate_structure(s, spec)) fail("certificate structure outside " + spec.tag());
    structures.push_back(std::move(s));
  }
  if (structures.empty()) fail("certificate lists no structures");

  if (!cert["expansions"].is_array() || cert["expansions"].size() != structures.size())
    fail("expansion lists do not match the structures");
  std::vector<std::vector<Expansion>> expansions;
  std::vector<int> var_base;
  int nv = 0;
  for (size_t s = 0; s < structures.size(); ++s) {
    auto enumerated = enumerate_expansions(spec, structures[s]);
    std::vector<Expansion> listed;
    for (auto& je : cert["expansions"][s]) listed.push_back(expansion_from_json(je));
    if (listed.size() != enumerated.size()) fail("expansion list is incomplete");
    for (size_t i = 0; i < listed.size(); ++i) {
      if (std::find(enumerated.begin(), enumerated.end(), listed[i]) == enumerated.end())
        fail("listed expansion is not an expansion of its structure");
      for (size_t j = i + 1; j < listed.size(); ++j)
        if (listed[i] == listed[j]) fail("duplicate expansion listed");
    }
    var_base.push_back(nv);
    nv += (int)listed.size();
    expansions.push_back(std::move(listed));
  }
  auto var_struct = [&](int v) {
    int s = 0;
    while (s + 1 < (int)var_base.size() && var_base[s + 1] <= v) ++s;
    return s;
  };
  auto check_var = [&](const json& j, int idx) {
    if (!j.is_number_integer()) fail("variable id must be an integer", idx);
    int v = j.get<int>();
    if (v < 0 || v >= nv) fail("variable id out of range", idx);
    return v;
  };

  std::vector<Row> rows;
  int idx = 0;
  for (auto& jr : cert["rows"]) {
    Row r;
    std::string kind = jr.value("kind", std::string());
    if (kind == "sum") {
      r.kind = RowKind::Sum;
      if (!jr.contains("structure") || !jr["structure"].is_number_integer())
        fail("sum row needs a structure", idx);
      r.structure = jr["structure"].get<int>();
      if (r.structure < 0 || r.structure >= (int)structures.size())
        fail("sum row structure out of range", idx);
      std::set<int> want;
      for (int e = 0; e < (int)expansions[r.structure].size(); ++e)
        want.insert(var_base[r.structure] + e);
      std::set<int> got;
      for (auto& jv : jr["vars"]) got.insert(check_var(jv, idx));
      if (got != want) fail("sum row does not cover the expansions exactly", idx);
      r.vars.assign(got.begin(), got.end());
    } else if (kind == "iso") {
      r.kind = RowKind::Iso;
      r.lhs = check_var(jr.at("lhs"), idx);
      r.rhs = check_var(jr.at("rhs"), idx);
      VertexMap map = jr.at("map").get<VertexMap>();
      int sl = var_struct(r.lhs), sr = var_struct(r.rhs);
      FiniteStructure left = to_structure(expansions[sl][r.lhs - var_base[sl]]);
      FiniteStructure right = to_structure(expansions[sr][r.rhs - var_base[sr]]);
      if (left.n != right.n || (int)map.size() != left.n || !is_embedding(left, right, map))
        fail("iso row map does not carry one expansion to the other", idx);
      r.iso = std::move(map);
    } else if (kind == "ext") {
      r.kind = RowKind::Ext;
      int dom = jr.value("dom", -1), cod = jr.value("cod", -1);
      if (dom < 0 || dom >= (int)structures.size() || cod < 0 || cod >= (int)structures.size())
        fail("ext row endpoints out of range", idx);
      VertexMap map = jr.at("map").get<VertexMap>();
      if ((int)map.size() != structures[dom].n || !is_embedding(structures[dom], structures[cod], map))
        fail("ext row map is not an embedding", idx);
      r.lhs = check_var(jr.at("lhs"), idx);
      if (var_struct(r.lhs) != dom) fail("ext row left side is not a domain expansion", idx);
      const Expansion& small = expansions[dom][r.lhs - var_base[dom]];
      std::set<int> want;
      for (int j = 0; j < (int)expansions[cod].size(); ++j)
        if (restrict_expansion(expansions[cod][j], map, structures[dom]) == small)
          want.insert(var_base[cod] + j);
      std::set<int> got;
      for (auto& jv : jr["vars"]) got.insert(check_var(jv, idx));
      if (got != want) fail("ext row does not sum the restricting expansions exactly", idx);
      r.vars.assign(got.begin(), got.end());
      r.emb = -1;
    } else {
      fail("unknown row kind", idx);
    }
    rows.push_back(std::move(r));
    ++idx;
  }

  const json& concl = cert["conclusion"];
  int cidx = (int)rows.size();
  std::string type = concl.value("type", std::string());
  if (type == "forced_zero") {
    std::vector<int> zeros;
    for (auto& jz : concl.at("zeros")) zeros.push_back(check_var(jz, cidx));
    if (zeros.empty()) fail("empty zero list", cidx);
    if (concl.contains("duals")) {
      auto forms = lp_forms(rows);
      if (concl["duals"].size() != zeros.size()) fail("dual list misaligned", cidx);
      for (size_t z = 0; z < zeros.size(); ++z) {
        auto& jd = concl["duals"][z];
        if (jd.size() != rows.size()) fail("dual length mismatch", cidx);
        std::vector<Rat> g(nv, Rat(0));
        Rat h = 0;
        for (size_t r = 0; r < forms.size(); ++r) {
          Rat lam = parse_rat(jd[r]);
          for (auto& [v, c] : forms[r].terms) g[v] += lam * c;
          h += lam * forms[r].rhs;
        }
        if (h != 0) fail("dual combination has nonzero constant", cidx);
        for (int v = 0; v < nv; ++v)
          if (g[v] > 0) fail("dual combination has a positive coefficient", cidx);
        if (g[zeros[z]] >= 0) fail("dual combination does not bound the zero", cidx);
      }
    } else {
      auto pr = propagate(nv, rows);
      if (pr.kind != PropResult::Kind::ForcedZero) fail("replay derives no zeros", cidx);
      for (int z : zeros)
        if (!std::binary_search(pr.zeros.begin(), pr.zeros.end(), z))
          fail("replay does not zero a claimed variable", cidx);
    }
  } else if (type == "value_clash") {
    int v = check_var(concl.at("var"), cidx);
    if (concl.at("values").size() != 2) fail("clash needs two values", cidx);
    Rat a = parse_rat(concl["values"][0]), b = parse_rat(concl["values"][1]);
    auto pr = propagate(nv, rows);
    if (pr.kind != PropResult::Kind::ValueClash) fail("replay derives no clash", cidx);
    if (pr.clash_var != v) fail("replay clashes at a different variable", cidx);
    bool same = (pr.clash_values[0] == a && pr.clash_values[1] == b) ||
                (pr.clash_values[0] == b && pr.clash_values[1] == a);
    if (!same) fail("replay derives different clash values", cidx);
  } else if (type == "farkas") {
    auto forms = lp_forms(rows);
    if (concl.at("coeffs").size() != rows.size()) fail("farkas length mismatch", cidx);
    std::vector<Rat> g(nv, Rat(0));
    Rat h = 0;
    for (size_t r = 0; r < forms.size(); ++r) {
      Rat lam = parse_rat(concl["coeffs"][r]);
      for (auto& [v, c] : forms[r].terms) g[v] += lam * c;
      h += lam * forms[r].rhs;
    }
    for (int v = 0; v < nv; ++v)
      if (g[v] > 0) fail("farkas combination has a positive coefficient", cidx);
    if (h <= 0) fail("farkas combination proves nothing", cidx);
  } else {
    fail("unknown conclusion type", cidx);
  }
}

bool verify_certificate(const json& cert, const ClassSpec& spec) {
  try {
    replay_certificate(cert, spec);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Density criterion

namespace {

// Byte key of an expansion restricted to `verts` (ascending): labels, induced
// order as within-subset indices, auxiliary pair bits. Restricting relabels
// the subset ascending, so the same function keys the restricted expansion
// identically.
std::string restriction_key(const Expansion& e, const std::vector<int>& verts,
                            const std::vector<int>& opos) {
  int k = (int)verts.size();
  std::string key;
  key.reserve(2 * k + 2 + (k * k + 7) / 8);
  if (!e.labels.empty())
    for (int v : verts) key.push_back((char)(unsigned char)e.labels[v]);
  key.push_back('|');
  if (!e.order.empty()) {
    int idx[32];
    for (int i = 0; i < k; ++i) idx[i] = i;
    std::sort(idx, idx + k, [&](int a, int b) { return opos[verts[a]] < opos[verts[b]]; });
    for (int i = 0; i < k; ++i) key.push_back((char)idx[i]);
  }
  key.push_back('|');
  if (e.has_R()) {
    int acc = 0, nb = 0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        if (i == j) continue;
        acc = acc * 2 + (e.R_rel(verts[i], verts[j]) ? 1 : 0);
        if (++nb == 8) {
          key.push_back((char)acc);
          acc = nb = 0;
        }
      }
    if (nb) key.push_back((char)acc);
  }
  return key;
}

}  // namespace

DensityResult check_density_criterion(const ClassSpec& spec, int size_bound) {
  DensityResult res;
  for (auto& big : enumerate_age_members(spec, size_bound)) {
    int n = big.n;
    if (n < 2) continue;
    int full = (1 << n) - 1;
    std::vector<std::vector<int>> vertsets(full);
    for (int mask = 1; mask < full; ++mask)
      for (int v = 0; v < n; ++v)
        if (mask >> v & 1) vertsets[mask].push_back(v);
    std::vector<std::map<std::string, long>> counts(full);
    long total = 0;
    std::vector<int> opos(n, 0);
    for_each_expansion(spec, big, [&](const Expansion& e) {
      ++total;
      if (!e.order.empty())
        for (int i = 0; i < n; ++i) opos[e.order[i]] = i;
      for (int mask = 1; mask < full; ++mask)
        ++counts[mask][restriction_key(e, vertsets[mask], opos)];
    });
    for (int mask = 1; mask < full; ++mask) {
      FiniteStructure sub = big.restrict_to(vertsets[mask]);
      auto exps = enumerate_expansions(spec, sub);
      std::vector<int> idverts(sub.n);
      std::iota(idverts.begin(), idverts.end(), 0);
      std::vector<long> c(exps.size(), 0);
      std::vector<int> spos(sub.n, 0);
      long seen = 0;
      for (size_t i = 0; i < exps.size(); ++i) {
        if (!exps[i].order.empty())
          for (int q = 0; q < sub.n; ++q) spos[exps[i].order[q]] = q;
        auto it = counts[mask].find(restriction_key(exps[i], idverts, spos));
        c[i] = it == counts[mask].end() ? 0 : it->second;
        seen += c[i];
      }
      if (seen != total) throw Error(ErrorKind::Domain, "restriction fell outside the class");
      for (size_t i = 1; i < exps.size(); ++i)
        if (c[i] != c[0]) {
          res.pass = false;
          res.big = big;
          res.subset = vertsets[mask];
          res.first = exps[0];
          res.second = exps[i];
          res.first_count = c[0];
          res.second_count = c[i];
          return res;
        }
    }
  }
  return res;
}

bool check_cofinal_isomorphism(const ClassSpec& spec,
                               const std::vector<FiniteStructure>& family, int size_bound) {
  if (family.empty()) throw Error(ErrorKind::Param, "empty candidate family");
  for (auto& f : family)
    if (!validate_structure(f, spec))
      throw Error(ErrorKind::Validation, "family member outside " + spec.tag());
  for (auto& m : enumerate_age_members(spec, size_bound)) {
    bool embeds = false;
    for (auto& f : family)
      if (m.n <= f.n && count_embeddings(m, f) > 0) {
        embeds = true;
        break;
      }
    if (!embeds) return false;
  }
  for (auto& f : family) {
    std::string key;
    bool first = true, same = true;
    for_each_expansion(spec, f, [&](const Expansion& e) {
      if (!same) return;
      std::string c = canonical_form(to_structure(e));
      if (first) {
        key = std::move(c);
        first = false;
      } else if (c != key) {
        same = false;
      }
    });
    if (!same) return false;
  }
  return true;
}

}  // namespace homoflow
