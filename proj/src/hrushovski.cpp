#include "homoflow/hrushovski.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "homoflow/solver.hpp"

namespace homoflow {

namespace {

bool partial_iso_ok(const FiniteStructure& s, const std::vector<int>& m) {
  if ((int)m.size() != s.n) return false;
  std::vector<char> hit(s.n, 0);
  for (int v = 0; v < s.n; ++v) {
    int w = m[v];
    if (w == -1) continue;
    if (w < 0 || w >= s.n || hit[w]) return false;
    hit[w] = 1;
  }
  for (int x = 0; x < s.n; ++x) {
    if (m[x] < 0) continue;
    for (int y = 0; y < s.n; ++y) {
      if (y == x || m[y] < 0) continue;
      if (s.arc(x, y) != s.arc(m[x], m[y])) return false;
    }
  }
  return true;
}

// Lexicographically least automorphism of c agreeing with the pinned entries
// (-1 = free), or nothing when no completion exists.
std::optional<VertexMap> complete_automorphism(const FiniteStructure& c, VertexMap psi) {
  std::vector<char> used(c.n, 0);
  for (int v = 0; v < c.n; ++v) {
    if (psi[v] < 0) continue;
    if (used[psi[v]]) return std::nullopt;
    used[psi[v]] = 1;
  }
  for (int x = 0; x < c.n; ++x)
    for (int y = 0; y < c.n; ++y)
      if (x != y && psi[x] >= 0 && psi[y] >= 0 && c.arc(x, y) != c.arc(psi[x], psi[y]))
        return std::nullopt;
  std::function<bool(int)> go = [&](int v) -> bool {
    while (v < c.n && psi[v] >= 0) ++v;
    if (v == c.n) return true;
    for (int w = 0; w < c.n; ++w) {
      if (used[w]) continue;
      bool ok = true;
      for (int u = 0; u < c.n && ok; ++u) {
        if (u == v || psi[u] < 0) continue;
        if (c.arc(v, u) != c.arc(w, psi[u]) || c.arc(u, v) != c.arc(psi[u], w)) ok = false;
      }
      if (!ok) continue;
      psi[v] = w;
      used[w] = 1;
      if (go(v + 1)) return true;
      psi[v] = -1;
      used[w] = 0;
    }
    return false;
  };
  if (!go(0)) return std::nullopt;
  return psi;
}

}  // namespace

void validate_system(const PartialIsoSystem& sys, const ClassSpec& spec) {
  if (!validate_structure(sys.ambient, spec))
    throw Error(ErrorKind::Validation, "ambient outside " + spec.tag());
  for (auto& m : sys.maps)
    if (!partial_iso_ok(sys.ambient, m))
      throw Error(ErrorKind::Validation, "map is not a partial isomorphism of the ambient");
}

json system_to_json(const PartialIsoSystem& sys) {
  json j;
  j["ambient"] = structure_to_json(sys.ambient);
  j["maps"] = json::array();
  for (auto& m : sys.maps) j["maps"].push_back(m);
  return j;
}

PartialIsoSystem system_from_json(const json& j) {
  PartialIsoSystem sys;
  sys.ambient = structure_from_json(j.at("ambient"));
  for (auto& m : j.at("maps")) sys.maps.push_back(m.get<std::vector<int>>());
  return sys;
}

std::optional<ExtensionWitness> extend_partial_isos(const PartialIsoSystem& sys,
                                                    const ClassSpec& spec, int size_bound) {
  validate_system(sys, spec);
  if (size_bound < sys.ambient.n)
    throw Error(ErrorKind::Param, "size bound below the ambient structure");

  auto attempt = [&](const FiniteStructure& c,
                     const VertexMap& eps) -> std::optional<std::vector<VertexMap>> {
    std::vector<VertexMap> autos;
    for (auto& m : sys.maps) {
      VertexMap pinned(c.n, -1);
      for (int v = 0; v < sys.ambient.n; ++v)
        if (m[v] >= 0) pinned[eps[v]] = eps[m[v]];
      auto psi = complete_automorphism(c, pinned);
      if (!psi) return std::nullopt;
      autos.push_back(std::move(*psi));
    }
    return autos;
  };

  // The ambient stands in for every candidate of its own size: containment at
  // equal size forces isomorphism, and conjugation through it carries any
  // extension back.
  VertexMap ident(sys.ambient.n);
  std::iota(ident.begin(), ident.end(), 0);
  if (auto autos = attempt(sys.ambient, ident))
    return ExtensionWitness{sys.ambient, ident, std::move(*autos)};

  for (auto& c : enumerate_age_members(spec, size_bound)) {
    if (c.n <= sys.ambient.n) continue;
    for (auto& eps : enumerate_embeddings(sys.ambient, c))
      if (auto autos = attempt(c, eps)) return ExtensionWitness{c, eps, std::move(*autos)};
  }
  return std::nullopt;
}

HrushovskiReport hrushovski_implies_uniform_ok(const ClassSpec& spec, int size_bound) {
  if (size_bound < 1) throw Error(ErrorKind::Param, "size bound must be positive");
  HrushovskiReport rep;
  rep.class_tag = spec.tag();
  rep.bound = size_bound;

  auto for_combos = [](int n, int d, auto&& fn) {
    std::vector<int> c(d);
    std::iota(c.begin(), c.end(), 0);
    while (true) {
      fn(c);
      int i = d - 1;
      while (i >= 0 && c[i] == n - d + i) --i;
      if (i < 0) break;
      ++c[i];
      for (int j = i + 1; j < d; ++j) c[j] = c[j - 1] + 1;
    }
  };

  // Sample: every single-map system with a domain of up to three vertices
  // over every member with up to four, exhaustively and in canonical order.
  for (auto& a : enumerate_age_members(spec, std::min(size_bound, 4))) {
    for (int d = 1; d <= std::min(3, a.n); ++d) {
      for_combos(a.n, d, [&](const std::vector<int>& dom) {
        for_combos(a.n, d, [&](const std::vector<int>& img) {
          std::vector<int> perm(d);
          std::iota(perm.begin(), perm.end(), 0);
          do {
            std::vector<int> m(a.n, -1);
            for (int i = 0; i < d; ++i) m[dom[i]] = img[perm[i]];
            if (!partial_iso_ok(a, m)) continue;
            ++rep.systems;
            if (extend_partial_isos({a, {m}}, spec, size_bound)) ++rep.extended;
          } while (std::next_permutation(perm.begin(), perm.end()));
        });
      });
    }
  }

  rep.all_extended = rep.systems > 0 && rep.extended == rep.systems;
  rep.density_pass = check_density_criterion(spec, size_bound).pass;
  rep.divergence = rep.all_extended && !rep.density_pass;
  return rep;
}

}  // namespace homoflow
