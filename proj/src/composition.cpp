#include "homoflow/composition.hpp"

#include <algorithm>
#include <numeric>

namespace homoflow {

int CompositeStructure::total_vertices() const {
  int t = 0;
  for (auto& c : classes) t += c.n;
  return t;
}

json composite_to_json(const CompositeStructure& c) {
  json j;
  j["quotient"] = structure_to_json(c.quotient);
  j["classes"] = json::array();
  for (auto& cl : c.classes) j["classes"].push_back(structure_to_json(cl));
  return j;
}

CompositeStructure composite_from_json(const json& j) {
  if (!j.is_object() || !j.contains("quotient") || !j.contains("classes"))
    throw Error(ErrorKind::Validation, "composite JSON needs 'quotient' and 'classes'");
  std::vector<FiniteStructure> parts;
  for (auto& p : j["classes"]) parts.push_back(structure_from_json(p));
  return compose(structure_from_json(j["quotient"]), parts);
}

namespace {

void require_plain(const FiniteStructure& s, const char* what) {
  if (s.has_parts() || s.has_aux() || s.has_order())
    throw Error(ErrorKind::Signature, std::string(what) + " must be a plain digraph");
}

std::vector<int> class_offsets(const CompositeStructure& c) {
  std::vector<int> off(c.classes.size() + 1, 0);
  for (size_t i = 0; i < c.classes.size(); ++i) off[i + 1] = off[i] + c.classes[i].n;
  return off;
}

}  // namespace

CompositeStructure compose(const FiniteStructure& q, const std::vector<FiniteStructure>& parts) {
  check_well_formed(q);
  require_plain(q, "quotient");
  if ((int)parts.size() != q.n)
    throw Error(ErrorKind::Signature, "need exactly one class per quotient vertex");
  for (auto& p : parts) {
    check_well_formed(p);
    require_plain(p, "class");
    if (p.n == 0) throw Error(ErrorKind::Validation, "classes must be nonempty");
  }
  return {q, parts};
}

FiniteStructure flatten(const CompositeStructure& c) {
  auto off = class_offsets(c);
  FiniteStructure s = FiniteStructure::empty(off.back());
  s.parts.resize(s.n);
  for (int i = 0; i < c.quotient.n; ++i) {
    for (int x = 0; x < c.classes[i].n; ++x) {
      s.parts[off[i] + x] = i;
      for (int y = 0; y < c.classes[i].n; ++y)
        if (x != y && c.classes[i].arc(x, y)) s.set_arc(off[i] + x, off[i] + y);
    }
    for (int j = 0; j < c.quotient.n; ++j) {
      if (i == j || !c.quotient.arc(i, j)) continue;
      for (int x = 0; x < c.classes[i].n; ++x)
        for (int y = 0; y < c.classes[j].n; ++y) s.set_arc(off[i] + x, off[j] + y);
    }
  }
  return s;
}

CompositeStructure unflatten(const FiniteStructure& s) {
  check_well_formed(s);
  if (!s.has_parts()) throw Error(ErrorKind::Validation, "flattening needs a parts field");
  if (s.has_aux() || s.has_order())
    throw Error(ErrorKind::Signature, "flattening carries arcs and parts only");
  std::vector<int> labels = s.parts;
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  int k = (int)labels.size();
  std::vector<std::vector<int>> members(k);
  for (int v = 0; v < s.n; ++v) {
    int c = (int)(std::lower_bound(labels.begin(), labels.end(), s.parts[v]) - labels.begin());
    members[c].push_back(v);
  }
  // cross-class arcs must be class-uniform in both directions
  FiniteStructure q = FiniteStructure::empty(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      bool first = s.arc(members[i][0], members[j][0]);
      for (int x : members[i])
        for (int y : members[j])
          if (s.arc(x, y) != first)
            throw Error(ErrorKind::NotACongruence, "cross-class arcs are not class-uniform");
      if (first) q.set_arc(i, j);
    }
  CompositeStructure c;
  c.quotient = q;
  for (int i = 0; i < k; ++i) c.classes.push_back(s.restrict_to(members[i]));
  for (auto& cl : c.classes) cl.parts.clear();
  return c;
}

FiniteStructure quotient_structure(const FiniteStructure& s) { return unflatten(s).quotient; }

bool validate_composite(const ClassSpec& comp_spec, const CompositeStructure& c) {
  if (comp_spec.kind != ClassSpec::Kind::Composition || comp_spec.sub.size() != 2)
    throw Error(ErrorKind::Param, "expects a comp(K,L) class");
  if ((int)c.classes.size() != c.quotient.n) return false;
  if (!validate_structure(c.quotient, comp_spec.sub[0])) return false;
  for (auto& cl : c.classes)
    if (!validate_structure(cl, comp_spec.sub[1])) return false;
  return true;
}

std::vector<ProductExpansion> enumerate_product_expansions(const ClassSpec& comp_spec,
                                                           const CompositeStructure& c) {
  if (comp_spec.kind != ClassSpec::Kind::Composition || comp_spec.sub.size() != 2)
    throw Error(ErrorKind::Param, "expects a comp(K,L) class");
  if (!validate_composite(comp_spec, c))
    throw Error(ErrorKind::Validation, "composite is not a member of " + comp_spec.tag());
  auto qexps = enumerate_expansions(comp_spec.sub[0], c.quotient);
  std::vector<std::vector<Expansion>> pexps;
  for (auto& cl : c.classes) pexps.push_back(enumerate_expansions(comp_spec.sub[1], cl));
  std::vector<ProductExpansion> out;
  std::vector<Expansion> chosen(c.classes.size());
  auto rec = [&](auto&& self, size_t i, const Expansion& qe) -> void {
    if (i == c.classes.size()) {
      out.push_back({qe, chosen});
      return;
    }
    for (auto& pe : pexps[i]) {
      chosen[i] = pe;
      self(self, i + 1, qe);
    }
  };
  for (auto& qe : qexps) rec(rec, 0, qe);
  return out;
}

Expansion product_to_expansion(const CompositeStructure& c, const ProductExpansion& pe) {
  auto order_only = [](const Expansion& e) {
    return !e.order.empty() && e.labels.empty() && !e.has_R();
  };
  if (!order_only(pe.quotient))
    throw Error(ErrorKind::Unsupported, "flattened expansion needs order-only factors");
  for (auto& p : pe.parts)
    if (!order_only(p))
      throw Error(ErrorKind::Unsupported, "flattened expansion needs order-only factors");
  auto off = class_offsets(c);
  Expansion e;
  e.base = flatten(c);
  for (int qi : pe.quotient.order)
    for (int x : pe.parts[qi].order) e.order.push_back(off[qi] + x);
  return e;
}

ProductExpansion restrict_product(const CompositeStructure& big, const ProductExpansion& pe,
                                  const VertexMap& emb, const CompositeStructure& small) {
  auto boff = class_offsets(big);
  auto soff = class_offsets(small);
  EmbedOpts eq;
  eq.parts_as_equivalence = true;
  if (!is_embedding(flatten(small), flatten(big), emb, eq))
    throw Error(ErrorKind::Embedding, "not a class-respecting embedding of flattenings");
  auto big_class = [&](int v) {
    return (int)(std::upper_bound(boff.begin(), boff.end(), v) - boff.begin()) - 1;
  };
  // induced quotient map plus per-class local maps
  VertexMap qmap(small.quotient.n, -1);
  std::vector<VertexMap> lmaps(small.quotient.n);
  for (int i = 0; i < small.quotient.n; ++i) {
    lmaps[i].resize(small.classes[i].n);
    for (int x = 0; x < small.classes[i].n; ++x) {
      int img = emb[soff[i] + x];
      int bc = big_class(img);
      if (qmap[i] < 0) qmap[i] = bc;
      lmaps[i][x] = img - boff[bc];
    }
  }
  ProductExpansion r;
  r.quotient = restrict_expansion(pe.quotient, qmap, small.quotient);
  for (int i = 0; i < small.quotient.n; ++i)
    r.parts.push_back(restrict_expansion(pe.parts[qmap[i]], lmaps[i], small.classes[i]));
  return r;
}

Rat product_measure_eval(const RandomExpansionMeasure& nu, const RandomExpansionMeasure& mu,
                         const CompositeStructure& s, const ProductExpansion& s_star) {
  Rat w = mu.weight_of(s.quotient, s_star.quotient);
  for (size_t i = 0; i < s.classes.size(); ++i)
    w *= nu.weight_of(s.classes[i], s_star.parts[i]);
  return w;
}

bool composite_measure_P(const ClassSpec& comp_spec, const RandomExpansionMeasure& nu,
                         const RandomExpansionMeasure& mu, const CompositeStructure& c) {
  Rat sum = 0;
  for (auto& pe : enumerate_product_expansions(comp_spec, c))
    sum += product_measure_eval(nu, mu, c, pe);
  return sum == 1;
}

bool composite_measure_E(const ClassSpec& comp_spec, const RandomExpansionMeasure& nu,
                         const RandomExpansionMeasure& mu, const CompositeStructure& small,
                         const CompositeStructure& big, const VertexMap& emb) {
  auto sexps = enumerate_product_expansions(comp_spec, small);
  auto bexps = enumerate_product_expansions(comp_spec, big);
  for (auto& a_star : sexps) {
    Rat rhs = 0;
    for (auto& b_star : bexps)
      if (restrict_product(big, b_star, emb, small) == a_star)
        rhs += product_measure_eval(nu, mu, big, b_star);
    if (product_measure_eval(nu, mu, small, a_star) != rhs) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Automorphism-extension lift

FiniteStructure jep_merge(const ClassSpec& lspec, const std::vector<FiniteStructure>& parts,
                          std::vector<VertexMap>& inclusions) {
  int total = 0;
  inclusions.clear();
  for (auto& p : parts) {
    check_well_formed(p);
    require_plain(p, "part");
    VertexMap inc(p.n);
    std::iota(inc.begin(), inc.end(), total);
    inclusions.push_back(inc);
    total += p.n;
  }
  FiniteStructure u = FiniteStructure::empty(total);
  for (size_t i = 0; i < parts.size(); ++i)
    for (int x = 0; x < parts[i].n; ++x)
      for (int y = 0; y < parts[i].n; ++y)
        if (x != y && parts[i].arc(x, y)) u.set_arc(inclusions[i][x], inclusions[i][y]);
  if (validate_structure(u, lspec)) return u;
  // plain union left the class: join earlier summands onto later ones
  for (size_t i = 0; i < parts.size(); ++i)
    for (size_t j = i + 1; j < parts.size(); ++j)
      for (int x : inclusions[i])
        for (int y : inclusions[j]) u.set_arc(x, y);
  if (validate_structure(u, lspec)) return u;
  throw Error(ErrorKind::Unsupported, "no joint extension from either union candidate");
}

namespace {

bool is_automorphism(const FiniteStructure& s, const VertexMap& m, const EmbedOpts& opts = {}) {
  if ((int)m.size() != s.n) return false;
  std::vector<char> hit(s.n, 0);
  for (int v : m) {
    if (v < 0 || v >= s.n || hit[v]) return false;
    hit[v] = 1;
  }
  return is_embedding(s, s, m, opts);
}

}  // namespace

ExtensionWitness hrushovski_product_lift(const CompositeStructure& s,
                                         const std::vector<PartialIso>& partial_isos,
                                         const ProductLiftInput& in) {
  auto off = class_offsets(s);
  int total = off.back();
  auto class_of = [&](int v) {
    return (int)(std::upper_bound(off.begin(), off.end(), v) - off.begin()) - 1;
  };

  if (!is_embedding(s.quotient, in.d_ambient, in.q_inclusion))
    throw Error(ErrorKind::WitnessMismatch, "quotient does not embed as claimed");
  if (in.q_autos.size() != partial_isos.size())
    throw Error(ErrorKind::WitnessMismatch, "need one quotient automorphism per partial iso");
  if ((int)in.part_inclusions.size() != s.quotient.n)
    throw Error(ErrorKind::WitnessMismatch, "need one part inclusion per class");
  for (int i = 0; i < s.quotient.n; ++i)
    if (!is_embedding(s.classes[i], in.t_ambient, in.part_inclusions[i]))
      throw Error(ErrorKind::WitnessMismatch, "class does not embed as claimed");
  if (!in.t_autos.empty() && in.t_autos.size() != partial_isos.size())
    throw Error(ErrorKind::WitnessMismatch, "need part automorphisms per partial iso");

  int tn = in.t_ambient.n;
  VertexMap identity(tn);
  std::iota(identity.begin(), identity.end(), 0);
  auto t_auto_for = [&](size_t iso, int d) -> const VertexMap& {
    if (iso < in.t_autos.size()) {
      auto it = in.t_autos[iso].find(d);
      if (it != in.t_autos[iso].end()) return it->second;
    }
    return identity;
  };

  for (size_t i = 0; i < partial_isos.size(); ++i) {
    if (!is_automorphism(in.d_ambient, in.q_autos[i]))
      throw Error(ErrorKind::WitnessMismatch, "quotient witness is not an automorphism");
    if (i < in.t_autos.size())
      for (auto& [d, psi] : in.t_autos[i])
        if (d < 0 || d >= in.d_ambient.n || !is_automorphism(in.t_ambient, psi))
          throw Error(ErrorKind::WitnessMismatch, "part witness is not an automorphism");
    std::vector<int> proj(s.quotient.n, -1);
    std::vector<char> src(total, 0), dst(total, 0);
    for (auto& [u, v] : partial_isos[i]) {
      if (u < 0 || u >= total || v < 0 || v >= total || src[u] || dst[v])
        throw Error(ErrorKind::WitnessMismatch, "malformed partial iso");
      src[u] = dst[v] = 1;
      int cu = class_of(u), cv = class_of(v);
      if (proj[cu] >= 0 && proj[cu] != cv)
        throw Error(ErrorKind::WitnessMismatch, "partial iso does not respect classes");
      proj[cu] = cv;
      int du = in.q_inclusion[cu];
      if (in.q_autos[i][du] != in.q_inclusion[cv])
        throw Error(ErrorKind::WitnessMismatch, "quotient witness misses a projected pair");
      const VertexMap& psi = t_auto_for(i, du);
      if (psi[in.part_inclusions[cu][u - off[cu]]] != in.part_inclusions[cv][v - off[cv]])
        throw Error(ErrorKind::WitnessMismatch, "part witness misses a projected pair");
    }
  }

  CompositeStructure blown;
  blown.quotient = in.d_ambient;
  blown.classes.assign(in.d_ambient.n, in.t_ambient);
  ExtensionWitness out;
  out.ambient = flatten(blown);
  out.inclusion.resize(total);
  for (int v = 0; v < total; ++v) {
    int c = class_of(v);
    out.inclusion[v] = in.q_inclusion[c] * tn + in.part_inclusions[c][v - off[c]];
  }
  for (size_t i = 0; i < partial_isos.size(); ++i) {
    VertexMap psi(out.ambient.n);
    for (int d = 0; d < in.d_ambient.n; ++d) {
      const VertexMap& part = t_auto_for(i, d);
      for (int t = 0; t < tn; ++t) psi[d * tn + t] = in.q_autos[i][d] * tn + part[t];
    }
    EmbedOpts eq;
    eq.parts_as_equivalence = true;
    if (!is_automorphism(out.ambient, psi, eq))
      throw Error(ErrorKind::WitnessMismatch, "lifted map fails to be an automorphism");
    out.autos.push_back(psi);
  }
  return out;
}

}  // namespace homoflow
