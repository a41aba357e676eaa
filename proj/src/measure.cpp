#include "homoflow/measure.hpp"

#include <algorithm>

namespace homoflow {

bool RandomExpansionMeasure::has(const FiniteStructure& s) const {
  return entries.count(canonical_form(s)) > 0;
}

Rat RandomExpansionMeasure::weight_of(const FiniteStructure& s, const Expansion& e) const {
  auto it = entries.find(canonical_form(s));
  if (it == entries.end())
    throw Error(ErrorKind::IncompleteMeasure, "no weights stored for this structure");
  const Entry& entry = it->second;
  Expansion lookup = e;
  if (!(entry.rep == s)) {
    auto iso = find_isomorphism(entry.rep, s);
    if (!iso) throw Error(ErrorKind::IncompleteMeasure, "stored representative does not match");
    lookup = restrict_expansion(e, *iso, entry.rep);
  }
  auto exps = enumerate_expansions(spec, entry.rep);
  if (exps.size() != entry.weights.size())
    throw Error(ErrorKind::IncompleteMeasure, "weight vector does not cover the expansions");
  for (size_t i = 0; i < exps.size(); ++i)
    if (exps[i] == lookup) return entry.weights[i];
  throw Error(ErrorKind::IncompleteMeasure, "expansion not found among the representative's");
}

RandomExpansionMeasure uniform_measure(const ClassSpec& spec,
                                       const std::vector<FiniteStructure>& structures) {
  RandomExpansionMeasure m;
  m.spec = spec;
  for (const auto& s : structures) {
    std::string key = canonical_form(s);
    if (m.entries.count(key)) continue;
    auto exps = enumerate_expansions(spec, s);
    if (exps.empty()) throw Error(ErrorKind::Validation, "structure admits no expansion");
    Rat w(1, (long)exps.size());
    m.entries[key] = {s, std::vector<Rat>(exps.size(), w)};
  }
  return m;
}

bool measure_satisfies_P(const RandomExpansionMeasure& m) {
  for (auto& [key, entry] : m.entries) {
    Rat sum = 0;
    for (auto& w : entry.weights) sum += w;
    if (sum != 1) return false;
  }
  return true;
}

bool measure_satisfies_I(const RandomExpansionMeasure& m) {
  for (auto& [key, entry] : m.entries) {
    auto exps = enumerate_expansions(m.spec, entry.rep);
    if (exps.size() != entry.weights.size()) return false;
    std::vector<std::string> canon(exps.size());
    for (size_t i = 0; i < exps.size(); ++i) canon[i] = canonical_form(to_structure(exps[i]));
    for (size_t i = 0; i < exps.size(); ++i)
      for (size_t j = i + 1; j < exps.size(); ++j)
        if (canon[i] == canon[j] && entry.weights[i] != entry.weights[j]) return false;
  }
  return true;
}

bool measure_positive(const RandomExpansionMeasure& m) {
  for (auto& [key, entry] : m.entries)
    for (auto& w : entry.weights)
      if (w <= 0) return false;
  return true;
}

bool measure_satisfies_E(const RandomExpansionMeasure& m, const FiniteStructure& a,
                         const FiniteStructure& b, const VertexMap& emb) {
  if (!is_embedding(a, b, emb)) throw Error(ErrorKind::Embedding, "not an embedding");
  auto aexps = enumerate_expansions(m.spec, a);
  auto bexps = enumerate_expansions(m.spec, b);
  for (auto& a_star : aexps) {
    Rat rhs = 0;
    for (auto& b_star : bexps)
      if (restrict_expansion(b_star, emb, a) == a_star) rhs += m.weight_of(b, b_star);
    if (m.weight_of(a, a_star) != rhs) return false;
  }
  return true;
}

}  // namespace homoflow
