#include "homoflow/builtin.hpp"

#include <algorithm>

namespace homoflow {

namespace {

FiniteStructure digraph(int n, std::initializer_list<std::pair<int, int>> arcs) {
  FiniteStructure s = FiniteStructure::empty(n);
  for (auto& [u, v] : arcs) s.set_arc(u, v);
  return s;
}

FiniteStructure doubled_transitive(int k) {
  FiniteStructure t = FiniteStructure::empty(k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) t.set_arc(i, j);
  t.order.resize(k);
  std::iota(t.order.begin(), t.order.end(), 0);
  return delta_inverse(t).base;
}

}  // namespace

std::vector<std::string> builtin_fragment_ids() { return {"s2", "s3", "p", "p3", "qhat"}; }

BuiltinFragment builtin_fragment(const std::string& id) {
  std::string key = id.substr(0, id.find('-'));
  BuiltinFragment f;
  f.id = key;
  if (key == "s2" || key == "s3") {
    f.name = key == "s2" ? "S(2)" : "S(3)";
    f.spec = ClassSpec::parse(key);
    f.tops = {digraph(2, {{0, 1}}),
              digraph(3, {{0, 1}, {0, 2}, {2, 1}}),
              digraph(3, {{0, 1}, {0, 2}, {1, 2}})};
    f.outcome = BuiltinFragment::Outcome::ForcedZero;
    f.zero_structure = 2;
    f.zero_expansion = Expansion{f.tops[2], {}, {0, 0, 1}, {}};
  } else if (key == "p") {
    f.name = "P";
    f.spec = ClassSpec::parse("poset");
    f.tops = {digraph(3, {{0, 1}}), digraph(2, {})};
    f.outcome = BuiltinFragment::Outcome::ForcedZero;
    f.zero_structure = 0;
    f.zero_expansion = Expansion{f.tops[0], {0, 2, 1}, {}, {}};
  } else if (key == "p3") {
    f.name = "P(3)";
    f.spec = ClassSpec::parse("p3");
    f.tops = {digraph(3, {{0, 1}}), digraph(2, {})};
    f.outcome = BuiltinFragment::Outcome::ForcedZero;
    f.zero_structure = 0;
    f.zero_expansion = Expansion{f.tops[0], {1, 2, 0}, {1, 0, 1}, {}};
  } else if (key == "qhat") {
    f.name = "Q^";
    f.spec = ClassSpec::parse("hatq");
    FiniteStructure full = doubled_transitive(3);
    f.tops = {full, full.restrict_to({0, 1, 2, 3})};
    f.outcome = BuiltinFragment::Outcome::ValueClash;
    f.clash_values = {Rat(1, 4), Rat(1, 6)};
  } else {
    throw Error(ErrorKind::Param, "unknown builtin fragment: " + id);
  }
  return f;
}

}  // namespace homoflow
