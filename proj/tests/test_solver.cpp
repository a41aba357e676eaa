#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "homoflow/builtin.hpp"

using namespace homoflow;

namespace {

FiniteStructure digraph(int n, std::vector<std::pair<int, int>> arcs) {
  auto s = FiniteStructure::empty(n);
  for (auto& [a, b] : arcs) s.set_arc(a, b);
  return s;
}

bool no_arcs(const FiniteStructure& s) {
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      if (i != j && s.arc(i, j)) return false;
  return true;
}

int var_of(const LinearSystem& sys, int structure, const Expansion& e) {
  auto& exps = sys.expansions[structure];
  auto it = std::find(exps.begin(), exps.end(), e);
  REQUIRE(it != exps.end());
  return sys.var(structure, (int)(it - exps.begin()));
}

std::set<int> conclusion_zeros(const json& cert) {
  std::set<int> out;
  for (auto& z : cert["conclusion"]["zeros"]) out.insert(z.get<int>());
  return out;
}

// weighted sum of a system row against an explicit assignment
Rat row_residue(const Row& r, const std::vector<Rat>& x) {
  Rat acc = 0;
  if (r.kind == RowKind::Sum) {
    for (int v : r.vars) acc += x[v];
    return acc - 1;
  }
  if (r.kind == RowKind::Iso) return x[r.lhs] - x[r.rhs];
  acc = x[r.lhs];
  for (int v : r.vars) acc -= x[v];
  return acc;
}

}  // namespace

TEST_CASE("fragment closure keeps tops and adds substructure representatives") {
  auto bf = builtin_fragment("s2");
  auto frag = build_fragment(bf.spec, bf.tops);
  // tops verbatim (B and C are isomorphic but distinct, both stay), plus the
  // single point; every two-vertex subset of a tournament repeats the arc top
  REQUIRE(frag.structures.size() == 4);
  CHECK(frag.structures[0] == bf.tops[0]);
  CHECK(frag.structures[1] == bf.tops[1]);
  CHECK(frag.structures[2] == bf.tops[2]);
  CHECK(frag.structures[3].n == 1);
  CHECK(frag.embeddings.size() == 16);
  CHECK_NOTHROW(validate_fragment(frag));

  // poset pair: the two-chain appears as a new substructure
  auto bp = builtin_fragment("p");
  auto pf = build_fragment(bp.spec, bp.tops);
  REQUIRE(pf.structures.size() == 4);
  CHECK(pf.structures[0] == bp.tops[0]);
  CHECK(pf.structures[1] == bp.tops[1]);
  CHECK(pf.structures[2] == digraph(2, {{0, 1}}));
  CHECK(pf.structures[3].n == 1);
  CHECK(pf.embeddings.size() == 9);

  // every stored embedding is minimal in its double-coset orbit: no duplicates
  std::set<std::pair<std::pair<int, int>, VertexMap>> seen;
  for (auto& e : frag.embeddings) CHECK(seen.insert({{e.from, e.to}, e.map}).second);
}

TEST_CASE("fragment validation rejects foreign members and broken embeddings") {
  auto bf = builtin_fragment("p");
  auto frag = build_fragment(bf.spec, bf.tops);
  Fragment bad = frag;
  bad.embeddings[0].map = {0, 0};
  CHECK_THROWS_AS(validate_fragment(bad), Error);
  bad = frag;
  bad.embeddings.clear();  // witnessed pairs lose their certificates
  CHECK_THROWS_AS(validate_fragment(bad), Error);
  CHECK_THROWS_AS(build_fragment(bf.spec, {digraph(3, {{0, 1}, {1, 2}, {2, 0}})}), Error);
  CHECK_THROWS_AS(build_fragment(bf.spec, {}), Error);
}

TEST_CASE("constraint rows cover sums, isomorphism chains, and extensions") {
  auto bf = builtin_fragment("p");
  auto frag = build_fragment(bf.spec, bf.tops);
  auto sys = build_constraints(bf.spec, frag);
  REQUIRE(sys.num_vars == 7);  // 3 extensions + 2 orders + 1 + 1
  REQUIRE(sys.rows.size() == 16);
  int sums = 0, isos = 0, exts = 0;
  for (auto& r : sys.rows) {
    if (r.kind == RowKind::Sum) ++sums;
    if (r.kind == RowKind::Iso) ++isos;
    if (r.kind == RowKind::Ext) ++exts;
  }
  CHECK(sums == 4);
  CHECK(isos == 1);  // the two orders of the edgeless pair are isomorphic
  CHECK(exts == 11);
  for (int v = 0; v < sys.num_vars; ++v) {
    int s = sys.var_structure(v);
    int e = sys.var_expansion(v);
    CHECK(sys.var(s, e) == v);
    CHECK(e >= 0);
    CHECK(e < (int)sys.expansions[s].size());
  }
  // each iso row really carries one expanded structure onto the other
  for (auto& r : sys.rows) {
    if (r.kind != RowKind::Iso) continue;
    int sl = sys.var_structure(r.lhs), sr = sys.var_structure(r.rhs);
    auto left = to_structure(sys.expansions[sl][sys.var_expansion(r.lhs)]);
    auto right = to_structure(sys.expansions[sr][sys.var_expansion(r.rhs)]);
    CHECK(is_embedding(left, right, r.iso));
  }
  // each ext row sums exactly the expansions restricting to its left side
  for (auto& r : sys.rows) {
    if (r.kind != RowKind::Ext) continue;
    auto& fe = frag.embeddings[r.emb];
    auto& small = sys.expansions[fe.from][sys.var_expansion(r.lhs)];
    std::set<int> expect;
    for (int j = 0; j < (int)sys.expansions[fe.to].size(); ++j)
      if (restrict_expansion(sys.expansions[fe.to][j], fe.map, frag.structures[fe.from]) == small)
        expect.insert(sys.var(fe.to, j));
    CHECK(std::set<int>(r.vars.begin(), r.vars.end()) == expect);
  }
}

TEST_CASE("curated fragments are infeasible with their recorded conclusions") {
  for (auto& id : builtin_fragment_ids()) {
    CAPTURE(id);
    auto bf = builtin_fragment(id);
    auto frag = build_fragment(bf.spec, bf.tops);
    auto sys = build_constraints(bf.spec, frag);
    auto res = solve_feasibility(sys);
    REQUIRE_FALSE(res.feasible);
    auto& concl = res.certificate["conclusion"];
    if (bf.outcome == BuiltinFragment::Outcome::ForcedZero) {
      REQUIRE(concl["type"] == "forced_zero");
      int want = var_of(sys, bf.zero_structure, bf.zero_expansion);
      CHECK(conclusion_zeros(res.certificate).count(want) == 1);
    } else {
      REQUIRE(concl["type"] == "value_clash");
      std::multiset<Rat> got{rat_from_string(concl["values"][0].get<std::string>()),
                             rat_from_string(concl["values"][1].get<std::string>())};
      std::multiset<Rat> want(bf.clash_values.begin(), bf.clash_values.end());
      CHECK(got == want);
    }
  }
  CHECK(builtin_fragment("p3-small").id == "p3");
  CHECK_THROWS_AS(builtin_fragment("nope"), Error);
}

TEST_CASE("solver certificates replay; tampering is rejected") {
  for (auto& id : builtin_fragment_ids()) {
    CAPTURE(id);
    auto bf = builtin_fragment(id);
    auto sys = build_constraints(bf.spec, build_fragment(bf.spec, bf.tops));
    auto cert = solve_feasibility(sys).certificate;
    CHECK(verify_certificate(cert, bf.spec));
    CHECK_FALSE(verify_certificate(cert, ClassSpec::parse("tournaments")));

    json bad = cert;
    for (auto& r : bad["rows"])
      if (r["kind"] == "ext" && r["vars"].size() > 0) {
        int v = r["vars"][0].get<int>();
        r["vars"][0] = v == 0 ? 1 : v - 1;  // one expansion id changed
        break;
      }
    CHECK_FALSE(verify_certificate(bad, bf.spec));

    bad = cert;
    bad["expansions"][0].erase(0);
    CHECK_FALSE(verify_certificate(bad, bf.spec));

    bad = cert;
    bad["format"] = "homoflow-cert-0";
    CHECK_FALSE(verify_certificate(bad, bf.spec));
  }

  // replay reports the broken step's index
  auto bf = builtin_fragment("s2");
  auto sys = build_constraints(bf.spec, build_fragment(bf.spec, bf.tops));
  auto cert = solve_feasibility(sys).certificate;
  int target = -1;
  for (int i = 0; i < (int)cert["rows"].size(); ++i)
    if (cert["rows"][i]["kind"] == "ext" && cert["rows"][i]["vars"].size() > 1) {
      target = i;
      cert["rows"][i]["vars"].erase(0);
      break;
    }
  REQUIRE(target >= 0);
  try {
    replay_certificate(cert, bf.spec);
    FAIL("tampered row accepted");
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::Step);
    CHECK(e.index == target);
  }

  cert = solve_feasibility(sys).certificate;
  cert["conclusion"]["zeros"].push_back(0);  // weight that is not forced to zero
  try {
    replay_certificate(cert, bf.spec);
    FAIL("inflated zero list accepted");
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::Step);
    CHECK(e.index == (int)cert["rows"].size());
  }
}

TEST_CASE("hand-encoded clash certificate verifies") {
  // two structures suffice: the four-vertex pattern inside the six-vertex one,
  // equal weights within each forced by isomorphism chains, then the unique
  // extension pins 1/4 against 1/6
  auto bf = builtin_fragment("qhat");
  const FiniteStructure& big = bf.tops[0];
  const FiniteStructure& small = bf.tops[1];
  auto big_exps = enumerate_expansions(bf.spec, big);
  auto small_exps = enumerate_expansions(bf.spec, small);
  REQUIRE(big_exps.size() == 6);
  REQUIRE(small_exps.size() == 4);

  json cert;
  cert["format"] = "homoflow-cert-1";
  cert["class"] = bf.spec.tag();
  cert["structures"] = {structure_to_json(small), structure_to_json(big)};
  json se = json::array(), be = json::array();
  for (auto& e : small_exps) se.push_back(expansion_to_json(e));
  for (auto& e : big_exps) be.push_back(expansion_to_json(e));
  cert["expansions"] = {se, be};

  json rows = json::array();
  {
    json r;
    r["kind"] = "sum";
    r["structure"] = 0;
    r["vars"] = json::array({0, 1, 2, 3});
    rows.push_back(r);
    r["structure"] = 1;
    r["vars"] = json::array({4, 5, 6, 7, 8, 9});
    rows.push_back(r);
  }
  auto chain = [&](const std::vector<Expansion>& exps, int base) {
    for (size_t i = 0; i + 1 < exps.size(); ++i) {
      auto iso = find_isomorphism(to_structure(exps[i]), to_structure(exps[i + 1]));
      REQUIRE(iso);
      json r;
      r["kind"] = "iso";
      r["lhs"] = base + (int)i;
      r["rhs"] = base + (int)i + 1;
      r["map"] = *iso;
      rows.push_back(r);
    }
  };
  chain(small_exps, 0);
  chain(big_exps, 4);

  // find the small expansion with exactly one extension along the inclusion
  VertexMap incl{0, 1, 2, 3};
  int lone_small = -1, lone_big = -1;
  for (int i = 0; i < 4; ++i) {
    std::vector<int> ups;
    for (int j = 0; j < 6; ++j)
      if (restrict_expansion(big_exps[j], incl, small) == small_exps[i]) ups.push_back(j);
    if (ups.size() == 1) {
      lone_small = i;
      lone_big = ups[0];
      break;
    }
  }
  REQUIRE(lone_small >= 0);
  {
    json r;
    r["kind"] = "ext";
    r["dom"] = 0;
    r["cod"] = 1;
    r["map"] = incl;
    r["lhs"] = lone_small;
    r["vars"] = json::array({4 + lone_big});
    rows.push_back(r);
  }
  cert["rows"] = std::move(rows);
  cert["conclusion"]["type"] = "value_clash";
  cert["conclusion"]["var"] = lone_small;
  cert["conclusion"]["values"] = json::array({"1/4", "1/6"});
  CHECK(verify_certificate(cert, bf.spec));

  cert["conclusion"]["values"] = json::array({"1/6", "1/4"});  // order-free pair
  CHECK(verify_certificate(cert, bf.spec));

  cert["conclusion"]["values"] = json::array({"1/4", "1/5"});
  CHECK_FALSE(verify_certificate(cert, bf.spec));
}

TEST_CASE("feasible fragments yield exact consistent random expansions") {
  ClassSpec tours = ClassSpec::parse("tournaments");
  auto frag = build_fragment(tours, enumerate_age_members(tours, 3));
  auto sys = build_constraints(tours, frag);
  auto res = solve_feasibility(sys);
  REQUIRE(res.feasible);
  CHECK(measure_satisfies_P(res.measure));
  CHECK(measure_satisfies_I(res.measure));
  CHECK(measure_positive(res.measure));
  for (auto& fe : frag.embeddings)
    CHECK(measure_satisfies_E(res.measure, frag.structures[fe.from], frag.structures[fe.to],
                              fe.map));
  // linear orders on a tournament: every weight is 1/n!
  for (int s = 0; s < (int)frag.structures.size(); ++s) {
    Rat uni = Rat(1) / Rat(factorial(frag.structures[s].n));
    for (auto& e : sys.expansions[s])
      CHECK(res.measure.weight_of(frag.structures[s], e) == uni);
  }

  // a one-point fragment has a single expansion of weight one
  ClassSpec q = ClassSpec::parse("q");
  auto tiny = build_constraints(q, build_fragment(q, {FiniteStructure::empty(1)}));
  REQUIRE(tiny.num_vars == 1);
  auto tres = solve_feasibility(tiny);
  REQUIRE(tres.feasible);
  CHECK(tres.measure.weight_of(FiniteStructure::empty(1), tiny.expansions[0][0]) == 1);
}

TEST_CASE("density pass makes the uniform assignment a solver solution") {
  ClassSpec spec = ClassSpec::parse("d-omega");
  REQUIRE(check_density_criterion(spec, 4).pass);
  auto frag = build_fragment(spec, enumerate_age_members(spec, 4));
  auto sys = build_constraints(spec, frag);
  auto res = solve_feasibility(sys);
  REQUIRE(res.feasible);
  auto uni = uniform_measure(spec, frag.structures);
  for (int s = 0; s < (int)frag.structures.size(); ++s)
    for (auto& e : sys.expansions[s])
      CHECK(res.measure.weight_of(frag.structures[s], e) ==
            uni.weight_of(frag.structures[s], e));
}

TEST_CASE("density criterion matches the known classes") {
  CHECK(check_density_criterion(ClassSpec::parse("d-omega"), 4).pass);
  CHECK(check_density_criterion(ClassSpec::parse("hatt"), 4).pass);
  CHECK(check_density_criterion(ClassSpec::parse("tournaments"), 4).pass);
  CHECK(check_density_criterion(ClassSpec::parse("ft:c3"), 5).pass);

  auto r = check_density_criterion(ClassSpec::parse("poset"), 3);
  REQUIRE_FALSE(r.pass);
  CHECK(r.big.n == 3);
  REQUIRE(r.subset.size() == 2);
  // the witness pair: two orderings of an incomparable pair, seen 2 and 1
  // times among the three linear extensions
  auto sub = r.big.restrict_to(r.subset);
  CHECK(no_arcs(sub));
  CHECK(r.first_count + r.second_count == 3);
  CHECK(std::min(r.first_count, r.second_count) == 1);
  CHECK(std::max(r.first_count, r.second_count) == 2);
  CHECK(r.first.order != r.second.order);
}

TEST_CASE("cofinal isomorphism check accepts full columns and rejects labels") {
  ClassSpec hatq = ClassSpec::parse("hatq");
  std::vector<FiniteStructure> cols;
  for (int k = 1; k <= 5; ++k) {
    FiniteStructure t = FiniteStructure::empty(k);
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) t.set_arc(i, j);
    t.order.resize(k);
    std::iota(t.order.begin(), t.order.end(), 0);
    cols.push_back(delta_inverse(t).base);
  }
  CHECK(check_cofinal_isomorphism(hatq, cols, 5));

  ClassSpec d3 = ClassSpec::parse("d:3");
  auto small = enumerate_age_members(d3, 2);
  REQUIRE(small.size() == 3);
  // the arc member carries part labels, so its expansions split into
  // non-isomorphic groups even though cofinality at this bound holds
  CHECK_FALSE(check_cofinal_isomorphism(d3, small, 2));
  // a family missing the non-adjacent pair is not even cofinal
  CHECK_FALSE(check_cofinal_isomorphism(d3, {digraph(2, {{0, 1}})}, 2));
  CHECK_THROWS_AS(check_cofinal_isomorphism(d3, {}, 2), Error);
  // four singleton perpendicularity classes exceed the cap of three
  CHECK_THROWS_AS(check_cofinal_isomorphism(
                      d3, {digraph(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}})}, 2),
                  Error);
}

TEST_CASE("enlarging an infeasible fragment keeps it infeasible") {
  auto bf = builtin_fragment("s2");
  auto tops = bf.tops;
  tops.push_back(digraph(3, {{0, 1}, {1, 2}, {2, 0}}));  // add the 3-cycle
  auto frag = build_fragment(bf.spec, tops);
  auto res = solve_feasibility(build_constraints(bf.spec, frag));
  CHECK_FALSE(res.feasible);
  CHECK(verify_certificate(res.certificate, bf.spec));
}

TEST_CASE("uniqueness probe: symmetric tops pin the whole fragment") {
  // every expansion of an edgeless member is isomorphic to every other, so
  // the feasible set collapses to the single uniform point
  ClassSpec spec = ClassSpec::parse("d-omega");
  auto sys = build_constraints(spec, build_fragment(spec, {FiniteStructure::empty(4)}));
  REQUIRE(sys.num_vars == 24 + 6 + 2 + 1);
  std::vector<int> all(sys.num_vars);
  std::iota(all.begin(), all.end(), 0);
  auto ranges = coordinate_ranges(sys, all);
  for (int v = 0; v < sys.num_vars; ++v) {
    int s = sys.var_structure(v);
    Rat uni(1, (long)sys.expansions[s].size());
    CHECK(ranges[v].lo == uni);
    CHECK(ranges[v].hi == uni);
  }
}

TEST_CASE("uniqueness probe: the full closure pins every interior weight") {
  // Top-level members keep slack from truncation (nothing above them in the
  // fragment), but every weight of a proper substructure is squeezed to the
  // uniform value once the four-vertex layer is present.
  ClassSpec spec = ClassSpec::parse("d-omega");
  auto frag = build_fragment(spec, enumerate_age_members(spec, 4));
  auto sys = build_constraints(spec, frag);
  std::vector<int> interior;
  for (int v = 0; v < sys.num_vars; ++v)
    if (frag.structures[sys.var_structure(v)].n <= 3) interior.push_back(v);
  REQUIRE(interior.size() == 35);
  auto ranges = coordinate_ranges(sys, interior);
  for (size_t i = 0; i < interior.size(); ++i) {
    int s = sys.var_structure(interior[i]);
    Rat uni(1, (long)sys.expansions[s].size());
    CHECK(ranges[i].lo == uni);
    CHECK(ranges[i].hi == uni);
  }
  // without the four-vertex layer the top members split cleanly: each weight
  // is either pinned at uniform or free over the whole interval [0, 1/2]
  auto small = build_constraints(spec, build_fragment(spec, enumerate_age_members(spec, 3)));
  std::vector<int> all(small.num_vars);
  std::iota(all.begin(), all.end(), 0);
  auto sr = coordinate_ranges(small, all);
  int loose = 0;
  for (int v = 0; v < small.num_vars; ++v) {
    int s = small.var_structure(v);
    Rat uni(1, (int)small.expansions[s].size());
    if (sr[v].lo == sr[v].hi) {
      CHECK(sr[v].lo == uni);
    } else {
      ++loose;
      CHECK(small.frag.structures[s].n == 3);
      CHECK(sr[v].lo == 0);
      CHECK(sr[v].hi == Rat(1, 2));
    }
  }
  CHECK(loose == 10);
}

TEST_CASE("secondary pass proves zeros with dual combinations") {
  // removing the unique-extension rows from the poset system leaves the chain
  // heuristic stuck, but the polytope still forces the same weight to zero
  auto bf = builtin_fragment("p");
  auto frag = build_fragment(bf.spec, bf.tops);
  auto sys = build_constraints(bf.spec, frag);
  int edgeless = -1;
  for (int s = 0; s < (int)frag.structures.size(); ++s)
    if (frag.structures[s].n == 2 && no_arcs(frag.structures[s])) edgeless = s;
  REQUIRE(edgeless >= 0);
  std::erase_if(sys.rows, [&](const Row& r) {
    return r.kind == RowKind::Ext && r.vars.size() == 1 &&
           sys.var_structure(r.lhs) == edgeless;
  });
  auto res = solve_feasibility(sys);
  REQUIRE_FALSE(res.feasible);
  auto& concl = res.certificate["conclusion"];
  REQUIRE(concl["type"] == "forced_zero");
  REQUIRE(concl.contains("duals"));
  CHECK(conclusion_zeros(res.certificate).count(
            var_of(sys, bf.zero_structure, bf.zero_expansion)) == 1);
  CHECK(verify_certificate(res.certificate, bf.spec));

  json bad = res.certificate;
  Rat old = rat_from_string(bad["conclusion"]["duals"][0][0].get<std::string>());
  bad["conclusion"]["duals"][0][0] = rat_to_string(old + 1);
  CHECK_FALSE(verify_certificate(bad, bf.spec));
}

TEST_CASE("contradictory systems fall back to a nonnegative combination") {
  // two copies of the edgeless pair, each forced to carry the whole mass of
  // the other: summing the rows gives 2 = 1
  ClassSpec poset = ClassSpec::parse("poset");
  FiniteStructure a = FiniteStructure::empty(2);
  Fragment frag;
  frag.spec = poset;
  frag.structures = {a, a};
  frag.embeddings = {{0, 1, {0, 1}}};
  LinearSystem sys;
  sys.frag = frag;
  sys.expansions = {enumerate_expansions(poset, a), enumerate_expansions(poset, a)};
  sys.var_base = {0, 2};
  sys.num_vars = 4;
  Row s0, s1, e0, e1;
  s0.kind = RowKind::Sum;
  s0.structure = 0;
  s0.vars = {0, 1};
  s1.kind = RowKind::Sum;
  s1.structure = 1;
  s1.vars = {2, 3};
  e0.kind = RowKind::Ext;
  e0.emb = 0;
  e0.lhs = 0;
  e0.vars = {2, 3};
  e1.kind = RowKind::Ext;
  e1.emb = 0;
  e1.lhs = 1;
  e1.vars = {2, 3};
  sys.rows = {s0, s1, e0, e1};
  auto res = solve_feasibility(sys);
  REQUIRE_FALSE(res.feasible);
  auto& concl = res.certificate["conclusion"];
  REQUIRE(concl["type"] == "farkas");
  std::vector<Rat> lam;
  for (auto& j : concl["coeffs"]) lam.push_back(rat_from_string(j.get<std::string>()));
  REQUIRE(lam.size() == sys.rows.size());
  std::vector<Rat> g(sys.num_vars, Rat(0));
  Rat h = 0;
  for (size_t r = 0; r < sys.rows.size(); ++r) {
    auto& row = sys.rows[r];
    if (row.kind == RowKind::Sum) {
      h += lam[r];
      for (int v : row.vars) g[v] += lam[r];
    } else {
      g[row.lhs] += lam[r];
      for (int v : row.vars) g[v] -= lam[r];
    }
  }
  CHECK(h > 0);
  for (auto& x : g) CHECK(x <= 0);
  CHECK_THROWS_AS(coordinate_range(sys, 0), Error);
}

TEST_CASE("feasible systems without symmetry rows average to an interior point") {
  ClassSpec poset = ClassSpec::parse("poset");
  FiniteStructure a = FiniteStructure::empty(2);
  FiniteStructure c = digraph(3, {{0, 1}});
  Fragment frag;
  frag.spec = poset;
  frag.structures = {a, c};
  frag.embeddings = {{0, 1, {0, 2}}};
  LinearSystem sys;
  sys.frag = frag;
  sys.expansions = {enumerate_expansions(poset, a), enumerate_expansions(poset, c)};
  sys.var_base = {0, 2};
  sys.num_vars = 5;
  Row s0, s1, e0;
  s0.kind = RowKind::Sum;
  s0.structure = 0;
  s0.vars = {0, 1};
  s1.kind = RowKind::Sum;
  s1.structure = 1;
  s1.vars = {2, 3, 4};
  e0.kind = RowKind::Ext;
  e0.emb = 0;
  e0.lhs = 0;
  e0.vars = {2};
  sys.rows = {s0, s1, e0};
  auto res = solve_feasibility(sys);
  REQUIRE(res.feasible);
  std::vector<Rat> x(sys.num_vars);
  for (int s = 0; s < 2; ++s) {
    auto& w = res.measure.entries.at(canonical_form(frag.structures[s])).weights;
    for (int e = 0; e < (int)w.size(); ++e) x[sys.var(s, e)] = w[e];
  }
  for (auto& v : x) CHECK(v > 0);
  for (auto& row : sys.rows) CHECK(row_residue(row, x) == 0);
}

TEST_CASE("degenerate coordinate ranges come from propagation directly") {
  auto bf = builtin_fragment("p");
  auto sys = build_constraints(bf.spec, build_fragment(bf.spec, bf.tops));
  int zero = var_of(sys, bf.zero_structure, bf.zero_expansion);
  auto r = coordinate_range(sys, zero);
  CHECK(r.lo == 0);
  CHECK(r.hi == 0);
  int half = var_of(sys, 0, Expansion{bf.tops[0], {0, 1, 2}, {}, {}});
  r = coordinate_range(sys, half);
  CHECK(r.lo == Rat(1, 2));
  CHECK(r.hi == Rat(1, 2));
  CHECK_THROWS_AS(coordinate_range(sys, -1), Error);
  CHECK_THROWS_AS(coordinate_range(sys, sys.num_vars), Error);

  auto qs = builtin_fragment("qhat");
  auto qsys = build_constraints(qs.spec, build_fragment(qs.spec, qs.tops));
  CHECK_THROWS_AS(coordinate_range(qsys, 0), Error);
}

TEST_CASE("oversized enumerations stop at the guard") {
  ClassSpec tours = ClassSpec::parse("tournaments");
  FiniteStructure t9 = FiniteStructure::empty(9);
  for (int i = 0; i < 9; ++i)
    for (int j = i + 1; j < 9; ++j) t9.set_arc(i, j);
  auto frag = build_fragment(tours, {t9});
  try {
    build_constraints(tours, frag);
    FAIL("9! expansions accepted");
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::BoundExceeded);
  }
}
