#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "homoflow/composition.hpp"

using namespace homoflow;

namespace {

FiniteStructure digraph(int n, std::vector<std::pair<int, int>> arcs) {
  auto s = FiniteStructure::empty(n);
  for (auto& [a, b] : arcs) s.set_arc(a, b);
  return s;
}

FiniteStructure c3() { return digraph(3, {{0, 1}, {1, 2}, {2, 0}}); }
FiniteStructure arc2() { return digraph(2, {{0, 1}}); }
FiniteStructure k1() { return FiniteStructure::empty(1); }

}  // namespace

TEST_CASE("composing over one point reproduces the class") {
  auto c = compose(k1(), {c3()});
  auto f = flatten(c);
  CHECK(f.n == 3);
  CHECK(f.parts == std::vector<int>{0, 0, 0});
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      if (x != y) CHECK(f.arc(x, y) == c3().arc(x, y));
}

TEST_CASE("blow-up of a 3-cycle by independent pairs") {
  auto c = compose(c3(), {FiniteStructure::empty(2), FiniteStructure::empty(2),
                          FiniteStructure::empty(2)});
  auto f = flatten(c);
  REQUIRE(f.n == 6);
  // (x,i) -> (y,j) iff the quotient has i -> j
  long arcs = 0;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y) {
      if (x == y) continue;
      bool expect = c3().arc(f.parts[x], f.parts[y]);
      CHECK(f.arc(x, y) == expect);
      arcs += f.arc(x, y);
    }
  CHECK(arcs == 12);
}

TEST_CASE("two disjoint 3-cycles") {
  auto c = compose(FiniteStructure::empty(2), {c3(), c3()});
  auto f = flatten(c);
  REQUIRE(f.n == 6);
  for (int x = 0; x < 3; ++x)
    for (int y = 3; y < 6; ++y) {
      CHECK(!f.arc(x, y));
      CHECK(!f.arc(y, x));
    }
  CHECK(f.arc(0, 1));
  CHECK(f.arc(4, 5));
}

TEST_CASE("compose rejects bad input") {
  CHECK_THROWS_AS(compose(arc2(), {k1()}), Error);                 // arity
  CHECK_THROWS_AS(compose(arc2(), {k1(), FiniteStructure::empty(0)}), Error);
  auto ordered = arc2();
  ordered.order = {0, 1};
  CHECK_THROWS_AS(compose(ordered, {k1(), k1()}), Error);          // extra field
  CHECK_THROWS_AS(compose(arc2(), {ordered, k1()}), Error);
}

TEST_CASE("flatten and unflatten round trip") {
  std::vector<FiniteStructure> quotients{k1(), FiniteStructure::empty(2), arc2(), c3()};
  std::vector<FiniteStructure> pieces{k1(), FiniteStructure::empty(2), arc2(), c3()};
  for (auto& q : quotients)
    for (auto& p0 : pieces) {
      std::vector<FiniteStructure> parts(q.n, k1());
      if (q.n > 0) parts[0] = p0;
      if (p0.n * 1 + (q.n - 1) > 6) continue;
      auto c = compose(q, parts);
      auto f = flatten(c);
      CHECK(unflatten(f) == c);
      CHECK(quotient_structure(f) == q);
    }
}

TEST_CASE("congruence failure is detected") {
  // two doubled columns in general position: cross arcs are not class-uniform
  auto gp = digraph(4, {{0, 2}, {3, 0}, {1, 3}, {2, 1}});
  gp.parts = {0, 0, 1, 1};
  CHECK_THROWS_AS(quotient_structure(gp), Error);
  try {
    quotient_structure(gp);
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::NotACongruence);
  }
  // singleton classes always pass
  auto t = c3();
  t.parts = {0, 1, 2};
  CHECK(quotient_structure(t) == c3());
}

TEST_CASE("composite json round trip") {
  auto c = compose(arc2(), {c3(), arc2()});
  CHECK(composite_from_json(composite_to_json(c)) == c);
}

TEST_CASE("product expansions multiply out") {
  auto spec = ClassSpec::parse("comp(tournaments,tournaments)");
  auto c = compose(arc2(), {arc2(), k1()});
  auto pes = enumerate_product_expansions(spec, c);
  CHECK(pes.size() == 4);  // 2 quotient orders x 2 x 1
  for (size_t i = 0; i < pes.size(); ++i)
    for (size_t j = i + 1; j < pes.size(); ++j) CHECK(!(pes[i] == pes[j]));

  auto c2 = compose(c3(), {k1(), k1(), k1()});
  CHECK(enumerate_product_expansions(spec, c2).size() == 6);

  // non-member composite: a class outside L
  auto bad = compose(arc2(), {FiniteStructure::empty(2), k1()});
  CHECK(!validate_composite(spec, bad));
  CHECK_THROWS_AS(enumerate_product_expansions(spec, bad), Error);
}

TEST_CASE("flattened product expansion nests the orders") {
  auto spec = ClassSpec::parse("comp(tournaments,tournaments)");
  auto c = compose(arc2(), {arc2(), arc2()});
  auto pes = enumerate_product_expansions(spec, c);
  REQUIRE(pes.size() == 8);
  for (auto& pe : pes) {
    auto e = product_to_expansion(c, pe);
    REQUIRE((int)e.order.size() == 4);
    // class blocks stay contiguous and follow the quotient order
    int first_class = e.base.parts[e.order[0]];
    CHECK(e.base.parts[e.order[1]] == first_class);
    CHECK(e.base.parts[e.order[2]] != first_class);
    CHECK(e.base.parts[e.order[2]] == e.base.parts[e.order[3]]);
    CHECK(first_class == pe.quotient.order[0]);
  }
}

TEST_CASE("product measure values") {
  auto tn = ClassSpec::parse("tournaments");
  auto spec = ClassSpec::parse("comp(tournaments,tournaments)");

  auto mu1 = uniform_measure(tn, {k1()});
  auto nu1 = uniform_measure(tn, {arc2()});
  auto c1 = compose(k1(), {arc2()});
  for (auto& pe : enumerate_product_expansions(spec, c1))
    CHECK(product_measure_eval(nu1, mu1, c1, pe) == Rat(1, 2));

  auto mu2 = uniform_measure(tn, {arc2()});
  auto nu2 = uniform_measure(tn, {arc2(), k1()});
  auto c2 = compose(arc2(), {arc2(), arc2()});
  auto pes = enumerate_product_expansions(spec, c2);
  REQUIRE(pes.size() == 8);
  Rat sum = 0;
  for (auto& pe : pes) {
    CHECK(product_measure_eval(nu2, mu2, c2, pe) == Rat(1, 8));
    sum += product_measure_eval(nu2, mu2, c2, pe);
  }
  CHECK(sum == 1);

  // missing factor weights surface as IncompleteMeasure
  auto c3comp = compose(k1(), {c3()});
  CHECK_THROWS_AS(
      product_measure_eval(nu2, mu2, c3comp, enumerate_product_expansions(spec, c3comp)[0]),
      Error);
}

TEST_CASE("product measures keep the probability and extension laws") {
  auto tn = ClassSpec::parse("tournaments");
  auto spec = ClassSpec::parse("comp(tournaments,tournaments)");
  std::vector<FiniteStructure> pool{k1(), arc2(), c3(), digraph(3, {{0, 1}, {0, 2}, {1, 2}})};
  auto mu = uniform_measure(tn, pool);
  auto nu = uniform_measure(tn, pool);

  std::vector<CompositeStructure> comps;
  for (auto& q : pool)
    for (auto& p : pool) {
      std::vector<FiniteStructure> parts(q.n, k1());
      parts[0] = p;
      if (p.n + q.n - 1 > 5) continue;
      comps.push_back(compose(q, parts));
    }
  for (auto& c : comps) CHECK(composite_measure_P(spec, nu, mu, c));

  EmbedOpts eq;
  eq.parts_as_equivalence = true;
  int checked = 0;
  for (auto& a : comps) {
    if (a.total_vertices() > 4) continue;
    for (auto& b : comps) {
      if (b.total_vertices() > 4 || a.total_vertices() > b.total_vertices()) continue;
      for (auto& emb : enumerate_embeddings(flatten(a), flatten(b), eq)) {
        CHECK(composite_measure_E(spec, nu, mu, a, b, emb));
        ++checked;
      }
    }
  }
  CHECK(checked > 10);

  // a feasible non-uniform class measure also passes both laws
  RandomExpansionMeasure skew = nu;
  auto key = canonical_form(arc2());
  REQUIRE(skew.entries.count(key) == 1);
  skew.entries[key].weights = {Rat(1, 3), Rat(2, 3)};
  CHECK(measure_satisfies_P(skew));
  CHECK(measure_satisfies_I(skew));
  auto cb = compose(arc2(), {arc2(), k1()});
  CHECK(composite_measure_P(spec, skew, mu, cb));
  auto ca = compose(k1(), {arc2()});
  for (auto& emb : enumerate_embeddings(flatten(ca), flatten(cb), eq))
    CHECK(composite_measure_E(spec, skew, mu, ca, cb, emb));
}

TEST_CASE("measure helpers") {
  auto tn = ClassSpec::parse("tournaments");
  auto m = uniform_measure(tn, {arc2(), k1()});
  CHECK(measure_satisfies_P(m));
  CHECK(measure_satisfies_I(m));
  CHECK(measure_positive(m));
  CHECK(m.weight_of(arc2(), enumerate_expansions(tn, arc2())[0]) == Rat(1, 2));
  // weight lookup across an isomorphic copy
  auto flipped = digraph(2, {{1, 0}});
  auto fe = enumerate_expansions(tn, flipped)[0];
  CHECK(m.weight_of(flipped, fe) == Rat(1, 2));
  CHECK_THROWS_AS(m.weight_of(c3(), enumerate_expansions(tn, c3())[0]), Error);
  VertexMap emb{0};
  CHECK(measure_satisfies_E(m, k1(), arc2(), emb));
  auto broken = m;
  broken.entries[canonical_form(arc2())].weights = {Rat(1, 3), Rat(1, 3)};
  CHECK(!measure_satisfies_P(broken));
  CHECK(!measure_satisfies_E(broken, k1(), arc2(), emb));
}

TEST_CASE("jep merge picks the simplest joint extension") {
  std::vector<VertexMap> incs;
  auto edgeless = ClassSpec::parse("d-omega");
  auto u1 = jep_merge(edgeless, {FiniteStructure::empty(2), FiniteStructure::empty(1)}, incs);
  CHECK(u1.n == 3);
  long arcs = 0;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y) arcs += (x != y && u1.arc(x, y));
  CHECK(arcs == 0);  // the plain union is already a member

  auto tn = ClassSpec::parse("tournaments");
  auto u2 = jep_merge(tn, {arc2(), k1()}, incs);
  CHECK(validate_structure(u2, tn));
  REQUIRE(incs.size() == 2);
  CHECK(is_embedding(arc2(), u2, incs[0]));
  CHECK(is_embedding(k1(), u2, incs[1]));
  CHECK(u2.arc(0, 2));  // earlier summand points at later ones
}

TEST_CASE("identity partial isos lift over any witnesses") {
  auto s = compose(arc2(), {arc2(), k1()});
  PartialIso ident;
  for (int v = 0; v < 3; ++v) ident.push_back({v, v});
  ProductLiftInput in;
  in.d_ambient = arc2();
  in.q_inclusion = {0, 1};
  in.q_autos = {{0, 1}};
  std::vector<VertexMap> incs;
  in.t_ambient = jep_merge(ClassSpec::parse("tournaments"), {arc2(), k1()}, incs);
  in.part_inclusions = {incs[0], incs[1]};
  in.t_autos = {};
  auto w = hrushovski_product_lift(s, {ident}, in);
  REQUIRE(w.autos.size() == 1);
  VertexMap id(w.ambient.n);
  std::iota(id.begin(), id.end(), 0);
  CHECK(w.autos[0] == id);
  // the inclusion embeds the flattening class-respectingly
  EmbedOpts eq;
  eq.parts_as_equivalence = true;
  CHECK(is_embedding(flatten(s), w.ambient, w.inclusion, eq));
}

TEST_CASE("a class swap lifts to a composite automorphism") {
  // two non-adjacent classes, each a non-adjacent pair
  auto s = compose(FiniteStructure::empty(2),
                   {FiniteStructure::empty(2), FiniteStructure::empty(2)});
  PartialIso swap{{0, 2}};  // first vertex of class 0 to first vertex of class 1
  ProductLiftInput in;
  in.d_ambient = FiniteStructure::empty(2);
  in.q_inclusion = {0, 1};
  in.q_autos = {{1, 0}};
  in.t_ambient = FiniteStructure::empty(4);
  in.part_inclusions = {{0, 1}, {2, 3}};
  in.t_autos.resize(1);
  in.t_autos[0][0] = {2, 3, 0, 1};  // send class 0's copy onto class 1's
  auto w = hrushovski_product_lift(s, {swap}, in);
  REQUIRE(w.autos.size() == 1);
  CHECK(w.autos[0][w.inclusion[0]] == w.inclusion[2]);
  EmbedOpts eq;
  eq.parts_as_equivalence = true;
  CHECK(is_embedding(w.ambient, w.ambient, w.autos[0], eq));
}

TEST_CASE("a quotient rotation lifts over a 3-cycle of pairs") {
  auto s = compose(c3(), {FiniteStructure::empty(2), FiniteStructure::empty(2),
                          FiniteStructure::empty(2)});
  // rotate every vertex one class forward, preserving local index
  PartialIso rot;
  for (int v = 0; v < 6; ++v) rot.push_back({v, (v + 2) % 6});
  ProductLiftInput in;
  in.d_ambient = c3();
  in.q_inclusion = {0, 1, 2};
  in.q_autos = {{1, 2, 0}};
  in.t_ambient = FiniteStructure::empty(6);
  in.part_inclusions = {{0, 1}, {2, 3}, {4, 5}};
  in.t_autos.resize(1);
  VertexMap shift{2, 3, 4, 5, 0, 1};
  in.t_autos[0][0] = shift;
  in.t_autos[0][1] = shift;
  in.t_autos[0][2] = shift;
  auto w = hrushovski_product_lift(s, {rot}, in);
  for (auto& [u, v] : rot) CHECK(w.autos[0][w.inclusion[u]] == w.inclusion[v]);

  // a quotient witness that misses the projection is rejected
  auto bad = in;
  bad.q_autos = {{0, 1, 2}};
  CHECK_THROWS_AS(hrushovski_product_lift(s, {rot}, bad), Error);
  // so is a part witness that sends the pair elsewhere
  auto bad2 = in;
  bad2.t_autos[0][0] = {1, 0, 2, 3, 4, 5};
  CHECK_THROWS_AS(hrushovski_product_lift(s, {rot}, bad2), Error);
}
