#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "homoflow/structures.hpp"

using namespace homoflow;

namespace {

FiniteStructure digraph(int n, std::initializer_list<std::pair<int, int>> arcs) {
  FiniteStructure s = FiniteStructure::empty(n);
  for (auto [a, b] : arcs) s.set_arc(a, b);
  return s;
}

FiniteStructure c3() { return digraph(3, {{0, 1}, {1, 2}, {2, 0}}); }
FiniteStructure l3() { return digraph(3, {{0, 1}, {1, 2}, {0, 2}}); }

// two non-adjacent pairs {0,1}, {2,3}, cross arcs with every vertex having one
// out and one in (the balanced cross pattern)
FiniteStructure general_position_22() {
  return digraph(4, {{0, 2}, {3, 0}, {1, 3}, {2, 1}});
}

}  // namespace

TEST_CASE("json round trip preserves all fields") {
  FiniteStructure s = digraph(3, {{0, 1}, {1, 2}});
  s.parts = {5, 5, 7};
  s.set_aux(0, 2);
  s.order = {2, 0, 1};
  json j = structure_to_json(s);
  FiniteStructure t = structure_from_json(j);
  CHECK(t == s);
  CHECK(j["arcs"][0][0] == 0);  // arc lists serialize sorted
  CHECK(j["arcs"][1][0] == 1);
}

TEST_CASE("malformed structures are rejected") {
  CHECK_THROWS_AS(structure_from_json(json{{"n", 2}, {"arcs", {{0, 0}}}}), Error);
  CHECK_THROWS_AS(structure_from_json(json{{"n", 2}, {"arcs", {{0, 1}, {1, 0}}}}), Error);
  CHECK_THROWS_AS(structure_from_json(json{{"n", 2}, {"arcs", {{0, 5}}}}), Error);
  CHECK_THROWS_AS(structure_from_json(json{{"n", 3}, {"arcs", json::array()}, {"order", {0, 1}}}),
                  Error);
  CHECK_THROWS_AS(structure_from_json(json{{"n", 2}, {"arcs", json::array()},
                                           {"parts", {{"0", 1}}}}),
                  Error);
  try {
    structure_from_json(json{{"n", 2}, {"arcs", {{0, 1}, {1, 0}}}});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::Validation);
  }
}

TEST_CASE("non-adjacency classes") {
  FiniteStructure i3 = FiniteStructure::empty(3);
  auto cl = perp_partition(i3);
  REQUIRE(cl.size() == 1);
  CHECK(cl[0] == std::vector<int>{0, 1, 2});

  auto t = perp_partition(l3());
  CHECK(t.size() == 3);

  auto g = perp_partition(general_position_22());
  REQUIRE(g.size() == 2);
  CHECK(g[0] == std::vector<int>{0, 1});
  CHECK(g[1] == std::vector<int>{2, 3});

  // 0 ~ 2 and 2 ~ 1 but 0 -> 1: not transitive
  FiniteStructure bad = digraph(3, {{0, 1}});
  CHECK_THROWS_AS(perp_partition(bad), Error);
  try {
    perp_partition(bad);
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::NotAnEquivalence);
  }
}

TEST_CASE("tournament-family membership") {
  auto T = ClassSpec::parse("tournaments");
  auto Q = ClassSpec::parse("q");
  auto F = ClassSpec::parse("ft:c3");
  CHECK(validate_structure(c3(), T));
  CHECK(validate_structure(l3(), T));
  CHECK_FALSE(validate_structure(digraph(2, {}), T));
  CHECK(validate_structure(l3(), Q));
  CHECK_FALSE(validate_structure(c3(), Q));
  CHECK(validate_structure(l3(), F));
  CHECK_FALSE(validate_structure(c3(), F));
  // forbidden tournaments appearing as sub-tournaments are caught too
  FiniteStructure w = digraph(4, {{3, 0}, {3, 1}, {3, 2}, {0, 1}, {1, 2}, {2, 0}});
  CHECK_FALSE(validate_structure(w, F));
}

TEST_CASE("circular membership: dense local orders") {
  auto S = ClassSpec::parse("s2");
  CHECK(validate_structure(c3(), S));
  CHECK(validate_structure(l3(), S));
  // a vertex dominating a 3-cycle has an intransitive out-neighbourhood,
  // which no circle placement admits
  FiniteStructure w = digraph(4, {{3, 0}, {3, 1}, {3, 2}, {0, 1}, {1, 2}, {2, 0}});
  CHECK_FALSE(validate_structure(w, S));
  FiniteStructure w2 = digraph(4, {{0, 3}, {1, 3}, {2, 3}, {0, 1}, {1, 2}, {2, 0}});
  CHECK_FALSE(validate_structure(w2, S));
  CHECK_FALSE(validate_structure(digraph(2, {}), S));  // members are tournaments
}

TEST_CASE("circular membership with three levels") {
  auto S = ClassSpec::parse("s3");
  CHECK(validate_structure(FiniteStructure::empty(1), S));
  CHECK(validate_structure(FiniteStructure::empty(2), S));  // one unrelated pair fits
  // three forward gaps each under a third of the circle cannot sum to a full
  // turn, so the 3-cycle is not realizable here (unlike the two-level circle)
  CHECK_FALSE(validate_structure(c3(), S));
  CHECK(validate_structure(l3(), S));
  CHECK_FALSE(validate_structure(FiniteStructure::empty(3), S));
  // chain of unrelated pairs with one arc: realizable iff slots exist; the
  // non-transitive witness 0~1, 1~2, 0->2 needs slots with diffs 3..6, 3..6
  // and a forward arc — e.g. 0, 4, 8 in Z_9 gives exactly arc(2,0)... check
  // via the validator both orientations
  FiniteStructure m = digraph(3, {{2, 0}});
  CHECK(validate_structure(m, S));
}

TEST_CASE("poset and twisted-poset membership") {
  auto P = ClassSpec::parse("poset");
  auto P3 = ClassSpec::parse("p3");
  CHECK(validate_structure(digraph(2, {{0, 1}}), P));
  CHECK(validate_structure(l3(), P));
  CHECK_FALSE(validate_structure(c3(), P));
  CHECK_FALSE(validate_structure(digraph(3, {{0, 1}, {1, 2}}), P));  // missing 0->2

  CHECK(validate_structure(digraph(2, {{0, 1}}), P3));
  CHECK(validate_structure(digraph(2, {}), P3));
  CHECK(validate_structure(l3(), P3));

  // independent oracle: all labelings, full transitivity check of the derived
  // relation under the three-part twist
  auto oracle = [](const FiniteStructure& s) {
    int n = s.n;
    long total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    for (long code = 0; code < total; ++code) {
      std::vector<int> lab(n);
      long c = code;
      for (int i = 0; i < n; ++i) { lab[i] = c % 3; c /= 3; }
      std::vector<std::vector<char>> lt(n, std::vector<char>(n, 0));
      for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y) {
          int i = lab[x], j = lab[y];
          int r;
          bool xy = s.arc(x, y), yx = s.arc(y, x);
          if (i == j) r = xy ? 1 : (yx ? -1 : 0);
          else if ((i + 1) % 3 == j) r = xy ? -1 : (yx ? 0 : 1);
          else r = yx ? 1 : (xy ? 0 : -1);
          if (r > 0) lt[x][y] = 1;
          if (r < 0) lt[y][x] = 1;
        }
      bool ok = true;
      for (int a = 0; a < n && ok; ++a)
        for (int b = 0; b < n && ok; ++b)
          for (int d = 0; d < n && ok; ++d)
            if (a != b && b != d && a != d && lt[a][b] && lt[b][d] && !lt[a][d]) ok = false;
      if (ok) return true;
    }
    return false;
  };
  Rng rng(404);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + (int)rng.below(3);
    FiniteStructure s = FiniteStructure::empty(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        switch (rng.below(3)) {
          case 0: s.set_arc(i, j); break;
          case 1: s.set_arc(j, i); break;
          default: break;
        }
      }
    CHECK(validate_structure(s, P3) == oracle(s));
  }
}

TEST_CASE("bounded-class membership") {
  auto D3 = ClassSpec::parse("d:3");
  auto DW = ClassSpec::parse("d-omega");
  FiniteStructure two_cols = general_position_22();
  CHECK(validate_structure(two_cols, D3));
  CHECK(validate_structure(two_cols, DW));
  CHECK(validate_structure(FiniteStructure::empty(4), ClassSpec::parse("d:1")));
  CHECK_FALSE(validate_structure(c3(), ClassSpec::parse("d:2")));  // three classes
  CHECK(validate_structure(c3(), D3));
  CHECK_FALSE(validate_structure(digraph(3, {{0, 1}}), DW));  // intransitive
}

TEST_CASE("independence-bounded membership") {
  auto G2 = ClassSpec::parse("gn:2");
  auto G3 = ClassSpec::parse("gn:3");
  CHECK_FALSE(validate_structure(FiniteStructure::empty(4), G3));
  CHECK_FALSE(validate_structure(FiniteStructure::empty(4), G2));
  CHECK(validate_structure(FiniteStructure::empty(2), G2));
  CHECK(validate_structure(general_position_22(), G2));
  CHECK(validate_structure(c3(), G2));
  CHECK_THROWS_AS(ClassSpec::parse("gn:1"), Error);
}

TEST_CASE("two-to-one cover membership and completion") {
  auto HT = ClassSpec::parse("hatt");
  auto HQ = ClassSpec::parse("hatq");
  // every tournament sits inside the cover of the generic tournament
  CHECK(validate_structure(c3(), HT));
  CHECK(validate_structure(l3(), HT));
  CHECK(validate_structure(general_position_22(), HT));
  CHECK(validate_structure(c3(), HQ));
  CHECK(validate_structure(l3(), HQ));

  // a 3-element class is too wide
  CHECK_FALSE(validate_structure(FiniteStructure::empty(3), HT));
  // both arcs from one vertex into a full class break the one-out rule
  FiniteStructure bad = digraph(3, {{2, 0}, {2, 1}});
  CHECK_FALSE(validate_structure(bad, HT));

  // completion doubles singletons with twisted arcs
  FiniteStructure e = digraph(2, {{0, 1}});
  std::vector<int> orig;
  FiniteStructure full = hatt_completion(e, orig);
  REQUIRE(full.n == 4);
  REQUIRE(orig == std::vector<int>{0, -1, 1, -1});
  // vertices: 0=x, 1=x', 2=y, 3=y'; expect x->y, x'->y', y->x', y'->x
  CHECK(full.arc(0, 2));
  CHECK(full.arc(1, 3));
  CHECK(full.arc(2, 1));
  CHECK(full.arc(3, 0));
  CHECK(validate_structure(full, HT));
  CHECK(validate_structure(full, HQ));

  // at four full columns some cover configurations match no column pattern
  bool found_gap = false;
  for (int bits = 0; bits < 64 && !found_gap; ++bits) {
    FiniteStructure s = FiniteStructure::empty(8);  // columns {0,1},{2,3},{4,5},{6,7}
    int b = bits;
    for (int ci = 0; ci < 4; ++ci)
      for (int cj = ci + 1; cj < 4; ++cj) {
        int x = 2 * ci, y = 2 * cj;
        if (b & 1) {  // pattern keyed by the base-base arc
          s.set_arc(x, y); s.set_arc(x + 1, y + 1); s.set_arc(y, x + 1); s.set_arc(y + 1, x);
        } else {
          s.set_arc(y, x); s.set_arc(y + 1, x + 1); s.set_arc(x, y + 1); s.set_arc(x + 1, y);
        }
        b >>= 1;
      }
    REQUIRE(validate_structure(s, HT));
    if (!validate_structure(s, HQ)) found_gap = true;
  }
  CHECK(found_gap);
}

TEST_CASE("parity membership for the semigeneric class") {
  auto SG = ClassSpec::parse("semigeneric");
  CHECK(validate_structure(general_position_22(), SG));
  // flipping one cross arc gives three same-direction arcs: parity fails
  FiniteStructure odd = digraph(4, {{0, 2}, {0, 3}, {1, 2}, {3, 1}});
  CHECK_FALSE(validate_structure(odd, SG));
  // columns of width one impose no parity constraints at all
  CHECK(validate_structure(c3(), SG));
  CHECK(validate_structure(l3(), SG));
  CHECK(validate_structure(FiniteStructure::empty(2), SG));
  // intransitive non-adjacency is fatal here
  CHECK_FALSE(validate_structure(digraph(3, {{0, 1}}), SG));
}

TEST_CASE("embedding counts") {
  FiniteStructure pt = FiniteStructure::empty(1);
  CHECK(count_embeddings(pt, c3()) == 3);
  CHECK(count_embeddings(pt, general_position_22()) == 4);
  FiniteStructure e = digraph(2, {{0, 1}});
  CHECK(count_embeddings(e, c3()) == 3);
  CHECK(count_embeddings(e, l3()) == 3);
  FiniteStructure i2 = FiniteStructure::empty(2);
  CHECK(count_embeddings(i2, general_position_22()) == 4);
  CHECK(count_embeddings(i2, c3()) == 0);
  // parallel kernel agrees with the serial one
  CHECK(count_embeddings_parallel(e, general_position_22()) == count_embeddings(e, general_position_22()));
  CHECK(count_embeddings_parallel(i2, general_position_22()) == 4);
}

TEST_CASE("embeddings preserve and reflect optional fields") {
  FiniteStructure a = FiniteStructure::empty(2);
  a.order = {1, 0};
  FiniteStructure b = FiniteStructure::empty(3);
  CHECK(count_embeddings(a, b) == 0);  // order present only in the domain
  b.order = {2, 0, 1};
  CHECK(count_embeddings(a, b) == 3);  // one order-directed map per image pair
  FiniteStructure lp = FiniteStructure::empty(1);
  lp.parts = {4};
  FiniteStructure lq = FiniteStructure::empty(2);
  lq.parts = {4, 9};
  CHECK(count_embeddings(lp, lq) == 1);  // labels match exactly
  lp.parts = {8};
  CHECK(count_embeddings(lp, lq) == 0);

  // as-equivalence mode tracks the partition, not the labels
  FiniteStructure pa = FiniteStructure::empty(2);
  pa.parts = {0, 0};
  FiniteStructure pb = FiniteStructure::empty(2);
  pb.parts = {7, 7};
  EmbedOpts eq;
  eq.parts_as_equivalence = true;
  CHECK(count_embeddings(pa, pb) == 0);
  CHECK(count_embeddings(pa, pb, eq) == 2);
  pb.parts = {7, 8};
  CHECK(count_embeddings(pa, pb, eq) == 0);
}

TEST_CASE("automorphism groups") {
  CHECK(automorphisms(c3()).size() == 3);
  CHECK(automorphisms(l3()).size() == 1);
  CHECK(automorphisms(FiniteStructure::empty(3)).size() == 6);
  CHECK(automorphisms(general_position_22()).size() == 4);
}

TEST_CASE("canonical form is permutation-invariant") {
  Rng rng(777);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 1 + (int)rng.below(7);
    FiniteStructure s = FiniteStructure::empty(n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        switch (rng.below(3)) {
          case 0: s.set_arc(i, j); break;
          case 1: s.set_arc(j, i); break;
          default: break;
        }
      }
    if (rng.coin()) {
      s.parts.resize(n);
      for (int i = 0; i < n; ++i) s.parts[i] = (int)rng.below(2);
    }
    if (rng.coin()) {
      s.order.resize(n);
      for (int i = 0; i < n; ++i) s.order[i] = i;
      rng.shuffle(s.order);
    }
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    rng.shuffle(p);
    CHECK(canonical_form(s) == canonical_form(s.apply_perm(p)));
  }
}

TEST_CASE("isomorphism checks and bounds") {
  FiniteStructure c = c3();
  std::vector<int> p{2, 0, 1};
  CHECK(is_isomorphic(c, c.apply_perm(p)));
  CHECK_FALSE(is_isomorphic(c, l3()));
  auto iso = find_isomorphism(c, c.apply_perm(p));
  REQUIRE(iso.has_value());
  CHECK(is_embedding(c, c.apply_perm(p), *iso));

  FiniteStructure big = FiniteStructure::empty(11);
  CHECK_THROWS_AS(canonical_form(big), Error);
  try {
    canonical_form(big);
  } catch (const Error& e) {
    CHECK(e.kind == ErrorKind::BoundExceeded);
  }
}

TEST_CASE("age enumeration counts") {
  auto tournaments = enumerate_age_members(ClassSpec::parse("tournaments"), 4);
  int by_size[5] = {0, 0, 0, 0, 0};
  for (auto& s : tournaments) by_size[s.n]++;
  CHECK(by_size[1] == 1);
  CHECK(by_size[2] == 1);
  CHECK(by_size[3] == 2);
  CHECK(by_size[4] == 4);

  auto chains = enumerate_age_members(ClassSpec::parse("q"), 4);
  CHECK(chains.size() == 4);  // one per size

  auto dw = enumerate_age_members(ClassSpec::parse("d-omega"), 3);
  int dws[4] = {0, 0, 0, 0};
  for (auto& s : dw) dws[s.n]++;
  CHECK(dws[1] == 1);
  CHECK(dws[2] == 2);
  CHECK(dws[3] == 6);

  auto s2 = enumerate_age_members(ClassSpec::parse("s2"), 4);
  int s2s[5] = {0, 0, 0, 0, 0};
  for (auto& s : s2) s2s[s.n]++;
  CHECK(s2s[3] == 2);
  CHECK(s2s[4] == 2);

  // hereditary: restrictions of members stay members
  auto sg = enumerate_age_members(ClassSpec::parse("semigeneric"), 4);
  for (auto& s : sg) {
    if (s.n < 2) continue;
    std::vector<int> sub;
    for (int v = 1; v < s.n; ++v) sub.push_back(v);
    CHECK(validate_structure(s.restrict_to(sub), ClassSpec::parse("semigeneric")));
  }
}

TEST_CASE("class tags round trip") {
  for (const char* t : {"tournaments", "q", "s2", "s3", "poset", "p3", "d-omega", "d:3", "hatt",
                        "hatq", "semigeneric", "gn:2", "ft:c3", "comp(tournaments,d-omega)",
                        "tree-leaf", "otree-leaf"}) {
    CHECK(ClassSpec::parse(t).tag() == t);
  }
  CHECK_THROWS_AS(ClassSpec::parse("nope"), Error);
  CHECK_THROWS_AS(ClassSpec::parse("d:0"), Error);
  CHECK_THROWS_AS(ClassSpec::parse("ft:"), Error);
}
