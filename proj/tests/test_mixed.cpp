#include <set>
#include <vector>

#include "doctest.h"
#include "tatg/mixed.hpp"
#include "tatg/ribbon.hpp"
#include "tatg/verify.hpp"

using namespace tatg;

namespace {

// A genus-3 spine: K33 with edge length 1/12 as the level-1 subgraph, hung
// from a central vertex by three equal stubs.
FilteredGraph star_over_k33(const Rational& stub_len, const Rational& delta1) {
  auto k33 = make_kpq(3, 3, Rational(1, 12));
  auto A = [](int i, int j) { return orient_dart(3 * i + j + 1); };
  auto B = [&](int i, int j) { return rev(A(i, j)); };
  Dart S0 = orient_dart(10), S1 = orient_dart(11), S2 = orient_dart(12);

  // Stub i enters the cyclic order of a_i right after the edge to b_{2i-1},
  // so each stub pierces a different boundary walk of the subgraph.
  std::vector<std::vector<Dart>> rot = {
      {A(0, 0), A(0, 1), A(0, 2), rev(S0)},
      {A(1, 0), A(1, 1), rev(S1), A(1, 2)},
      {A(2, 0), rev(S2), A(2, 1), A(2, 2)},
      {B(0, 0), B(1, 0), B(2, 0)},
      {B(0, 1), B(1, 1), B(2, 1)},
      {B(0, 2), B(1, 2), B(2, 2)},
      {S0, S1, S2},
  };

  FilteredGraph fg;
  fg.graph = RibbonGraph::from_rotations(rot);
  fg.metric.length.assign(13, Rational(1, 12));
  fg.metric.length[0] = Rational(0);
  fg.metric.length[10] = fg.metric.length[11] = fg.metric.length[12] = stub_len;
  std::vector<char> level1(13, 0);
  for (int e = 1; e <= 9; ++e) level1[e] = 1;
  fg.level_edges.push_back(level1);
  fg.level_rel.push_back(RelativeStructure{});
  (void)delta1;
  return fg;
}

DeltaMap star_delta(const Rational& delta1) {
  DeltaMap d;
  d.entries = {{{1, Rational(1)}}, {{1, delta1}}};
  return d;
}

}  // namespace

TEST_CASE("the filtered K33 star is a genus-3 mixed example") {
  FilteredGraph fg = star_over_k33(Rational(1, 4), Rational(1, 6));
  auto inv = surface_invariants(fg.graph);
  CHECK(inv.genus == 3);
  CHECK(inv.boundary_components == 1);

  DeltaMap delta = star_delta(Rational(1, 6));
  auto verdict = check_mixed_tat(fg, delta);
  CHECK(verdict.holds);

  auto lp = level_permutation(fg, delta, 1);
  REQUIRE(lp.cycles.size() == 3);
  REQUIRE(lp.orbits.size() == 1);
  CHECK(lp.orbits[0].size() == 3);
  CHECK(lp.cycle_length[0] == Rational(1, 2));

  auto screws = screw_numbers(fg, delta);
  REQUIRE(screws.size() == 1);
  CHECK(screws[0].level == 1);
  CHECK(screws[0].alpha == 3);
  CHECK(screws[0].value == Rational(-1));

  auto dual = dual_graph(fg, delta);
  CHECK(dual.nodes.size() == 2);
  CHECK(dual.edges.size() == 3);
  CHECK(!dual.is_tree);
}

TEST_CASE("a wrong deeper walk length breaks the mixed property") {
  FilteredGraph fg = star_over_k33(Rational(1, 4), Rational(1, 5));
  auto verdict = check_mixed_tat(fg, star_delta(Rational(1, 5)));
  CHECK(!verdict.holds);
}

TEST_CASE("depth zero collapses to the plain check") {
  std::vector<GraphWithMetric> corpus;
  corpus.push_back(make_kpq(2, 3));
  corpus.push_back(make_kpq(3, 3));
  corpus.push_back(make_circle(Rational(2)));
  corpus.push_back(make_circle(Rational(3)));
  GraphWithMetric broken = make_kpq(2, 3);
  broken.metric.length[2] = Rational(1, 5);
  corpus.push_back(broken);

  for (const auto& gm : corpus) {
    for (const Rational& ell : {Rational(1), Rational(1, 2), Rational(2)}) {
      FilteredGraph fg;
      fg.graph = gm.graph;
      fg.metric = gm.metric;
      DeltaMap delta;
      delta.entries = {{{1, ell}}};
      RelativeStructure no_rel;
      CHECK(check_mixed_tat(fg, delta).holds == check_tat(gm.graph, gm.metric, no_rel, ell).holds);
    }
  }
}

TEST_CASE("mixed walks satisfy the order and length laws") {
  FilteredGraph fg = star_over_k33(Rational(1, 4), Rational(1, 6));
  DeltaMap delta = star_delta(Rational(1, 6));
  REQUIRE(check_mixed_tat(fg, delta).holds);

  for (int e = 1; e <= fg.graph.edge_count(); ++e) {
    for (const Rational& frac : {Rational(1, 3), Rational(2, 5)}) {
      Dart d = orient_dart(e);
      PointOnGraph p =
          PointOnGraph::interior(fg.graph, fg.metric, d, fg.metric.edge_length(e) * frac);
      if (p.at_vertex) continue;
      int c = (e <= 9) ? 1 : 0;
      auto gamma = mixed_safe_walk(fg, delta, p, d);
      auto omega = mixed_safe_walk(fg, delta, p, rev(d));
      CHECK(gamma.order == c);
      CHECK(omega.order == c);
      CHECK(gamma.total_length == omega.total_length);
      CHECK(gamma.endpoint == omega.endpoint);
      CHECK(gamma.endpoint_level == c);
    }
  }
}

TEST_CASE("annulus twist algebra") {
  AnnulusTwist a{Rational(1), Rational(1, 2)};
  AnnulusTwist b{Rational(2), Rational(0)};
  auto c = compose(a, b);
  CHECK(c.m == Rational(3));
  CHECK(c.c == Rational(1, 2));
  auto inv = compose(invert(a), a);
  CHECK(inv.m == Rational(0));
  CHECK(inv.c == Rational(0));
  CHECK(screw_from_linearization(Rational(1), Rational(1), Rational(1)) == Rational(-1));
  CHECK(screw_from_linearization(Rational(3), Rational(2), Rational(2)) == Rational(-3));
}

namespace {

MixedSpecNode genus1_child(const Rational& rot) {
  MixedSpecNode node;
  node.piece.quotient_genus = 1;
  node.piece.order = 1;
  node.piece.boundaries = {{rot, 1}};
  return node;
}

}  // namespace

TEST_CASE("the half-turn assembly reconstructs the expected invariants") {
  // Root: half turn with coefficient 1/2 at the fixed boundary, three order-2
  // branch points and one swapped pair of caps carrying genus-1 children.
  MixedSpecNode child = genus1_child(Rational(9));
  MixedSpecNode root;
  root.piece.quotient_genus = 0;
  root.piece.order = 2;
  root.piece.boundaries = {{Rational(1, 2), 1}};
  root.piece.branch_voltages = {1, 1, 1};
  root.piece.cap_voltages = {0};
  root.children.push_back({0, Rational(-1), &child});

  auto mixed = realize_mixed(root);
  CHECK(mixed.fg.depth() == 1);
  REQUIRE(check_mixed_tat(mixed.fg, mixed.delta).holds);

  // delta_1 = -s/alpha * cycle length = (1/2) * (1/9) = 1/18.
  REQUIRE(mixed.delta.entries.size() == 2);
  for (const auto& [e, v] : mixed.delta.entries[1]) CHECK(v == Rational(1, 18));

  auto screws = screw_numbers(mixed.fg, mixed.delta);
  REQUIRE(screws.size() == 1);
  CHECK(screws[0].alpha == 2);
  CHECK(screws[0].value == Rational(-1));
  CHECK(screws[0].cycle_length == Rational(1, 9));

  auto dual = dual_graph(mixed.fg, mixed.delta);
  CHECK(dual.nodes.size() == 3);
  CHECK(dual.edges.size() == 2);
  CHECK(dual.is_tree);

  // Level-0 coefficient at the outer boundary.
  auto faces = mixed.fg.graph.faces();
  auto inv = surface_invariants(mixed.fg.graph, &mixed.fg.rel);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (inv.face_is_relative[f]) continue;
    Rational len;
    for (Dart d : faces[f]) len += mixed.fg.metric.edge_length(edge_of(d));
    CHECK(Rational(1) / len == Rational(1, 2));
  }
}

TEST_CASE("two orbits of children give two screw entries") {
  MixedSpecNode child1 = genus1_child(Rational(9));
  MixedSpecNode child2 = genus1_child(Rational(6));
  MixedSpecNode root;
  root.piece.quotient_genus = 0;
  root.piece.order = 2;
  root.piece.boundaries = {{Rational(1, 2), 1}};
  root.piece.branch_voltages = {1, 1, 1};
  root.piece.cap_voltages = {0, 0};
  root.children.push_back({0, Rational(-1), &child1});
  root.children.push_back({1, Rational(-2), &child2});

  auto mixed = realize_mixed(root);
  auto screws = screw_numbers(mixed.fg, mixed.delta);
  REQUIRE(screws.size() == 2);
  std::multiset<Rational> values = {screws[0].value, screws[1].value};
  CHECK(values == std::multiset<Rational>{Rational(-2), Rational(-1)});
}

TEST_CASE("attachment guards") {
  MixedSpecNode child = genus1_child(Rational(9));
  MixedSpecNode root;
  root.piece.quotient_genus = 0;
  root.piece.order = 2;
  root.piece.boundaries = {{Rational(1, 2), 1}};
  root.piece.branch_voltages = {1, 1, 1};
  root.piece.cap_voltages = {0};
  root.children.push_back({0, Rational(1), &child});  // positive screw
  CHECK_THROWS(realize_mixed(root));
}

TEST_CASE("a depth-two chain stays a tree") {
  MixedSpecNode leaf = genus1_child(Rational(36));
  MixedSpecNode middle;
  middle.piece.quotient_genus = 1;
  middle.piece.order = 1;
  middle.piece.boundaries = {{Rational(9), 1}};
  middle.piece.cap_voltages = {0};
  middle.children.push_back({0, Rational(-1), &leaf});

  MixedSpecNode root;
  root.piece.quotient_genus = 0;
  root.piece.order = 2;
  root.piece.boundaries = {{Rational(1, 2), 1}};
  root.piece.branch_voltages = {1, 1, 1};
  root.piece.cap_voltages = {0};
  root.children.push_back({0, Rational(-1), &middle});

  auto mixed = realize_mixed(root);
  CHECK(mixed.fg.depth() == 2);
  REQUIRE(check_mixed_tat(mixed.fg, mixed.delta).holds);
  auto dual = dual_graph(mixed.fg, mixed.delta);
  CHECK(dual.is_tree);
  auto screws = screw_numbers(mixed.fg, mixed.delta);
  CHECK(screws.size() == 2);
  for (const auto& s : screws) CHECK(s.value == Rational(-1));
}

TEST_CASE("boundary mixed walks run two stages on the assembled graph") {
  MixedSpecNode child = genus1_child(Rational(9));
  child.piece.cap_voltages = {0};  // a bare cap: the child keeps a relative circle
  MixedSpecNode root;
  root.piece.quotient_genus = 0;
  root.piece.order = 2;
  root.piece.boundaries = {{Rational(1, 2), 1}};
  root.piece.branch_voltages = {1, 1, 1};
  root.piece.cap_voltages = {0};
  root.children.push_back({0, Rational(-1), &child});
  auto mixed = realize_mixed(root);

  // Relative circles live at every level here, so their depth is 1.
  std::vector<char> level1_a(mixed.fg.graph.edge_count() + 1, 0);
  for (const auto& cyc : mixed.fg.level_rel[0].cycles)
    for (Dart d : cyc) level1_a[edge_of(d)] = 1;
  REQUIRE(!mixed.fg.rel.cycles.empty());
  int sampled = 0;
  for (const auto& cyc : mixed.fg.rel.cycles) {
    Dart d = cyc[0];
    Rational len = mixed.fg.metric.edge_length(edge_of(d));
    PointOnGraph p = PointOnGraph::interior(mixed.fg.graph, mixed.fg.metric, d, len / Rational(3));
    auto walk = boundary_mixed_safe_walk(mixed.fg, mixed.delta, p);
    CHECK(walk.order == 1);
    CHECK(walk.stages.size() == 2);
    REQUIRE(!walk.endpoint.at_vertex);
    CHECK(level1_a[edge_of(walk.endpoint.dart)]);
    ++sampled;
  }
  CHECK(sampled >= 2);
}

TEST_CASE("accumulated twists act with finite order on every level") {
  FilteredGraph fg = star_over_k33(Rational(1, 4), Rational(1, 6));
  DeltaMap delta = star_delta(Rational(1, 6));
  for (int level = 1; level <= fg.depth(); ++level) {
    auto lp = level_permutation(fg, delta, level);
    // The cycle permutation is a bijection; iterating it returns to the
    // identity within lcm of the orbit sizes.
    std::vector<char> hit(lp.perm.size(), 0);
    for (int img : lp.perm) {
      CHECK(img >= 0);
      CHECK(!hit[img]);
      hit[img] = 1;
    }
    long long order = 1;
    for (const auto& orbit : lp.orbits) order = std::lcm(order, (long long)orbit.size());
    CHECK(order >= 1);
    std::vector<int> power(lp.perm.size());
    for (std::size_t i = 0; i < power.size(); ++i) power[i] = static_cast<int>(i);
    for (long long k = 0; k < order; ++k)
      for (std::size_t i = 0; i < power.size(); ++i) power[i] = lp.perm[power[i]];
    for (std::size_t i = 0; i < power.size(); ++i) CHECK(power[i] == static_cast<int>(i));
  }
}

TEST_CASE("screw numbers are nonpositive and vanish only without twisting") {
  FilteredGraph fg = star_over_k33(Rational(1, 4), Rational(1, 6));
  for (const Rational& d1 : {Rational(1, 6), Rational(0)}) {
    DeltaMap delta = star_delta(d1);
    if (!check_mixed_tat(fg, delta).holds) continue;
    for (const auto& s : screw_numbers(fg, delta)) {
      CHECK(!s.value.is_positive());
      CHECK(s.value.is_negative() == d1.is_positive());
    }
  }
}

TEST_CASE("degenerate levels and vertex landings") {
  // A circle of four quarter-length edges carrying itself as level 1.
  std::vector<std::vector<Dart>> rot = {{1, 8}, {3, 2}, {5, 4}, {7, 6}};
  FilteredGraph fg;
  fg.graph = RibbonGraph::from_rotations(rot);
  fg.metric.length.assign(5, Rational(1, 4));
  fg.metric.length[0] = Rational(0);
  fg.level_edges.push_back({0, 1, 1, 1, 1});
  fg.level_rel.push_back(RelativeStructure{});
  DeltaMap delta;
  delta.entries = {{{1, Rational(1, 8)}}, {{1, Rational(3, 8)}}};  // total 1/2 closes up

  REQUIRE(check_mixed_tat(fg, delta).holds);
  auto dual = dual_graph(fg, delta);
  REQUIRE(dual.nodes.size() == 2);
  CHECK(dual.edges.size() == 2);  // both sides of the circle carry an annulus
  CHECK(!dual.is_tree);
  CHECK(dual.nodes[0].degenerate);  // the level-0 component equals level 1

  // A stage that stops exactly on a vertex cannot pick the next direction.
  PointOnGraph p = PointOnGraph::interior(fg.graph, fg.metric, 1, Rational(1, 8));
  CHECK_THROWS_AS(mixed_safe_walk(fg, delta, p, Dart(1)), VertexLanding);
  // Away from the grid the same walk is fine.
  PointOnGraph q = PointOnGraph::interior(fg.graph, fg.metric, 1, Rational(1, 16));
  auto walk = mixed_safe_walk(fg, delta, q, Dart(1));
  CHECK(walk.order == 1);
}

TEST_CASE("a branching assembly reproduces every spec value") {
  MixedSpecNode leafA, leafB;
  leafA.piece = {1, 1, {{Rational(36), 1}}, {}, {}, {}};
  leafB.piece = {1, 1, {{Rational(72), 1}}, {}, {}, {}};
  MixedSpecNode midA, midB;
  midA.piece = {1, 1, {{Rational(9), 1}}, {}, {0}, {}};
  midA.children.push_back({0, Rational(-1), &leafA});
  midB.piece = {1, 1, {{Rational(6), 1}}, {}, {0}, {}};
  midB.children.push_back({0, Rational(-3), &leafB});
  MixedSpecNode root;
  root.piece = {0, 2, {{Rational(1, 2), 1}}, {1, 1, 1}, {0, 0}, {}};
  root.children.push_back({0, Rational(-1), &midA});
  root.children.push_back({1, Rational(-2), &midB});

  auto mixed = realize_mixed(root);
  CHECK(mixed.fg.depth() == 2);
  REQUIRE(check_mixed_tat(mixed.fg, mixed.delta).holds);

  std::multiset<std::pair<int, Rational>> got, want;
  for (const auto& s : screw_numbers(mixed.fg, mixed.delta)) {
    CHECK(s.alpha == 2);
    got.insert({s.level, s.value});
  }
  want = {{1, Rational(-1)}, {1, Rational(-2)}, {2, Rational(-1)}, {2, Rational(-3)}};
  CHECK(got == want);

  auto dual = dual_graph(mixed.fg, mixed.delta);
  CHECK(dual.nodes.size() == 9);  // one root piece, four middle copies, four leaves
  CHECK(dual.is_tree);
}
