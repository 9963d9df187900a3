#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "tatg/construct.hpp"
#include "tatg/mixed.hpp"
#include "tatg/ribbon.hpp"
#include "tatg/verify.hpp"

using namespace tatg;

namespace {
RelativeStructure no_rel;
}

TEST_CASE("blow-up of K23 at a trivalent vertex") {
  auto k = make_kpq(2, 3);
  auto res = blow_up(k.graph, k.metric, no_rel, 1, Rational(1, 8));

  CHECK(res.blown_vertices.size() == 2);  // the two trivalent vertices form one orbit
  CHECK(res.new_cycle_indices.size() == 2);
  // Old edges are shortened by epsilon at the blown end only.
  for (int e = 1; e <= 6; ++e) CHECK(res.metric.edge_length(e) == Rational(3, 8));
  // Circle edges have length 2*epsilon.
  for (int e = 7; e <= res.graph.edge_count(); ++e)
    CHECK(res.metric.edge_length(e) == Rational(1, 4));

  auto report = validate(res.graph, &res.rel, &res.metric);
  CHECK(report.ok);

  auto inv_before = surface_invariants(k.graph);
  auto inv_after = surface_invariants(res.graph, &res.rel);
  CHECK(inv_after.genus == inv_before.genus);
  CHECK(inv_after.boundary_components == inv_before.boundary_components + 2);

  auto verdict = check_tat(res.graph, res.metric, res.rel);
  CHECK(verdict.holds);
}

TEST_CASE("blow-up keeps genus, adds orbit-size boundaries, fixes old twists") {
  for (int p = 2; p <= 4; ++p) {
    for (int q = 2; q <= 4; ++q) {
      auto k = make_kpq(p, q);
      Rational eps = Rational(1, 2) / Rational(4);
      auto res = blow_up(k.graph, k.metric, no_rel, 1, eps);
      auto inv_before = surface_invariants(k.graph);
      auto inv_after = surface_invariants(res.graph, &res.rel);
      CHECK(inv_after.genus == inv_before.genus);
      CHECK(inv_after.boundary_components ==
            inv_before.boundary_components + static_cast<int>(res.blown_vertices.size()));
      CHECK(validate(res.graph, &res.rel, &res.metric).ok);
      CHECK(check_tat(res.graph, res.metric, res.rel).holds);

      // Surviving cylinder faces keep their lengths, hence their coefficients.
      auto faces = res.graph.faces();
      std::vector<char> is_rel(faces.size(), 0);
      auto inv = surface_invariants(res.graph, &res.rel);
      for (std::size_t f = 0; f < faces.size(); ++f) is_rel[f] = inv.face_is_relative[f];
      SignAssignment plus = SignAssignment::uniform(faces.size(), 1, is_rel);
      auto report = fdtc(res.graph, res.metric, res.rel, plus);
      for (const auto& entry : report.entries)
        CHECK(entry.boundary_length == Rational(2 * std::lcm(p, q)) * Rational(1, 2));
    }
  }
}

TEST_CASE("epsilon and vertex guards") {
  auto k = make_kpq(2, 3);
  CHECK_THROWS(blow_up(k.graph, k.metric, no_rel, 1, Rational(1, 4)));  // not < len/2
  auto res = blow_up(k.graph, k.metric, no_rel, 1, Rational(1, 8));
  // Blowing a vertex that now sits on A must fail.
  int a_vertex = res.graph.tail(res.rel.cycles[0][0]);
  CHECK_THROWS(blow_up(res.graph, res.metric, res.rel, a_vertex, Rational(1, 32)));
}

namespace {

// One vertex, three subdivided loops; rotation chosen so one face runs along
// loops a and b once each and the other face picks up loop c twice.
GraphWithMetric counterexample_combinatorics() {
  // Edges: 1 = a', 2 = a'', 3 = b', 4 = b'', 5 = c', 6 = c''.
  Dart a1 = orient_dart(1), a2r = rev(orient_dart(2));
  Dart b1 = orient_dart(3), b2r = rev(orient_dart(4));
  Dart c1 = orient_dart(5), c2r = rev(orient_dart(6));
  std::vector<std::vector<Dart>> rot = {
      {a2r, b1, c1, b2r, a1, c2r},                     // center
      {rev(a1), orient_dart(2)},                        // loop a midpoint
      {rev(b1), orient_dart(4)},                        // loop b midpoint
      {rev(c1), orient_dart(6)},                        // loop c midpoint
  };
  GraphWithMetric out;
  out.graph = RibbonGraph::from_rotations(rot);
  out.metric.length.assign(7, Rational(1, 2));
  out.metric.length[0] = Rational(0);
  return out;
}

}  // namespace

TEST_CASE("metric fitting reports the forced-zero certificate") {
  auto gm = counterexample_combinatorics();
  auto inv = surface_invariants(gm.graph);
  REQUIRE(inv.boundary_components == 2);
  REQUIRE(inv.genus == 1);

  auto faces = gm.graph.faces();
  SignAssignment plus = SignAssignment::uniform(faces.size(), 1,
                                                std::vector<char>(faces.size(), 0));
  std::vector<Rational> targets(faces.size(), Rational(1, 2));
  auto fit = fit_metric(gm.graph, no_rel, plus, targets);
  CHECK(fit.status == FitStatus::Infeasible);
  REQUIRE(fit.zero_forced_edges.size() == 2);
  CHECK(fit.zero_forced_edges[0] == 5);
  CHECK(fit.zero_forced_edges[1] == 6);
  CHECK(fit.certificate.find("= 0") != std::string::npos);
}

TEST_CASE("metric fitting finds tat metrics when they exist") {
  auto k = make_kpq(2, 3);
  auto faces = k.graph.faces();
  SignAssignment plus = SignAssignment::uniform(faces.size(), 1,
                                                std::vector<char>(faces.size(), 0));
  std::vector<Rational> targets(faces.size(), Rational(1, 6));
  auto fit = fit_metric(k.graph, no_rel, plus, targets);
  REQUIRE(fit.status == FitStatus::Feasible);
  Rational total;
  for (int e = 1; e <= 6; ++e) total += fit.metric.edge_length(e);
  CHECK(Rational(2) * total == Rational(6));  // the face walks every edge twice
  CHECK(check_signed_tat(k.graph, fit.metric, no_rel, plus).holds);

  SignAssignment zero = SignAssignment::uniform(faces.size(), 0,
                                                std::vector<char>(faces.size(), 0));
  auto fit0 = fit_metric(k.graph, no_rel, zero, std::vector<Rational>(faces.size()));
  REQUIRE(fit0.status == FitStatus::Feasible);
  for (int e = 1; e <= 6; ++e) CHECK(fit0.metric.edge_length(e) == Rational(1));
}

TEST_CASE("mod-n solver agrees with brute force") {
  unsigned long long state = 4242;
  auto rnd = [&](int m) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<int>((state >> 33) % static_cast<unsigned>(m));
  };
  for (int trial = 0; trial < 300; ++trial) {
    int n = 2 + rnd(8);
    int rows = 1 + rnd(3), cols = 1 + rnd(3);
    std::vector<std::vector<int>> a(rows, std::vector<int>(cols));
    std::vector<int> b(rows);
    for (auto& row : a)
      for (auto& x : row) x = rnd(n);
    for (auto& x : b) x = rnd(n);

    bool brute = false;
    std::vector<int> x(cols, 0);
    while (true) {
      bool ok = true;
      for (int i = 0; i < rows && ok; ++i) {
        long long acc = 0;
        for (int j = 0; j < cols; ++j) acc += static_cast<long long>(a[i][j]) * x[j];
        if (acc % n != b[i]) ok = false;
      }
      if (ok) {
        brute = true;
        break;
      }
      int k = 0;
      while (k < cols && ++x[k] == n) x[k++] = 0;
      if (k == cols) break;
    }

    auto sol = solve_mod_n(a, b, n);
    CHECK(sol.has_value() == brute);
    if (sol) {
      for (int i = 0; i < rows; ++i) {
        long long acc = 0;
        for (int j = 0; j < cols; ++j) acc += static_cast<long long>(a[i][j]) * (*sol)[j];
        CHECK(acc % n == b[i]);
      }
    }
  }
}

namespace {

OrbitSpec spec_of(int genus, int order, std::vector<BoundaryTarget> bs, std::vector<int> branch,
                  std::vector<int> caps = {}) {
  OrbitSpec s;
  s.quotient_genus = genus;
  s.order = order;
  s.boundaries = std::move(bs);
  s.branch_voltages = std::move(branch);
  s.cap_voltages = std::move(caps);
  return s;
}

void check_realized(const OrbitSpec& spec) {
  CAPTURE(spec.quotient_genus);
  CAPTURE(spec.order);
  auto out = realize_periodic(spec);  // internal post-checks already ran

  // Riemann-Hurwitz bookkeeping for the declared data.
  int n = spec.order;
  int chi_quot = out.quotient.graph.vertex_count() - out.quotient.graph.edge_count();
  int correction = 0;
  for (int v = 1; v <= out.quotient.graph.vertex_count(); ++v) {
    int w = out.quotient.vertex_voltage[v] % n;
    int classes = std::gcd(w, n) == 0 ? n : std::gcd(w, n);
    correction += n - classes;
  }
  int chi_cover = out.graph.vertex_count() - out.graph.edge_count();
  CHECK(chi_cover == n * chi_quot - correction);
  CHECK(out.graph.dart_count() == n * out.quotient.graph.dart_count());

  // The realized coefficients are re-checked here, independently of the
  // constructor's own validation.
  auto verdict = check_signed_tat(out.graph, out.metric, out.rel, out.sign);
  CHECK(verdict.holds);
  std::multiset<Rational> got, want;
  for (const auto& e : out.twist.entries)
    if (!e.rot.is_zero()) got.insert(e.rot);
  for (const auto& b : spec.boundaries)
    if (b.sign != 0) want.insert(Rational(b.sign) * b.rot);
  CHECK(got == want);
}

}  // namespace

TEST_CASE("realization suite over quotient data") {
  // genus 0, one boundary
  check_realized(spec_of(0, 2, {{Rational(1, 2), 1}}, {1, 1, 1}));
  check_realized(spec_of(0, 3, {{Rational(1, 3), 1}}, {1, 1}));
  check_realized(spec_of(0, 3, {{Rational(2, 3), 1}}, {1, 1, 2}));
  check_realized(spec_of(0, 4, {{Rational(3, 4), -1}}, {1, 3, 1}));
  // genus 0, two boundaries, equal coefficients
  check_realized(spec_of(0, 2, {{Rational(1, 2), 1}, {Rational(1, 2), 1}}, {1, 1}));
  check_realized(spec_of(0, 3, {{Rational(1, 3), 1}, {Rational(1, 3), -1}}, {}));
  // genus 0, two boundaries, distinct coefficients
  check_realized(spec_of(0, 2, {{Rational(1, 2), 1}, {Rational(3, 2), 1}}, {1, 1}));
  check_realized(spec_of(0, 4, {{Rational(1, 4), 1}, {Rational(5, 4), 1}}, {2}));
  // genus 0, more than two boundaries: marked ends and folded variants
  check_realized(
      spec_of(0, 2, {{Rational(1, 2), 1}, {Rational(1, 2), 1}, {Rational(3, 2), 1}}, {1, 1, 1}));
  check_realized(
      spec_of(0, 2, {{Rational(1, 2), 1}, {Rational(1, 2), 1}, {Rational(1, 2), 1}}, {1}));
  check_realized(
      spec_of(0, 3, {{Rational(1, 3), 1}, {Rational(1, 3), 1}, {Rational(1, 3), 1}}, {}));
  // genus 1 and 2 quotients
  check_realized(spec_of(1, 2, {{Rational(1, 2), 1}}, {1}));
  check_realized(spec_of(1, 3, {{Rational(1, 3), 1}, {Rational(2, 3), 1}}, {}));
  check_realized(spec_of(2, 2, {{Rational(3, 2), 1}}, {1}));
  // order 1: plain integer twists
  check_realized(spec_of(0, 1, {{Rational(9), 1}}, {}, {0, 0}));
  check_realized(spec_of(1, 1, {{Rational(2), 1}}, {}));
}

TEST_CASE("impossible covering data is rejected") {
  // One order-2 branch point on a two-boundary genus-0 quotient has the wrong
  // parity for a double cover.
  CHECK_THROWS(realize_periodic(spec_of(0, 2, {{Rational(1, 2), 1}, {Rational(1, 2), 1}}, {1})));
  // Coefficient denominators must equal the order.
  CHECK_THROWS(realize_periodic(spec_of(0, 4, {{Rational(1, 2), 1}}, {1, 1})));
}

TEST_CASE("capped realizations blow into relative structures") {
  // A half-turn surface with one fixed boundary and a swapped pair of caps.
  OrbitSpec spec = spec_of(0, 2, {{Rational(1, 2), 1}}, {1, 1, 1}, {0});
  auto realized = realize_periodic(spec);
  REQUIRE(realized.cap_orbits.size() == 1);
  CHECK(realized.cap_orbits[0].size() == 2);

  auto rel = relative_from_capped(realized, {}, Rational(1, 36));
  REQUIRE(rel.cycles_of_cap.size() == 1);
  CHECK(rel.cycles_of_cap[0].size() == 2);
  // Each blown circle has two edges of length 2*eps around a 2-valent vertex.
  for (int cyc : rel.cycles_of_cap[0]) {
    Rational len;
    for (Dart d : rel.rel.cycles[cyc]) len += rel.metric.edge_length(edge_of(d));
    CHECK(len == Rational(1, 9));
  }
  CHECK(check_signed_tat(rel.graph, rel.metric, rel.rel, rel.sign).holds);
}

TEST_CASE("infeasibility is confirmed by a unit-fraction grid search") {
  auto gm = counterexample_combinatorics();
  auto faces = gm.graph.faces();
  REQUIRE(faces.size() == 2);
  // No assignment of lengths 1/1..1/8 satisfies both cycle-length equations.
  int E = gm.graph.edge_count();
  std::vector<int> denom(E, 1);
  bool found = false;
  while (true) {
    MetricAssignment m;
    m.length.assign(E + 1, Rational(0));
    for (int e = 0; e < E; ++e) m.length[e + 1] = Rational(1, denom[e]);
    bool ok = true;
    for (const auto& fc : faces) {
      Rational len;
      for (Dart d : fc) len += m.edge_length(edge_of(d));
      if (len != Rational(2)) ok = false;  // 1 / (1/2) = 2 in units of pi
    }
    if (ok) {
      found = true;
      break;
    }
    int k = 0;
    while (k < E && ++denom[k] > 8) denom[k++] = 1;
    if (k == E) break;
  }
  CHECK(!found);
}

TEST_CASE("attachments reject mismatched interface lengths") {
  OrbitSpec spec = spec_of(0, 2, {{Rational(1, 2), 1}}, {1, 1, 1}, {0});
  auto realized = realize_periodic(spec);
  auto rel = relative_from_capped(realized, {}, Rational(1, 36));

  FilteredGraph base;
  base.graph = rel.graph;
  base.metric = rel.metric;
  base.rel = rel.rel;
  DeltaMap delta;
  delta.entries = {{{1, Rational(1)}}};

  Attachment att;
  att.base_cycle = 0;
  auto child = make_kpq(2, 3);  // cylinder face length 6, circles have 1/9
  att.child_graph = child.graph;
  att.child_metric = child.metric;
  att.child_rel = RelativeStructure{};
  att.screw = Rational(-1);
  CHECK_THROWS_WITH_AS(attach_level(base, delta, {att}), doctest::Contains("LengthMismatch"),
                       std::invalid_argument);
}
