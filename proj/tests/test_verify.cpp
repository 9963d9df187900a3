#include <map>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "tatg/ribbon.hpp"
#include "tatg/verify.hpp"

using namespace tatg;

namespace {

RelativeStructure no_rel;

std::vector<int> orbit_sizes(const std::vector<int>& perm) {
  std::vector<int> sizes;
  std::vector<char> seen(perm.size(), 0);
  for (std::size_t v = 1; v < perm.size(); ++v) {
    if (seen[v]) continue;
    int len = 0;
    std::size_t x = v;
    do {
      seen[x] = 1;
      ++len;
      x = static_cast<std::size_t>(perm[x]);
    } while (x != v);
    sizes.push_back(len);
  }
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

}  // namespace

TEST_CASE("bipartite graphs hold the pi property with the expected symmetry") {
  for (int p = 2; p <= 6; ++p) {
    for (int q = 2; q <= 6; ++q) {
      auto k = make_kpq(p, q);
      auto verdict = check_tat(k.graph, k.metric, no_rel);
      CHECK(verdict.holds);
      auto sigma = compute_sigma(k.graph, k.metric, no_rel);
      CHECK(sigma_order(sigma) == std::lcm(p, q));
      REQUIRE(sigma.vertex_action_defined);
      auto sizes = orbit_sizes(sigma.vertex_perm);
      REQUIRE(sizes.size() == 2);
      CHECK(sizes[0] == std::min(p, q));
      CHECK(sizes[1] == std::max(p, q));
    }
  }
}

TEST_CASE("circle criterion") {
  auto holds = [](const Rational& total) {
    auto c = make_circle(total);
    return check_tat(c.graph, c.metric, no_rel).holds;
  };
  CHECK(holds(Rational(2)));
  CHECK(holds(Rational(1)));
  CHECK(holds(Rational(2, 3)));
  CHECK(!holds(Rational(3)));
  CHECK(!holds(Rational(5, 2)));
}

TEST_CASE("circle sigma orders") {
  auto c2 = make_circle(Rational(2));
  auto s2 = compute_sigma(c2.graph, c2.metric, no_rel);
  CHECK(s2.is_circle);
  CHECK(sigma_order(s2) == 2);

  auto c1 = make_circle(Rational(1));
  auto s1 = compute_sigma(c1.graph, c1.metric, no_rel);
  CHECK(sigma_order(s1) == 1);
}

TEST_CASE("a perturbed metric breaks the property with a witness") {
  auto k = make_kpq(2, 3);
  k.metric.length[1] = Rational(1, 3);
  auto verdict = check_tat(k.graph, k.metric, no_rel);
  REQUIRE(!verdict.holds);
  CHECK(verdict.witness_edge >= 1);
  REQUIRE(verdict.witness.has_value());
  CHECK(!verdict.witness->at_vertex);
  CHECK(verdict.witness->offset ==
        k.metric.edge_length(verdict.witness_edge) / Rational(2));
}

TEST_CASE("all-positive signs coincide with the plain check") {
  std::vector<GraphWithMetric> corpus;
  corpus.push_back(make_kpq(2, 3));
  corpus.push_back(make_kpq(3, 3));
  corpus.push_back(make_circle(Rational(2)));
  corpus.push_back(make_circle(Rational(3)));
  GraphWithMetric broken = make_kpq(2, 3);
  broken.metric.length[2] = Rational(1, 5);
  corpus.push_back(broken);

  for (const auto& gm : corpus) {
    auto faces = gm.graph.faces();
    SignAssignment plus = SignAssignment::uniform(faces.size(), 1,
                                                  std::vector<char>(faces.size(), 0));
    CHECK(check_signed_tat(gm.graph, gm.metric, no_rel, plus).holds ==
          check_tat(gm.graph, gm.metric, no_rel).holds);
  }
}

TEST_CASE("zero signs always hold and induce the identity") {
  auto k = make_kpq(2, 3);
  k.metric.length[4] = Rational(7, 5);  // not a tat metric
  auto faces = k.graph.faces();
  SignAssignment zero = SignAssignment::uniform(faces.size(), 0,
                                                std::vector<char>(faces.size(), 0));
  auto verdict = check_signed_tat(k.graph, k.metric, no_rel, zero);
  CHECK(verdict.holds);
  auto sigma = compute_sigma_signed(k.graph, k.metric, no_rel, zero);
  CHECK(sigma_order(sigma) == 1);
}

TEST_CASE("fractional twist coefficients") {
  auto k = make_kpq(2, 3);
  auto faces = k.graph.faces();
  SignAssignment plus = SignAssignment::uniform(faces.size(), 1,
                                                std::vector<char>(faces.size(), 0));
  auto report = fdtc(k.graph, k.metric, no_rel, plus);
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].boundary_length == Rational(6));
  CHECK(report.entries[0].rot == Rational(1, 6));

  auto c = make_circle(Rational(2));
  auto cfaces = c.graph.faces();
  SignAssignment cplus = SignAssignment::uniform(cfaces.size(), 1,
                                                 std::vector<char>(cfaces.size(), 0));
  auto creport = fdtc(c.graph, c.metric, no_rel, cplus);
  REQUIRE(creport.entries.size() == 2);
  CHECK(creport.entries[0].rot == Rational(1, 2));
  CHECK(creport.entries[1].rot == Rational(1, 2));
}

TEST_CASE("powers rescale the metric") {
  auto k = make_kpq(2, 3);
  auto m1 = power_tat(k.graph, k.metric, 1);
  CHECK(m1.length == k.metric.length);

  auto m2 = power_tat(k.graph, k.metric, 2);
  auto s2 = compute_sigma(k.graph, m2, no_rel);
  CHECK(sigma_order(s2) == 3);  // order of the square of an order-6 map

  auto m6 = power_tat(k.graph, k.metric, 6);
  auto s6 = compute_sigma(k.graph, m6, no_rel);
  CHECK(sigma_order(s6) == 1);
}

TEST_CASE("sigma respects the structure it acts on") {
  std::vector<GraphWithMetric> corpus;
  for (int p = 2; p <= 4; ++p)
    for (int q = 2; q <= 4; ++q) corpus.push_back(make_kpq(p, q));
  corpus.push_back(make_circle(Rational(2)));
  corpus.push_back(make_circle(Rational(2, 5)));

  for (const auto& gm : corpus) {
    auto sigma = compute_sigma(gm.graph, gm.metric, no_rel);
    const RibbonGraph& fine = sigma.sub.refined;
    long long order = sigma_order(sigma);
    for (Dart d = 1; d <= fine.dart_count(); ++d) {
      // commutes with reversal
      CHECK(sigma.dart_perm[rev(d)] == rev(sigma.dart_perm[d]));
      // preserves cyclic orders
      CHECK(sigma.dart_perm[fine.nu(d)] == fine.nu(sigma.dart_perm[d]));
    }
    // preserves valencies through the vertex action when defined
    if (sigma.vertex_action_defined) {
      for (int v = 1; v <= gm.graph.vertex_count(); ++v)
        CHECK(gm.graph.valency(sigma.vertex_perm[v]) == gm.graph.valency(v));
    }
    // if a power fixes one dart, it is the identity
    for (long long m = 1; m <= order; ++m) {
      std::vector<Dart> power(fine.dart_count() + 1);
      for (Dart d = 1; d <= fine.dart_count(); ++d) {
        Dart x = d;
        for (long long i = 0; i < m; ++i) x = sigma.dart_perm[x];
        power[d] = x;
      }
      bool fixes_some = false, is_id = true;
      for (Dart d = 1; d <= fine.dart_count(); ++d) {
        if (power[d] == d) fixes_some = true;
        if (power[d] != d) is_id = false;
      }
      if (fixes_some) CHECK(is_id);
    }
  }
}
