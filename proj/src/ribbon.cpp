#include "tatg/ribbon.hpp"

#include <algorithm>
#include <stdexcept>

namespace tatg {

RibbonGraph RibbonGraph::from_rotations(const std::vector<std::vector<Dart>>& rotations) {
  int m2 = 0;
  for (const auto& r : rotations) m2 += static_cast<int>(r.size());
  if (m2 % 2 != 0) throw std::invalid_argument("rotations: odd dart count");

  RibbonGraph g;
  g.next_.assign(m2 + 1, 0);
  g.prev_.assign(m2 + 1, 0);
  g.tail_.assign(m2 + 1, 0);
  g.rotations_.resize(rotations.size() + 1);

  std::vector<char> seen(m2 + 1, 0);
  for (std::size_t vi = 0; vi < rotations.size(); ++vi) {
    const auto& rot = rotations[vi];
    int v = static_cast<int>(vi) + 1;
    g.rotations_[v] = rot;
    for (std::size_t i = 0; i < rot.size(); ++i) {
      Dart d = rot[i];
      if (d < 1 || d > m2) throw std::invalid_argument("rotations: dart id out of range");
      if (seen[d]) throw std::invalid_argument("rotations: dart appears twice");
      seen[d] = 1;
      g.tail_[d] = v;
      g.next_[d] = rot[(i + 1) % rot.size()];
    }
  }
  for (Dart d = 1; d <= m2; ++d) {
    if (!seen[d]) throw std::invalid_argument("rotations: dart missing");
    g.prev_[g.next_[d]] = d;
  }
  return g;
}

bool RibbonGraph::connected() const {
  int n = vertex_count();
  if (n <= 1) return true;
  std::vector<char> vis(n + 1, 0);
  std::vector<int> stack = {1};
  vis[1] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (Dart d : rotations_[v]) {
      int w = head(d);
      if (!vis[w]) {
        vis[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

std::vector<std::vector<Dart>> RibbonGraph::faces() const {
  int m2 = dart_count();
  std::vector<char> used(m2 + 1, 0);
  std::vector<std::vector<Dart>> out;
  for (Dart d0 = 1; d0 <= m2; ++d0) {
    if (used[d0]) continue;
    std::vector<Dart> cyc;
    Dart d = d0;
    do {
      used[d] = 1;
      cyc.push_back(d);
      d = face_next(d);
    } while (d != d0);
    out.push_back(std::move(cyc));
  }
  // Each cycle starts at d0 = its smallest unused dart by construction, and
  // scanning d0 in increasing order sorts the list by that key.
  return out;
}

std::vector<int> RibbonGraph::face_index(const std::vector<std::vector<Dart>>& fc) const {
  std::vector<int> idx(dart_count() + 1, -1);
  for (std::size_t f = 0; f < fc.size(); ++f)
    for (Dart d : fc[f]) idx[d] = static_cast<int>(f);
  return idx;
}

std::vector<int> RelativeStructure::edge_component(int edge_count) const {
  std::vector<int> comp(edge_count + 1, -1);
  for (std::size_t c = 0; c < cycles.size(); ++c)
    for (Dart d : cycles[c]) comp[edge_of(d)] = static_cast<int>(c);
  return comp;
}

std::vector<char> RelativeStructure::orientation_dart(int dart_count) const {
  std::vector<char> flag(dart_count + 1, 0);
  for (const auto& cyc : cycles)
    for (Dart d : cyc) flag[d] = 1;
  return flag;
}

namespace {

ValidationReport fail(ValidationError e, std::string msg, int v = 0, Dart d = 0) {
  ValidationReport r;
  r.ok = false;
  r.error = e;
  r.message = std::move(msg);
  r.witness_vertex = v;
  r.witness_dart = d;
  return r;
}

}  // namespace

ValidationReport validate(const RibbonGraph& g, const RelativeStructure* rel,
                          const MetricAssignment* metric, const ValidateOptions& opts) {
  int m2 = g.dart_count();
  if (m2 == 0)
    return fail(ValidationError::MalformedPermutation, "graph has no darts");

  // nu must be a bijection consistent with the stored rotations.
  std::vector<char> hit(m2 + 1, 0);
  for (Dart d = 1; d <= m2; ++d) {
    Dart n = g.nu(d);
    if (n < 1 || n > m2 || hit[n])
      return fail(ValidationError::MalformedPermutation, "rotation is not a permutation", 0, d);
    hit[n] = 1;
    if (g.tail(n) != g.tail(d))
      return fail(ValidationError::MalformedPermutation, "rotation cycle leaves its vertex", g.tail(d), d);
  }

  if (!g.connected())
    return fail(ValidationError::DisconnectedGraph, "graph is not connected");

  for (int v = 1; v <= g.vertex_count(); ++v) {
    if (g.valency(v) == 1) {
      bool allowed = std::find(opts.allow_univalent_at.begin(), opts.allow_univalent_at.end(),
                               v) != opts.allow_univalent_at.end();
      if (!allowed)
        return fail(ValidationError::UnivalentVertex, "univalent vertex", v);
    }
  }

  if (metric) {
    if (metric->edges() != g.edge_count())
      return fail(ValidationError::NonPositiveLength, "metric does not cover every edge");
    for (int e = 1; e <= g.edge_count(); ++e)
      if (!metric->length[e].is_positive())
        return fail(ValidationError::NonPositiveLength, "edge e" + std::to_string(e) + " has non-positive length", 0,
                    orient_dart(e));
  }

  if (rel && !rel->cycles.empty()) {
    std::vector<int> a_in(g.vertex_count() + 1, 0), a_out(g.vertex_count() + 1, 0);
    std::vector<char> edge_used(g.edge_count() + 1, 0);
    for (const auto& cyc : rel->cycles) {
      if (cyc.empty())
        return fail(ValidationError::RelativeIncompatibility, "empty relative cycle");
      for (std::size_t i = 0; i < cyc.size(); ++i) {
        Dart d = cyc[i];
        Dart dn = cyc[(i + 1) % cyc.size()];
        if (d < 1 || d > m2)
          return fail(ValidationError::RelativeIncompatibility, "relative dart out of range", 0, d);
        int e = edge_of(d);
        if (edge_used[e])
          return fail(ValidationError::RelativeIncompatibility, "edge on two relative cycles", 0, d);
        edge_used[e] = 1;
        if (g.head(d) != g.tail(dn))
          return fail(ValidationError::RelativeIncompatibility, "relative cycle is not a closed walk",
                      g.head(d), d);
        a_out[g.tail(d)]++;
        a_in[g.head(d)]++;
      }
    }
    for (int v = 1; v <= g.vertex_count(); ++v) {
      if (a_in[v] > 1 || a_out[v] > 1)
        return fail(ValidationError::RelativeIncompatibility, "vertex visited twice by relative cycles", v);
    }
    // Compatibility with the counterclockwise orders: walking a relative
    // component through v, the departure edge is immediately followed by the
    // arrival edge in the cyclic order (arrival = e_1, departure = e_k).
    for (const auto& cyc : rel->cycles) {
      for (std::size_t i = 0; i < cyc.size(); ++i) {
        Dart arriving = cyc[i];
        Dart departing = cyc[(i + 1) % cyc.size()];
        int v = g.tail(departing);
        if (g.nu(departing) != rev(arriving))
          return fail(ValidationError::RelativeIncompatibility,
                      "relative cycle not extreme in cyclic order at v" + std::to_string(v), v,
                      departing);
      }
    }
  }

  return ValidationReport{};
}

SurfaceInvariants surface_invariants(const RibbonGraph& g, const RelativeStructure* rel) {
  SurfaceInvariants inv;
  inv.vertices = g.vertex_count();
  inv.edges = g.edge_count();
  inv.euler = inv.vertices - inv.edges;
  inv.face_cycles = g.faces();
  inv.boundary_components = static_cast<int>(inv.face_cycles.size());
  int twice_genus = 2 - inv.euler - inv.boundary_components;
  if (twice_genus < 0 || twice_genus % 2 != 0)
    throw std::runtime_error("non-integer or negative genus: corrupted rotation data");
  inv.genus = twice_genus / 2;

  inv.face_is_relative.assign(inv.face_cycles.size(), 0);
  if (rel && !rel->cycles.empty()) {
    std::vector<char> orient = rel->orientation_dart(g.dart_count());
    for (std::size_t f = 0; f < inv.face_cycles.size(); ++f) {
      bool all_rev_a = true;
      for (Dart d : inv.face_cycles[f])
        if (!orient[rev(d)]) {
          all_rev_a = false;
          break;
        }
      inv.face_is_relative[f] = all_rev_a ? 1 : 0;
    }
  }
  return inv;
}

InducedRibbon induce(const RibbonGraph& g, const std::vector<char>& edge_in_subset) {
  int m2 = g.dart_count();
  InducedRibbon ind;
  ind.in_subset.assign(m2 + 1, 0);
  ind.next.assign(m2 + 1, 0);
  ind.face_of.assign(m2 + 1, -1);
  ind.component_of_edge.assign(g.edge_count() + 1, -1);

  bool any = false;
  for (Dart d = 1; d <= m2; ++d) {
    if (edge_in_subset[edge_of(d)]) {
      ind.in_subset[d] = 1;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("induce: empty edge subset");

  for (Dart d = 1; d <= m2; ++d) {
    if (!ind.in_subset[d]) continue;
    Dart n = g.nu(d);
    while (!ind.in_subset[n]) n = g.nu(n);
    ind.next[d] = n;
  }

  std::vector<char> used(m2 + 1, 0);
  for (Dart d0 = 1; d0 <= m2; ++d0) {
    if (!ind.in_subset[d0] || used[d0]) continue;
    std::vector<Dart> cyc;
    Dart d = d0;
    do {
      used[d] = 1;
      ind.face_of[d] = static_cast<int>(ind.face_cycles.size());
      cyc.push_back(d);
      d = ind.face_next(d);
    } while (d != d0);
    ind.face_cycles.push_back(std::move(cyc));
  }

  // Connected components of the subset, via shared endpoints.
  std::vector<int> comp_of_vertex(g.vertex_count() + 1, -1);
  int comp = 0;
  for (int e0 = 1; e0 <= g.edge_count(); ++e0) {
    if (!edge_in_subset[e0] || ind.component_of_edge[e0] >= 0) continue;
    std::vector<int> stack = {e0};
    ind.component_of_edge[e0] = comp;
    while (!stack.empty()) {
      int e = stack.back();
      stack.pop_back();
      for (Dart d : {orient_dart(e), rev(orient_dart(e))}) {
        int v = g.tail(d);
        if (comp_of_vertex[v] == comp) continue;
        comp_of_vertex[v] = comp;
        for (Dart x : g.rotation(v)) {
          int e2 = edge_of(x);
          if (edge_in_subset[e2] && ind.component_of_edge[e2] < 0) {
            ind.component_of_edge[e2] = comp;
            stack.push_back(e2);
          }
        }
      }
    }
    ++comp;
  }
  ind.component_count = comp;
  return ind;
}

InducedSubgraph induced_subgraph_ribbon(const RibbonGraph& g,
                                        const std::vector<char>& edge_in_subset) {
  InducedRibbon ind = induce(g, edge_in_subset);

  InducedSubgraph out;
  out.new_edge_of.assign(g.edge_count() + 1, 0);
  out.old_edge_of.push_back(0);
  for (int e = 1; e <= g.edge_count(); ++e) {
    if (edge_in_subset[e]) {
      out.new_edge_of[e] = static_cast<int>(out.old_edge_of.size());
      out.old_edge_of.push_back(e);
    }
  }
  auto new_dart = [&](Dart d) {
    int ne = out.new_edge_of[edge_of(d)];
    return is_orient(d) ? orient_dart(ne) : rev(orient_dart(ne));
  };

  std::vector<std::vector<Dart>> rotations;
  std::vector<char> dart_done(g.dart_count() + 1, 0);
  for (Dart d0 = 1; d0 <= g.dart_count(); ++d0) {
    if (!ind.in_subset[d0] || dart_done[d0]) continue;
    // Walk the induced rotation cycle through d0.
    std::vector<Dart> rot;
    Dart d = d0;
    do {
      dart_done[d] = 1;
      rot.push_back(new_dart(d));
      d = ind.next[d];
    } while (d != d0);
    rotations.push_back(std::move(rot));
  }
  out.graph = RibbonGraph::from_rotations(rotations);
  out.component_count = ind.component_count;
  return out;
}

GraphWithMetric make_kpq(int p, int q, const Rational& edge_len) {
  if (p < 2 || q < 2) throw std::invalid_argument("make_kpq: need p,q >= 2");
  if (!edge_len.is_positive()) throw std::invalid_argument("make_kpq: edge length must be positive");
  // Edge (i,j) is edge number i*q + j + 1; orientation dart points a_i -> b_j.
  std::vector<std::vector<Dart>> rotations(p + q);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < q; ++j) rotations[i].push_back(orient_dart(i * q + j + 1));
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < p; ++i) rotations[p + j].push_back(rev(orient_dart(i * q + j + 1)));

  GraphWithMetric out;
  out.graph = RibbonGraph::from_rotations(rotations);
  out.metric.length.assign(p * q + 1, edge_len);
  out.metric.length[0] = Rational(0);
  return out;
}

GraphWithMetric make_circle(const Rational& total_length) {
  if (!total_length.is_positive())
    throw std::invalid_argument("make_circle: length must be positive");
  // Two vertices, two parallel edges; darts 1,2 for e1 and 3,4 for e2.
  std::vector<std::vector<Dart>> rotations = {{1, 4}, {3, 2}};
  GraphWithMetric out;
  out.graph = RibbonGraph::from_rotations(rotations);
  Rational half = total_length / Rational(2);
  out.metric.length = {Rational(0), half, half};
  return out;
}

}  // namespace tatg
