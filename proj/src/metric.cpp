#include "tatg/metric.hpp"

#include <stdexcept>

namespace tatg {

PointOnGraph PointOnGraph::interior(const RibbonGraph& g, const MetricAssignment& m, Dart d,
                                    const Rational& t) {
  Rational len = m.edge_length(edge_of(d));
  if (t.is_zero()) return PointOnGraph::at(g.tail(d));
  if (t == len) return PointOnGraph::at(g.head(d));
  if (t.is_negative() || t > len) throw std::invalid_argument("point offset outside edge");
  PointOnGraph p;
  p.at_vertex = false;
  if (rev(d) < d) {
    p.dart = rev(d);
    p.offset = len - t;
  } else {
    p.dart = d;
    p.offset = t;
  }
  return p;
}

Rational common_unit(const MetricAssignment& metric, const std::vector<Rational>& extra) {
  Rational u;
  for (int e = 1; e <= metric.edges(); ++e) u = Rational::gcd(u, metric.length[e]);
  for (const Rational& x : extra) u = Rational::gcd(u, x);
  if (!u.is_positive()) throw std::invalid_argument("common_unit: no positive lengths");
  return u;
}

Dart UnitSubdivision::refined_dart(Dart orig, int segment) const {
  int e = edge_of(orig);
  int base = new_edge_base[e];
  int m = segments_of[e];
  if (is_orient(orig)) return orient_dart(base + 1 + segment);
  return rev(orient_dart(base + m - segment));
}

Dart UnitSubdivision::refined_first_dart(Dart orig) const { return refined_dart(orig, 0); }

Dart UnitSubdivision::orig_dart_of(Dart d) const {
  int e = orig_edge_of[edge_of(d)];
  return is_orient(d) ? orient_dart(e) : rev(orient_dart(e));
}

PointOnGraph UnitSubdivision::to_original(const RibbonGraph& orig_graph,
                                          const MetricAssignment& orig_metric, Dart d,
                                          const Rational& offset) const {
  int re = edge_of(d);
  int e = orig_edge_of[re];
  int seg = segment_of[re];
  Rational t = is_orient(d) ? Rational(seg) * unit + offset
                            : Rational(seg + 1) * unit - offset;
  return PointOnGraph::interior(orig_graph, orig_metric, orient_dart(e), t);
}

PointOnGraph UnitSubdivision::point_to_original(const RibbonGraph& orig_graph,
                                                const MetricAssignment& orig_metric,
                                                const PointOnGraph& fine) const {
  if (!fine.at_vertex) return to_original(orig_graph, orig_metric, fine.dart, fine.offset);
  if (fine.vertex <= original_vertices) return PointOnGraph::at(fine.vertex);
  int idx = fine.vertex - original_vertices - 1;
  int e = interior_vertex_edge[idx];
  Rational t = Rational(interior_vertex_segment[idx]) * unit;
  return PointOnGraph::interior(orig_graph, orig_metric, orient_dart(e), t);
}

RelativeStructure UnitSubdivision::transport(const RelativeStructure& rel) const {
  RelativeStructure out;
  for (const auto& cyc : rel.cycles) {
    std::vector<Dart> fine;
    for (Dart d : cyc)
      for (int s = 0; s < segments_of[edge_of(d)]; ++s) fine.push_back(refined_dart(d, s));
    out.cycles.push_back(std::move(fine));
  }
  return out;
}

std::vector<char> UnitSubdivision::transport_edges(const std::vector<char>& orig_edge_set) const {
  std::vector<char> out(orig_edge_of.size(), 0);
  for (std::size_t e = 1; e < orig_edge_of.size(); ++e)
    out[e] = orig_edge_set[orig_edge_of[e]];
  return out;
}

UnitSubdivision subdivide(const RibbonGraph& g, const MetricAssignment& metric,
                          const Rational& unit) {
  if (!unit.is_positive()) throw std::invalid_argument("subdivide: unit must be positive");
  UnitSubdivision u;
  u.unit = unit;
  u.original_vertices = g.vertex_count();

  int E = g.edge_count();
  u.segments_of.assign(E + 1, 0);
  u.new_edge_base.assign(E + 1, 0);
  int total = 0;
  for (int e = 1; e <= E; ++e) {
    Rational q = metric.length[e] / unit;
    if (!q.is_integer() || !q.is_positive())
      throw std::invalid_argument("IndivisibleLength: unit does not divide edge e" +
                                  std::to_string(e));
    u.segments_of[e] = static_cast<int>(q.num());
    u.new_edge_base[e] = total;
    total += u.segments_of[e];
  }

  u.orig_edge_of.assign(total + 1, 0);
  u.segment_of.assign(total + 1, 0);
  for (int e = 1; e <= E; ++e)
    for (int s = 0; s < u.segments_of[e]; ++s) {
      u.orig_edge_of[u.new_edge_base[e] + 1 + s] = e;
      u.segment_of[u.new_edge_base[e] + 1 + s] = s;
    }

  std::vector<std::vector<Dart>> rotations;
  rotations.reserve(g.vertex_count() + (total - E));
  for (int v = 1; v <= g.vertex_count(); ++v) {
    std::vector<Dart> rot;
    rot.reserve(g.valency(v));
    for (Dart d : g.rotation(v)) rot.push_back(u.refined_dart(d, 0));
    rotations.push_back(std::move(rot));
  }
  for (int e = 1; e <= E; ++e) {
    for (int s = 1; s < u.segments_of[e]; ++s) {
      Dart behind = rev(orient_dart(u.new_edge_base[e] + s));
      Dart ahead = orient_dart(u.new_edge_base[e] + s + 1);
      rotations.push_back({behind, ahead});
      u.interior_vertex_edge.push_back(e);
      u.interior_vertex_segment.push_back(s);
    }
  }
  u.refined = RibbonGraph::from_rotations(rotations);
  u.refined_metric.length.assign(total + 1, unit);
  u.refined_metric.length[0] = Rational(0);
  return u;
}

namespace {

Dart walk_successor(const RibbonGraph& g, Dart d, WalkSign sign) {
  return sign == WalkSign::Positive ? g.nu(rev(d)) : g.nu_inv(rev(d));
}

}  // namespace

WalkTrace safe_walk(const RibbonGraph& g, const MetricAssignment& metric,
                    const PointOnGraph& start, WalkSign sign, const Rational& length,
                    std::optional<Dart> direction) {
  if (length.is_negative()) throw std::invalid_argument("safe_walk: negative length");

  WalkTrace trace;
  trace.start = start;
  trace.sign = sign;
  trace.total_length = length;

  if (sign == WalkSign::Constant || length.is_zero()) {
    trace.endpoint = start;
    trace.resume_dart = direction.value_or(start.at_vertex ? 0 : start.dart);
    return trace;
  }

  Dart d;
  Rational t;
  if (start.at_vertex) {
    if (!direction) throw std::invalid_argument("MissingDirection: vertex start needs a dart");
    d = *direction;
    if (g.tail(d) != start.vertex)
      throw std::invalid_argument("MissingDirection: direction dart not at start vertex");
    t = Rational(0);
  } else {
    d = direction.value_or(start.dart);
    if (d == start.dart) {
      t = start.offset;
    } else if (d == rev(start.dart)) {
      t = metric.edge_length(edge_of(d)) - start.offset;
    } else {
      throw std::invalid_argument("safe_walk: direction dart does not carry the start point");
    }
  }

  Rational remaining = length;
  trace.steps.push_back({d, t});
  while (true) {
    Rational room = metric.edge_length(edge_of(d)) - t;
    if (remaining < room) {
      trace.endpoint = PointOnGraph::interior(g, metric, d, t + remaining);
      trace.resume_dart = d;
      return trace;
    }
    remaining -= room;
    if (remaining.is_zero()) {
      trace.endpoint = PointOnGraph::at(g.head(d));
      trace.resume_dart = walk_successor(g, d, sign);
      return trace;
    }
    d = walk_successor(g, d, sign);
    t = Rational(0);
    trace.steps.push_back({d, t});
  }
}

WalkTrace boundary_safe_walk(const RibbonGraph& g, const MetricAssignment& metric,
                             const RelativeStructure& rel, const PointOnGraph& start,
                             WalkSign sign, const Rational& length) {
  std::vector<char> orient = rel.orientation_dart(g.dart_count());
  Dart dir = 0;
  if (start.at_vertex) {
    // The departing relative dart at this vertex.
    for (const auto& cyc : rel.cycles)
      for (Dart d : cyc)
        if (g.tail(d) == start.vertex) dir = d;
    if (dir == 0) throw std::invalid_argument("NotOnA: start vertex is not on the relative set");
  } else {
    if (orient[start.dart])
      dir = start.dart;
    else if (orient[rev(start.dart)])
      dir = rev(start.dart);
    else
      throw std::invalid_argument("NotOnA: start point is not on a relative edge");
  }
  if (sign == WalkSign::Negative) dir = rev(dir);
  return safe_walk(g, metric, start, sign, length, dir);
}

FaceWalker::FaceWalker(const RibbonGraph& g) {
  cycles = g.faces();
  face_of.assign(g.dart_count() + 1, -1);
  pos_of.assign(g.dart_count() + 1, -1);
  for (std::size_t f = 0; f < cycles.size(); ++f)
    for (std::size_t i = 0; i < cycles[f].size(); ++i) {
      face_of[cycles[f][i]] = static_cast<int>(f);
      pos_of[cycles[f][i]] = static_cast<int>(i);
    }
}

Dart FaceWalker::power(Dart d, long long k) const {
  int f = face_of[d];
  long long L = static_cast<long long>(cycles[f].size());
  long long p = (pos_of[d] + k) % L;
  if (p < 0) p += L;
  return cycles[f][static_cast<std::size_t>(p)];
}

std::vector<Dart> endpoint_dart_map(const RibbonGraph& unit_graph, const FaceWalker& walker,
                                    const std::vector<int>& sign_of_face,
                                    const std::vector<char>& face_is_relative, long long N) {
  for (std::size_t f = 0; f < walker.cycles.size(); ++f)
    if (face_is_relative[f] && sign_of_face[f] != 0)
      throw std::invalid_argument("SignOnAFace: signs only attach to cylinder faces");

  std::vector<Dart> T(unit_graph.dart_count() + 1, 0);
  for (Dart d = 1; d <= unit_graph.dart_count(); ++d) {
    int f = walker.face_of[d];
    if (face_is_relative[f]) {
      T[d] = d;
    } else {
      T[d] = walker.power(d, static_cast<long long>(sign_of_face[f]) * N);
    }
  }
  return T;
}

}  // namespace tatg
