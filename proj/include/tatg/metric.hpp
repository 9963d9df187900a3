#pragma once

#include <optional>
#include <vector>

#include "tatg/rational.hpp"
#include "tatg/ribbon.hpp"

namespace tatg {

// A point of the metric graph in canonical form: a vertex, or an interior
// point stored on the smaller of the two darts with offset measured from that
// dart's tail.
struct PointOnGraph {
  bool at_vertex = false;
  int vertex = 0;
  Dart dart = 0;
  Rational offset;  // 0 < offset < edge length when interior

  static PointOnGraph at(int v) {
    PointOnGraph p;
    p.at_vertex = true;
    p.vertex = v;
    return p;
  }
  static PointOnGraph interior(const RibbonGraph& g, const MetricAssignment& m, Dart d,
                               const Rational& t);
  bool operator==(const PointOnGraph& o) const {
    return at_vertex == o.at_vertex && vertex == o.vertex && dart == o.dart && offset == o.offset;
  }
};

enum class WalkSign { Negative = -1, Constant = 0, Positive = 1 };

struct WalkStep {
  Dart dart;
  Rational entry_offset;  // offset from tail(dart) where the walk enters
};

struct WalkTrace {
  PointOnGraph start;
  WalkSign sign = WalkSign::Constant;
  std::vector<WalkStep> steps;
  Rational total_length;
  PointOnGraph endpoint;
  // Dart along which the walk would continue; lets callers resume a walk
  // exactly where it stopped (also when it stopped on a vertex).
  Dart resume_dart = 0;
};

// Rational gcd of all edge lengths and the extra lengths.
Rational common_unit(const MetricAssignment& metric, const std::vector<Rational>& extra = {});

// Refinement where every edge has length exactly `unit`.
struct UnitSubdivision {
  RibbonGraph refined;
  MetricAssignment refined_metric;
  Rational unit;
  int original_vertices = 0;
  std::vector<int> orig_edge_of;   // 1-based refined edge -> original edge
  std::vector<int> segment_of;     // refined edge -> 0-based index along orientation dart
  std::vector<int> segments_of;    // original edge -> segment count
  std::vector<int> new_edge_base;  // original edge -> refined id of segment 0, minus 1
  // Vertices past original_vertices subdivide an edge; these map them back.
  std::vector<int> interior_vertex_edge;
  std::vector<int> interior_vertex_segment;  // point sits at segment * unit

  Dart refined_first_dart(Dart orig) const;
  Dart refined_dart(Dart orig, int segment) const;
  Dart orig_dart_of(Dart refined_dart) const;
  // Point transport refined -> original canonical form.
  PointOnGraph to_original(const RibbonGraph& orig_graph, const MetricAssignment& orig_metric,
                           Dart refined_d, const Rational& offset) const;
  PointOnGraph point_to_original(const RibbonGraph& orig_graph,
                                 const MetricAssignment& orig_metric,
                                 const PointOnGraph& fine) const;
  RelativeStructure transport(const RelativeStructure& rel) const;
  std::vector<char> transport_edges(const std::vector<char>& orig_edge_set) const;
};

// Throws std::invalid_argument (IndivisibleLength) when `unit` does not
// divide every edge length.
UnitSubdivision subdivide(const RibbonGraph& g, const MetricAssignment& metric,
                          const Rational& unit);

// Unit-speed walk. Sign Positive turns onto nu(rev(d)) at vertices, Negative
// onto nu^{-1}(rev(d)), Constant stays put. The identity
// walk(p, s, a+b) = walk(walk(p, s, a).endpoint, s, b) holds exactly when the
// second walk is resumed with resume_dart.
// Vertex starts require an explicit direction (MissingDirection otherwise).
WalkTrace safe_walk(const RibbonGraph& g, const MetricAssignment& metric,
                    const PointOnGraph& start, WalkSign sign, const Rational& length,
                    std::optional<Dart> direction = std::nullopt);

// Walk from a point of A: sign Positive starts along the orientation of A,
// Negative against it. Throws (NotOnA) when the start is not on a relative
// edge.
WalkTrace boundary_safe_walk(const RibbonGraph& g, const MetricAssignment& metric,
                             const RelativeStructure& rel, const PointOnGraph& start,
                             WalkSign sign, const Rational& length);

// Per-face walk tables on a unit graph: S+ cycles with positions, so that
// k-fold face successors cost O(1).
struct FaceWalker {
  std::vector<std::vector<Dart>> cycles;
  std::vector<int> face_of;   // per dart
  std::vector<int> pos_of;    // per dart

  explicit FaceWalker(const RibbonGraph& g);
  Dart power(Dart d, long long k) const;  // (S+)^k (d), k may be negative
  int face_len(int f) const { return static_cast<int>(cycles[f].size()); }
};

// The algebraic core shared by all the checkers: on a unit graph, the
// length-(N*unit) signed walk started at offset t in dart d, 0 < t < unit,
// ends at offset t in T(d) with T(d) = (S+)^{sign(face(d)) * N}(d).
// sign_of_face uses face indices of `walker`; faces marked relative get the
// identity. Throws (SignOnAFace) when a relative face carries a nonzero sign.
std::vector<Dart> endpoint_dart_map(const RibbonGraph& unit_graph, const FaceWalker& walker,
                                    const std::vector<int>& sign_of_face,
                                    const std::vector<char>& face_is_relative, long long N);

}  // namespace tatg
