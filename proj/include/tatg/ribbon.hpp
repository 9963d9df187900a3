#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tatg/rational.hpp"

namespace tatg {

// Darts are numbered 1..2m. The reversal involution is structural:
// edge k (1-based) consists of darts 2k-1 and 2k.
using Dart = int;

inline Dart rev(Dart d) { return (d & 1) ? d + 1 : d - 1; }
inline int edge_of(Dart d) { return (d + 1) / 2; }
inline Dart orient_dart(int edge) { return 2 * edge - 1; }
inline bool is_orient(Dart d) { return (d & 1) != 0; }

// Combinatorial map: a rotation system on darts. The cycles of nu are the
// counterclockwise orderings at the vertices; the face successor
// S+(d) = nu(rev(d)) walks the boundary components of the thickening.
class RibbonGraph {
public:
  RibbonGraph() = default;

  // rotations[v] lists the darts at vertex v (0-based outside, stored 1-based)
  // in counterclockwise order. Every dart 1..2m must appear exactly once.
  static RibbonGraph from_rotations(const std::vector<std::vector<Dart>>& rotations);

  int dart_count() const { return static_cast<int>(next_.size()) - 1; }
  int edge_count() const { return dart_count() / 2; }
  int vertex_count() const { return static_cast<int>(rotations_.size()) - 1; }

  Dart nu(Dart d) const { return next_[d]; }
  Dart nu_inv(Dart d) const { return prev_[d]; }
  Dart face_next(Dart d) const { return next_[rev(d)]; }
  Dart face_prev(Dart d) const { return rev(prev_[d]); }

  int tail(Dart d) const { return tail_[d]; }
  int head(Dart d) const { return tail_[rev(d)]; }
  int valency(int v) const { return static_cast<int>(rotations_[v].size()); }
  const std::vector<Dart>& rotation(int v) const { return rotations_[v]; }

  bool connected() const;

  // Face cycles of S+, each rotated so its smallest dart comes first,
  // sorted by that key.
  std::vector<std::vector<Dart>> faces() const;

  // Face id (index into faces()) per dart.
  std::vector<int> face_index(const std::vector<std::vector<Dart>>& fc) const;

private:
  std::vector<Dart> next_;   // nu, 1-based
  std::vector<Dart> prev_;   // nu^{-1}
  std::vector<int> tail_;    // vertex per dart, 1-based
  std::vector<std::vector<Dart>> rotations_;  // 1-based vertex -> ccw darts
};

// Oriented boundary subgraph: disjoint oriented edge cycles, each stored as
// the sequence of its orientation darts.
struct RelativeStructure {
  std::vector<std::vector<Dart>> cycles;

  bool empty() const { return cycles.empty(); }
  // Membership helpers over a graph with `m` edges.
  std::vector<int> edge_component(int edge_count) const;  // -1 if not on A
  std::vector<char> orientation_dart(int dart_count) const;
};

struct MetricAssignment {
  std::vector<Rational> length;  // 1-based per edge; length[0] unused

  Rational edge_length(int e) const { return length[e]; }
  int edges() const { return static_cast<int>(length.size()) - 1; }
};

enum class ValidationError {
  None,
  MalformedPermutation,
  DisconnectedGraph,
  UnivalentVertex,
  RelativeIncompatibility,
  NonPositiveLength,
};

struct ValidationReport {
  bool ok = true;
  ValidationError error = ValidationError::None;
  std::string message;
  int witness_vertex = 0;  // 0 = none
  Dart witness_dart = 0;
};

struct ValidateOptions {
  // Univalent vertices are tolerated only at designated cap vertices that a
  // later blow-up removes.
  std::vector<int> allow_univalent_at;
};

ValidationReport validate(const RibbonGraph& g, const RelativeStructure* rel = nullptr,
                          const MetricAssignment* metric = nullptr,
                          const ValidateOptions& opts = {});

struct SurfaceInvariants {
  int vertices = 0;
  int edges = 0;
  int euler = 0;
  int boundary_components = 0;
  int genus = 0;
  std::vector<std::vector<Dart>> face_cycles;
  std::vector<char> face_is_relative;  // per face: consists of reversed A-darts
};

// Throws std::runtime_error on non-integer genus (corrupted rotation data).
SurfaceInvariants surface_invariants(const RibbonGraph& g,
                                     const RelativeStructure* rel = nullptr);

// Ribbon structure induced on an edge subset, kept on the original dart ids.
struct InducedRibbon {
  std::vector<char> in_subset;      // per dart
  std::vector<Dart> next;           // induced nu on subset darts, 0 elsewhere
  std::vector<std::vector<Dart>> face_cycles;
  std::vector<int> face_of;         // per dart, -1 outside
  std::vector<int> component_of_edge;  // per edge, -1 outside
  int component_count = 0;

  Dart face_next(Dart d) const { return next[rev(d)]; }
};

InducedRibbon induce(const RibbonGraph& g, const std::vector<char>& edge_in_subset);

// Standalone ribbon graph for an edge subset, with old edge k mapped to new
// edge new_edge_of[k] (0 when dropped). Throws on empty subsets.
struct InducedSubgraph {
  RibbonGraph graph;
  std::vector<int> new_edge_of;   // 1-based old edge -> new edge id
  std::vector<int> old_edge_of;   // 1-based new edge -> old edge id
  int component_count = 0;
};

InducedSubgraph induced_subgraph_ribbon(const RibbonGraph& g,
                                        const std::vector<char>& edge_in_subset);

// Generators.
struct GraphWithMetric {
  RibbonGraph graph;
  MetricAssignment metric;
};

// Complete bipartite ribbon graph on p+q vertices, both classes ordered
// cyclically the same way, uniform edge length.
GraphWithMetric make_kpq(int p, int q, const Rational& edge_len = Rational(1, 2));

// Circle of the given total length, realized with two 2-valent vertices and
// two edges so the file format never needs loops.
GraphWithMetric make_circle(const Rational& total_length);

}  // namespace tatg
