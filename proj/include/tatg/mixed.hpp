#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tatg/construct.hpp"
#include "tatg/metric.hpp"
#include "tatg/ribbon.hpp"
#include "tatg/verify.hpp"

namespace tatg {

// Nested level subgraphs with their relative circles. level_edges[i] and
// level_rel[i] describe level i+1; level 0 is the graph itself with `rel`.
struct FilteredGraph {
  RibbonGraph graph;
  MetricAssignment metric;
  RelativeStructure rel;
  std::vector<std::vector<char>> level_edges;
  std::vector<RelativeStructure> level_rel;

  int depth() const { return static_cast<int>(level_edges.size()); }
};

// Per level, one (member edge, value) entry per connected component.
struct DeltaMap {
  std::vector<std::vector<std::pair<int, Rational>>> entries;  // size depth+1
};

enum class MixedClause { None, Structure, I, II, III };

struct MixedVerdict {
  bool holds = true;
  MixedClause clause = MixedClause::None;
  int witness_edge = 0;
  std::optional<PointOnGraph> witness;
  std::string detail;
};

MixedVerdict check_mixed_tat(const FilteredGraph& fg, const DeltaMap& delta);

struct MixedWalkStage {
  int level = 0;
  Rational delta;
  WalkTrace walk;
};

struct MixedWalkTrace {
  PointOnGraph start;
  std::vector<MixedWalkStage> stages;
  int order = 0;
  Rational total_length;
  PointOnGraph endpoint;
  int endpoint_level = 0;
};

struct VertexLanding : std::runtime_error {
  explicit VertexLanding(const std::string& what) : std::runtime_error(what) {}
};

// Concatenated stage walks; the start must be interior to an edge and the
// direction dart carries it. A stage that ends exactly on a vertex of the
// next level raises VertexLanding.
MixedWalkTrace mixed_safe_walk(const FilteredGraph& fg, const DeltaMap& delta,
                               const PointOnGraph& start, Dart direction);

// Stage zero follows the orientation of the relative set.
MixedWalkTrace boundary_mixed_safe_walk(const FilteredGraph& fg, const DeltaMap& delta,
                                        const PointOnGraph& start);

struct LevelPermutation {
  int level = 0;
  std::vector<std::vector<Dart>> cycles;  // boundary cycles of the level (refined darts)
  std::vector<Rational> cycle_length;
  std::vector<int> perm;                  // cycle index -> cycle index
  std::vector<std::vector<int>> orbits;
};

// Action of the accumulated stages 0..level-1 on the level's boundary cycles.
LevelPermutation level_permutation(const FilteredGraph& fg, const DeltaMap& delta, int level);

struct ScrewEntry {
  int level = 0;
  int orbit = 0;
  int alpha = 0;
  Rational cycle_length;
  Rational value;
};

std::vector<ScrewEntry> screw_numbers(const FilteredGraph& fg, const DeltaMap& delta);

struct DualGraph {
  struct Node {
    int level = 0;
    int component = 0;
    bool degenerate = false;  // equals a component one level deeper
  };
  std::vector<Node> nodes;
  std::vector<std::pair<int, int>> edges;  // indices into nodes
  bool is_tree = false;
};

DualGraph dual_graph(const FilteredGraph& fg, const DeltaMap& delta);

// Model annulus maps (x, t) -> (x + m t + c, t) compose coordinatewise.
struct AnnulusTwist {
  Rational m;
  Rational c;
};

inline AnnulusTwist compose(const AnnulusTwist& a, const AnnulusTwist& b) {
  return {a.m + b.m, a.c + b.c};
}
inline AnnulusTwist invert(const AnnulusTwist& a) { return {-a.m, -a.c}; }

// Screw number of an orbit of annuli from the linearized data.
inline Rational screw_from_linearization(const Rational& e, const Rational& n,
                                         const Rational& theta) {
  return -(e / n) * theta;
}

// ---------------------------------------------------------------------------
// Level attachment

struct Attachment {
  int base_cycle = 0;  // a relative cycle of the base; its whole orbit attaches
  RibbonGraph child_graph;
  MetricAssignment child_metric;
  RelativeStructure child_rel;
  Rational screw;  // < 0
};

struct AttachResult {
  FilteredGraph fg;
  DeltaMap delta;
  // Per attachment, per orbit copy, the new ids of the child relative cycles
  // (in child_rel order).
  std::vector<std::vector<std::vector<int>>> child_cycles;
};

AttachResult attach_level(const FilteredGraph& base, const DeltaMap& base_delta,
                          const std::vector<Attachment>& attachments);

// ---------------------------------------------------------------------------
// Recursive realization

struct MixedSpecNode {
  OrbitSpec piece;
  struct Child {
    int cap_index = 0;   // which cap of this piece the child orbit hangs on
    Rational screw;      // < 0
    MixedSpecNode* node = nullptr;
  };
  std::vector<Child> children;
};

struct MixedRealized {
  FilteredGraph fg;
  DeltaMap delta;
};

MixedRealized realize_mixed(const MixedSpecNode& root);

}  // namespace tatg
