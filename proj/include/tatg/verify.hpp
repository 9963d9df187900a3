#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tatg/metric.hpp"
#include "tatg/ribbon.hpp"

namespace tatg {

// Sign per face of graph.faces() on the original graph: -1, 0 or +1.
// Relative faces must carry 0.
struct SignAssignment {
  std::vector<int> sign_of_face;

  static SignAssignment uniform(std::size_t faces, int sign,
                                const std::vector<char>& face_is_relative);
};

struct TatVerdict {
  bool holds = true;
  std::optional<PointOnGraph> witness;  // midpoint of an original edge
  int witness_edge = 0;
  std::string detail;
};

// Dart criterion for the plain property at walk length ell (default pi):
// after refining to the common unit u with N = ell/u, the two length-ell
// walks from offset t in a non-relative edge meet for every interior t
// exactly when (S+)^N(rev d) = rev((S+)^N(d)); matching the same dart with
// offset u-t instead would force t = u/2 only. Walks from relative edges
// must land on the relative set.
TatVerdict check_tat(const RibbonGraph& g, const MetricAssignment& metric,
                     const RelativeStructure& rel, const Rational& ell = Rational(1));

// Signed variant; the walk length is pi by definition. Other lengths are
// accepted as an extension beyond the standard notion.
TatVerdict check_signed_tat(const RibbonGraph& g, const MetricAssignment& metric,
                            const RelativeStructure& rel, const SignAssignment& sign,
                            const Rational& ell = Rational(1));

struct SigmaMap {
  UnitSubdivision sub;
  std::vector<Dart> dart_perm;  // on the unit graph
  bool is_circle = false;       // base graph homeomorphic to S^1
  bool vertex_action_defined = false;
  std::vector<int> vertex_perm;  // 1-based original vertices
  std::vector<int> edge_perm;    // 1-based original edges
};

// Requires the corresponding check to pass (throws PropertyDoesNotHold).
SigmaMap compute_sigma(const RibbonGraph& g, const MetricAssignment& metric,
                       const RelativeStructure& rel, const Rational& ell = Rational(1));
SigmaMap compute_sigma_signed(const RibbonGraph& g, const MetricAssignment& metric,
                              const RelativeStructure& rel, const SignAssignment& sign);

long long sigma_order(const SigmaMap& sigma);

struct FdtcEntry {
  int face = 0;  // index into graph.faces()
  Rational boundary_length;
  Rational rot;
};

struct FdtcReport {
  std::vector<FdtcEntry> entries;  // cylinder faces only, in face order
};

FdtcReport fdtc(const RibbonGraph& g, const MetricAssignment& metric,
                const RelativeStructure& rel, const SignAssignment& sign);

// Same combinatorics with every length divided by m; the induced map is the
// m-th power of the original one.
MetricAssignment power_tat(const RibbonGraph& g, const MetricAssignment& metric, int m);

struct PropertyDoesNotHold : std::runtime_error {
  explicit PropertyDoesNotHold(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tatg
