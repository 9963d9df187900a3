#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tatg/metric.hpp"
#include "tatg/ribbon.hpp"
#include "tatg/verify.hpp"

namespace tatg {

// ---------------------------------------------------------------------------
// Blow-up

struct BlowUpResult {
  RibbonGraph graph;
  MetricAssignment metric;
  RelativeStructure rel;
  std::vector<int> new_cycle_indices;   // positions of the fresh cycles in rel
  std::vector<int> blown_vertices;      // the whole orbit that was replaced
  std::vector<int> new_edge_of;         // 1-based old edge -> new edge id
  std::vector<int> new_vertex_of;       // 1-based old vertex -> new id, 0 if blown
};

// Replaces every vertex in the sigma-orbit of `vertex` by an oriented circle
// of boundary edges (each of length 2*epsilon, total 2*valency*epsilon),
// shortening the incident edges by epsilon. The plain (or signed, when `sign`
// is given) property must hold beforehand; single-edge circles produced at
// univalent cap vertices are subdivided on the spot.
BlowUpResult blow_up(const RibbonGraph& g, const MetricAssignment& metric,
                     const RelativeStructure& rel, int vertex, const Rational& epsilon,
                     const SignAssignment* sign = nullptr);

// ---------------------------------------------------------------------------
// Metric fitting by exact linear feasibility

enum class FitStatus { Feasible, FeasibleNotTat, Infeasible, MalformedTargets };

struct FitResult {
  FitStatus status = FitStatus::Infeasible;
  MetricAssignment metric;    // when feasible
  TatVerdict verdict;         // walk check on the fitted metric
  std::vector<int> zero_forced_edges;  // infeasibility certificate
  std::string certificate;
};

// Builds the cycle-length system {length(face i) = pi/R_i for sign(i) != 0,
// all edge lengths > 0} and decides it by exact Fourier-Motzkin elimination.
// target_of_face is indexed like g.faces(); entries at faces with sign 0 are
// ignored. A feasible system yields a deterministic solution which is then
// run through the signed walk check.
FitResult fit_metric(const RibbonGraph& g, const RelativeStructure& rel,
                     const SignAssignment& sign, const std::vector<Rational>& target_of_face);

// ---------------------------------------------------------------------------
// Realization of freely periodic data from quotient-orbit descriptions

struct BoundaryTarget {
  Rational rot;  // |R_i| > 0 unless sign == 0
  int sign = 1;  // -1, 0, +1
};

struct OrbitSpec {
  int quotient_genus = 0;
  int order = 1;  // n
  std::vector<BoundaryTarget> boundaries;  // pointwise-fixed boundary targets
  std::vector<int> branch_voltages;        // ramification data, nonzero mod n
  std::vector<int> cap_voltages;           // marked vertices kept for blow-ups
  // Voltage per quotient spine edge (1-based, see build_quotient_spine).
  // Leave empty to accept the deterministic suggestion.
  std::vector<int> edge_voltages;
};

struct QuotientSpine {
  RibbonGraph graph;
  MetricAssignment metric;
  std::vector<int> vertex_voltage;      // 1-based, 0 where unmarked
  std::vector<int> branch_vertices;     // per branch entry
  std::vector<int> cap_vertices;        // per cap entry
  std::vector<int> face_of_boundary;    // spec boundary -> face index
  std::vector<char> univalent_ok;       // per vertex: cap slot at a spine end
};

QuotientSpine build_quotient_spine(const OrbitSpec& spec);

// Face voltages V_i of the quotient (edge voltages plus rotation wraps at
// marked vertices, accumulated along each face cycle).
std::vector<int> face_voltages(const QuotientSpine& spine, const std::vector<int>& edge_voltages,
                               int order);

// Deterministic edge voltages for which the derived cover is connected and
// realizes the requested coefficients; throws when none exist.
std::vector<int> suggest_edge_voltages(const QuotientSpine& spine, const OrbitSpec& spec);

struct RealizedPeriodic {
  RibbonGraph graph;
  MetricAssignment metric;
  RelativeStructure rel;  // empty
  SignAssignment sign;
  FdtcReport twist;
  std::vector<std::vector<int>> cap_orbits;  // per cap entry: lifted vertices
  QuotientSpine quotient;
  std::vector<int> edge_voltages;
};

// Derived graph of the voltage-labelled quotient spine under Z/n, with the
// pulled-back metric; post-validated against the signed walk check and the
// requested coefficients.
RealizedPeriodic realize_periodic(const OrbitSpec& spec);

// Blow up the selected cap orbits (defaults to all) with the given radius,
// yielding a relative signed structure; post-validated.
struct RelativeRealized {
  RibbonGraph graph;
  MetricAssignment metric;
  RelativeStructure rel;
  SignAssignment sign;
  std::vector<std::vector<int>> cycles_of_cap;  // per selected cap: cycle ids in rel
};

RelativeRealized relative_from_capped(const RealizedPeriodic& realized,
                                      const std::vector<int>& cap_indices,
                                      const Rational& epsilon);
// Per-cap blow radii, parallel to cap_indices (or to all caps when empty).
RelativeRealized relative_from_capped(const RealizedPeriodic& realized,
                                      const std::vector<int>& cap_indices,
                                      const std::vector<Rational>& epsilons);

// Linear solve over Z/n (Gaussian elimination with gcd pivoting); returns a
// particular solution of A x = b or nullopt.
std::optional<std::vector<int>> solve_mod_n(std::vector<std::vector<int>> a, std::vector<int> b,
                                            int n);

}  // namespace tatg
