#include "tatg/verify.hpp"

#include <numeric>
#include <stdexcept>

namespace tatg {

SignAssignment SignAssignment::uniform(std::size_t faces, int sign,
                                       const std::vector<char>& face_is_relative) {
  SignAssignment s;
  s.sign_of_face.assign(faces, sign);
  for (std::size_t f = 0; f < faces; ++f)
    if (face_is_relative[f]) s.sign_of_face[f] = 0;
  return s;
}

namespace {

std::vector<char> relative_faces(const RibbonGraph& g,
                                 const std::vector<std::vector<Dart>>& fc,
                                 const RelativeStructure& rel) {
  std::vector<char> flags(fc.size(), 0);
  if (rel.empty()) return flags;
  std::vector<char> orient = rel.orientation_dart(g.dart_count());
  for (std::size_t f = 0; f < fc.size(); ++f) {
    bool all = true;
    for (Dart d : fc[f])
      if (!orient[rev(d)]) {
        all = false;
        break;
      }
    flags[f] = all ? 1 : 0;
  }
  return flags;
}

struct CheckContext {
  UnitSubdivision sub;
  FaceWalker walker;              // on the refined graph
  std::vector<char> fine_face_is_rel;
  std::vector<char> fine_a_edge;        // per refined edge
  std::vector<char> fine_a_orient;      // per refined dart
  std::vector<int> fine_sign_of_face;   // per refined face
  long long N = 0;

  CheckContext(const RibbonGraph& g, const MetricAssignment& metric,
               const RelativeStructure& rel, const SignAssignment& sign, const Rational& ell)
      : sub(subdivide(g, metric, common_unit(metric, {ell}))), walker(sub.refined) {
    N = ell.div_exact(sub.unit);

    RelativeStructure fine_rel = sub.transport(rel);
    fine_face_is_rel = relative_faces(sub.refined, walker.cycles, fine_rel);
    fine_a_orient = fine_rel.orientation_dart(sub.refined.dart_count());
    fine_a_edge.assign(sub.refined.edge_count() + 1, 0);
    for (const auto& cyc : fine_rel.cycles)
      for (Dart d : cyc) fine_a_edge[edge_of(d)] = 1;

    // Transport the face signs through the subdivision.
    std::vector<std::vector<Dart>> coarse_faces = g.faces();
    std::vector<int> coarse_face_of = g.face_index(coarse_faces);
    if (sign.sign_of_face.size() != coarse_faces.size())
      throw std::invalid_argument("sign assignment does not match face count");
    std::vector<char> coarse_rel_faces = relative_faces(g, coarse_faces, rel);
    for (std::size_t f = 0; f < coarse_faces.size(); ++f)
      if (coarse_rel_faces[f] && sign.sign_of_face[f] != 0)
        throw std::invalid_argument("SignOnAFace: signs only attach to cylinder faces");

    fine_sign_of_face.assign(walker.cycles.size(), 0);
    for (std::size_t f = 0; f < walker.cycles.size(); ++f) {
      Dart any = walker.cycles[f][0];
      int cf = coarse_face_of[sub.orig_dart_of(any)];
      fine_sign_of_face[f] = sign.sign_of_face[cf];
    }
  }

  std::vector<Dart> endpoint_map() const {
    return endpoint_dart_map(sub.refined, walker, fine_sign_of_face, fine_face_is_rel, N);
  }
};

TatVerdict run_check(const RibbonGraph& g, const MetricAssignment& metric,
                     const RelativeStructure& rel, const SignAssignment& sign,
                     const Rational& ell) {
  if (!ell.is_positive()) throw std::invalid_argument("walk length must be positive");
  CheckContext ctx(g, metric, rel, sign, ell);
  std::vector<Dart> T = ctx.endpoint_map();

  auto witness_at = [&](int fine_edge, const std::string& detail) {
    TatVerdict v;
    v.holds = false;
    int e = ctx.sub.orig_edge_of[fine_edge];
    v.witness_edge = e;
    v.witness = PointOnGraph::interior(g, metric, orient_dart(e),
                                       metric.edge_length(e) / Rational(2));
    v.detail = detail;
    return v;
  };

  for (int e = 1; e <= ctx.sub.refined.edge_count(); ++e) {
    Dart d = orient_dart(e);
    if (ctx.fine_a_edge[e]) {
      Dart a = ctx.fine_a_orient[d] ? d : rev(d);
      if (!ctx.fine_a_edge[edge_of(T[a])])
        return witness_at(e, "walk from the relative set leaves it");
    } else {
      if (T[rev(d)] != rev(T[d]))
        return witness_at(e, "the two safe walks end at different points");
    }
  }
  return TatVerdict{};
}

SignAssignment all_positive(const RibbonGraph& g, const RelativeStructure& rel) {
  std::vector<std::vector<Dart>> fc = g.faces();
  return SignAssignment::uniform(fc.size(), 1, relative_faces(g, fc, rel));
}

}  // namespace

TatVerdict check_tat(const RibbonGraph& g, const MetricAssignment& metric,
                     const RelativeStructure& rel, const Rational& ell) {
  return run_check(g, metric, rel, all_positive(g, rel), ell);
}

TatVerdict check_signed_tat(const RibbonGraph& g, const MetricAssignment& metric,
                            const RelativeStructure& rel, const SignAssignment& sign,
                            const Rational& ell) {
  return run_check(g, metric, rel, sign, ell);
}

namespace {

SigmaMap build_sigma(const RibbonGraph& g, const MetricAssignment& metric,
                     const RelativeStructure& rel, const SignAssignment& sign,
                     const Rational& ell) {
  TatVerdict verdict = run_check(g, metric, rel, sign, ell);
  if (!verdict.holds)
    throw PropertyDoesNotHold("compute_sigma: property fails at edge e" +
                              std::to_string(verdict.witness_edge));

  CheckContext ctx(g, metric, rel, sign, ell);
  std::vector<Dart> T = ctx.endpoint_map();

  SigmaMap s;
  s.dart_perm.assign(ctx.sub.refined.dart_count() + 1, 0);
  for (Dart d = 1; d <= ctx.sub.refined.dart_count(); ++d) {
    if (ctx.fine_face_is_rel[ctx.walker.face_of[d]]) {
      s.dart_perm[d] = rev(T[rev(d)]);
    } else {
      s.dart_perm[d] = T[d];
    }
  }

  s.is_circle = true;
  for (int v = 1; v <= g.vertex_count(); ++v)
    if (g.valency(v) != 2) s.is_circle = false;

  // Induced action on original vertices and edges, when sigma preserves them.
  const RibbonGraph& fine = ctx.sub.refined;
  s.vertex_action_defined = true;
  s.vertex_perm.assign(g.vertex_count() + 1, 0);
  for (int v = 1; v <= g.vertex_count() && s.vertex_action_defined; ++v) {
    int image = 0;
    for (Dart d : fine.rotation(v)) {
      int w = fine.tail(s.dart_perm[d]);
      if (image == 0)
        image = w;
      else if (image != w)
        s.vertex_action_defined = false;
    }
    if (image > g.vertex_count()) s.vertex_action_defined = false;
    s.vertex_perm[v] = image;
  }
  if (s.vertex_action_defined) {
    s.edge_perm.assign(g.edge_count() + 1, 0);
    for (int e = 1; e <= g.edge_count() && s.vertex_action_defined; ++e) {
      int image = 0;
      for (int seg = 0; seg < ctx.sub.segments_of[e]; ++seg) {
        Dart fd = ctx.sub.refined_dart(orient_dart(e), seg);
        int ie = ctx.sub.orig_edge_of[edge_of(s.dart_perm[fd])];
        if (image == 0)
          image = ie;
        else if (image != ie)
          s.vertex_action_defined = false;
      }
      s.edge_perm[e] = image;
    }
  }
  if (!s.vertex_action_defined) {
    s.vertex_perm.clear();
    s.edge_perm.clear();
  }

  s.sub = std::move(ctx.sub);
  return s;
}

}  // namespace

SigmaMap compute_sigma(const RibbonGraph& g, const MetricAssignment& metric,
                       const RelativeStructure& rel, const Rational& ell) {
  return build_sigma(g, metric, rel, all_positive(g, rel), ell);
}

SigmaMap compute_sigma_signed(const RibbonGraph& g, const MetricAssignment& metric,
                              const RelativeStructure& rel, const SignAssignment& sign) {
  return build_sigma(g, metric, rel, sign, Rational(1));
}

long long sigma_order(const SigmaMap& sigma) {
  int n = static_cast<int>(sigma.dart_perm.size()) - 1;
  std::vector<char> seen(n + 1, 0);
  long long order = 1;
  for (Dart d = 1; d <= n; ++d) {
    if (seen[d]) continue;
    long long len = 0;
    Dart x = d;
    do {
      seen[x] = 1;
      ++len;
      x = sigma.dart_perm[x];
    } while (x != d);
    long long g = std::gcd(order, len);
    __int128 l = static_cast<__int128>(order / g) * len;
    if (l > INT64_MAX) throw std::overflow_error("sigma_order: overflow");
    order = static_cast<long long>(l);
  }
  return order;
}

FdtcReport fdtc(const RibbonGraph& g, const MetricAssignment& metric,
                const RelativeStructure& rel, const SignAssignment& sign) {
  TatVerdict verdict = check_signed_tat(g, metric, rel, sign);
  if (!verdict.holds)
    throw PropertyDoesNotHold("fdtc: signed property fails at edge e" +
                              std::to_string(verdict.witness_edge));

  std::vector<std::vector<Dart>> fc = g.faces();
  std::vector<char> is_rel = relative_faces(g, fc, rel);
  FdtcReport report;
  for (std::size_t f = 0; f < fc.size(); ++f) {
    if (is_rel[f]) continue;
    FdtcEntry entry;
    entry.face = static_cast<int>(f);
    Rational len;
    for (Dart d : fc[f]) len += metric.edge_length(edge_of(d));
    entry.boundary_length = len;
    entry.rot = Rational(sign.sign_of_face[f]) / len;
    report.entries.push_back(entry);
  }
  return report;
}

MetricAssignment power_tat(const RibbonGraph& g, const MetricAssignment& metric, int m) {
  if (m <= 0) throw std::invalid_argument("power_tat: m must be positive");
  RelativeStructure empty;
  TatVerdict verdict = check_tat(g, metric, empty, Rational(1));
  if (!verdict.holds)
    throw PropertyDoesNotHold("power_tat: the plain property fails at edge e" +
                              std::to_string(verdict.witness_edge));
  MetricAssignment out = metric;
  for (int e = 1; e <= out.edges(); ++e) out.length[e] /= Rational(m);
  return out;
}

}  // namespace tatg
