#include "tatg/mixed.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace tatg {

namespace {

std::vector<char> all_edges(int count) {
  std::vector<char> v(count + 1, 1);
  v[0] = 0;
  return v;
}

// Structural validation shared by the checker and the walk entry points.
void validate_filtration(const FilteredGraph& fg) {
  auto report = validate(fg.graph, &fg.rel, &fg.metric);
  if (!report.ok)
    throw std::invalid_argument("filtered graph invalid at level 0: " + report.message);

  int E = fg.graph.edge_count();
  const std::vector<char>* prev = nullptr;
  std::vector<char> level0 = all_edges(E);
  prev = &level0;
  for (int i = 0; i < fg.depth(); ++i) {
    const auto& cur = fg.level_edges[i];
    if (static_cast<int>(cur.size()) != E + 1)
      throw std::invalid_argument("level edge set has the wrong size");
    bool any = false;
    for (int e = 1; e <= E; ++e) {
      if (cur[e] && !(*prev)[e])
        throw std::invalid_argument("levels are not nested at level " + std::to_string(i + 1));
      any = any || cur[e];
    }
    if (!any) throw std::invalid_argument("empty level " + std::to_string(i + 1));
    prev = &cur;
  }

  // Induced subgraphs may be disconnected but must not have univalent
  // vertices; relative circles must stay compatible with the induced orders.
  for (int i = 0; i < fg.depth(); ++i) {
    InducedRibbon ind = induce(fg.graph, fg.level_edges[i]);
    std::vector<int> valency(fg.graph.vertex_count() + 1, 0);
    for (Dart d = 1; d <= fg.graph.dart_count(); ++d)
      if (ind.in_subset[d]) valency[fg.graph.tail(d)]++;
    for (int v = 1; v <= fg.graph.vertex_count(); ++v)
      if (valency[v] == 1)
        throw std::invalid_argument("level " + std::to_string(i + 1) +
                                    " has a univalent vertex at v" + std::to_string(v));
    const RelativeStructure& a = fg.level_rel[i];
    for (const auto& cyc : a.cycles) {
      for (std::size_t k = 0; k < cyc.size(); ++k) {
        Dart arriving = cyc[k];
        Dart departing = cyc[(k + 1) % cyc.size()];
        if (!ind.in_subset[arriving] || !ind.in_subset[departing])
          throw std::invalid_argument("relative circle leaves its level");
        if (ind.next[departing] != rev(arriving))
          throw std::invalid_argument("relative circle incompatible with level " +
                                      std::to_string(i + 1));
      }
    }
  }

  // A^{i+1} consists of full circles of A^i.
  auto cycle_edges = [&](const RelativeStructure& r) {
    std::vector<std::vector<int>> out;
    for (const auto& cyc : r.cycles) {
      std::vector<int> es;
      for (Dart d : cyc) es.push_back(edge_of(d));
      std::sort(es.begin(), es.end());
      out.push_back(std::move(es));
    }
    return out;
  };
  const RelativeStructure* prev_rel = &fg.rel;
  for (int i = 0; i < fg.depth(); ++i) {
    auto coarse = cycle_edges(*prev_rel);
    auto fine = cycle_edges(fg.level_rel[i]);
    for (const auto& c : fine) {
      if (std::find(coarse.begin(), coarse.end(), c) == coarse.end())
        throw std::invalid_argument("relative circles are not nested circle by circle");
    }
    prev_rel = &fg.level_rel[i];
  }
}

struct LevelData {
  std::vector<char> edge_in;              // refined edges
  InducedRibbon ind;                      // on the refined graph
  std::vector<int> pos_of;                // face positions
  std::vector<long long> steps_of_comp;   // walk steps per component
  std::vector<Rational> delta_of_comp;
  std::vector<char> a_edge;               // refined A^i edges
};

struct MixedEngine {
  UnitSubdivision sub;
  std::vector<LevelData> levels;           // 0..depth
  std::vector<int> top_level_of_edge;      // refined edge -> deepest level
  std::vector<char> a0_orient;             // refined darts

  MixedEngine(const FilteredGraph& fg, const DeltaMap& delta)
      : sub(make_sub(fg, delta)) {
    int depth = fg.depth();
    levels.reserve(depth + 1);
    for (int i = 0; i <= depth; ++i) {
      LevelData ld;
      ld.edge_in = (i == 0) ? all_edges(sub.refined.edge_count())
                            : sub.transport_edges(fg.level_edges[i - 1]);
      ld.ind = induce(sub.refined, ld.edge_in);
      ld.pos_of.assign(sub.refined.dart_count() + 1, -1);
      for (const auto& cyc : ld.ind.face_cycles)
        for (std::size_t p = 0; p < cyc.size(); ++p) ld.pos_of[cyc[p]] = static_cast<int>(p);

      ld.delta_of_comp.assign(ld.ind.component_count, Rational(-1));
      if (static_cast<int>(delta.entries.size()) <= i)
        throw std::invalid_argument("delta map missing level " + std::to_string(i));
      for (const auto& [member, value] : delta.entries[i]) {
        if (member < 1 || member > fg.graph.edge_count())
          throw std::invalid_argument("delta names an unknown edge");
        Dart fd = sub.refined_dart(orient_dart(member), 0);
        int comp = ld.ind.component_of_edge[edge_of(fd)];
        if (comp < 0)
          throw std::invalid_argument("delta names an edge outside its level");
        if (!ld.delta_of_comp[comp].is_negative())
          throw std::invalid_argument("delta names a component twice");
        if (value.is_negative()) throw std::invalid_argument("delta values must be >= 0");
        if (i == 0 && !value.is_positive())
          throw std::invalid_argument("the level-0 walk length must be positive");
        ld.delta_of_comp[comp] = value;
      }
      for (int c = 0; c < ld.ind.component_count; ++c)
        if (ld.delta_of_comp[c].is_negative())
          throw std::invalid_argument("delta misses a component of level " + std::to_string(i));

      ld.steps_of_comp.assign(ld.ind.component_count, 0);
      for (int c = 0; c < ld.ind.component_count; ++c)
        ld.steps_of_comp[c] = ld.delta_of_comp[c].div_exact(sub.unit);

      ld.a_edge.assign(sub.refined.edge_count() + 1, 0);
      const RelativeStructure& a = (i == 0) ? fg.rel : fg.level_rel[i - 1];
      RelativeStructure fine = sub.transport(a);
      for (const auto& cyc : fine.cycles)
        for (Dart d : cyc) ld.a_edge[edge_of(d)] = 1;
      if (i == 0) a0_orient = fine.orientation_dart(sub.refined.dart_count());
      levels.push_back(std::move(ld));
    }

    top_level_of_edge.assign(sub.refined.edge_count() + 1, 0);
    for (int i = 1; i <= depth; ++i)
      for (int e = 1; e <= sub.refined.edge_count(); ++e)
        if (levels[i].edge_in[e]) top_level_of_edge[e] = i;
  }

  static UnitSubdivision make_sub(const FilteredGraph& fg, const DeltaMap& delta) {
    std::vector<Rational> extra;
    for (const auto& lvl : delta.entries)
      for (const auto& [e, v] : lvl)
        if (v.is_positive()) extra.push_back(v);
    Rational u = common_unit(fg.metric, extra);
    return subdivide(fg.graph, fg.metric, u);
  }

  Dart stage_map(int level, Dart d) const {
    const LevelData& ld = levels[level];
    int f = ld.ind.face_of[d];
    long long len = static_cast<long long>(ld.ind.face_cycles[f].size());
    long long steps = ld.steps_of_comp[ld.ind.component_of_edge[edge_of(d)]] % len;
    long long p = (ld.pos_of[d] + steps) % len;
    return ld.ind.face_cycles[f][static_cast<std::size_t>(p)];
  }

  struct MapResult {
    Dart d = 0;
    int order = 0;
    bool early = false;  // stopped because a stage endpoint left its level
  };

  MapResult full_map(Dart start) const {
    int c = top_level_of_edge[edge_of(start)];
    MapResult r;
    r.d = stage_map(0, start);
    for (int i = 1; i <= c; ++i) {
      if (!levels[i].edge_in[edge_of(r.d)]) {
        r.early = true;
        return r;
      }
      r.d = stage_map(i, r.d);
      r.order = i;
    }
    return r;
  }
};

MixedVerdict engine_check(const FilteredGraph& fg, const MixedEngine& eng) {
  auto witness_at = [&](int fine_edge, MixedClause clause, const std::string& detail) {
    MixedVerdict v;
    v.holds = false;
    v.clause = clause;
    int e = eng.sub.orig_edge_of[fine_edge];
    v.witness_edge = e;
    v.witness = PointOnGraph::interior(fg.graph, fg.metric, orient_dart(e),
                                       fg.metric.edge_length(e) / Rational(2));
    v.detail = detail;
    return v;
  };

  for (int e = 1; e <= eng.sub.refined.edge_count(); ++e) {
    Dart d = orient_dart(e);
    int c = eng.top_level_of_edge[e];
    if (eng.levels[0].a_edge[e]) {
      // Boundary walks from the relative set must land in A at the same depth.
      Dart a = eng.a0_orient[d] ? d : rev(d);
      auto m = eng.full_map(a);
      if (m.early || m.order != c)
        return witness_at(e, MixedClause::III, "boundary walk stops before its depth");
      if (!eng.levels[c].a_edge[edge_of(m.d)])
        return witness_at(e, MixedClause::III, "boundary walk leaves the relative set");
      continue;
    }
    auto md = eng.full_map(d);
    auto mr = eng.full_map(rev(d));
    if (md.early || md.order != c || mr.early || mr.order != c)
      return witness_at(e, MixedClause::II, "a walk stops before reaching its depth");
    if (mr.d != rev(md.d))
      return witness_at(e, MixedClause::I, "the two mixed walks end at different points");
    if (eng.top_level_of_edge[edge_of(md.d)] != c)
      return witness_at(e, MixedClause::II, "the endpoint sits at a different depth");
  }
  return MixedVerdict{};
}

}  // namespace

MixedVerdict check_mixed_tat(const FilteredGraph& fg, const DeltaMap& delta) {
  validate_filtration(fg);
  MixedEngine eng(fg, delta);
  return engine_check(fg, eng);
}

namespace {

Rational delta_value(const FilteredGraph& fg, const DeltaMap& delta, int level, int member_edge) {
  // Value of the component of `member_edge` at the given level, resolved on
  // the original graph.
  std::vector<char> edges =
      level == 0 ? all_edges(fg.graph.edge_count()) : fg.level_edges[level - 1];
  InducedRibbon ind = induce(fg.graph, edges);
  int comp = ind.component_of_edge[member_edge];
  if (comp < 0) throw std::invalid_argument("point is outside the level");
  for (const auto& [e, v] : delta.entries[level])
    if (ind.component_of_edge[e] == comp) return v;
  throw std::invalid_argument("delta misses a component");
}

MixedWalkTrace run_stages(const FilteredGraph& fg, const DeltaMap& delta,
                          const PointOnGraph& start, Dart direction) {
  if (start.at_vertex)
    throw std::invalid_argument("mixed walks start at interior points");

  MixedWalkTrace out;
  out.start = start;

  int c = 0;
  for (int i = 1; i <= fg.depth(); ++i)
    if (fg.level_edges[i - 1][edge_of(start.dart)]) c = i;

  PointOnGraph cur = start;
  Dart dir = direction;
  for (int i = 0; i <= c; ++i) {
    std::vector<char> edges =
        i == 0 ? all_edges(fg.graph.edge_count()) : fg.level_edges[i - 1];
    if (i > 0) {
      if (cur.at_vertex)
        throw VertexLanding("stage " + std::to_string(i - 1) +
                            " ends on a vertex; the next direction is undefined");
      if (!edges[edge_of(cur.dart)]) break;  // endpoint left the next level
    }
    Rational value = delta_value(fg, delta, i, edge_of(i == 0 ? start.dart : cur.dart));

    // Walk inside the induced level graph, same dart, same offset.
    InducedSubgraph sub = induced_subgraph_ribbon(fg.graph, edges);
    MetricAssignment metric;
    metric.length.assign(sub.graph.edge_count() + 1, Rational(0));
    for (int e = 1; e <= sub.graph.edge_count(); ++e)
      metric.length[e] = fg.metric.edge_length(sub.old_edge_of[e]);
    auto to_sub = [&](Dart d) {
      int ne = sub.new_edge_of[edge_of(d)];
      return is_orient(d) ? orient_dart(ne) : rev(orient_dart(ne));
    };
    Dart sd = to_sub(dir);
    Rational off = (dir == cur.dart) ? cur.offset
                                     : fg.metric.edge_length(edge_of(cur.dart)) - cur.offset;
    PointOnGraph sp = PointOnGraph::interior(sub.graph, metric, sd, off);
    WalkTrace w = safe_walk(sub.graph, metric, sp, WalkSign::Positive, value, sd);

    // Map the endpoint back to the ambient graph.
    PointOnGraph back;
    Dart back_dir;
    if (w.endpoint.at_vertex) {
      back = PointOnGraph::at(0);  // refined below
      // Identify the ambient vertex through the resume dart's tail.
      Dart rd = w.resume_dart;
      int old_edge = sub.old_edge_of[edge_of(rd)];
      Dart od = is_orient(rd) ? orient_dart(old_edge) : rev(orient_dart(old_edge));
      back = PointOnGraph::at(fg.graph.tail(od));
      back_dir = od;
    } else {
      int old_edge = sub.old_edge_of[edge_of(w.endpoint.dart)];
      Dart od = is_orient(w.endpoint.dart) ? orient_dart(old_edge)
                                           : rev(orient_dart(old_edge));
      back = PointOnGraph::interior(fg.graph, fg.metric, od, w.endpoint.offset);
      Dart rd = w.resume_dart;
      int re = sub.old_edge_of[edge_of(rd)];
      back_dir = is_orient(rd) ? orient_dart(re) : rev(orient_dart(re));
    }

    MixedWalkStage stage;
    stage.level = i;
    stage.delta = value;
    stage.walk = w;
    out.stages.push_back(stage);
    out.order = i;
    out.total_length += value;
    cur = back;
    dir = back_dir;
  }

  out.endpoint = cur;
  out.endpoint_level = 0;
  if (!cur.at_vertex)
    for (int i = 1; i <= fg.depth(); ++i)
      if (fg.level_edges[i - 1][edge_of(cur.dart)]) out.endpoint_level = i;
  return out;
}

}  // namespace

MixedWalkTrace mixed_safe_walk(const FilteredGraph& fg, const DeltaMap& delta,
                               const PointOnGraph& start, Dart direction) {
  validate_filtration(fg);
  return run_stages(fg, delta, start, direction);
}

MixedWalkTrace boundary_mixed_safe_walk(const FilteredGraph& fg, const DeltaMap& delta,
                                        const PointOnGraph& start) {
  validate_filtration(fg);
  std::vector<char> orient = fg.rel.orientation_dart(fg.graph.dart_count());
  if (start.at_vertex) throw std::invalid_argument("mixed walks start at interior points");
  Dart dir;
  if (orient[start.dart])
    dir = start.dart;
  else if (orient[rev(start.dart)])
    dir = rev(start.dart);
  else
    throw std::invalid_argument("NotOnA: start point is not on the relative set");
  return run_stages(fg, delta, start, dir);
}

LevelPermutation level_permutation(const FilteredGraph& fg, const DeltaMap& delta, int level) {
  if (level < 1 || level > fg.depth())
    throw std::invalid_argument("level_permutation: level out of range");
  validate_filtration(fg);
  MixedEngine eng(fg, delta);
  auto verdict = engine_check(fg, eng);
  if (!verdict.holds)
    throw PropertyDoesNotHold("level_permutation: the mixed property fails (clause " +
                              verdict.detail + ")");

  const LevelData& ld = eng.levels[level];
  LevelPermutation out;
  out.level = level;
  out.cycles = ld.ind.face_cycles;
  out.cycle_length.assign(out.cycles.size(), Rational(0));
  for (std::size_t f = 0; f < out.cycles.size(); ++f)
    out.cycle_length[f] = Rational(static_cast<std::int64_t>(out.cycles[f].size())) * eng.sub.unit;

  out.perm.assign(out.cycles.size(), -1);
  for (std::size_t f = 0; f < out.cycles.size(); ++f) {
    for (Dart d : out.cycles[f]) {
      Dart cur = d;
      for (int j = 0; j < level; ++j) cur = eng.stage_map(j, cur);
      int img = ld.ind.face_of[cur];
      if (out.perm[f] == -1)
        out.perm[f] = img;
      else if (out.perm[f] != img)
        throw std::logic_error("level permutation is not well defined on cycles");
    }
  }

  std::vector<char> seen(out.cycles.size(), 0);
  for (std::size_t f = 0; f < out.cycles.size(); ++f) {
    if (seen[f]) continue;
    std::vector<int> orbit;
    int x = static_cast<int>(f);
    do {
      seen[x] = 1;
      orbit.push_back(x);
      x = out.perm[x];
    } while (x != static_cast<int>(f));
    out.orbits.push_back(std::move(orbit));
  }
  return out;
}

std::vector<ScrewEntry> screw_numbers(const FilteredGraph& fg, const DeltaMap& delta) {
  std::vector<ScrewEntry> out;
  for (int level = 1; level <= fg.depth(); ++level) {
    LevelPermutation lp = level_permutation(fg, delta, level);
    MixedEngine eng(fg, delta);
    const LevelData& ld = eng.levels[level];
    for (std::size_t o = 0; o < lp.orbits.size(); ++o) {
      const auto& orbit = lp.orbits[o];
      Rational len = lp.cycle_length[orbit[0]];
      Rational sum;
      for (int f : orbit) {
        if (lp.cycle_length[f] != len)
          throw std::logic_error("cycles in one orbit have different lengths");
        int comp = ld.ind.component_of_edge[edge_of(lp.cycles[f][0])];
        sum += ld.delta_of_comp[comp];
      }
      ScrewEntry entry;
      entry.level = level;
      entry.orbit = static_cast<int>(o);
      entry.alpha = static_cast<int>(orbit.size());
      entry.cycle_length = len;
      entry.value = -sum / len;
      out.push_back(entry);
    }
  }
  return out;
}

DualGraph dual_graph(const FilteredGraph& fg, const DeltaMap& delta) {
  validate_filtration(fg);
  {
    MixedEngine eng(fg, delta);
    auto verdict = engine_check(fg, eng);
    if (!verdict.holds) throw PropertyDoesNotHold("dual_graph: the mixed property fails");
  }

  DualGraph out;
  // Components per level on the original graph.
  std::vector<InducedRibbon> inds;
  inds.push_back(induce(fg.graph, all_edges(fg.graph.edge_count())));
  for (int i = 1; i <= fg.depth(); ++i) inds.push_back(induce(fg.graph, fg.level_edges[i - 1]));

  std::vector<std::vector<int>> node_of(fg.depth() + 1);
  for (int i = 0; i <= fg.depth(); ++i) {
    node_of[i].assign(inds[i].component_count, -1);
    for (int c = 0; c < inds[i].component_count; ++c) {
      node_of[i][c] = static_cast<int>(out.nodes.size());
      out.nodes.push_back({i, c, false});
    }
  }

  // Degenerate pieces: a level-i component whose edge set equals a component
  // one level deeper.
  for (int i = 0; i < fg.depth(); ++i) {
    for (int c = 0; c < inds[i].component_count; ++c) {
      std::vector<int> mine;
      for (int e = 1; e <= fg.graph.edge_count(); ++e)
        if (inds[i].component_of_edge[e] == c) mine.push_back(e);
      // Does some deeper component own the same edges?
      std::map<int, int> counts;
      bool all_inside = true;
      for (int e : mine) {
        int cc = inds[i + 1].component_of_edge[e];
        if (cc < 0) {
          all_inside = false;
          break;
        }
        counts[cc]++;
      }
      if (!all_inside || counts.size() != 1) continue;
      int deeper = counts.begin()->first;
      int deeper_size = 0;
      for (int e = 1; e <= fg.graph.edge_count(); ++e)
        if (inds[i + 1].component_of_edge[e] == deeper) deeper_size++;
      if (deeper_size == static_cast<int>(mine.size()))
        out.nodes[node_of[i][c]].degenerate = true;
    }
  }

  for (int i = 1; i <= fg.depth(); ++i) {
    for (const auto& cyc : inds[i].face_cycles) {
      int e = edge_of(cyc[0]);
      int here = inds[i].component_of_edge[e];
      int above = inds[i - 1].component_of_edge[e];
      out.edges.push_back({node_of[i][here], node_of[i - 1][above]});
    }
  }

  // Tree test: connected with |E| = |V| - 1.
  std::vector<std::vector<int>> adj(out.nodes.size());
  for (auto [a, b] : out.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> vis(out.nodes.size(), 0);
  std::vector<int> stack = {0};
  vis[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!vis[w]) {
        vis[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  out.is_tree = (count == static_cast<int>(out.nodes.size())) &&
                (out.edges.size() + 1 == out.nodes.size());
  return out;
}

// ---------------------------------------------------------------------------
// Level attachment

namespace {

struct NewGraphBuilder {
  std::vector<Rational> edge_len;              // new edge i+1
  std::vector<std::vector<Dart>> rotations;    // new vertex i+1

  int add_edge(const Rational& l) {
    edge_len.push_back(l);
    return static_cast<int>(edge_len.size());
  }
  int add_vertex() {
    rotations.emplace_back();
    return static_cast<int>(rotations.size());
  }
};

// Landing spot of a connector on the child: the pass dart and the offset from
// that dart's tail.
struct Landing {
  Dart pass = 0;
  Rational pass_offset;
  int connector_edge = 0;  // the second connector half, oriented toward the child
};

}  // namespace

AttachResult attach_level(const FilteredGraph& base, const DeltaMap& base_delta,
                          const std::vector<Attachment>& attachments) {
  validate_filtration(base);
  MixedEngine eng(base, base_delta);
  {
    auto verdict = engine_check(base, eng);
    if (!verdict.holds)
      throw PropertyDoesNotHold("attach_level: the base fails the mixed property");
  }
  if (attachments.empty()) throw std::invalid_argument("attach_level: nothing to attach");

  int E = base.graph.edge_count();
  int depth = base.depth();

  // Cycle ids per original edge.
  std::vector<int> cycle_of_edge(E + 1, -1);
  for (std::size_t k = 0; k < base.rel.cycles.size(); ++k)
    for (Dart d : base.rel.cycles[k]) cycle_of_edge[edge_of(d)] = static_cast<int>(k);

  // Boundary action on the relative circles, with coordinate shifts.
  RelativeStructure fine_rel = eng.sub.transport(base.rel);
  std::vector<int> fine_cycle_of_edge(eng.sub.refined.edge_count() + 1, -1);
  std::vector<int> fine_pos_in_cycle(eng.sub.refined.dart_count() + 1, -1);
  for (std::size_t k = 0; k < fine_rel.cycles.size(); ++k)
    for (std::size_t t = 0; t < fine_rel.cycles[k].size(); ++t) {
      fine_cycle_of_edge[edge_of(fine_rel.cycles[k][t])] = static_cast<int>(k);
      fine_pos_in_cycle[fine_rel.cycles[k][t]] = static_cast<int>(t);
    }
  std::vector<int> cycle_image(base.rel.cycles.size(), -1);
  std::vector<Rational> cycle_shift(base.rel.cycles.size());
  for (std::size_t k = 0; k < base.rel.cycles.size(); ++k) {
    Dart d0 = fine_rel.cycles[k][0];
    auto m = eng.full_map(d0);
    int k2 = fine_cycle_of_edge[edge_of(m.d)];
    if (k2 < 0 || fine_pos_in_cycle[m.d] < 0)
      throw std::logic_error("attach_level: boundary image is not an oriented circle dart");
    cycle_image[k] = k2;
    cycle_shift[k] = Rational(fine_pos_in_cycle[m.d]) * eng.sub.unit;
    // The action must shift the whole circle rigidly.
    for (std::size_t t = 0; t < fine_rel.cycles[k].size(); ++t) {
      auto mt = eng.full_map(fine_rel.cycles[k][t]);
      std::size_t expect = (fine_pos_in_cycle[m.d] + t) % fine_rel.cycles[k2].size();
      if (mt.d != fine_rel.cycles[k2][expect])
        throw std::logic_error("attach_level: boundary action is not a rigid rotation");
    }
  }

  // Orbits requested by the attachments.
  std::vector<char> circle_attached(base.rel.cycles.size(), 0);
  struct OrbitPlan {
    std::vector<int> circles;           // k_0, k_1, ... in action order
    std::vector<Rational> shift;        // child coordinate shift per copy
    Rational circle_length;
    std::vector<std::vector<Dart>> face;  // child attach-face cycle (per copy identical)
    Rational delta_value;
  };
  std::vector<OrbitPlan> plans(attachments.size());

  // Global grid unit: base lengths, child lengths, walk lengths and the new
  // stage lengths all live on it.
  std::vector<Rational> grid_extra;
  for (const auto& lvl : base_delta.entries)
    for (const auto& [e, v] : lvl)
      if (v.is_positive()) grid_extra.push_back(v);

  for (std::size_t a = 0; a < attachments.size(); ++a) {
    const Attachment& att = attachments[a];
    if (!att.screw.is_negative())
      throw std::invalid_argument("attach_level: screw numbers must be negative");
    auto child_report = validate(att.child_graph, &att.child_rel, &att.child_metric);
    if (!child_report.ok)
      throw std::invalid_argument("attach_level: child invalid: " + child_report.message);
    auto child_verdict = check_tat(att.child_graph, att.child_metric, att.child_rel);
    if (!child_verdict.holds)
      throw std::invalid_argument("attach_level: child is not a relative tat graph");

    auto inv = surface_invariants(att.child_graph, &att.child_rel);
    int attach_face = -1;
    for (std::size_t f = 0; f < inv.face_cycles.size(); ++f) {
      if (!inv.face_is_relative[f]) {
        if (attach_face >= 0)
          throw std::invalid_argument("attach_level: child must expose exactly one cylinder face");
        attach_face = static_cast<int>(f);
      }
    }
    if (attach_face < 0)
      throw std::invalid_argument("attach_level: child has no cylinder face");

    OrbitPlan& plan = plans[a];
    int k = att.base_cycle;
    if (k < 0 || k >= static_cast<int>(base.rel.cycles.size()))
      throw std::invalid_argument("attach_level: unknown base cycle");
    do {
      if (circle_attached[k])
        throw std::invalid_argument("SpecOrbitMismatch: circle claimed twice");
      circle_attached[k] = 1;
      plan.circles.push_back(k);
      k = cycle_image[k];
    } while (k != att.base_cycle);

    Rational len;
    for (Dart d : base.rel.cycles[att.base_cycle]) len += base.metric.edge_length(edge_of(d));
    for (int kk : plan.circles) {
      Rational l2;
      for (Dart d : base.rel.cycles[kk]) l2 += base.metric.edge_length(edge_of(d));
      if (l2 != len) throw std::logic_error("attach_level: orbit circles are not isometric");
    }
    plan.circle_length = len;

    Rational face_len;
    for (Dart d : inv.face_cycles[attach_face])
      face_len += att.child_metric.edge_length(edge_of(d));
    if (face_len != len)
      throw std::invalid_argument("LengthMismatch: child cylinder face " + face_len.str() +
                                  " vs base circle " + len.str());
    plan.face.assign(plan.circles.size(), inv.face_cycles[attach_face]);

    int alpha = static_cast<int>(plan.circles.size());
    plan.delta_value = -att.screw / Rational(alpha) * len;
    grid_extra.push_back(plan.delta_value);
    for (int e = 1; e <= att.child_graph.edge_count(); ++e)
      grid_extra.push_back(att.child_metric.edge_length(e));

    // Every level must contain the attached circles as relative circles.
    for (int kk : plan.circles) {
      std::vector<int> edges;
      for (Dart d : base.rel.cycles[kk]) edges.push_back(edge_of(d));
      for (int i = 0; i < depth; ++i) {
        bool found = false;
        for (const auto& cyc : base.level_rel[i].cycles) {
          std::vector<int> es;
          for (Dart d : cyc) es.push_back(edge_of(d));
          std::sort(es.begin(), es.end());
          std::vector<int> mine = edges;
          std::sort(mine.begin(), mine.end());
          if (es == mine) found = true;
        }
        if (!found)
          throw std::invalid_argument(
              "attach_level: attached circles must be relative at every level");
      }
    }
  }

  Rational grid = common_unit(base.metric, grid_extra);
  Rational epsilon = grid / Rational(4);

  // Alignment shifts: copy 0 attaches at half a grid step; later copies are
  // transported by the boundary action.
  for (auto& plan : plans) {
    plan.shift.assign(plan.circles.size(), Rational(0));
    plan.shift[0] = grid / Rational(2);
    for (std::size_t j = 0; j + 1 < plan.circles.size(); ++j)
      plan.shift[j + 1] = plan.shift[j] - cycle_shift[plan.circles[j]];
  }

  // ------------------------------------------------------------------
  // Build the new graph.
  NewGraphBuilder nb;

  std::vector<char> edge_dropped(E + 1, 0);
  std::vector<char> vertex_dropped(base.graph.vertex_count() + 1, 0);
  for (const auto& plan : plans)
    for (int k : plan.circles)
      for (Dart d : base.rel.cycles[k]) {
        edge_dropped[edge_of(d)] = 1;
        vertex_dropped[base.graph.tail(d)] = 1;
      }

  // Circle vertices must carry at most one outside edge.
  std::vector<Dart> spine_dart_of_vertex(base.graph.vertex_count() + 1, 0);
  for (int v = 1; v <= base.graph.vertex_count(); ++v) {
    if (!vertex_dropped[v]) continue;
    int outside = 0;
    for (Dart d : base.graph.rotation(v))
      if (!edge_dropped[edge_of(d)]) {
        outside++;
        spine_dart_of_vertex[v] = d;
      }
    if (outside > 1)
      throw std::invalid_argument(
          "attach_level: circle vertices may carry at most one outside edge");
  }

  // Surviving base edges.
  std::vector<int> new_edge_of(E + 1, 0);
  for (int e = 1; e <= E; ++e) {
    if (edge_dropped[e]) continue;
    Rational len = base.metric.edge_length(e);
    if (vertex_dropped[base.graph.tail(orient_dart(e))]) len -= epsilon;
    if (vertex_dropped[base.graph.tail(rev(orient_dart(e)))]) len -= epsilon;
    new_edge_of[e] = nb.add_edge(len);
  }
  auto map_dart = [&](Dart d) {
    int ne = new_edge_of[edge_of(d)];
    return is_orient(d) ? orient_dart(ne) : rev(orient_dart(ne));
  };

  // Surviving base vertices.
  std::vector<int> new_vertex_of(base.graph.vertex_count() + 1, 0);
  for (int v = 1; v <= base.graph.vertex_count(); ++v) {
    if (vertex_dropped[v]) continue;
    int nv = nb.add_vertex();
    new_vertex_of[v] = nv;
    std::vector<Dart> rot;
    for (Dart d : base.graph.rotation(v)) rot.push_back(map_dart(d));
    nb.rotations[nv - 1] = rot;
  }

  // Connectors: per dropped circle vertex with a spine edge.
  // connector_info[v] = second-half edge id (oriented mid -> child).
  std::vector<int> connector_toward_child(base.graph.vertex_count() + 1, 0);
  for (int v = 1; v <= base.graph.vertex_count(); ++v) {
    if (!vertex_dropped[v] || spine_dart_of_vertex[v] == 0) continue;
    Dart dx = spine_dart_of_vertex[v];  // dart at v along the spine edge
    int c1 = nb.add_edge(epsilon / Rational(2));
    int c2 = nb.add_edge(epsilon / Rational(2));
    int tip = nb.add_vertex();
    int mid = nb.add_vertex();
    nb.rotations[tip - 1] = {map_dart(dx), orient_dart(c1)};
    nb.rotations[mid - 1] = {rev(orient_dart(c1)), orient_dart(c2)};
    connector_toward_child[v] = c2;
  }

  // Child copies.
  AttachResult result;
  result.child_cycles.resize(attachments.size());
  struct ChildCycleDarts {
    int attachment, copy, slot;
    std::vector<Dart> darts;
  };
  std::vector<ChildCycleDarts> child_cycle_darts;
  struct CopyInfo {
    int attachment, copy;
    int edge_begin, edge_end;  // new edge id range of the child pieces
    int member_edge;           // one piece edge naming the copy's component
    Rational delta_value;
  };
  std::vector<CopyInfo> copies;
  std::vector<std::pair<int, int>> connector_stub;  // (first connector edge, base stub edge)
  for (int v = 1; v <= base.graph.vertex_count(); ++v)
    if (connector_toward_child[v])
      connector_stub.push_back(
          {connector_toward_child[v] - 1, edge_of(spine_dart_of_vertex[v])});

  for (std::size_t a = 0; a < attachments.size(); ++a) {
    const Attachment& att = attachments[a];
    OrbitPlan& plan = plans[a];
    result.child_cycles[a].resize(plan.circles.size());

    for (std::size_t j = 0; j < plan.circles.size(); ++j) {
      int k = plan.circles[j];
      const std::vector<Dart>& face = plan.face[j];

      // Face coordinates: start positions of each pass.
      std::vector<Rational> pass_start(face.size());
      {
        Rational acc;
        for (std::size_t t = 0; t < face.size(); ++t) {
          pass_start[t] = acc;
          acc += att.child_metric.edge_length(edge_of(face[t]));
        }
      }

      // Landings of the connectors of circle k.
      // For each circle vertex with a spine edge, its circle coordinate.
      std::vector<std::pair<Rational, int>> landings;  // (child coord, connector edge)
      {
        Rational acc;
        for (Dart d : base.rel.cycles[k]) {
          int v = base.graph.tail(d);
          if (connector_toward_child[v]) {
            Rational y = acc + plan.shift[j];
            // normalize into [0, len)
            while (y.is_negative()) y += plan.circle_length;
            while (!(y < plan.circle_length)) y -= plan.circle_length;
            landings.push_back({y, connector_toward_child[v]});
          }
          acc += base.metric.edge_length(edge_of(d));
        }
      }

      // Resolve landings to (child edge, offset, pass dart).
      std::map<int, std::vector<Landing>> landings_per_edge;
      for (const auto& [y, c2] : landings) {
        std::size_t t = 0;
        while (t + 1 < face.size() && !(y < pass_start[t + 1])) ++t;
        Dart pass = face[t];
        Rational within = y - pass_start[t];
        Landing l;
        l.pass = pass;
        l.pass_offset = within;
        l.connector_edge = c2;
        landings_per_edge[edge_of(pass)].push_back(l);
      }

      // Instantiate the child copy: edges split at landing points.
      int CE = att.child_graph.edge_count();
      int copy_edge_begin = static_cast<int>(nb.edge_len.size()) + 1;
      // For each child edge: sorted split offsets (measured along the
      // orientation dart) with their connectors per side.
      struct Split {
        Rational offset;
        int conn_forward = 0;   // landing whose pass runs along the orientation dart
        int conn_backward = 0;  // landing along the reversed dart
      };
      std::vector<std::vector<Split>> splits(CE + 1);
      for (auto& [ce, ls] : landings_per_edge) {
        for (const Landing& l : ls) {
          Rational off = is_orient(l.pass)
                             ? l.pass_offset
                             : att.child_metric.edge_length(ce) - l.pass_offset;
          bool forward = is_orient(l.pass);
          bool merged = false;
          for (Split& s : splits[ce])
            if (s.offset == off) {
              (forward ? s.conn_forward : s.conn_backward) = l.connector_edge;
              merged = true;
            }
          if (!merged) {
            Split s;
            s.offset = off;
            (forward ? s.conn_forward : s.conn_backward) = l.connector_edge;
            splits[ce].push_back(s);
          }
        }
        std::sort(splits[ce].begin(), splits[ce].end(),
                  [](const Split& x, const Split& y) { return x.offset < y.offset; });
      }

      // Piece edges per child edge.
      std::vector<std::vector<int>> pieces(CE + 1);
      for (int ce = 1; ce <= CE; ++ce) {
        Rational len = att.child_metric.edge_length(ce);
        Rational prev;
        for (const Split& s : splits[ce]) {
          if (!s.offset.is_positive() || !(s.offset < len))
            throw std::logic_error("attach_level: a connector lands on a child vertex");
          pieces[ce].push_back(nb.add_edge(s.offset - prev));
          prev = s.offset;
        }
        pieces[ce].push_back(nb.add_edge(len - prev));
      }
      auto child_first_dart = [&](Dart d) {
        int ce = edge_of(d);
        if (is_orient(d)) return orient_dart(pieces[ce].front());
        return rev(orient_dart(pieces[ce].back()));
      };

      // Child vertices.
      for (int v = 1; v <= att.child_graph.vertex_count(); ++v) {
        int nv = nb.add_vertex();
        std::vector<Dart> rot;
        for (Dart d : att.child_graph.rotation(v)) rot.push_back(child_first_dart(d));
        nb.rotations[nv - 1] = rot;
      }
      // Split vertices with their connectors.
      for (int ce = 1; ce <= CE; ++ce) {
        for (std::size_t si = 0; si < splits[ce].size(); ++si) {
          int nv = nb.add_vertex();
          Dart backward = rev(orient_dart(pieces[ce][si]));      // toward the tail
          Dart forward = orient_dart(pieces[ce][si + 1]);        // toward the head
          std::vector<Dart> rot;
          // Pattern (a, c, b): a against the pass, then the connector, then
          // along the pass, interleaving both passes when they share a point.
          rot.push_back(backward);
          if (splits[ce][si].conn_forward)
            rot.push_back(rev(orient_dart(splits[ce][si].conn_forward)));
          rot.push_back(forward);
          if (splits[ce][si].conn_backward)
            rot.push_back(rev(orient_dart(splits[ce][si].conn_backward)));
          nb.rotations[nv - 1] = rot;
        }
      }

      // Child relative cycles, remapped onto the pieces.
      for (const auto& cyc : att.child_rel.cycles) {
        std::vector<Dart> fine;
        for (Dart d : cyc) {
          int ce = edge_of(d);
          if (is_orient(d)) {
            for (int pe : pieces[ce]) fine.push_back(orient_dart(pe));
          } else {
            for (auto it = pieces[ce].rbegin(); it != pieces[ce].rend(); ++it)
              fine.push_back(rev(orient_dart(*it)));
          }
        }
        result.child_cycles[a][j].push_back(-1);
        child_cycle_darts.push_back({static_cast<int>(a), static_cast<int>(j),
                                     static_cast<int>(result.child_cycles[a][j].size()) - 1,
                                     std::move(fine)});
      }

      CopyInfo info;
      info.attachment = static_cast<int>(a);
      info.copy = static_cast<int>(j);
      info.edge_begin = copy_edge_begin;
      info.edge_end = static_cast<int>(nb.edge_len.size()) + 1;
      info.member_edge = pieces[1].front();
      info.delta_value = plan.delta_value;
      copies.push_back(info);
    }
  }

  // ------------------------------------------------------------------
  // Assemble the filtered graph.
  FilteredGraph out;
  out.graph = RibbonGraph::from_rotations(nb.rotations);
  out.metric.length.assign(nb.edge_len.size() + 1, Rational(0));
  for (std::size_t e = 0; e < nb.edge_len.size(); ++e) out.metric.length[e + 1] = nb.edge_len[e];
  int newE = out.graph.edge_count();

  // Relative structure at level 0: surviving circles plus the child circles.
  for (std::size_t k = 0; k < base.rel.cycles.size(); ++k) {
    if (circle_attached[k]) continue;
    std::vector<Dart> cyc;
    for (Dart d : base.rel.cycles[k]) cyc.push_back(map_dart(d));
    out.rel.cycles.push_back(std::move(cyc));
  }
  for (auto& ccd : child_cycle_darts) {
    result.child_cycles[ccd.attachment][ccd.copy][ccd.slot] =
        static_cast<int>(out.rel.cycles.size());
    out.rel.cycles.push_back(ccd.darts);
  }

  // Levels 1..depth keep their base edges, inherit connectors from their stub
  // edges and absorb every child copy; the new deepest level is the children.
  for (int i = 1; i <= depth + 1; ++i) {
    std::vector<char> lvl(newE + 1, 0);
    if (i <= depth) {
      for (int e = 1; e <= E; ++e)
        if (!edge_dropped[e] && base.level_edges[i - 1][e]) lvl[new_edge_of[e]] = 1;
      for (auto [c1, stub] : connector_stub)
        if (base.level_edges[i - 1][stub]) {
          lvl[c1] = 1;
          lvl[c1 + 1] = 1;
        }
    }
    for (const CopyInfo& c : copies)
      for (int e = c.edge_begin; e < c.edge_end; ++e) lvl[e] = 1;
    out.level_edges.push_back(std::move(lvl));

    RelativeStructure lr;
    if (i <= depth) {
      for (const auto& cyc : base.level_rel[i - 1].cycles) {
        if (edge_dropped[edge_of(cyc[0])]) continue;  // an attached circle
        std::vector<Dart> mapped;
        for (Dart d : cyc) mapped.push_back(map_dart(d));
        lr.cycles.push_back(std::move(mapped));
      }
    }
    for (const auto& ccd : child_cycle_darts) lr.cycles.push_back(ccd.darts);
    out.level_rel.push_back(std::move(lr));
  }

  // Walk lengths: transported entries for the old levels, the screw-derived
  // value for the new one.
  DeltaMap delta_out;
  delta_out.entries.resize(depth + 2);
  for (int i = 0; i <= depth; ++i) {
    std::vector<char> old_level =
        i == 0 ? all_edges(E) : base.level_edges[i - 1];
    InducedRibbon ind = induce(base.graph, old_level);
    for (const auto& [e, v] : base_delta.entries[i]) {
      int member = 0;
      if (!edge_dropped[e]) {
        member = new_edge_of[e];
      } else {
        int comp = ind.component_of_edge[e];
        for (int f = 1; f <= E && member == 0; ++f)
          if (!edge_dropped[f] && ind.component_of_edge[f] == comp) member = new_edge_of[f];
        if (member == 0) {
          // A bare-circle component: its walk continues through the child.
          int k = cycle_of_edge[e];
          for (std::size_t a = 0; a < plans.size() && member == 0; ++a)
            for (std::size_t j = 0; j < plans[a].circles.size() && member == 0; ++j)
              if (plans[a].circles[j] == k)
                for (const CopyInfo& c : copies)
                  if (c.attachment == static_cast<int>(a) && c.copy == static_cast<int>(j))
                    member = c.member_edge;
        }
      }
      if (member == 0) throw std::logic_error("attach_level: lost a delta component");
      delta_out.entries[i].push_back({member, v});
    }
  }
  for (const CopyInfo& c : copies)
    delta_out.entries[depth + 1].push_back({c.member_edge, c.delta_value});

  auto verdict = check_mixed_tat(out, delta_out);
  if (!verdict.holds)
    throw std::runtime_error("PostCheckFailed: attached graph fails the mixed property (" +
                             verdict.detail + ")");
  result.fg = std::move(out);
  result.delta = std::move(delta_out);
  return result;
}

// ---------------------------------------------------------------------------
// Recursive realization

namespace {

// Blow radii for every cap of a piece: caps that carry a child orbit must
// open into circles matching the child's cylinder face; bare caps open by a
// quarter of the smallest incident length.
RelativeRealized build_piece(const MixedSpecNode& node, const RealizedPeriodic& rp) {
  std::vector<Rational> eps(rp.cap_orbits.size());
  std::vector<char> has_child(rp.cap_orbits.size(), 0);
  for (const auto& child : node.children) {
    if (child.cap_index < 0 || child.cap_index >= static_cast<int>(rp.cap_orbits.size()))
      throw std::invalid_argument("realize_mixed: child references a missing cap");
    if (has_child[child.cap_index])
      throw std::invalid_argument("realize_mixed: two children on one cap");
    has_child[child.cap_index] = 1;
    if (!child.node || child.node->piece.boundaries.size() != 1 ||
        child.node->piece.boundaries[0].sign != 1)
      throw std::invalid_argument(
          "realize_mixed: a child piece needs exactly one positive boundary target");
    Rational attach_rot = child.node->piece.boundaries[0].rot;
    int cap_vertex = rp.cap_orbits[child.cap_index][0];
    int valency = rp.graph.valency(cap_vertex);
    // Circle length 2 * valency * eps must equal the child face length 1/R.
    eps[child.cap_index] = Rational(1) / (attach_rot * Rational(2 * valency));
  }
  for (std::size_t c = 0; c < rp.cap_orbits.size(); ++c) {
    if (has_child[c]) continue;
    Rational min_len;
    int cap_vertex = rp.cap_orbits[c][0];
    for (Dart d : rp.graph.rotation(cap_vertex)) {
      Rational l = rp.metric.edge_length(edge_of(d));
      if (min_len.is_zero() || l < min_len) min_len = l;
    }
    eps[c] = min_len / Rational(4);
  }
  return relative_from_capped(rp, {}, eps);
}

}  // namespace

MixedRealized realize_mixed(const MixedSpecNode& root) {
  for (const auto& b : root.piece.boundaries)
    if (b.sign != 1)
      throw std::invalid_argument("realize_mixed: the root piece needs positive coefficients");

  RealizedPeriodic rp = realize_periodic(root.piece);
  RelativeRealized rr = build_piece(root, rp);

  MixedRealized out;
  out.fg.graph = rr.graph;
  out.fg.metric = rr.metric;
  out.fg.rel = rr.rel;
  out.delta.entries = {{{1, Rational(1)}}};

  struct Pending {
    std::vector<int> cycles;  // current ids of the attach circles
    const MixedSpecNode* node;
    Rational screw;
  };
  std::vector<Pending> frontier;
  for (const auto& child : root.children)
    frontier.push_back({rr.cycles_of_cap[child.cap_index], child.node, child.screw});

  while (!frontier.empty()) {
    std::vector<Attachment> atts;
    std::vector<RelativeRealized> built;
    for (const auto& p : frontier) {
      RealizedPeriodic crp = realize_periodic(p.node->piece);
      RelativeRealized crr = build_piece(*p.node, crp);
      Attachment att;
      att.base_cycle = p.cycles[0];
      att.child_graph = crr.graph;
      att.child_metric = crr.metric;
      att.child_rel = crr.rel;
      att.screw = p.screw;
      atts.push_back(std::move(att));
      built.push_back(std::move(crr));
    }

    AttachResult res = attach_level(out.fg, out.delta, atts);

    // The attached orbits must be exactly the pending circle sets.
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      if (res.child_cycles[i].size() != frontier[i].cycles.size())
        throw std::runtime_error("SpecOrbitMismatch: cap orbit size disagrees with the action");
    }

    std::vector<Pending> next;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const MixedSpecNode* node = frontier[i].node;
      for (const auto& gc : node->children) {
        Pending p;
        p.node = gc.node;
        p.screw = gc.screw;
        for (std::size_t copy = 0; copy < res.child_cycles[i].size(); ++copy)
          for (int idx : built[i].cycles_of_cap[gc.cap_index])
            p.cycles.push_back(res.child_cycles[i][copy][idx]);
        next.push_back(std::move(p));
      }
    }
    out.fg = std::move(res.fg);
    out.delta = std::move(res.delta);
    frontier = std::move(next);
  }
  return out;
}

}  // namespace tatg
