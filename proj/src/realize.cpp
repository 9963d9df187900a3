#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tatg/construct.hpp"

namespace tatg {

namespace {

struct Builder {
  std::vector<std::vector<Dart>> rot;  // rot[i] belongs to vertex i+1
  std::vector<Rational> len;           // len[i] belongs to edge i+1

  int add_vertex() {
    rot.emplace_back();
    return static_cast<int>(rot.size());
  }
  int add_edge(const Rational& l) {
    if (!l.is_positive()) throw std::runtime_error("InfeasibleLengths: non-positive edge");
    len.push_back(l);
    return static_cast<int>(len.size());
  }
  RibbonGraph graph() const { return RibbonGraph::from_rotations(rot); }
  MetricAssignment metric() const {
    MetricAssignment m;
    m.length.assign(len.size() + 1, Rational(0));
    for (std::size_t i = 0; i < len.size(); ++i) m.length[i + 1] = len[i];
    return m;
  }
};

// Straight chain from `va` to `vb` with the given interior mark count; interior
// rotations are wired here, the end darts are returned for the caller.
struct Chain {
  Dart first = 0;
  Dart last = 0;                  // orientation darts along the chain
  std::vector<int> interior;      // mark vertices in order
};

Chain add_chain(Builder& b, int va, int vb, const Rational& total, int marks) {
  Chain c;
  int pieces = marks + 1;
  Rational piece = total / Rational(pieces);
  int prev = va;
  Dart prev_dart = 0;
  for (int i = 0; i < pieces; ++i) {
    int nxt = (i + 1 == pieces) ? vb : b.add_vertex();
    int e = b.add_edge(piece);
    Dart d = orient_dart(e);
    if (i == 0) c.first = d;
    if (i > 0) b.rot[prev - 1] = {rev(prev_dart), d};
    if (i + 1 < pieces) c.interior.push_back(nxt);
    prev = nxt;
    prev_dart = d;
    c.last = d;
  }
  return c;
}

struct MarkEntry {
  bool is_cap = false;
  int index = 0;    // position in branch_voltages / cap_voltages
  int voltage = 0;
};

std::vector<MarkEntry> collect_marks(const OrbitSpec& spec) {
  std::vector<MarkEntry> marks;
  for (std::size_t i = 0; i < spec.branch_voltages.size(); ++i)
    marks.push_back({false, static_cast<int>(i), spec.branch_voltages[i]});
  for (std::size_t i = 0; i < spec.cap_voltages.size(); ++i)
    marks.push_back({true, static_cast<int>(i), spec.cap_voltages[i]});
  return marks;
}

struct SpineAccum {
  Builder b;
  std::vector<std::pair<int, MarkEntry>> placed;  // vertex, mark

  void place(int vertex, const MarkEntry& m) { placed.push_back({vertex, m}); }
};

void finish(SpineAccum& acc, const OrbitSpec& spec, QuotientSpine& out,
            const std::vector<int>& univalent_ok_vertices) {
  out.graph = acc.b.graph();
  out.metric = acc.b.metric();
  out.vertex_voltage.assign(out.graph.vertex_count() + 1, 0);
  out.branch_vertices.assign(spec.branch_voltages.size(), 0);
  out.cap_vertices.assign(spec.cap_voltages.size(), 0);
  for (const auto& [v, m] : acc.placed) {
    out.vertex_voltage[v] = ((m.voltage % spec.order) + spec.order) % spec.order;
    if (m.is_cap)
      out.cap_vertices[m.index] = v;
    else
      out.branch_vertices[m.index] = v;
  }
  out.univalent_ok.assign(out.graph.vertex_count() + 1, 0);
  for (int v : univalent_ok_vertices) out.univalent_ok[v] = 1;
}

Rational face_budget(const OrbitSpec& spec, std::size_t i) {
  const BoundaryTarget& t = spec.boundaries[i];
  if (t.sign == 0) return Rational(1);
  return Rational(1) / (Rational(spec.order) * t.rot);
}

void match_faces_by_budget(const QuotientSpine& spine, const std::vector<Rational>& budgets,
                           QuotientSpine& out) {
  auto faces = spine.graph.faces();
  if (faces.size() != budgets.size())
    throw std::logic_error("quotient spine has the wrong number of faces");
  std::vector<Rational> face_len(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (Dart d : faces[f]) face_len[f] += spine.metric.edge_length(edge_of(d));
  out.face_of_boundary.assign(budgets.size(), -1);
  std::vector<char> used(faces.size(), 0);
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (!used[f] && face_len[f] == budgets[i]) {
        used[f] = 1;
        out.face_of_boundary[i] = static_cast<int>(f);
        break;
      }
    }
    if (out.face_of_boundary[i] < 0)
      throw std::logic_error("quotient face lengths do not match the requested budgets");
  }
}

// r = 1: a plain arc; both ends must carry marks.
QuotientSpine build_g0_r1(const OrbitSpec& spec) {
  auto marks = collect_marks(spec);
  if (marks.size() < 2)
    throw std::invalid_argument(
        "realize: one boundary on a genus-0 quotient needs at least two marked points");
  SpineAccum acc;
  int q1 = acc.b.add_vertex();
  int q2 = acc.b.add_vertex();
  Chain c = add_chain(acc.b, q1, q2, face_budget(spec, 0) / Rational(2),
                      static_cast<int>(marks.size()) - 2);
  acc.b.rot[q1 - 1] = {c.first};
  acc.b.rot[q2 - 1] = {rev(c.last)};
  acc.place(q1, marks[0]);
  acc.place(q2, marks[1]);
  for (std::size_t i = 2; i < marks.size(); ++i) acc.place(c.interior[i - 2], marks[i]);

  std::vector<int> uni_ok;
  if (marks[0].is_cap) uni_ok.push_back(q1);
  if (marks[1].is_cap) uni_ok.push_back(q2);

  QuotientSpine out;
  finish(acc, spec, out, uni_ok);
  match_faces_by_budget(out, {face_budget(spec, 0)}, out);
  return out;
}

// r = 2 with equal budgets: a bigon.
QuotientSpine build_g0_r2_equal(const OrbitSpec& spec) {
  auto marks = collect_marks(spec);
  SpineAccum acc;
  int q1 = acc.b.add_vertex();
  int q2 = acc.b.add_vertex();
  Rational half = face_budget(spec, 0) / Rational(2);
  int interior = std::max(0, static_cast<int>(marks.size()) - 2);
  Chain spinal = add_chain(acc.b, q1, q2, half, interior);
  int chord = acc.b.add_edge(half);
  acc.b.rot[q1 - 1] = {spinal.first, orient_dart(chord)};
  acc.b.rot[q2 - 1] = {rev(spinal.last), rev(orient_dart(chord))};
  if (!marks.empty()) acc.place(q1, marks[0]);
  if (marks.size() > 1) acc.place(q2, marks[1]);
  for (std::size_t i = 2; i < marks.size(); ++i) acc.place(spinal.interior[i - 2], marks[i]);

  QuotientSpine out;
  finish(acc, spec, out, {});
  match_faces_by_budget(out, {face_budget(spec, 0), face_budget(spec, 1)}, out);
  return out;
}

// r = 2 with distinct budgets: an arc ending in a circle around the boundary
// with the smaller budget.
QuotientSpine build_g0_r2_unequal(const OrbitSpec& spec) {
  auto marks = collect_marks(spec);
  if (marks.empty())
    throw std::invalid_argument(
        "realize: two unequal boundaries on a genus-0 quotient need a marked point");
  Rational b0 = face_budget(spec, 0), b1 = face_budget(spec, 1);
  int hi = b0 < b1 ? 0 : 1;  // circle boundary: the smaller budget
  Rational loop_budget = face_budget(spec, hi);
  Rational stick = (face_budget(spec, 1 - hi) - loop_budget) / Rational(2);

  SpineAccum acc;
  int q1 = acc.b.add_vertex();
  int junction = acc.b.add_vertex();
  int z = acc.b.add_vertex();
  Chain stick_chain =
      add_chain(acc.b, q1, junction, stick, static_cast<int>(marks.size()) - 1);
  int la = acc.b.add_edge(loop_budget / Rational(2));
  int lb = acc.b.add_edge(loop_budget / Rational(2));
  acc.b.rot[q1 - 1] = {stick_chain.first};
  acc.b.rot[junction - 1] = {rev(stick_chain.last), rev(orient_dart(lb)), orient_dart(la)};
  acc.b.rot[z - 1] = {rev(orient_dart(la)), orient_dart(lb)};
  acc.place(q1, marks[0]);
  for (std::size_t i = 1; i < marks.size(); ++i) acc.place(stick_chain.interior[i - 1], marks[i]);

  std::vector<int> uni_ok;
  if (marks[0].is_cap) uni_ok.push_back(q1);

  QuotientSpine out;
  finish(acc, spec, out, uni_ok);

  auto faces = out.graph.faces();
  std::vector<int> face_of = out.graph.face_index(faces);
  out.face_of_boundary.assign(2, -1);
  out.face_of_boundary[hi] = face_of[orient_dart(la)];
  out.face_of_boundary[1 - hi] = 1 - face_of[orient_dart(la)];
  if (faces.size() != 2) throw std::logic_error("lollipop spine must have two faces");
  return out;
}

// r > 2 with at least two marks: a path with one boundary circle folded into a
// loop at each interior station.
QuotientSpine build_g0_caterpillar(const OrbitSpec& spec) {
  auto marks = collect_marks(spec);
  int r = static_cast<int>(spec.boundaries.size());
  Rational L = face_budget(spec, 0);
  for (int i = 1; i < r; ++i) L = std::min(L, face_budget(spec, i));
  L /= Rational(4);

  SpineAccum acc;
  int q1 = acc.b.add_vertex();
  std::vector<int> w(r);  // w[1..r-1]
  for (int i = 1; i < r; ++i) w[i] = acc.b.add_vertex();
  int q2 = acc.b.add_vertex();

  Chain first = add_chain(acc.b, q1, w[1], (face_budget(spec, 0) - L) / Rational(2),
                          static_cast<int>(marks.size()) - 2);
  std::vector<Dart> u(r + 1, 0);
  u[1] = first.last;  // dart arriving at w[1]
  for (int i = 2; i < r; ++i) {
    int e = acc.b.add_edge((face_budget(spec, i - 1) - Rational(2) * L) / Rational(2));
    u[i] = orient_dart(e);
  }
  int elast = acc.b.add_edge((face_budget(spec, r - 1) - L) / Rational(2));
  u[r] = orient_dart(elast);

  std::vector<Dart> la(r), lb(r);
  for (int i = 1; i < r; ++i) {
    int z = acc.b.add_vertex();
    int ea = acc.b.add_edge(L / Rational(2));
    int eb = acc.b.add_edge(L / Rational(2));
    la[i] = orient_dart(ea);
    lb[i] = orient_dart(eb);
    acc.b.rot[z - 1] = {rev(la[i]), lb[i]};
  }

  acc.b.rot[q1 - 1] = {first.first};
  for (int i = 1; i < r; ++i) acc.b.rot[w[i] - 1] = {rev(u[i]), la[i], u[i + 1], rev(lb[i])};
  acc.b.rot[q2 - 1] = {rev(u[r])};

  acc.place(q1, marks[0]);
  acc.place(q2, marks[1]);
  for (std::size_t i = 2; i < marks.size(); ++i) acc.place(first.interior[i - 2], marks[i]);

  std::vector<int> uni_ok;
  if (marks[0].is_cap) uni_ok.push_back(q1);
  if (marks[1].is_cap) uni_ok.push_back(q2);

  QuotientSpine out;
  finish(acc, spec, out, uni_ok);

  auto faces = out.graph.faces();
  std::vector<int> face_of = out.graph.face_index(faces);
  out.face_of_boundary.assign(r, -1);
  for (int i = 0; i + 1 < r; ++i) out.face_of_boundary[i] = face_of[la[i + 1]];
  out.face_of_boundary[r - 1] = face_of[rev(la[r - 1])];
  if (static_cast<int>(faces.size()) != r)
    throw std::logic_error("caterpillar spine must have r faces");
  return out;
}

// r > 2 with at most one mark: fold the big circle onto an interval so that
// both endpoints land on chord feet.
QuotientSpine build_g0_fold(const OrbitSpec& spec) {
  auto marks = collect_marks(spec);
  int r = static_cast<int>(spec.boundaries.size());
  Rational L = face_budget(spec, 0);
  for (int i = 1; i < r; ++i) L = std::min(L, face_budget(spec, i));
  L /= Rational(4);

  // Boundary positions sorted by decreasing free arc length; the largest
  // takes the left end, the second largest the right end.
  std::vector<int> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return face_budget(spec, a) > face_budget(spec, b);
  });
  std::vector<int> position(r);  // position p (0-based) -> boundary index
  position[0] = order[0];
  position[r - 1] = order[1];
  for (int i = 1; i + 1 < r; ++i) position[i] = order[i + 1];

  Rational A1 = face_budget(spec, position[0]) - L;
  Rational Ar = face_budget(spec, position[r - 1]) - L;
  std::vector<Rational> S(r);  // middles at positions 1..r-2
  Rational sumS;
  for (int i = 1; i + 1 < r; ++i) {
    S[i] = face_budget(spec, position[i]) - Rational(2) * L;
    sumS += S[i];
  }
  Rational H = (A1 + Ar + sumS) / Rational(2);
  Rational Y = H - A1;
  if (!Y.is_positive() || !(Y < sumS))
    throw std::runtime_error(
        "InfeasibleLengths: the folded spine cannot close for these coefficients");

  // Chord feet: chord p (1-based, p = 1..r-1) joins top mark tau_p with bottom
  // mark beta_p; tau_1 = 0 is the left endpoint, beta_{r-1} = H the right one.
  std::vector<Rational> tau(r), beta(r);
  tau[1] = Rational(0);
  Rational acc_x, acc_y;
  for (int i = 1; i + 1 < r; ++i) {
    Rational y = S[i] * Y / sumS;
    Rational x = S[i] - y;
    acc_x += x;
    acc_y += y;
    tau[i + 1] = acc_x;
    beta[i] = A1 + acc_y;
  }
  beta[0] = A1;  // unused slot kept for clarity
  beta[r - 1] = H;
  // Chord p joins tau[p] (top) and beta[p] (bottom):
  // chord 1: (0, A1); chord p >= 2: (tau[p], beta[p-1]  ... no: beta[p]).
  // We collected beta[i] for i = 1..r-2 above and beta[r-1] = H.
  std::vector<std::pair<Rational, Rational>> chord(r);
  chord[1] = {tau[1], A1};
  for (int p = 2; p < r; ++p) chord[p] = {tau[p], (p == r - 1) ? H : beta[p]};

  // Gather distinct positions.
  std::vector<Rational> positions = {Rational(0), H};
  for (int p = 1; p < r; ++p) {
    positions.push_back(chord[p].first);
    positions.push_back(chord[p].second);
  }
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());

  SpineAccum acc2;
  std::vector<int> vertex_at(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) vertex_at[i] = acc2.b.add_vertex();
  auto vertex_of_pos = [&](const Rational& pos) {
    auto it = std::lower_bound(positions.begin(), positions.end(), pos);
    return vertex_at[static_cast<std::size_t>(it - positions.begin())];
  };

  // Interval edges, oriented rightward.
  std::vector<Dart> right_dart(positions.size(), 0), left_dart(positions.size(), 0);
  for (std::size_t i = 0; i + 1 < positions.size(); ++i) {
    int e = acc2.b.add_edge(positions[i + 1] - positions[i]);
    right_dart[i] = orient_dart(e);
    left_dart[i + 1] = rev(orient_dart(e));
  }

  // Chords; a chord whose feet coincide becomes a two-edge circle.
  std::vector<Dart> chord_up(positions.size(), 0), chord_down(positions.size(), 0);
  for (int p = 1; p < r; ++p) {
    int vt = vertex_of_pos(chord[p].first);
    int vb = vertex_of_pos(chord[p].second);
    if (vt != vb) {
      int e = acc2.b.add_edge(L);
      chord_up[vt - 1] = orient_dart(e);
      chord_down[vb - 1] = rev(orient_dart(e));
    } else {
      int z = acc2.b.add_vertex();
      int ea = acc2.b.add_edge(L / Rational(2));
      int eb = acc2.b.add_edge(L / Rational(2));
      acc2.b.rot[z - 1] = {rev(orient_dart(ea)), orient_dart(eb)};
      chord_up[vt - 1] = orient_dart(ea);
      chord_down[vt - 1] = rev(orient_dart(eb));
    }
  }

  for (std::size_t i = 0; i < positions.size(); ++i) {
    std::vector<Dart> rot;
    if (right_dart[i]) rot.push_back(right_dart[i]);
    if (chord_up[vertex_at[i] - 1]) rot.push_back(chord_up[vertex_at[i] - 1]);
    if (left_dart[i]) rot.push_back(left_dart[i]);
    if (chord_down[vertex_at[i] - 1]) rot.push_back(chord_down[vertex_at[i] - 1]);
    acc2.b.rot[vertex_at[i] - 1] = rot;
  }

  if (!marks.empty()) acc2.place(vertex_at[0], marks[0]);
  if (marks.size() > 1)
    throw std::logic_error("fold construction is only for at most one mark");

  QuotientSpine out;
  finish(acc2, spec, out, {});
  std::vector<Rational> budgets(r);
  for (int i = 0; i < r; ++i) budgets[i] = face_budget(spec, i);
  match_faces_by_budget(out, budgets, out);
  return out;
}

// genus >= 1: wedge of the c-chain, one length-L loop, the station loops and
// the handle loops.
QuotientSpine build_genus_ge1(const OrbitSpec& spec) {
  auto marks = collect_marks(spec);
  int r = static_cast<int>(spec.boundaries.size());
  int g = spec.quotient_genus;
  Rational L = face_budget(spec, 0);
  for (int i = 1; i < r; ++i) L = std::min(L, face_budget(spec, i));
  L /= Rational(4);

  std::vector<Rational> C(r + 1);
  Rational D;
  for (int i = 1; i < r; ++i) C[i] = (face_budget(spec, i - 1) - Rational(2) * L) / Rational(2);
  Rational res = face_budget(spec, r - 1) - Rational(2) * L;
  if (g >= 2) {
    D = res / Rational(2);
    C[r] = res / Rational(4);
  } else {
    C[r] = res / Rational(2);
  }

  SpineAccum acc;
  int p0 = acc.b.add_vertex();
  std::vector<int> x(r, 0);
  for (int i = 1; i < r; ++i) x[i] = acc.b.add_vertex();

  int extra_marks = std::max(0, static_cast<int>(marks.size()) - 1);
  std::vector<Dart> u(r + 1, 0);
  Dart into_first = 0;
  Chain first_chain;
  if (r >= 2) {
    first_chain = add_chain(acc.b, p0, x[1], C[1], extra_marks);
    into_first = first_chain.first;
    u[1] = first_chain.last;
    for (int i = 2; i < r; ++i) u[i] = orient_dart(acc.b.add_edge(C[i]));
    u[r] = orient_dart(acc.b.add_edge(C[r]));
  } else {
    // Single boundary: the c-line is a loop through one midpoint station,
    // total length C[1] split in two.
    int x0 = acc.b.add_vertex();
    first_chain = add_chain(acc.b, p0, x0, C[1] / Rational(2), extra_marks);
    into_first = first_chain.first;
    Dart arrive = first_chain.last;
    int back = acc.b.add_edge(C[1] / Rational(2));
    u[r] = orient_dart(back);  // the chain arrives at x0, `back` returns to p0
    acc.b.rot[x0 - 1] = {rev(arrive), u[r]};
  }

  std::vector<Dart> la(r, 0), lb(r, 0);
  for (int i = 1; i < r; ++i) {
    int z = acc.b.add_vertex();
    int ea = acc.b.add_edge(L / Rational(2));
    int eb = acc.b.add_edge(L / Rational(2));
    la[i] = orient_dart(ea);
    lb[i] = orient_dart(eb);
    acc.b.rot[z - 1] = {rev(la[i]), lb[i]};
    acc.b.rot[x[i] - 1] = {rev(u[i]), la[i], u[i + 1], rev(lb[i])};
  }

  int zb = acc.b.add_vertex();
  Dart s = orient_dart(acc.b.add_edge(L / Rational(2)));
  Dart sb = orient_dart(acc.b.add_edge(L / Rational(2)));
  acc.b.rot[zb - 1] = {rev(s), sb};
  Dart t = rev(sb);

  std::vector<Dart> handle;  // p0 darts of the handle loops in rotation order
  for (int j = 2; j <= g; ++j) {
    Rational quarter = D / (Rational(8) * Rational(g - 1));
    int za = acc.b.add_vertex();
    Dart aj_a = orient_dart(acc.b.add_edge(quarter));
    Dart aj_b = orient_dart(acc.b.add_edge(quarter));
    acc.b.rot[za - 1] = {rev(aj_a), aj_b};
    int zb2 = acc.b.add_vertex();
    Dart bj_a = orient_dart(acc.b.add_edge(quarter));
    Dart bj_b = orient_dart(acc.b.add_edge(quarter));
    acc.b.rot[zb2 - 1] = {rev(bj_a), bj_b};
    handle.push_back(aj_a);
    handle.push_back(rev(bj_b));
    handle.push_back(rev(aj_b));
    handle.push_back(bj_a);
  }

  std::vector<Dart> p0rot = {into_first, s, rev(u[r])};
  for (Dart d : handle) p0rot.push_back(d);
  p0rot.push_back(t);
  acc.b.rot[p0 - 1] = p0rot;

  if (!marks.empty()) acc.place(p0, marks[0]);
  for (std::size_t i = 1; i < marks.size(); ++i) acc.place(first_chain.interior[i - 1], marks[i]);

  QuotientSpine out;
  finish(acc, spec, out, {});

  auto faces = out.graph.faces();
  std::vector<int> face_of = out.graph.face_index(faces);
  out.face_of_boundary.assign(r, -1);
  if (r == 1) {
    out.face_of_boundary[0] = 0;
  } else {
    for (int i = 0; i + 1 < r; ++i) out.face_of_boundary[i] = face_of[la[i + 1]];
    out.face_of_boundary[r - 1] = face_of[rev(u[r])];
  }
  if (static_cast<int>(faces.size()) != r)
    throw std::logic_error("handle spine must have r faces");
  return out;
}

void validate_spec(const OrbitSpec& spec) {
  if (spec.order < 1) throw std::invalid_argument("realize: order must be at least 1");
  if (spec.boundaries.empty())
    throw std::invalid_argument("realize: at least one boundary target is required");
  if (spec.quotient_genus < 0) throw std::invalid_argument("realize: negative genus");
  for (const auto& b : spec.boundaries) {
    if (b.sign != -1 && b.sign != 0 && b.sign != 1)
      throw std::invalid_argument("realize: sign must be -, 0 or +");
    if ((b.sign == 0) != b.rot.is_zero())
      throw std::invalid_argument("realize: coefficient is zero exactly at sign 0");
    if (b.rot.is_negative()) throw std::invalid_argument("realize: coefficients are unsigned");
    if (spec.order == 1) {
      if (!b.rot.is_integer())
        throw std::invalid_argument("realize: order 1 needs integer coefficients");
    } else {
      if (b.sign == 0)
        throw std::invalid_argument(
            "realize: a zero sign forces the trivial action; use order 1");
      if (b.rot.den() != spec.order)
        throw std::invalid_argument(
            "realize: each coefficient must have reduced denominator equal to the order");
    }
  }
  for (int w : spec.branch_voltages)
    if (spec.order == 1 || w % spec.order == 0)
      throw std::invalid_argument("realize: branch voltages must be nontrivial");
}

}  // namespace

QuotientSpine build_quotient_spine(const OrbitSpec& spec) {
  validate_spec(spec);
  int r = static_cast<int>(spec.boundaries.size());
  if (spec.quotient_genus >= 1) return build_genus_ge1(spec);
  std::size_t marks = spec.branch_voltages.size() + spec.cap_voltages.size();
  if (r == 1) return build_g0_r1(spec);
  if (r == 2) {
    if (face_budget(spec, 0) == face_budget(spec, 1)) return build_g0_r2_equal(spec);
    return build_g0_r2_unequal(spec);
  }
  if (marks >= 2) return build_g0_caterpillar(spec);
  return build_g0_fold(spec);
}

std::vector<int> face_voltages(const QuotientSpine& spine, const std::vector<int>& edge_voltages,
                               int order) {
  auto faces = spine.graph.faces();
  std::vector<int> out(faces.size(), 0);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    long long v = 0;
    for (Dart d : faces[f]) {
      int e = edge_of(d);
      v += is_orient(d) ? edge_voltages[e] : -edge_voltages[e];
      // The rotation wrap at the vertex the face successor turns around.
      Dart turning = rev(d);
      const auto& rot = spine.graph.rotation(spine.graph.tail(turning));
      if (rot.back() == turning) v += spine.vertex_voltage[spine.graph.tail(turning)];
    }
    out[f] = static_cast<int>(((v % order) + order) % order);
  }
  return out;
}

namespace {

int inverse_mod(int a, int n) {
  long long t0 = 0, t1 = 1, m0 = n, m1 = ((a % n) + n) % n;
  while (m1 != 0) {
    long long q = m0 / m1;
    long long tmp = t0 - q * t1;
    t0 = t1;
    t1 = tmp;
    tmp = m0 - q * m1;
    m0 = m1;
    m1 = tmp;
  }
  if (m0 != 1) throw std::invalid_argument("inverse_mod: not a unit");
  return static_cast<int>(((t0 % n) + n) % n);
}

// a_i = n * R_i mod n; the walk around boundary i winds this many times.
int winding_class(const OrbitSpec& spec, int i) {
  Rational nr = Rational(spec.order) * spec.boundaries[i].rot;
  return static_cast<int>(((nr.num() % spec.order) + spec.order) % spec.order);
}

}  // namespace

std::vector<int> suggest_edge_voltages(const QuotientSpine& spine, const OrbitSpec& spec) {
  int n = spec.order;
  int E = spine.graph.edge_count();
  if (n == 1) return std::vector<int>(E + 1, 0);

  // Common deck step m: sum over boundaries of sign*inv(a) times m must match
  // the total vertex voltage.
  long long S = 0, W = 0;
  for (std::size_t i = 0; i < spec.boundaries.size(); ++i) {
    int a = winding_class(spec, static_cast<int>(i));
    S += spec.boundaries[i].sign * inverse_mod(a, n);
  }
  for (int v = 1; v <= spine.graph.vertex_count(); ++v) W += spine.vertex_voltage[v];
  S = ((S % n) + n) % n;
  W = ((W % n) + n) % n;
  int m = -1;
  for (int cand = 1; cand < n; ++cand) {
    if (std::gcd(cand, n) != 1) continue;
    if ((S * cand - W) % n == 0) {
      m = cand;
      break;
    }
  }
  if (m == -1)
    throw std::invalid_argument(
        "realize: no deck step matches the marked voltages and the coefficients");

  // Linear system over Z/n for the edge voltages.
  auto faces = spine.graph.faces();
  std::vector<int> wrap_part = face_voltages(spine, std::vector<int>(E + 1, 0), n);
  std::vector<std::vector<int>> A;
  std::vector<int> rhs;
  for (std::size_t i = 0; i < spec.boundaries.size(); ++i) {
    int f = spine.face_of_boundary[i];
    std::vector<int> row(E, 0);
    for (Dart d : faces[f]) row[edge_of(d) - 1] += is_orient(d) ? 1 : -1;
    int a = winding_class(spec, static_cast<int>(i));
    int target = static_cast<int>(
        (static_cast<long long>(spec.boundaries[i].sign > 0 ? 1 : n - 1) * inverse_mod(a, n) * m) %
        n);
    rhs.push_back(((target - wrap_part[f]) % n + n) % n);
    A.push_back(std::move(row));
  }
  auto sol = solve_mod_n(A, rhs, n);
  if (!sol)
    throw std::invalid_argument("realize: the voltage system has no solution");
  std::vector<int> voltages(E + 1, 0);
  for (int e = 1; e <= E; ++e) voltages[e] = (*sol)[e - 1];
  return voltages;
}

RealizedPeriodic realize_periodic(const OrbitSpec& spec) {
  QuotientSpine spine = build_quotient_spine(spec);
  int n = spec.order;
  int E = spine.graph.edge_count();

  std::vector<int> voltages = spec.edge_voltages;
  if (voltages.empty()) {
    voltages = suggest_edge_voltages(spine, spec);
  } else if (static_cast<int>(voltages.size()) != E + 1) {
    throw std::invalid_argument("realize: edge voltage list must cover the quotient spine");
  }

  // Face voltages must realize a single deck step through every boundary.
  if (n >= 2) {
    std::vector<int> fv = face_voltages(spine, voltages, n);
    int m = -1;
    for (std::size_t i = 0; i < spec.boundaries.size(); ++i) {
      int f = spine.face_of_boundary[i];
      if (std::gcd(fv[f], n) != 1)
        throw std::invalid_argument(
            "realize: a boundary face voltage does not generate the deck group");
      long long step = (static_cast<long long>(winding_class(spec, static_cast<int>(i))) *
                        fv[f]) % n;
      if (spec.boundaries[i].sign < 0) step = (n - step) % n;
      if (m == -1)
        m = static_cast<int>(step);
      else if (m != static_cast<int>(step))
        throw std::invalid_argument("realize: boundary face voltages disagree on the deck step");
    }
  }

  // Derived graph: sheets 0..n-1 per edge, vertices merged along their local
  // voltage, rotations interleaving the sheets at marked vertices.
  RealizedPeriodic out;
  out.quotient = spine;
  out.edge_voltages = voltages;

  auto cover_edge = [&](int e, int s) { return (e - 1) * n + ((s % n) + n) % n + 1; };
  auto lift = [&](Dart d, int s) -> Dart {
    int e = edge_of(d);
    if (is_orient(d)) return orient_dart(cover_edge(e, s));
    return rev(orient_dart(cover_edge(e, s - voltages[e])));
  };

  std::vector<int> class_count(spine.graph.vertex_count() + 1, 0);
  std::vector<int> vertex_base(spine.graph.vertex_count() + 2, 0);
  for (int v = 1; v <= spine.graph.vertex_count(); ++v) {
    int w = spine.vertex_voltage[v] % n;
    class_count[v] = std::gcd(w, n) == 0 ? n : std::gcd(w, n);
    vertex_base[v + 1] = vertex_base[v] + class_count[v];
  }

  std::vector<std::vector<Dart>> rotations(vertex_base[spine.graph.vertex_count() + 1]);
  for (int v = 1; v <= spine.graph.vertex_count(); ++v) {
    int w = spine.vertex_voltage[v] % n;
    int classes = class_count[v];
    int ordw = n / classes;
    for (int rep = 0; rep < classes; ++rep) {
      std::vector<Dart> rot;
      for (int t = 0; t < ordw; ++t) {
        int sheet = (rep + t * w) % n;
        for (Dart d : spine.graph.rotation(v)) rot.push_back(lift(d, sheet));
      }
      rotations[vertex_base[v] + rep] = std::move(rot);
    }
  }
  out.graph = RibbonGraph::from_rotations(rotations);
  out.metric.length.assign(E * n + 1, Rational(0));
  for (int e = 1; e <= E; ++e)
    for (int s = 0; s < n; ++s) out.metric.length[cover_edge(e, s)] = spine.metric.edge_length(e);

  if (!out.graph.connected())
    throw std::runtime_error("DisconnectedCover: the voltages do not act transitively");

  // Cap orbits and permitted univalent lifts.
  for (int idx : spine.cap_vertices) {
    std::vector<int> orbitv;
    for (int rep = 0; rep < class_count[idx]; ++rep) orbitv.push_back(vertex_base[idx] + rep + 1);
    out.cap_orbits.push_back(std::move(orbitv));
  }
  ValidateOptions opts;
  for (int v = 1; v <= spine.graph.vertex_count(); ++v)
    if (spine.univalent_ok[v])
      for (int rep = 0; rep < class_count[v]; ++rep)
        opts.allow_univalent_at.push_back(vertex_base[v] + rep + 1);

  auto report = validate(out.graph, nullptr, &out.metric, opts);
  if (!report.ok) throw std::runtime_error("PostCheckFailed: cover invalid: " + report.message);

  // Transport the boundary signs to the cover faces.
  auto cover_faces = out.graph.faces();
  std::vector<int> cover_face_of = out.graph.face_index(cover_faces);
  auto quotient_faces = spine.graph.faces();
  std::vector<int> q_face_of = spine.graph.face_index(quotient_faces);
  std::vector<int> sign_of_q_face(quotient_faces.size(), 0);
  for (std::size_t i = 0; i < spec.boundaries.size(); ++i)
    sign_of_q_face[spine.face_of_boundary[i]] = spec.boundaries[i].sign;

  out.sign.sign_of_face.assign(cover_faces.size(), 0);
  for (std::size_t f = 0; f < cover_faces.size(); ++f) {
    Dart cd = cover_faces[f][0];
    int e_q = (edge_of(cd) - 1) / n + 1;
    Dart qd = is_orient(cd) ? orient_dart(e_q) : rev(orient_dart(e_q));
    out.sign.sign_of_face[f] = sign_of_q_face[q_face_of[qd]];
  }

  auto verdict = check_signed_tat(out.graph, out.metric, out.rel, out.sign);
  if (!verdict.holds)
    throw std::runtime_error("PostCheckFailed: realized cover fails the signed walk check at e" +
                             std::to_string(verdict.witness_edge));

  out.twist = fdtc(out.graph, out.metric, out.rel, out.sign);
  for (std::size_t i = 0; i < spec.boundaries.size(); ++i) {
    int qf = spine.face_of_boundary[i];
    Dart lifted = lift(quotient_faces[qf][0], 0);
    int cf = cover_face_of[lifted];
    Rational expected = Rational(spec.boundaries[i].sign) * spec.boundaries[i].rot;
    bool found = false;
    for (const auto& entry : out.twist.entries)
      if (entry.face == cf) {
        found = true;
        if (entry.rot != expected)
          throw std::runtime_error("PostCheckFailed: realized coefficient mismatch");
      }
    if (!found && spec.boundaries[i].sign != 0)
      throw std::runtime_error("PostCheckFailed: lifted boundary face missing");
  }
  return out;
}

RelativeRealized relative_from_capped(const RealizedPeriodic& realized,
                                      const std::vector<int>& cap_indices,
                                      const Rational& epsilon) {
  std::size_t count = cap_indices.empty() ? realized.cap_orbits.size() : cap_indices.size();
  return relative_from_capped(realized, cap_indices,
                              std::vector<Rational>(count, epsilon));
}

RelativeRealized relative_from_capped(const RealizedPeriodic& realized,
                                      const std::vector<int>& cap_indices,
                                      const std::vector<Rational>& epsilons) {
  RelativeRealized cur;
  cur.graph = realized.graph;
  cur.metric = realized.metric;
  cur.rel = realized.rel;
  cur.sign = realized.sign;

  std::vector<int> caps = cap_indices;
  if (caps.empty())
    for (std::size_t i = 0; i < realized.cap_orbits.size(); ++i) caps.push_back(static_cast<int>(i));
  if (epsilons.size() != caps.size())
    throw std::invalid_argument("relative_from_capped: one radius per cap");

  // Track cap vertex ids across successive surgeries.
  std::vector<std::vector<int>> pending;
  for (int c : caps) pending.push_back(realized.cap_orbits[static_cast<std::size_t>(c)]);

  for (std::size_t k = 0; k < pending.size(); ++k) {
    if (pending[k].empty()) throw std::invalid_argument("relative_from_capped: empty cap orbit");
    int old_edges = cur.graph.edge_count();
    auto old_faces = cur.graph.faces();
    std::vector<int> old_face_of = cur.graph.face_index(old_faces);

    BlowUpResult res =
        blow_up(cur.graph, cur.metric, cur.rel, pending[k][0], epsilons[k], &cur.sign);

    // The blown orbit must be exactly this cap orbit.
    std::vector<int> a = res.blown_vertices, b = pending[k];
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
      throw std::runtime_error(
          "PostCheckFailed: the induced map mixes a cap orbit with other vertices");

    // Transport the signs: every non-circle face keeps the sign it had.
    auto new_faces = res.graph.faces();
    SignAssignment new_sign;
    new_sign.sign_of_face.assign(new_faces.size(), 0);
    for (std::size_t f = 0; f < new_faces.size(); ++f) {
      for (Dart d : new_faces[f]) {
        if (edge_of(d) <= old_edges) {
          new_sign.sign_of_face[f] = cur.sign.sign_of_face[old_face_of[d]];
          break;
        }
      }
    }

    cur.cycles_of_cap.push_back(res.new_cycle_indices);
    // Remap the vertex ids of yet-unprocessed cap orbits.
    for (std::size_t j = k + 1; j < pending.size(); ++j)
      for (int& v : pending[j]) {
        v = res.new_vertex_of[v];
        if (v == 0)
          throw std::runtime_error("PostCheckFailed: cap orbits overlap");
      }
    cur.graph = std::move(res.graph);
    cur.metric = std::move(res.metric);
    cur.rel = std::move(res.rel);
    cur.sign = std::move(new_sign);
  }

  auto report = validate(cur.graph, &cur.rel, &cur.metric);
  if (!report.ok)
    throw std::runtime_error("PostCheckFailed: blown-up graph invalid: " + report.message);
  auto verdict = check_signed_tat(cur.graph, cur.metric, cur.rel, cur.sign);
  if (!verdict.holds)
    throw std::runtime_error(
        "PostCheckFailed: blown-up graph fails the relative signed check at e" +
        std::to_string(verdict.witness_edge));
  return cur;
}

}  // namespace tatg
