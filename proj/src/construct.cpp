#include "tatg/construct.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace tatg {

// ---------------------------------------------------------------------------
// Blow-up

BlowUpResult blow_up(const RibbonGraph& g, const MetricAssignment& metric,
                     const RelativeStructure& rel, int vertex, const Rational& epsilon,
                     const SignAssignment* sign) {
  if (!epsilon.is_positive()) throw std::invalid_argument("blow_up: epsilon must be positive");

  SigmaMap sigma = sign ? compute_sigma_signed(g, metric, rel, *sign)
                        : compute_sigma(g, metric, rel, Rational(1));
  if (!sigma.vertex_action_defined)
    throw std::runtime_error("blow_up: the induced map does not act on the vertex set");

  std::vector<int> orbit;
  std::vector<char> in_orbit(g.vertex_count() + 1, 0);
  for (int v = vertex; !in_orbit[v]; v = sigma.vertex_perm[v]) {
    in_orbit[v] = 1;
    orbit.push_back(v);
  }

  std::vector<char> on_a(g.vertex_count() + 1, 0);
  for (const auto& cyc : rel.cycles)
    for (Dart d : cyc) on_a[g.tail(d)] = 1;
  for (int v : orbit)
    if (on_a[v]) throw std::invalid_argument("VertexOnA: cannot blow up a relative vertex");

  for (int v : orbit)
    for (Dart d : g.rotation(v))
      if (!(epsilon < metric.edge_length(edge_of(d)) / Rational(2)))
        throw std::invalid_argument("EpsilonTooLarge: epsilon must stay below half of every incident length");

  int E = g.edge_count();
  BlowUpResult out;
  out.blown_vertices = orbit;
  out.new_edge_of.resize(E + 1);
  std::iota(out.new_edge_of.begin(), out.new_edge_of.end(), 0);

  // Old edges keep their ids (so old darts keep theirs); circle edges follow.
  out.metric.length.assign(E + 1, Rational(0));
  for (int e = 1; e <= E; ++e) {
    Rational len = metric.edge_length(e);
    if (in_orbit[g.tail(orient_dart(e))]) len -= epsilon;
    if (in_orbit[g.tail(rev(orient_dart(e)))]) len -= epsilon;
    out.metric.length[e] = len;
  }

  // New vertices: survivors keep their ids' order, then the circle vertices.
  out.new_vertex_of.assign(g.vertex_count() + 1, 0);
  int next_vertex = 0;
  for (int v = 1; v <= g.vertex_count(); ++v)
    if (!in_orbit[v]) out.new_vertex_of[v] = ++next_vertex;

  std::vector<std::vector<Dart>> rotations(next_vertex);
  for (int v = 1; v <= g.vertex_count(); ++v)
    if (!in_orbit[v]) rotations[out.new_vertex_of[v] - 1] = g.rotation(v);

  out.rel = rel;
  int next_edge = E;
  auto add_edge = [&](const Rational& len) {
    out.metric.length.push_back(len);
    return ++next_edge;
  };

  for (int v : orbit) {
    const auto& rot = g.rotation(v);
    int p = static_cast<int>(rot.size());
    if (p == 1) {
      // Univalent cap: the circle is a single boundary edge, subdivided.
      int ca = add_edge(epsilon);
      int cb = add_edge(epsilon);
      rotations.push_back({rev(orient_dart(cb)), rot[0], orient_dart(ca)});  // tip
      rotations.push_back({rev(orient_dart(ca)), orient_dart(cb)});          // midpoint
      out.new_cycle_indices.push_back(static_cast<int>(out.rel.cycles.size()));
      out.rel.cycles.push_back({orient_dart(ca), orient_dart(cb)});
      continue;
    }
    // One circle vertex per incident dart, joined along the counterclockwise
    // order; the circle orientation follows that order.
    std::vector<int> circ(p);
    for (int a = 0; a < p; ++a) circ[a] = add_edge(epsilon * Rational(2));
    std::vector<Dart> cycle;
    for (int a = 0; a < p; ++a) {
      Dart incoming = rev(orient_dart(circ[(a + p - 1) % p]));
      Dart outgoing = orient_dart(circ[a]);
      rotations.push_back({incoming, rot[a], outgoing});
      cycle.push_back(outgoing);
    }
    out.new_cycle_indices.push_back(static_cast<int>(out.rel.cycles.size()));
    out.rel.cycles.push_back(std::move(cycle));
  }

  out.graph = RibbonGraph::from_rotations(rotations);
  return out;
}

// ---------------------------------------------------------------------------
// Exact Fourier-Motzkin feasibility

namespace {

// Strict inequality sum(coeff * x) + cst > 0 with provenance: the multiplier
// of each original positivity row x_e > 0 contributing to it.
struct Strict {
  std::vector<Rational> coeff;
  Rational cst;
  std::vector<Rational> origin;
};

Strict combine(const Strict& lower, const Strict& upper, int var) {
  // lower has coeff[var] > 0, upper has coeff[var] < 0.
  Rational a = lower.coeff[var];
  Rational b = -upper.coeff[var];
  Strict out;
  std::size_t n = lower.coeff.size();
  out.coeff.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.coeff[i] = lower.coeff[i] * b + upper.coeff[i] * a;
  out.cst = lower.cst * b + upper.cst * a;
  out.origin.resize(lower.origin.size());
  for (std::size_t i = 0; i < lower.origin.size(); ++i)
    out.origin[i] = lower.origin[i] * b + upper.origin[i] * a;
  return out;
}

void normalize(Strict& s) {
  Rational scale;
  for (const Rational& c : s.coeff)
    if (!c.is_zero()) {
      scale = Rational::abs(c);
      break;
    }
  if (scale.is_zero()) scale = Rational::abs(s.cst);
  if (scale.is_zero() || scale == Rational(1)) return;
  for (Rational& c : s.coeff) c /= scale;
  s.cst /= scale;
  for (Rational& o : s.origin) o /= scale;
}

}  // namespace

FitResult fit_metric(const RibbonGraph& g, const RelativeStructure& rel,
                     const SignAssignment& sign, const std::vector<Rational>& target_of_face) {
  FitResult result;
  auto faces = g.faces();
  if (sign.sign_of_face.size() != faces.size() || target_of_face.size() != faces.size()) {
    result.status = FitStatus::MalformedTargets;
    result.certificate = "targets must cover every face";
    return result;
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (sign.sign_of_face[f] != 0 && !target_of_face[f].is_positive()) {
      result.status = FitStatus::MalformedTargets;
      result.certificate = "face with nonzero sign needs a positive coefficient";
      return result;
    }
  }

  int E = g.edge_count();
  // Equalities: for each constrained face, sum of traversed lengths = 1/R.
  std::vector<std::vector<Rational>> eq;  // row: E coeffs then rhs
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (sign.sign_of_face[f] == 0) continue;
    std::vector<Rational> row(E + 1);
    for (Dart d : faces[f]) row[edge_of(d) - 1] += Rational(1);
    row[E] = Rational(1) / target_of_face[f];
    eq.push_back(std::move(row));
  }

  // Prefer the uniform metric whenever it solves the system.
  {
    bool uniform_ok = true;
    Rational uniform;
    for (const auto& row : eq) {
      Rational count;
      for (int e = 0; e < E; ++e) count += row[e];
      Rational value = row[E] / count;
      if (!value.is_positive() || (!uniform.is_zero() && value != uniform)) {
        uniform_ok = false;
        break;
      }
      uniform = value;
    }
    if (uniform_ok) {
      if (uniform.is_zero()) uniform = Rational(1);  // vacuous system
      result.metric.length.assign(E + 1, uniform);
      result.metric.length[0] = Rational(0);
      result.verdict = check_signed_tat(g, result.metric, rel, sign);
      result.status = result.verdict.holds ? FitStatus::Feasible : FitStatus::FeasibleNotTat;
      return result;
    }
  }

  // Gaussian elimination to reduced row echelon form.
  std::vector<int> pivot_col;
  std::size_t r = 0;
  for (int c = 0; c < E && r < eq.size(); ++c) {
    std::size_t pr = r;
    while (pr < eq.size() && eq[pr][c].is_zero()) ++pr;
    if (pr == eq.size()) continue;
    std::swap(eq[r], eq[pr]);
    Rational p = eq[r][c];
    for (int j = 0; j <= E; ++j) eq[r][j] /= p;
    for (std::size_t i = 0; i < eq.size(); ++i) {
      if (i == r || eq[i][c].is_zero()) continue;
      Rational factor = eq[i][c];
      for (int j = 0; j <= E; ++j) eq[i][j] -= factor * eq[r][j];
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (std::size_t i = r; i < eq.size(); ++i) {
    if (!eq[i][E].is_zero()) {
      result.status = FitStatus::Infeasible;
      result.certificate = "the cycle-length equations are inconsistent";
      return result;
    }
  }
  eq.resize(r);

  std::vector<char> is_pivot(E, 0);
  std::vector<int> pivot_row(E, -1);
  for (std::size_t i = 0; i < pivot_col.size(); ++i) {
    is_pivot[pivot_col[i]] = 1;
    pivot_row[pivot_col[i]] = static_cast<int>(i);
  }
  std::vector<int> free_vars;
  for (int e = 0; e < E; ++e)
    if (!is_pivot[e]) free_vars.push_back(e);
  int nf = static_cast<int>(free_vars.size());
  std::vector<int> free_index(E, -1);
  for (int i = 0; i < nf; ++i) free_index[free_vars[i]] = i;

  // Positivity of every edge, written over the free variables.
  std::vector<Strict> strict;
  for (int e = 0; e < E; ++e) {
    Strict s;
    s.coeff.assign(nf, Rational(0));
    s.origin.assign(E, Rational(0));
    s.origin[e] = Rational(1);
    if (is_pivot[e]) {
      const auto& row = eq[pivot_row[e]];
      s.cst = row[E];
      for (int i = 0; i < nf; ++i) s.coeff[i] = -row[free_vars[i]];
    } else {
      s.coeff[free_index[e]] = Rational(1);
      s.cst = Rational(0);
    }
    strict.push_back(std::move(s));
  }

  // Fourier-Motzkin elimination, recording each stage for the back-solve.
  std::vector<std::vector<Strict>> stages;
  std::vector<Strict> current = strict;
  for (int v = nf - 1; v >= 0; --v) {
    stages.push_back(current);
    std::vector<Strict> lower, upper, keep;
    for (const Strict& s : current) {
      if (s.coeff[v].is_positive())
        lower.push_back(s);
      else if (s.coeff[v].is_negative())
        upper.push_back(s);
      else
        keep.push_back(s);
    }
    for (const Strict& lo : lower)
      for (const Strict& up : upper) keep.push_back(combine(lo, up, v));
    for (Strict& s : keep) normalize(s);
    // Deduplicate identical rows to tame growth.
    std::vector<Strict> dedup;
    for (Strict& s : keep) {
      bool dup = false;
      for (const Strict& t : dedup)
        if (t.coeff == s.coeff && t.cst == s.cst) {
          dup = true;
          break;
        }
      if (!dup) dedup.push_back(std::move(s));
    }
    current = std::move(dedup);
  }

  for (const Strict& s : current) {
    bool constant = true;
    for (const Rational& c : s.coeff)
      if (!c.is_zero()) constant = false;
    if (constant && !s.cst.is_positive()) {
      result.status = FitStatus::Infeasible;
      std::string names;
      for (int e = 0; e < E; ++e)
        if (s.origin[e].is_positive()) {
          result.zero_forced_edges.push_back(e + 1);
          if (!names.empty()) names += " + ";
          if (s.origin[e] != Rational(1)) names += s.origin[e].str() + "*";
          names += "e" + std::to_string(e + 1);
        }
      result.certificate =
          "the equations force " + (names.empty() ? std::string("a length") : names) + " = " +
          s.cst.str() + ", impossible with positive lengths";
      return result;
    }
  }

  // Feasible: back-substitute free variables stage by stage.
  std::vector<Rational> value(nf);
  for (int v = 0; v < nf; ++v) {
    const std::vector<Strict>& sys = stages[nf - 1 - v];
    bool has_lo = false, has_hi = false;
    Rational lo, hi;
    for (const Strict& s : sys) {
      if (s.coeff[v].is_zero()) continue;
      // At this stage only variables 0..v survive; 0..v-1 are already fixed.
      Rational rest = s.cst;
      for (int j = 0; j < v; ++j) rest += s.coeff[j] * value[j];
      Rational bound = -rest / s.coeff[v];
      if (s.coeff[v].is_positive()) {
        if (!has_lo || bound > lo) lo = bound, has_lo = true;
      } else {
        if (!has_hi || bound < hi) hi = bound, has_hi = true;
      }
    }
    if (has_lo && has_hi)
      value[v] = (lo + hi) / Rational(2);
    else if (has_lo)
      value[v] = lo + Rational(1);
    else if (has_hi)
      value[v] = hi - Rational(1);
    else
      value[v] = Rational(1);
  }

  result.metric.length.assign(E + 1, Rational(0));
  for (int i = 0; i < nf; ++i) result.metric.length[free_vars[i] + 1] = value[i];
  for (std::size_t i = 0; i < pivot_col.size(); ++i) {
    Rational x = eq[i][E];
    for (int j = 0; j < nf; ++j) x -= eq[i][free_vars[j]] * value[j];
    result.metric.length[pivot_col[i] + 1] = x;
  }
  for (int e = 1; e <= E; ++e)
    if (!result.metric.length[e].is_positive())
      throw std::logic_error("fit_metric: back-substitution produced a non-positive length");

  result.verdict = check_signed_tat(g, result.metric, rel, sign);
  result.status = result.verdict.holds ? FitStatus::Feasible : FitStatus::FeasibleNotTat;
  return result;
}

// ---------------------------------------------------------------------------
// Linear solve over Z/n

std::optional<std::vector<int>> solve_mod_n(std::vector<std::vector<int>> a, std::vector<int> b,
                                            int n) {
  auto norm = [&](long long x) {
    long long m = x % n;
    if (m < 0) m += n;
    return static_cast<int>(m);
  };
  int rows = static_cast<int>(a.size());
  int cols = rows ? static_cast<int>(a[0].size()) : 0;
  for (auto& row : a)
    for (auto& x : row) x = norm(x);
  for (auto& x : b) x = norm(x);
  const std::vector<std::vector<int>> a0 = a;
  const std::vector<int> b0 = b;

  // Diagonalize with row and column operations; x = C * y.
  std::vector<std::vector<int>> C(cols, std::vector<int>(cols, 0));
  for (int j = 0; j < cols; ++j) C[j][j] = 1;

  auto row_sub = [&](int i, int k, long long q) {
    for (int j = 0; j < cols; ++j) a[i][j] = norm(a[i][j] - q * a[k][j]);
    b[i] = norm(b[i] - q * b[k]);
  };
  auto col_sub = [&](int j, int k, long long q) {
    for (int i = 0; i < rows; ++i) a[i][j] = norm(a[i][j] - q * a[i][k]);
    for (int i = 0; i < cols; ++i) C[i][j] = norm(C[i][j] - q * C[i][k]);
  };
  auto col_swap = [&](int j, int k) {
    for (int i = 0; i < rows; ++i) std::swap(a[i][j], a[i][k]);
    for (int i = 0; i < cols; ++i) std::swap(C[i][j], C[i][k]);
  };

  int rank = std::min(rows, cols);
  int k = 0;
  for (; k < rank; ++k) {
    bool empty = false;
    while (true) {
      int bi = -1, bj = -1;
      for (int i = k; i < rows; ++i)
        for (int j = k; j < cols; ++j)
          if (a[i][j] != 0 && (bi == -1 || a[i][j] < a[bi][bj])) {
            bi = i;
            bj = j;
          }
      if (bi == -1) {
        empty = true;
        break;
      }
      if (bi != k) {
        std::swap(a[k], a[bi]);
        std::swap(b[k], b[bi]);
      }
      if (bj != k) col_swap(k, bj);
      bool clean = true;
      for (int i = k + 1; i < rows; ++i)
        if (a[i][k] != 0) {
          row_sub(i, k, a[i][k] / a[k][k]);
          if (a[i][k] != 0) clean = false;
        }
      for (int j = k + 1; j < cols; ++j)
        if (a[k][j] != 0) {
          col_sub(j, k, a[k][j] / a[k][k]);
          if (a[k][j] != 0) clean = false;
        }
      if (clean) break;
    }
    if (empty) break;
  }

  std::vector<int> y(cols, 0);
  for (int i = 0; i < rows; ++i) {
    int d = (i < rank) ? a[i][i] : 0;
    if (d == 0) {
      if (b[i] != 0) return std::nullopt;
      continue;
    }
    int g = std::gcd(d, n);
    if (b[i] % g != 0) return std::nullopt;
    int n2 = n / g;
    long long t0 = 0, t1 = 1, m0 = n2, m1 = (d / g) % n2;
    while (m1 != 0) {
      long long q = m0 / m1;
      long long tmp = t0 - q * t1;
      t0 = t1;
      t1 = tmp;
      tmp = m0 - q * m1;
      m0 = m1;
      m1 = tmp;
    }
    long long inv = n2 == 1 ? 0 : ((t0 % n2) + n2) % n2;
    y[i] = static_cast<int>((static_cast<long long>(b[i] / g) * inv) % (n2 == 0 ? 1 : n2));
    if (n2 == 1) y[i] = 0;
  }

  std::vector<int> x(cols, 0);
  for (int i = 0; i < cols; ++i) {
    long long acc = 0;
    for (int j = 0; j < cols; ++j) acc += static_cast<long long>(C[i][j]) * y[j];
    x[i] = norm(acc);
  }
  for (int i = 0; i < rows; ++i) {
    long long acc = 0;
    for (int j = 0; j < cols; ++j) acc += static_cast<long long>(a0[i][j]) * x[j];
    if (norm(acc) != b0[i]) return std::nullopt;
  }
  return x;
}

}  // namespace tatg
