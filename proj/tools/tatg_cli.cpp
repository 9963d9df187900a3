#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tatg/io.hpp"
#include "tatg/mixed.hpp"
#include "tatg/verify.hpp"

using namespace tatg;

namespace {

// Exit codes: 0 success / property holds, 1 property fails, 2 input error.
constexpr int kOk = 0;
constexpr int kFails = 1;
constexpr int kBadInput = 2;

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream all;
    all << std::cin.rdbuf();
    return all.str();
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream all;
  all << in.rdbuf();
  return all.str();
}

Rational parse_fraction(const std::string& tok) {
  std::size_t slash = tok.find('/');
  if (slash == std::string::npos) return Rational(std::stoll(tok));
  return Rational(std::stoll(tok.substr(0, slash)), std::stoll(tok.substr(slash + 1)));
}

std::string point_str(const RibbonGraph&, const PointOnGraph& p) {
  if (p.at_vertex) return "v" + std::to_string(p.vertex);
  return "e" + std::to_string(edge_of(p.dart)) + ":" + p.offset.str();
}

int cmd_validate(const std::string& file) {
  auto doc = parse_tatg(read_input(file));
  auto report = validate(doc.graph, &doc.rel, &doc.metric);
  if (!report.ok) {
    std::cout << "INVALID " << report.message;
    if (report.witness_vertex) std::cout << " at v" << report.witness_vertex;
    std::cout << "\n";
    return kFails;
  }
  if (!doc.level_edges.empty() || doc.has_delta) {
    // Filtration structure is validated through the mixed machinery.
    FilteredGraph fg = to_filtered(doc);
    DeltaMap delta = doc.has_delta ? doc.delta : DeltaMap{{{{1, Rational(1)}}}};
    try {
      check_mixed_tat(fg, delta);
    } catch (const std::invalid_argument& ex) {
      std::cout << "INVALID " << ex.what() << "\n";
      return kFails;
    }
  }
  std::cout << "VALID\n";
  return kOk;
}

int cmd_invariants(const std::string& file) {
  auto doc = parse_tatg(read_input(file));
  auto inv = surface_invariants(doc.graph, &doc.rel);
  for (std::size_t f = 0; f < inv.face_cycles.size(); ++f) {
    Rational len;
    for (Dart d : inv.face_cycles[f]) len += doc.metric.edge_length(edge_of(d));
    std::cout << "face F" << inv.face_cycles[f][0] << ": darts " << inv.face_cycles[f].size()
              << " length " << len.str() << (inv.face_is_relative[f] ? " relative" : "") << "\n";
  }
  std::cout << "INVARIANTS V=" << inv.vertices << " E=" << inv.edges << " CHI=" << inv.euler
            << " B=" << inv.boundary_components << " G=" << inv.genus << "\n";
  return kOk;
}

int cmd_check(const std::string& file, const std::string& length, bool mixed) {
  auto doc = parse_tatg(read_input(file));
  if (mixed || !doc.level_edges.empty()) {
    if (!doc.has_delta) throw std::runtime_error("mixed check needs delta lines");
    FilteredGraph fg = to_filtered(doc);
    auto verdict = check_mixed_tat(fg, doc.delta);
    if (verdict.holds) {
      std::cout << "TAT HOLDS\n";
      return kOk;
    }
    const char* clause = verdict.clause == MixedClause::I     ? "I"
                         : verdict.clause == MixedClause::II  ? "II"
                         : verdict.clause == MixedClause::III ? "III"
                                                              : "structure";
    std::cout << "TAT FAILS clause=" << clause
              << " witness=" << point_str(doc.graph, *verdict.witness) << "\n";
    return kFails;
  }
  TatVerdict verdict;
  if (doc.has_signs) {
    verdict = check_signed_tat(doc.graph, doc.metric, doc.rel, doc.sign);
  } else {
    verdict = check_tat(doc.graph, doc.metric, doc.rel, parse_fraction(length));
  }
  if (verdict.holds) {
    std::cout << "TAT HOLDS\n";
    return kOk;
  }
  std::cout << "TAT FAILS witness=" << point_str(doc.graph, *verdict.witness) << "\n";
  return kFails;
}

int cmd_sigma(const std::string& file, const std::string& length) {
  auto doc = parse_tatg(read_input(file));
  SigmaMap sigma = doc.has_signs
                       ? compute_sigma_signed(doc.graph, doc.metric, doc.rel, doc.sign)
                       : compute_sigma(doc.graph, doc.metric, doc.rel, parse_fraction(length));
  if (sigma.vertex_action_defined) {
    std::cout << "vertices:";
    for (int v = 1; v <= doc.graph.vertex_count(); ++v)
      std::cout << " v" << v << "->v" << sigma.vertex_perm[v];
    std::cout << "\nedges:";
    for (int e = 1; e <= doc.graph.edge_count(); ++e)
      std::cout << " e" << e << "->e" << sigma.edge_perm[e];
    std::cout << "\n";
  }
  if (sigma.is_circle) std::cout << "circle case: rotation by the walk length\n";
  std::cout << "SIGMA order=" << sigma_order(sigma) << "\n";
  return kOk;
}

int cmd_fdtc(const std::string& file) {
  auto doc = parse_tatg(read_input(file));
  if (!doc.has_signs) {
    auto inv = surface_invariants(doc.graph, &doc.rel);
    doc.sign = SignAssignment::uniform(inv.face_cycles.size(), 1, inv.face_is_relative);
  }
  auto report = fdtc(doc.graph, doc.metric, doc.rel, doc.sign);
  auto faces = doc.graph.faces();
  for (const auto& entry : report.entries)
    std::cout << "FDTC F" << faces[entry.face][0] << " = " << entry.rot.str() << "\n";
  return kOk;
}

int cmd_screws(const std::string& file) {
  auto doc = parse_tatg(read_input(file));
  FilteredGraph fg = to_filtered(doc);
  if (!doc.has_delta) throw std::runtime_error("screw numbers need delta lines");
  auto screws = screw_numbers(fg, doc.delta);
  for (const auto& s : screws)
    std::cout << "SCREW level=" << s.level << " orbit=" << (s.orbit + 1)
              << " alpha=" << s.alpha << " value=" << s.value.str() << "\n";
  return kOk;
}

int cmd_dual(const std::string& file) {
  auto doc = parse_tatg(read_input(file));
  FilteredGraph fg = to_filtered(doc);
  if (!doc.has_delta) throw std::runtime_error("the dual graph needs delta lines");
  auto dual = dual_graph(fg, doc.delta);
  for (std::size_t i = 0; i < dual.nodes.size(); ++i)
    std::cout << "node " << i << ": level " << dual.nodes[i].level << " component "
              << dual.nodes[i].component << (dual.nodes[i].degenerate ? " degenerate" : "")
              << "\n";
  for (auto [a, b] : dual.edges) std::cout << "edge " << a << " -- " << b << "\n";
  std::cout << "DUAL vertices=" << dual.nodes.size() << " edges=" << dual.edges.size() << " "
            << (dual.is_tree ? "TREE" : "NOT-TREE") << "\n";
  return kOk;
}

int cmd_walk(const std::string& file, const std::string& start, const std::string& sign_str,
             const std::string& length, const std::string& dir, bool boundary) {
  auto doc = parse_tatg(read_input(file));
  std::size_t colon = start.find(':');
  if (colon == std::string::npos) throw std::runtime_error("start must be e<k>:<offset>");
  int e = std::stoi(start.substr(1, colon - 1));
  Rational off = parse_fraction(start.substr(colon + 1));
  PointOnGraph p = PointOnGraph::interior(doc.graph, doc.metric, orient_dart(e), off);

  WalkSign sign = sign_str == "+" ? WalkSign::Positive
                  : sign_str == "-" ? WalkSign::Negative
                                    : WalkSign::Constant;
  WalkTrace trace;
  if (boundary) {
    trace = boundary_safe_walk(doc.graph, doc.metric, doc.rel, p, sign, parse_fraction(length));
  } else {
    std::optional<Dart> d;
    if (dir == "+")
      d = orient_dart(e);
    else if (dir == "-")
      d = rev(orient_dart(e));
    trace = safe_walk(doc.graph, doc.metric, p, sign, parse_fraction(length), d);
  }
  for (const auto& step : trace.steps)
    std::cout << "STEP " << (is_orient(step.dart) ? "+" : "-") << "e" << edge_of(step.dart)
              << " entry " << step.entry_offset.str() << "\n";
  std::cout << "END " << point_str(doc.graph, trace.endpoint) << "\n";
  return kOk;
}

int cmd_gen(const std::string& kind, std::vector<std::string> args, const std::string& len) {
  GraphWithMetric gm;
  std::string name;
  if (kind == "kpq") {
    if (args.size() != 2) throw std::runtime_error("gen kpq needs p and q");
    gm = make_kpq(std::stoi(args[0]), std::stoi(args[1]),
                  len.empty() ? Rational(1, 2) : parse_fraction(len));
    name = "k" + args[0] + args[1];
  } else if (kind == "circle") {
    if (args.size() != 1) throw std::runtime_error("gen circle needs the total length");
    gm = make_circle(parse_fraction(args[0]));
    name = "circle";
  } else {
    throw std::runtime_error("unknown generator '" + kind + "'");
  }
  RelativeStructure none;
  std::cout << serialize_tatg(from_graph(gm.graph, gm.metric, none, nullptr, name));
  return kOk;
}

int cmd_blowup(const std::string& file, const std::string& vertex, const std::string& eps) {
  auto doc = parse_tatg(read_input(file));
  int v = std::stoi(vertex.substr(vertex[0] == 'v' ? 1 : 0));
  auto res = blow_up(doc.graph, doc.metric, doc.rel, v, parse_fraction(eps),
                     doc.has_signs ? &doc.sign : nullptr);
  std::cout << serialize_tatg(from_graph(res.graph, res.metric, res.rel, nullptr, doc.name));
  return kOk;
}

int cmd_fit(const std::string& file, const std::vector<std::string>& rots) {
  auto doc = parse_tatg(read_input(file));
  auto faces = doc.graph.faces();
  auto inv = surface_invariants(doc.graph, &doc.rel);
  std::map<std::string, int> key_to_face;
  for (std::size_t f = 0; f < faces.size(); ++f)
    key_to_face["F" + std::to_string(faces[f][0])] = static_cast<int>(f);

  SignAssignment sign;
  sign.sign_of_face.assign(faces.size(), 0);
  std::vector<Rational> targets(faces.size());
  for (const std::string& spec : rots) {
    std::size_t eq = spec.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--rot expects F<d>=<value>");
    auto it = key_to_face.find(spec.substr(0, eq));
    if (it == key_to_face.end()) throw std::runtime_error("unknown face " + spec.substr(0, eq));
    Rational r = parse_fraction(spec.substr(eq + 1));
    targets[it->second] = Rational::abs(r);
    sign.sign_of_face[it->second] = r.is_negative() ? -1 : r.is_positive() ? 1 : 0;
  }

  auto fit = fit_metric(doc.graph, doc.rel, sign, targets);
  switch (fit.status) {
    case FitStatus::Feasible: {
      TatgDocument out = from_graph(doc.graph, fit.metric, doc.rel, &sign, doc.name);
      std::cout << serialize_tatg(out);
      std::cout << "FIT FEASIBLE\n";
      return kOk;
    }
    case FitStatus::FeasibleNotTat:
      std::cout << "FIT FEASIBLE-NOT-TAT witness="
                << point_str(doc.graph, *fit.verdict.witness) << "\n";
      return kFails;
    case FitStatus::Infeasible: {
      std::cout << "FIT INFEASIBLE";
      if (!fit.zero_forced_edges.empty()) {
        std::cout << " forced-zero=";
        for (std::size_t i = 0; i < fit.zero_forced_edges.size(); ++i)
          std::cout << (i ? "+" : "") << "e" << fit.zero_forced_edges[i];
      }
      std::cout << "\n" << fit.certificate << "\n";
      return kFails;
    }
    default:
      std::cout << "FIT MALFORMED " << fit.certificate << "\n";
      return kBadInput;
  }
}

int cmd_realize(const std::string& file) {
  SpecTree tree = parse_spec(read_input(file));
  if (tree.single_piece && tree.root->piece.cap_voltages.empty()) {
    auto out = realize_periodic(tree.root->piece);
    std::cout << serialize_tatg(from_graph(out.graph, out.metric, out.rel, &out.sign, "realized"));
    std::cout << "REALIZED order=" << tree.root->piece.order << " boundaries="
              << tree.root->piece.boundaries.size() << "\n";
    return kOk;
  }
  auto mixed = realize_mixed(*tree.root);
  std::cout << serialize_tatg(from_filtered(mixed.fg, &mixed.delta, "realized"));
  std::cout << "REALIZED depth=" << mixed.fg.depth() << "\n";
  return kOk;
}

int cmd_attach(const std::string& base_file, const std::vector<std::string>& children,
               const std::vector<std::string>& cycles, const std::vector<std::string>& screws) {
  if (children.size() != cycles.size() || children.size() != screws.size())
    throw std::runtime_error("--child, --cycle and --screw must repeat together");
  auto base_doc = parse_tatg(read_input(base_file));
  if (!base_doc.has_delta) throw std::runtime_error("the base graph needs delta lines");
  FilteredGraph base = to_filtered(base_doc);

  std::vector<Attachment> atts;
  for (std::size_t i = 0; i < children.size(); ++i) {
    auto child_doc = parse_tatg(read_input(children[i]));
    Attachment att;
    att.base_cycle = std::stoi(cycles[i].substr(1)) - 1;
    att.child_graph = child_doc.graph;
    att.child_metric = child_doc.metric;
    att.child_rel = child_doc.rel;
    att.screw = parse_fraction(screws[i]);
    atts.push_back(std::move(att));
  }
  auto res = attach_level(base, base_doc.delta, atts);
  std::cout << serialize_tatg(from_filtered(res.fg, &res.delta, base_doc.name));
  std::cout << "ATTACHED depth=" << res.fg.depth() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tête-à-tête graph toolkit"};
  app.require_subcommand(1);

  std::string file = "-", length = "1", start, sign_str = "+", dir, vertex, eps;
  bool mixed = false, boundary = false;
  std::vector<std::string> rots, gen_args, children, cycles, screws;
  std::string gen_kind, gen_len;

  auto* v = app.add_subcommand("validate", "check the structural invariants of a file");
  v->add_option("file", file);
  auto* inv = app.add_subcommand("invariants", "surface invariants of the thickening");
  inv->add_option("file", file);
  auto* chk = app.add_subcommand("check", "decide the tête-à-tête property");
  chk->add_option("file", file);
  chk->add_option("--length", length, "walk length in units of pi (plain check only)");
  chk->add_flag("--mixed", mixed, "force the filtered check");
  auto* sg = app.add_subcommand("sigma", "induced automorphism of the graph");
  sg->add_option("file", file);
  sg->add_option("--length", length);
  auto* fd = app.add_subcommand("fdtc", "fractional twist coefficients per boundary");
  fd->add_option("file", file);
  auto* sc = app.add_subcommand("screws", "screw numbers of the filtration levels");
  sc->add_option("file", file);
  auto* du = app.add_subcommand("dual", "decomposition graph of the filtration");
  du->add_option("file", file);
  auto* wk = app.add_subcommand("walk", "trace a safe walk");
  wk->add_option("file", file);
  wk->add_option("--start", start, "e<k>:<offset>")->required();
  wk->add_option("--sign", sign_str, "+, - or 0");
  wk->add_option("--length", length);
  wk->add_option("--dir", dir, "+ along the edge, - against it");
  wk->add_flag("--boundary", boundary, "start along the relative set");
  auto* gn = app.add_subcommand("gen", "generate a graph file");
  gn->add_option("kind", gen_kind, "kpq or circle")->required();
  gn->add_option("args", gen_args, "kpq: p q; circle: total length");
  gn->add_option("--len", gen_len, "edge length for kpq");
  auto* bl = app.add_subcommand("blowup", "blow up a vertex orbit into relative circles");
  bl->add_option("file", file);
  bl->add_option("--vertex", vertex)->required();
  bl->add_option("--eps", eps)->required();
  auto* ft = app.add_subcommand("fit", "fit a metric to twist coefficients");
  ft->add_option("file", file);
  ft->add_option("--rot", rots, "F<d>=<coefficient>, signed");
  auto* rz = app.add_subcommand("realize", "realize quotient-orbit data");
  rz->add_option("file", file);
  auto* at = app.add_subcommand("attach", "attach child graphs along relative circles");
  at->add_option("file", file);
  at->add_option("--child", children, "child tatg file");
  at->add_option("--cycle", cycles, "A<k> of the base");
  at->add_option("--screw", screws, "negative screw number");

  CLI11_PARSE(app, argc, argv);

  try {
    if (v->parsed()) return cmd_validate(file);
    if (inv->parsed()) return cmd_invariants(file);
    if (chk->parsed()) return cmd_check(file, length, mixed);
    if (sg->parsed()) return cmd_sigma(file, length);
    if (fd->parsed()) return cmd_fdtc(file);
    if (sc->parsed()) return cmd_screws(file);
    if (du->parsed()) return cmd_dual(file);
    if (wk->parsed()) return cmd_walk(file, start, sign_str, length, dir, boundary);
    if (gn->parsed()) return cmd_gen(gen_kind, gen_args, gen_len);
    if (bl->parsed()) return cmd_blowup(file, vertex, eps);
    if (ft->parsed()) return cmd_fit(file, rots);
    if (rz->parsed()) return cmd_realize(file);
    if (at->parsed()) return cmd_attach(file, children, cycles, screws);
  } catch (const PropertyDoesNotHold& ex) {
    std::cout << "FAILS " << ex.what() << "\n";
    return kFails;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}
