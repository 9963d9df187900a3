#include "tatg/io.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace tatg {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Rational parse_rational(const std::string& tok, int line) {
  std::size_t slash = tok.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(tok));
    std::int64_t num = std::stoll(tok.substr(0, slash));
    std::int64_t den = std::stoll(tok.substr(slash + 1));
    if (den <= 0) throw ParseError(line, "NonPositiveLength: zero or negative denominator");
    return Rational(num, den);
  } catch (const ParseError&) {
    throw;
  } catch (...) {
    throw ParseError(line, "SyntaxError: bad fraction '" + tok + "'");
  }
}

int parse_id(const std::string& tok, char prefix, int line) {
  if (tok.size() < 2 || tok[0] != prefix)
    throw ParseError(line, std::string("SyntaxError: expected ") + prefix + "<number>, got '" +
                               tok + "'");
  try {
    return std::stoi(tok.substr(1));
  } catch (...) {
    throw ParseError(line, "SyntaxError: bad id '" + tok + "'");
  }
}

}  // namespace

TatgDocument parse_tatg(const std::string& text) {
  TatgDocument doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;

  std::map<int, std::vector<Dart>> vertices;
  std::map<int, Rational> edges;
  std::vector<std::pair<std::string, int>> sign_lines;  // face key, sign
  std::map<int, std::vector<int>> level_lines;
  std::map<int, std::vector<int>> level_rel_lines;
  std::vector<std::tuple<int, int, Rational>> delta_lines;  // level, edge, value

  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    auto toks = split_ws(stripped);
    if (toks.empty()) continue;
    if (!have_header) {
      if (toks[0] != "tatg" || toks.size() < 2 || toks[1] != "1")
        throw ParseError(lineno, "SyntaxError: expected 'tatg 1' header");
      if (toks.size() > 2) doc.name = toks[2];
      have_header = true;
      continue;
    }
    const std::string& kw = toks[0];
    if (kw == "vertex") {
      if (toks.size() < 3 || toks[2 - 1].back() != ':')
        throw ParseError(lineno, "SyntaxError: vertex v<k>: d1 d2 ...");
      int v = parse_id(toks[1].substr(0, toks[1].size() - 1), 'v', lineno);
      if (vertices.count(v)) throw ParseError(lineno, "DuplicateId: vertex v" + std::to_string(v));
      std::vector<Dart> rot;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        try {
          rot.push_back(std::stoi(toks[i]));
        } catch (...) {
          throw ParseError(lineno, "SyntaxError: bad dart '" + toks[i] + "'");
        }
      }
      if (rot.empty()) throw ParseError(lineno, "SyntaxError: empty vertex");
      vertices[v] = rot;
    } else if (kw == "edge") {
      if (toks.size() != 4 || toks[1].back() != ':' || toks[2] != "len")
        throw ParseError(lineno, "SyntaxError: edge e<k>: len p/q");
      int e = parse_id(toks[1].substr(0, toks[1].size() - 1), 'e', lineno);
      if (edges.count(e)) throw ParseError(lineno, "DuplicateId: edge e" + std::to_string(e));
      Rational len = parse_rational(toks[3], lineno);
      if (!len.is_positive())
        throw ParseError(lineno, "NonPositiveLength: edge e" + std::to_string(e));
      edges[e] = len;
    } else if (kw == "relative") {
      if (toks.size() < 3 || toks[1].back() != ':')
        throw ParseError(lineno, "SyntaxError: relative A<k>: +e1 -e2 ...");
      int a = parse_id(toks[1].substr(0, toks[1].size() - 1), 'A', lineno);
      if (a != static_cast<int>(doc.rel.cycles.size()) + 1)
        throw ParseError(lineno, "SyntaxError: relative cycles must be numbered in order");
      std::vector<Dart> cyc;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        const std::string& t = toks[i];
        if (t.size() < 3 || (t[0] != '+' && t[0] != '-'))
          throw ParseError(lineno, "SyntaxError: expected +e<k> or -e<k>");
        int e = parse_id(t.substr(1), 'e', lineno);
        cyc.push_back(t[0] == '+' ? orient_dart(e) : rev(orient_dart(e)));
      }
      doc.rel.cycles.push_back(std::move(cyc));
    } else if (kw == "sign") {
      if (toks.size() != 4 || toks[2] != "=")
        throw ParseError(lineno, "SyntaxError: sign F<d> = +|-|0");
      int key = parse_id(toks[1], 'F', lineno);
      int s;
      if (toks[3] == "+")
        s = 1;
      else if (toks[3] == "-")
        s = -1;
      else if (toks[3] == "0")
        s = 0;
      else
        throw ParseError(lineno, "SyntaxError: sign must be +, - or 0");
      sign_lines.push_back({"F" + std::to_string(key), s});
    } else if (kw == "level") {
      if (toks.size() >= 3 && toks[2] == "relative:") {
        int lvl = 0;
        try {
          lvl = std::stoi(toks[1]);
        } catch (...) {
          throw ParseError(lineno, "SyntaxError: level <k> relative: A1 ...");
        }
        std::vector<int>& cycles = level_rel_lines[lvl];
        for (std::size_t i = 3; i < toks.size(); ++i)
          cycles.push_back(parse_id(toks[i], 'A', lineno));
      } else {
        if (toks.size() < 3 || toks[1].back() != ':')
          throw ParseError(lineno, "SyntaxError: level <k>: e1 e2 ...");
        int lvl = 0;
        try {
          lvl = std::stoi(toks[1].substr(0, toks[1].size() - 1));
        } catch (...) {
          throw ParseError(lineno, "SyntaxError: bad level number");
        }
        if (level_lines.count(lvl))
          throw ParseError(lineno, "DuplicateId: level " + std::to_string(lvl));
        std::vector<int>& es = level_lines[lvl];
        for (std::size_t i = 2; i < toks.size(); ++i) es.push_back(parse_id(toks[i], 'e', lineno));
      }
    } else if (kw == "delta") {
      if (toks.size() != 5 || toks[2][0] != '@' || toks[3] != "=")
        throw ParseError(lineno, "SyntaxError: delta <k> @e<m> = p/q");
      int lvl = 0;
      try {
        lvl = std::stoi(toks[1]);
      } catch (...) {
        throw ParseError(lineno, "SyntaxError: bad delta level");
      }
      int e = parse_id(toks[2].substr(1), 'e', lineno);
      Rational v = parse_rational(toks[4], lineno);
      if (v.is_negative()) throw ParseError(lineno, "NonPositiveLength: delta must be >= 0");
      delta_lines.push_back({lvl, e, v});
    } else {
      throw ParseError(lineno, "SyntaxError: unknown keyword '" + kw + "'");
    }
  }
  if (!have_header) throw ParseError(lineno, "SyntaxError: missing 'tatg 1' header");
  if (vertices.empty() || edges.empty()) throw ParseError(lineno, "SyntaxError: empty graph");

  int V = static_cast<int>(vertices.size());
  int E = static_cast<int>(edges.size());
  for (int v = 1; v <= V; ++v)
    if (!vertices.count(v)) throw ParseError(lineno, "UnknownId: missing vertex v" + std::to_string(v));
  for (int e = 1; e <= E; ++e)
    if (!edges.count(e)) throw ParseError(lineno, "UnknownId: missing edge e" + std::to_string(e));

  std::vector<std::vector<Dart>> rotations(V);
  for (auto& [v, rot] : vertices) {
    for (Dart d : rot)
      if (d < 1 || d > 2 * E)
        throw ParseError(lineno, "UnknownId: dart " + std::to_string(d) + " at vertex v" +
                                     std::to_string(v));
    rotations[v - 1] = rot;
  }
  try {
    doc.graph = RibbonGraph::from_rotations(rotations);
  } catch (const std::exception& ex) {
    throw ParseError(lineno, std::string("SyntaxError: ") + ex.what());
  }
  doc.metric.length.assign(E + 1, Rational(0));
  for (auto& [e, len] : edges) doc.metric.length[e] = len;
  for (const auto& cyc : doc.rel.cycles)
    for (Dart d : cyc)
      if (edge_of(d) > E) throw ParseError(lineno, "UnknownId: relative edge out of range");

  if (!sign_lines.empty()) {
    auto faces = doc.graph.faces();
    std::map<std::string, int> key_to_face;
    for (std::size_t f = 0; f < faces.size(); ++f)
      key_to_face["F" + std::to_string(faces[f][0])] = static_cast<int>(f);
    auto inv = surface_invariants(doc.graph, &doc.rel);
    doc.sign.sign_of_face.assign(faces.size(), 0);
    std::vector<char> assigned(faces.size(), 0);
    for (auto& [key, s] : sign_lines) {
      auto it = key_to_face.find(key);
      if (it == key_to_face.end()) throw ParseError(0, "UnknownId: face " + key);
      if (assigned[it->second]) throw ParseError(0, "DuplicateId: face " + key);
      if (inv.face_is_relative[it->second] && s != 0)
        throw ParseError(0, "SyntaxError: sign on a relative face " + key);
      assigned[it->second] = 1;
      doc.sign.sign_of_face[it->second] = s;
    }
    for (std::size_t f = 0; f < faces.size(); ++f)
      if (!inv.face_is_relative[f] && !assigned[f])
        throw ParseError(0, "UnknownId: face F" + std::to_string(faces[f][0]) +
                                " needs a sign once any sign is given");
    doc.has_signs = true;
  }

  if (!level_lines.empty()) {
    int depth = 0;
    for (auto& [lvl, _] : level_lines) depth = std::max(depth, lvl);
    for (int i = 1; i <= depth; ++i)
      if (!level_lines.count(i)) throw ParseError(0, "UnknownId: missing level " + std::to_string(i));
    for (int i = 1; i <= depth; ++i) {
      std::vector<char> set(E + 1, 0);
      for (int e : level_lines[i]) {
        if (e < 1 || e > E) throw ParseError(0, "UnknownId: level edge e" + std::to_string(e));
        set[e] = 1;
      }
      doc.level_edges.push_back(std::move(set));
      std::vector<int> cycles;
      if (level_rel_lines.count(i)) {
        for (int a : level_rel_lines[i]) {
          if (a < 1 || a > static_cast<int>(doc.rel.cycles.size()))
            throw ParseError(0, "UnknownId: relative cycle A" + std::to_string(a));
          cycles.push_back(a - 1);
        }
      }
      doc.level_rel_cycles.push_back(std::move(cycles));
    }
  }

  if (!delta_lines.empty()) {
    int depth = static_cast<int>(doc.level_edges.size());
    doc.delta.entries.assign(depth + 1, {});
    for (auto& [lvl, e, v] : delta_lines) {
      if (lvl < 0 || lvl > depth) throw ParseError(0, "UnknownId: delta level out of range");
      if (e < 1 || e > E) throw ParseError(0, "UnknownId: delta edge e" + std::to_string(e));
      doc.delta.entries[lvl].push_back({e, v});
    }
    doc.has_delta = true;
  }
  return doc;
}

std::string serialize_tatg(const TatgDocument& doc) {
  std::ostringstream out;
  out << "tatg 1";
  if (!doc.name.empty()) out << " " << doc.name;
  out << "\n";
  for (int v = 1; v <= doc.graph.vertex_count(); ++v) {
    out << "vertex v" << v << ":";
    for (Dart d : doc.graph.rotation(v)) out << " " << d;
    out << "\n";
  }
  for (int e = 1; e <= doc.graph.edge_count(); ++e)
    out << "edge e" << e << ": len " << doc.metric.edge_length(e).str() << "\n";
  for (const auto& cyc : doc.rel.cycles) {
    out << "relative A" << (&cyc - doc.rel.cycles.data() + 1) << ":";
    for (Dart d : cyc) out << " " << (is_orient(d) ? "+" : "-") << "e" << edge_of(d);
    out << "\n";
  }
  if (doc.has_signs) {
    auto faces = doc.graph.faces();
    auto inv = surface_invariants(doc.graph, &doc.rel);
    for (std::size_t f = 0; f < faces.size(); ++f) {
      if (inv.face_is_relative[f]) continue;
      int s = doc.sign.sign_of_face[f];
      out << "sign F" << faces[f][0] << " = " << (s > 0 ? "+" : s < 0 ? "-" : "0") << "\n";
    }
  }
  for (std::size_t i = 0; i < doc.level_edges.size(); ++i) {
    out << "level " << (i + 1) << ":";
    for (int e = 1; e <= doc.graph.edge_count(); ++e)
      if (doc.level_edges[i][e]) out << " e" << e;
    out << "\n";
    if (!doc.level_rel_cycles[i].empty()) {
      out << "level " << (i + 1) << " relative:";
      for (int a : doc.level_rel_cycles[i]) out << " A" << (a + 1);
      out << "\n";
    }
  }
  if (doc.has_delta) {
    for (std::size_t lvl = 0; lvl < doc.delta.entries.size(); ++lvl)
      for (const auto& [e, v] : doc.delta.entries[lvl])
        out << "delta " << lvl << " @e" << e << " = " << v.str() << "\n";
  }
  return out.str();
}

FilteredGraph to_filtered(const TatgDocument& doc) {
  FilteredGraph fg;
  fg.graph = doc.graph;
  fg.metric = doc.metric;
  fg.rel = doc.rel;
  fg.level_edges = doc.level_edges;
  for (const auto& cycles : doc.level_rel_cycles) {
    RelativeStructure r;
    for (int idx : cycles) r.cycles.push_back(doc.rel.cycles[idx]);
    fg.level_rel.push_back(std::move(r));
  }
  return fg;
}

TatgDocument from_filtered(const FilteredGraph& fg, const DeltaMap* delta,
                           const std::string& name) {
  TatgDocument doc;
  doc.name = name;
  doc.graph = fg.graph;
  doc.metric = fg.metric;
  doc.rel = fg.rel;
  doc.level_edges = fg.level_edges;
  // Match each level cycle with its index in the top relative list.
  for (const auto& lr : fg.level_rel) {
    std::vector<int> idxs;
    for (const auto& cyc : lr.cycles) {
      int found = -1;
      for (std::size_t k = 0; k < fg.rel.cycles.size(); ++k)
        if (fg.rel.cycles[k] == cyc) found = static_cast<int>(k);
      if (found < 0) throw std::invalid_argument("level cycle is not a top-level cycle");
      idxs.push_back(found);
    }
    doc.level_rel_cycles.push_back(std::move(idxs));
  }
  if (delta) {
    doc.has_delta = true;
    doc.delta = *delta;
  }
  return doc;
}

TatgDocument from_graph(const RibbonGraph& g, const MetricAssignment& metric,
                        const RelativeStructure& rel, const SignAssignment* sign,
                        const std::string& name) {
  TatgDocument doc;
  doc.name = name;
  doc.graph = g;
  doc.metric = metric;
  doc.rel = rel;
  if (sign) {
    doc.has_signs = true;
    doc.sign = *sign;
  }
  return doc;
}

SpecTree parse_spec(const std::string& text) {
  SpecTree tree;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  std::map<std::string, MixedSpecNode*> by_name;
  struct Edge {
    std::string child, parent;
    int cap;
    Rational screw;
  };
  std::vector<Edge> edges;
  std::map<std::string, char> has_parent;

  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    auto toks = split_ws(stripped);
    if (toks.empty()) continue;
    if (!have_header) {
      if (toks[0] != "spec" || toks.size() < 2 || toks[1] != "1")
        throw ParseError(lineno, "SyntaxError: expected 'spec 1' header");
      have_header = true;
      continue;
    }
    const std::string& kw = toks[0];
    if (kw == "piece") {
      if (toks.size() != 6 || toks[2] != "genus" || toks[4] != "order")
        throw ParseError(lineno, "SyntaxError: piece <name>: genus G order N");
      if (toks[1].back() == ':') toks[1].pop_back();
      if (by_name.count(toks[1])) throw ParseError(lineno, "DuplicateId: piece " + toks[1]);
      tree.nodes.emplace_back();
      MixedSpecNode* node = &tree.nodes.back();
      try {
        node->piece.quotient_genus = std::stoi(toks[3]);
        node->piece.order = std::stoi(toks[5]);
      } catch (...) {
        throw ParseError(lineno, "SyntaxError: bad genus or order");
      }
      by_name[toks[1]] = node;
    } else if (kw == "rot" || kw == "branch" || kw == "cap" || kw == "voltage") {
      if (toks.size() < 3 || toks[2] != "=")
        throw ParseError(lineno, "SyntaxError: " + kw + " <piece> = ...");
      auto it = by_name.find(toks[1]);
      if (it == by_name.end()) throw ParseError(lineno, "UnknownId: piece " + toks[1]);
      MixedSpecNode* node = it->second;
      if (kw == "rot") {
        if (toks.size() != 5) throw ParseError(lineno, "SyntaxError: rot <piece> = R +|-|0");
        BoundaryTarget t;
        t.rot = parse_rational(toks[3], lineno);
        if (toks[4] == "+")
          t.sign = 1;
        else if (toks[4] == "-")
          t.sign = -1;
        else if (toks[4] == "0")
          t.sign = 0;
        else
          throw ParseError(lineno, "SyntaxError: sign must be +, - or 0");
        node->piece.boundaries.push_back(t);
      } else {
        for (std::size_t i = 3; i < toks.size(); ++i) {
          int w;
          try {
            w = std::stoi(toks[i]);
          } catch (...) {
            throw ParseError(lineno, "SyntaxError: bad voltage '" + toks[i] + "'");
          }
          if (kw == "branch")
            node->piece.branch_voltages.push_back(w);
          else if (kw == "cap")
            node->piece.cap_voltages.push_back(w);
          else
            node->piece.edge_voltages.push_back(w);
        }
      }
    } else if (kw == "attach") {
      if (toks.size() != 7 || toks[3] != "cap" || toks[5] != "screw")
        throw ParseError(lineno, "SyntaxError: attach <child> <parent> cap K screw S");
      Edge e;
      e.child = toks[1];
      e.parent = toks[2];
      try {
        e.cap = std::stoi(toks[4]);
      } catch (...) {
        throw ParseError(lineno, "SyntaxError: bad cap index");
      }
      e.screw = parse_rational(toks[6], lineno);
      edges.push_back(e);
      has_parent[e.child] = 1;
    } else {
      throw ParseError(lineno, "SyntaxError: unknown keyword '" + kw + "'");
    }
  }
  if (tree.nodes.empty()) throw ParseError(lineno, "SyntaxError: no pieces");

  for (const Edge& e : edges) {
    auto c = by_name.find(e.child);
    auto p = by_name.find(e.parent);
    if (c == by_name.end()) throw ParseError(0, "UnknownId: piece " + e.child);
    if (p == by_name.end()) throw ParseError(0, "UnknownId: piece " + e.parent);
    MixedSpecNode::Child ch;
    ch.cap_index = e.cap - 1;
    ch.screw = e.screw;
    ch.node = c->second;
    p->second->children.push_back(ch);
  }
  int roots = 0;
  for (auto& [name, node] : by_name)
    if (!has_parent.count(name)) {
      tree.root = node;
      ++roots;
    }
  if (roots != 1) throw ParseError(0, "SyntaxError: the pieces must form a single tree");
  tree.single_piece = tree.nodes.size() == 1 && edges.empty();
  return tree;
}

}  // namespace tatg
