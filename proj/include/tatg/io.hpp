#pragma once

#include <deque>
#include <string>
#include <vector>

#include "tatg/construct.hpp"
#include "tatg/mixed.hpp"
#include "tatg/ribbon.hpp"
#include "tatg/verify.hpp"

namespace tatg {

// Line-oriented text format, one object per line:
//   tatg 1 [name]
//   vertex v3: 5 9 2          counterclockwise dart list
//   edge e4: len 1/2          darts 7,8 implied by the numbering
//   relative A1: +e7 -e9      oriented edge cycle
//   sign F2 = -               faces keyed by their smallest dart
//   level 1: e3 e4
//   level 1 relative: A1
//   delta 1 @e3 = 1/6         component named by a member edge
// Lengths are reduced fractions in units of pi.
struct TatgDocument {
  std::string name;
  RibbonGraph graph;
  MetricAssignment metric;
  RelativeStructure rel;
  bool has_signs = false;
  SignAssignment sign;
  std::vector<std::vector<char>> level_edges;
  std::vector<std::vector<int>> level_rel_cycles;  // indices into rel.cycles
  bool has_delta = false;
  DeltaMap delta;
};

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what), line(line_) {}
};

TatgDocument parse_tatg(const std::string& text);
std::string serialize_tatg(const TatgDocument& doc);

FilteredGraph to_filtered(const TatgDocument& doc);
TatgDocument from_filtered(const FilteredGraph& fg, const DeltaMap* delta,
                           const std::string& name = {});
TatgDocument from_graph(const RibbonGraph& g, const MetricAssignment& metric,
                        const RelativeStructure& rel, const SignAssignment* sign = nullptr,
                        const std::string& name = {});

// Spec files for `realize`:
//   spec 1
//   piece root: genus 0 order 2
//   rot root = 1/2 +
//   branch root = 1 1 1
//   cap root = 0 0
//   voltage root = 0 1 0 ...   (optional, one entry per quotient spine edge)
//   attach child root cap 1 screw -1
//   piece child: genus 1 order 1
//   ...
struct SpecTree {
  std::deque<MixedSpecNode> nodes;  // stable storage; children point inside
  MixedSpecNode* root = nullptr;
  bool single_piece = false;        // no attachments: plain periodic data
};

SpecTree parse_spec(const std::string& text);

}  // namespace tatg
