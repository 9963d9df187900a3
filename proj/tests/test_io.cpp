#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tatg/io.hpp"
#include "tatg/mixed.hpp"

using namespace tatg;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string data_dir() {
#ifdef TATG_DATA_DIR
  return TATG_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace

TEST_CASE("every corpus file validates and round-trips byte for byte") {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir())) {
    if (entry.path().extension() != ".tatg") continue;
    ++seen;
    std::string text = slurp(entry.path());
    TatgDocument doc = parse_tatg(text);
    CHECK(validate(doc.graph, &doc.rel, &doc.metric).ok);
    CHECK(serialize_tatg(doc) == text);
  }
  CHECK(seen >= 8);
}

TEST_CASE("serialization is a left inverse of parsing on fresh documents") {
  auto gm = make_kpq(3, 4, Rational(2, 7));
  RelativeStructure none;
  std::string text = serialize_tatg(from_graph(gm.graph, gm.metric, none, nullptr, "sample"));
  TatgDocument doc = parse_tatg(text);
  CHECK(serialize_tatg(doc) == text);
  CHECK(doc.name == "sample");
  CHECK(doc.graph.dart_count() == gm.graph.dart_count());
  CHECK(doc.metric.length == gm.metric.length);
}

TEST_CASE("parse errors carry lines and kinds") {
  CHECK_THROWS_AS(parse_tatg("nonsense\n"), ParseError);
  // Zero denominator.
  CHECK_THROWS_WITH_AS(parse_tatg("tatg 1\nvertex v1: 1 2\nedge e1: len 1/0\n"),
                       doctest::Contains("NonPositiveLength"), ParseError);
  // Negative length.
  CHECK_THROWS_WITH_AS(parse_tatg("tatg 1\nvertex v1: 1 2\nedge e1: len -1/2\n"),
                       doctest::Contains("NonPositiveLength"), ParseError);
  // Filtration references an undeclared edge.
  auto c = make_circle(Rational(2));
  RelativeStructure none;
  std::string base = serialize_tatg(from_graph(c.graph, c.metric, none));
  CHECK_THROWS_WITH_AS(parse_tatg(base + "level 1: e9\n"), doctest::Contains("UnknownId"),
                       ParseError);
  // Duplicate ids.
  CHECK_THROWS_WITH_AS(
      parse_tatg("tatg 1\nvertex v1: 1 2\nvertex v1: 1 2\nedge e1: len 1\n"),
      doctest::Contains("DuplicateId"), ParseError);
  // Dart out of range.
  CHECK_THROWS_WITH_AS(parse_tatg("tatg 1\nvertex v1: 1 7\nedge e1: len 1\n"),
                       doctest::Contains("UnknownId"), ParseError);
}

TEST_CASE("sign sections must cover all cylinder faces") {
  auto gm = make_kpq(2, 2);  // two faces
  RelativeStructure none;
  std::string base = serialize_tatg(from_graph(gm.graph, gm.metric, none));
  auto faces = gm.graph.faces();
  std::string one_sign = base + "sign F" + std::to_string(faces[0][0]) + " = +\n";
  CHECK_THROWS_AS(parse_tatg(one_sign), ParseError);
  std::string both = one_sign + "sign F" + std::to_string(faces[1][0]) + " = -\n";
  TatgDocument doc = parse_tatg(both);
  CHECK(doc.has_signs);
  CHECK(doc.sign.sign_of_face[0] == 1);
  CHECK(doc.sign.sign_of_face[1] == -1);
}

TEST_CASE("filtered documents rebuild their filtration") {
  std::string text = slurp(data_dir() + std::string("/non_regular2.tatg"));
  TatgDocument doc = parse_tatg(text);
  REQUIRE(doc.level_edges.size() == 1);
  REQUIRE(doc.has_delta);
  FilteredGraph fg = to_filtered(doc);
  CHECK(check_mixed_tat(fg, doc.delta).holds);
  // Round-trip through from_filtered keeps the canonical form.
  TatgDocument again = from_filtered(fg, &doc.delta, doc.name);
  CHECK(serialize_tatg(again) == text);
}

TEST_CASE("spec files parse into trees") {
  std::string text = slurp(data_dir() + std::string("/half_turn.spec"));
  SpecTree tree = parse_spec(text);
  REQUIRE(tree.root != nullptr);
  CHECK(tree.root->piece.order == 2);
  REQUIRE(tree.root->children.size() == 1);
  CHECK(tree.root->children[0].screw == Rational(-1));
  CHECK(tree.root->children[0].node->piece.quotient_genus == 1);

  CHECK_THROWS_AS(parse_spec("spec 1\n"), ParseError);
  // Two roots.
  CHECK_THROWS_AS(parse_spec("spec 1\npiece a: genus 0 order 1\npiece b: genus 0 order 1\n"),
                  ParseError);
}
