#include <doctest.h>

#include "oracles.hpp"
#include "treeattn/error.hpp"
#include "treeattn/treebank.hpp"

using namespace treeattn;

namespace {

std::string conllu_line(int id, const std::string& form, int head) {
  return std::to_string(id) + "\t" + form + "\t_\t_\t_\t_\t" + std::to_string(head) + "\tdep\t_\t_\n";
}

const std::string kSheEatsFish = conllu_line(1, "She", 2) + conllu_line(2, "eats", 0) + conllu_line(3, "fish", 2);

std::string to_conllu(const SyntaxTree& t) {
  std::string s = "# generated\n";
  for (const auto& n : t.nodes) s += conllu_line(*n.token_index, t.tokens[*n.token_index - 1].form, n.parent.value_or(0));
  return s + "\n";
}

template <typename F>
std::string error_text(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("conllu: she eats fish") {
  auto trees = parse_conllu(kSheEatsFish);
  REQUIRE(trees.size() == 1);
  const auto& t = trees[0];
  CHECK(t.kind == TreeKind::Dependency);
  CHECK(t.root_id == 2);
  CHECK(t.nodes[0].parent == 2);
  CHECK(!t.nodes[1].parent);
  CHECK(t.nodes[2].parent == 2);
  CHECK(t.tokens[2].form == "fish");
  CHECK(validate(t).empty());
}

TEST_CASE("conllu: empty document") {
  CHECK(parse_conllu("").empty());
  CHECK(parse_conllu("\n\n# only a comment\n\n").empty());
}

TEST_CASE("conllu: multiword ranges, empty nodes and comments are skipped") {
  std::string text = "# sent_id = 1\n1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n" + conllu_line(1, "do", 0) +
                     conllu_line(2, "n't", 1) + "1.1\tghost\t_\t_\t_\t_\t_\t_\t_\t_\n";
  auto trees = parse_conllu(text);
  REQUIRE(trees.size() == 1);
  CHECK(trees[0].token_count() == 2);
  CHECK(trees[0].nodes[1].parent == 1);
}

TEST_CASE("conllu: column count error names the line") {
  std::string text = conllu_line(1, "a", 0) + "2\tb\t_\t_\t_\t_\t1\tdep\t_\n";
  CHECK_THROWS_AS(parse_conllu(text), FormatError);
  CHECK(error_text([&] { parse_conllu(text); }).find("line 2") != std::string::npos);
}

TEST_CASE("conllu: head referencing a missing token") {
  std::string text = conllu_line(1, "a", 0) + conllu_line(2, "b", 7);
  CHECK_THROWS_AS(parse_conllu(text), StructureError);
}

TEST_CASE("conllu: cycle in the second sentence is reported for sentence 2") {
  std::string text = kSheEatsFish + "\n" + conllu_line(1, "a", 2) + conllu_line(2, "b", 1) + conllu_line(3, "c", 0);
  CHECK_THROWS_AS(parse_conllu(text), StructureError);
  CHECK(error_text([&] { parse_conllu(text); }).find("sentence 2") != std::string::npos);
}

TEST_CASE("ptb: basic tree") {
  auto trees = parse_ptb("(S (NP she) (VP eats))");
  REQUIRE(trees.size() == 1);
  const auto& t = trees[0];
  CHECK(t.kind == TreeKind::Constituency);
  REQUIRE(t.token_count() == 2);
  CHECK(t.tokens[0].form == "she");
  CHECK(t.tokens[1].form == "eats");
  CHECK(validate(t).empty());
  const auto idx = oracle::node_index(t);
  CHECK(idx.at(t.root_id)->label == "S");
  // children of the root in order
  std::vector<std::string> kids;
  for (const auto& n : t.nodes)
    if (n.parent == t.root_id) kids.push_back(n.label);
  CHECK(kids == std::vector<std::string>{"NP", "VP"});
}

TEST_CASE("ptb: unbalanced parentheses") {
  CHECK_THROWS_AS(parse_ptb("(S (NP she) (VP eats)"), FormatError);
  CHECK_THROWS_AS(parse_ptb("(S (NP she)) (VP eats))"), FormatError);
  CHECK(error_text([] { parse_ptb("(S (NP she)))"); }).find("byte") != std::string::npos);
}

TEST_CASE("ptb: empty expression") {
  CHECK_THROWS_AS(parse_ptb("()"), FormatError);
}

TEST_CASE("ptb: -NONE- elements are removed with childless parents") {
  auto t = parse_ptb("(S (-NONE- *) (VP eats))")[0];
  REQUIRE(t.token_count() == 1);
  CHECK(t.tokens[0].form == "eats");
  std::size_t internal_kids = 0;
  for (const auto& n : t.nodes)
    if (n.parent == t.root_id) ++internal_kids;
  CHECK(internal_kids == 1);

  auto u = parse_ptb("(S (NP (-NONE- *T*-1)) (VP (V eats) (NP fish)))")[0];
  CHECK(u.token_count() == 2);
  for (const auto& n : u.nodes) CHECK(n.label != "-NONE-");
  CHECK(validate(u).empty());
}

TEST_CASE("ptb: labels keep function tags") {
  auto t = parse_ptb("(S (NP-SBJ-1 she) (VP=2 eats))")[0];
  bool found = false;
  for (const auto& n : t.nodes) found = found || n.label == "NP-SBJ-1";
  CHECK(found);
}

TEST_CASE("ptb: several trees and leaf order") {
  auto trees = parse_ptb("(S (A a) (B (C b) (D c)))\n(X (Y d))");
  REQUIRE(trees.size() == 2);
  CHECK(trees[0].token_count() == 3);
  CHECK(trees[1].token_count() == 1);
}

TEST_CASE("validate: multiple roots") {
  SyntaxTree t;
  t.kind = TreeKind::Dependency;
  t.tokens = {{1, "a"}, {2, "b"}, {3, "c"}, {4, "d"}};
  t.nodes = {{1, "x", std::nullopt, 1}, {2, "x", 1, 2}, {3, "x", 4, 3}, {4, "x", std::nullopt, 4}};
  t.root_id = 1;
  CHECK(validate(t) == std::vector<std::string>{"multiple roots: ids 1, 4"});
}

TEST_CASE("validate: internal constituency node with a token") {
  auto t = parse_ptb("(S (NP she) (VP eats))")[0];
  for (auto& n : t.nodes)
    if (n.label == "NP") n.token_index = 1;
  auto v = validate(t);
  REQUIRE(!v.empty());
  bool named = false;
  for (const auto& s : v) named = named || s.find("internal node") != std::string::npos;
  CHECK(named);
}

TEST_CASE("validate: cycle") {
  SyntaxTree t;
  t.tokens = {{1, "a"}, {2, "b"}, {3, "c"}};
  t.nodes = {{1, "x", std::nullopt, 1}, {2, "x", 3, 2}, {3, "x", 2, 3}};
  t.root_id = 1;
  CHECK(!validate(t).empty());
  CHECK_THROWS_AS(require_valid(t), StructureError);
}

TEST_CASE("json: key order and round trip") {
  auto t = parse_conllu(kSheEatsFish)[0];
  auto j = to_json(t);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"kind", "tokens", "nodes", "root"});
  CHECK(j.dump() ==
        R"({"kind":"dependency","tokens":[{"index":1,"form":"She"},{"index":2,"form":"eats"},{"index":3,"form":"fish"}],)"
        R"("nodes":[{"id":1,"label":"dep","parent":2,"token":1},{"id":2,"label":"dep","parent":null,"token":2},)"
        R"({"id":3,"label":"dep","parent":2,"token":3}],"root":2})");
  CHECK(tree_from_json(nlohmann::json::parse(j.dump())) == t);
}

TEST_CASE("json: malformed input is a format error") {
  CHECK_THROWS_AS(tree_from_json(nlohmann::json::parse(R"({"kind":"dependency"})")), FormatError);
}

TEST_CASE("property: random dependency trees survive CoNLL-U and JSON round trips") {
  Rng rng(42);
  for (int it = 0; it < 300; ++it) {
    auto t = oracle::random_dependency(1 + rng.below(15), rng);
    REQUIRE(validate(t).empty());
    auto back = parse_conllu(to_conllu(t));
    REQUIRE(back.size() == 1);
    CHECK(back[0].root_id == t.root_id);
    for (std::size_t k = 0; k < t.nodes.size(); ++k) CHECK(back[0].nodes[k].parent == t.nodes[k].parent);
    CHECK(tree_from_json(nlohmann::json::parse(to_json(back[0]).dump())) == back[0]);
  }
}

TEST_CASE("property: random bracketings parse to valid trees in reading order") {
  Rng rng(43);
  for (int it = 0; it < 300; ++it) {
    const std::size_t n = 1 + rng.below(12);
    auto t = parse_ptb(oracle::random_bracketing(n, rng))[0];
    REQUIRE(validate(t).empty());
    REQUIRE(t.token_count() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(t.tokens[i].form == "w" + std::to_string(i + 1));
    CHECK(tree_from_json(nlohmann::json::parse(to_json(t).dump())) == t);
  }
}
