#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "treeattn/cli.hpp"
#include "treeattn/probe.hpp"
#include "treeattn/toytask.hpp"

using namespace treeattn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir() {
  auto dir = fs::temp_directory_path() / ("treeattn_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  auto p = scratch_dir() / name;
  std::ofstream(p, std::ios::binary) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kConllu =
    "# text = She eats fish\n"
    "1\tShe\t_\t_\t_\t_\t2\tnsubj\t_\t_\n"
    "2\teats\t_\t_\t_\t_\t0\troot\t_\t_\n"
    "3\tfish\t_\t_\t_\t_\t2\tobj\t_\t_\n"
    "\n"
    "1\tBirds\t_\t_\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tsing\t_\t_\t_\t_\t0\troot\t_\t_\n"
    "\n";
const std::string kPtb = "(S (NP She) (VP (V eats) (NP fish)))\n(S (NP Birds) (VP sing))\n";

}  // namespace

TEST_CASE("cli: usage") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("max_dist") != std::string::npos);
  CHECK(help.out.find("toytrain") != std::string::npos);
}

TEST_CASE("cli: parse") {
  auto conllu = write("a.conllu", kConllu);
  auto r = run({"parse", "--format", "conllu", conllu});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.size() == 2);
  CHECK(j[0]["root"] == 2);
  auto p = run({"parse", "--format", "ptb", write("a.ptb", kPtb)});
  CHECK(p.code == 0);
  CHECK(nlohmann::json::parse(p.out)[1]["kind"] == "constituency");

  auto bad = write("bad.conllu", "1\tShe\t_\t_\t_\t_\t0\troot\t_\n");
  auto b = run({"parse", "--format", "conllu", bad});
  CHECK(b.code == 2);
  CHECK(b.err.find("line 1") != std::string::npos);
  CHECK(run({"parse", "--format", "ptb", write("bad.ptb", "(S (NP x)")}).code == 2);
  CHECK(run({"parse", "--format", "conllu", "/nonexistent/file.conllu"}).code == 1);
  auto cyc = write("cyc.conllu", "1\ta\t_\t_\t_\t_\t2\tx\t_\t_\n2\tb\t_\t_\t_\t_\t1\tx\t_\t_\n");
  CHECK(run({"parse", "--format", "conllu", cyc}).code == 3);
}

TEST_CASE("cli: masks counts") {
  auto conllu = write("m.conllu", kConllu);
  auto ptb = write("m.ptb", kPtb);
  auto cfg = write("d2.json", R"({"max_dist": 2, "tree_kinds": ["dependency"]})");
  auto small = run({"masks", "--config", cfg, conllu});
  REQUIRE(small.code == 0);
  CHECK(small.err == "6 masks\n");
  CHECK(nlohmann::json::parse(small.out)["masks"].size() == 6);
  CHECK(run({"masks", conllu, ptb}).err == "90 masks\n");
  CHECK(run({"masks", "--pair", conllu, ptb}).err == "92 masks\n");
  auto pruned = run({"masks", "--prune-empty", conllu, ptb});
  CHECK(pruned.err != "90 masks\n");
  CHECK(nlohmann::json::parse(pruned.out).contains("pruned"));
  // flags override the config file
  CHECK(run({"masks", "--config", cfg, "--max-dist", "3", conllu}).err == "9 masks\n");
  CHECK(run({"masks", "--tree-kinds", "dependency", "--max-dist", "1", conllu}).err == "3 masks\n");
}

TEST_CASE("cli: config validation") {
  auto conllu = write("v.conllu", kConllu);
  CHECK(run({"masks", "--config", write("u.json", R"({"max_dst": 2})"), conllu}).code == 1);
  CHECK(run({"masks", "--config", write("u2.json", R"({"model": {"width": 2}})"), conllu}).code == 1);
  CHECK(run({"masks", "--config", write("u3.json", R"({"max_dist": "two"})"), conllu}).code == 1);
  CHECK(run({"masks", "--config", write("u4.json", R"({"max_dist": )"), conllu}).code == 2);
  CHECK(run({"masks", "--max-dist", "0", conllu}).code == 1);
}

TEST_CASE("cli: attend dump and checkpoint reuse") {
  auto conllu = write("t.conllu", kConllu);
  auto ptb = write("t.ptb", kPtb);
  auto params = (scratch_dir() / "p.bin").string();
  auto a = run({"attend", "--seed", "3", "--max-dist", "2", "--save-params", params, conllu, ptb});
  REQUIRE(a.code == 0);
  auto j = nlohmann::json::parse(a.out);
  CHECK(j["tokens"] == nlohmann::json::array({"She", "eats", "fish"}));
  REQUIRE(j["subnetworks"].size() == 12);
  CHECK(j["subnetworks"][0]["spec"]["category"] == "parent");
  for (const auto& sub : j["subnetworks"])
    for (const auto& row : sub["weights"]) {
      double s = 0;
      for (double x : row) s += x;
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  CHECK(j["topical_weights"].size() == 3);
  CHECK(j["topical_weights"][0].size() == 12);
  auto b = run({"attend", "--params", params, "--max-dist", "2", conllu, ptb});
  CHECK(b.out == a.out);
  CHECK(run({"attend", "--seed", "3", "--max-dist", "2", conllu, ptb}).out == a.out);
  CHECK(run({"attend", "--seed", "4", "--max-dist", "2", conllu, ptb}).out != a.out);
  CHECK(run({"attend", "--params", write("junk.bin", "nope"), "--tree-kinds", "dependency", conllu}).code == 2);
}

TEST_CASE("cli: probe") {
  std::string conllu;
  nlohmann::json emb = nlohmann::json::array();
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto t = gen_random_tree(4 + s % 4, s);
    for (const auto& n : t.nodes)
      conllu += std::to_string(*n.token_index) + "\t" + t.tokens[*n.token_index - 1].form + "\t_\t_\t_\t_\t" +
                std::to_string(n.parent.value_or(0)) + "\tdep\t_\t_\n";
    conllu += "\n";
    auto e = path_indicator_embeddings(t, 8);
    nlohmann::json m = nlohmann::json::array();
    for (std::size_t i = 0; i < e.rows(); ++i) m.push_back(std::vector<double>(e.row(i).begin(), e.row(i).end()));
    emb.push_back(m);
  }
  auto trees = write("probe.conllu", conllu);
  auto embeddings = write("probe.json", emb.dump());
  auto r = run({"probe", "--embeddings", embeddings, "--trees", trees});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("sentence_id\tn\tuuas\tspearman\n9\t", 0) == 0);
  CHECK(r.out.find("\nmean\t") != std::string::npos);
  CHECK(run({"probe", "--embeddings", embeddings, "--trees", trees}).out == r.out);
  CHECK(run({"probe", "--trees", trees}).code == 1);
  auto few = write("few.json", "[[[0.0]]]");
  CHECK(run({"probe", "--embeddings", few, "--trees", trees}).code == 3);
}

TEST_CASE("cli: toytrain and bench") {
  auto cfg = write("toy.json", R"({"seeds": [1, 2], "model": {"d_model": 8, "heads": 2, "d_head": 4, "d_ff": 8},
    "toy": {"train": 30, "dev": 2, "test": 10, "epochs": 1, "max_dist": 2}})");
  auto out = (scratch_dir() / "toy.tsv").string();
  auto r = run({"toytrain", "--config", cfg, "--out", out});
  REQUIRE(r.code == 0);
  auto first = slurp(out);
  CHECK(first.rfind("mode\tseed\ttest_accuracy\n", 0) == 0);
  CHECK(first.find("random\tmean\t") != std::string::npos);
  REQUIRE(run({"toytrain", "--config", cfg, "--out", out}).code == 0);
  CHECK(slurp(out) == first);

  auto diverge = write("div.json", R"({"seeds": [1], "model": {"d_model": 8, "heads": 2, "d_head": 4, "d_ff": 8},
    "toy": {"train": 30, "dev": 2, "test": 10, "epochs": 3, "learning_rate": 1e6, "modes": ["syntax"]}})");
  auto missing = (scratch_dir() / "never.tsv").string();
  CHECK(run({"toytrain", "--config", diverge, "--out", missing}).code == 4);
  CHECK(!fs::exists(missing));

  auto b = run({"bench", "--n", "64", "--density", "0.1", "--seed", "2"});
  REQUIRE(b.code == 0);
  std::istringstream lines(b.out);
  std::string header, dense, sparse;
  std::getline(lines, header);
  std::getline(lines, dense);
  std::getline(lines, sparse);
  CHECK(header == "path\tn\tmask_ones\tvisited_pairs\twall_ms");
  CHECK(dense.rfind("dense\t64\t", 0) == 0);
  CHECK(sparse.rfind("sparse\t64\t", 0) == 0);
  auto field = [](const std::string& line, int k) {
    std::istringstream ss(line);
    std::string f;
    for (int i = 0; i <= k; ++i) std::getline(ss, f, '\t');
    return f;
  };
  CHECK(field(sparse, 2) == field(sparse, 3));
  CHECK(field(dense, 3) == "4096");
  CHECK(run({"bench", "--n", "8", "--density", "1.5"}).code == 1);
}

TEST_CASE("cli: the installed binary reports mask counts on stderr") {
  auto conllu = write("bin.conllu", kConllu);
  auto cfg = write("bin.json", R"({"max_dist": 2, "tree_kinds": ["dependency"]})");
  auto err = (scratch_dir() / "bin.err").string();
  std::string cmd = std::string(TREEATTN_CLI_PATH) + " masks --config " + cfg + " " + conllu + " > /dev/null 2> " + err;
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(slurp(err) == "6 masks\n");
}
