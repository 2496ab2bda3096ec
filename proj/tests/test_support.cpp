#include <doctest.h>

#include <set>
#include <sstream>

#include "treeattn/checkpoint.hpp"
#include "treeattn/error.hpp"
#include "treeattn/rng.hpp"
#include "treeattn/tensor.hpp"

using namespace treeattn;

TEST_CASE("rng: same seed same stream, splits differ") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = Rng(7).split(1), d = Rng(7).split(2);
  CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("rng: split does not depend on draws already taken") {
  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) a.next_u64();
  CHECK(a.split(3).next_u64() == b.split(3).next_u64());
}

TEST_CASE("rng: below and uniform stay in range") {
  Rng r(1);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    auto x = r.below(5);
    REQUIRE(x < 5);
    ++counts[x];
    double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("rng: shuffle is a permutation") {
  Rng r(2);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  r.shuffle(std::span<int>(v));
  CHECK(std::set<int>(v.begin(), v.end()).size() == 8);
}

TEST_CASE("tensor: products against hand values") {
  Tensor a{{1, 2}, {3, 4}};
  Tensor b{{5, 6}, {7, 8}};
  CHECK(matmul(a, b) == Tensor{{19, 22}, {43, 50}});
  CHECK(matmul_nt(a, b) == Tensor{{17, 23}, {39, 53}});
  CHECK(matmul_tn(a, b) == Tensor{{26, 30}, {38, 44}});
  CHECK(transpose(a) == Tensor{{1, 3}, {2, 4}});
  CHECK_THROWS_AS(matmul(a, Tensor(3, 1)), StructureError);
}

TEST_CASE("tensor: require_finite") {
  Tensor a{{1, 2}};
  CHECK_NOTHROW(require_finite(a, "a"));
  a(0, 1) = std::nan("");
  CHECK_THROWS_AS(require_finite(a, "a"), NumericalError);
}

TEST_CASE("checkpoint: round trip is exact") {
  auto ck = ModelCheckpoint::init(BlockDims{8, 2, 4, 16}, 2, 5, 17, MaskMode::Multiplicative);
  std::stringstream ss;
  write_checkpoint(ss, ck);
  auto back = read_checkpoint(ss);
  CHECK(back.dims == ck.dims);
  CHECK(back.seed == 17);
  CHECK(back.mode == MaskMode::Multiplicative);
  CHECK(back.embeddings == ck.embeddings);
  REQUIRE(back.blocks.size() == 2);
  CHECK(back.blocks[1].flatten() == ck.blocks[1].flatten());
  CHECK(back.parameter_count() == ck.parameter_count());
}

TEST_CASE("checkpoint: corrupt files are format errors") {
  auto ck = ModelCheckpoint::init(BlockDims{8, 2, 4, 16}, 1, 3, 1, MaskMode::Additive);
  std::stringstream ss;
  write_checkpoint(ss, ck);
  std::string bytes = ss.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(truncated), FormatError);
  std::stringstream trailing(bytes + "x");
  CHECK_THROWS_AS(read_checkpoint(trailing), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream magic(bad);
  CHECK_THROWS_AS(read_checkpoint(magic), FormatError);
}
