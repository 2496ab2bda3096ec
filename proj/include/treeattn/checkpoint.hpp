#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "treeattn/attention.hpp"

namespace treeattn {

/// Embedding table plus a stack of syntax blocks.
struct ModelCheckpoint {
  BlockDims dims;
  std::uint64_t seed = 0;
  MaskMode mode = MaskMode::Additive;
  Tensor embeddings;  // vocab x d_model
  std::vector<BlockParams> blocks;

  static ModelCheckpoint init(const BlockDims& dims, std::size_t layers, std::size_t vocab, std::uint64_t seed,
                              MaskMode mode);
  std::size_t parameter_count() const;
};

/// Layout: 8-byte magic "TREEATT1", u64 little-endian header length, JSON header
/// (dims, layers, vocab, seed, mode, count), then `count` little-endian IEEE-754 doubles:
/// embeddings row-major, then each block in BlockParams::for_each_tensor order.
void write_checkpoint(std::ostream& out, const ModelCheckpoint& ckpt);
ModelCheckpoint read_checkpoint(std::istream& in);

}  // namespace treeattn
