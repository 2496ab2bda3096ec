#include "treeattn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "treeattn/error.hpp"
#include "treeattn/rng.hpp"

namespace treeattn {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'E', 'E', 'A', 'T', 'T', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

ModelCheckpoint ModelCheckpoint::init(const BlockDims& dims, std::size_t layers, std::size_t vocab,
                                      std::uint64_t seed, MaskMode mode) {
  dims.check();
  ModelCheckpoint c;
  c.dims = dims;
  c.seed = seed;
  c.mode = mode;
  Rng root(seed);
  Rng emb = root.split(1);
  c.embeddings = Tensor::uniform(vocab, dims.d_model, 1.0, emb);
  for (std::size_t l = 0; l < layers; ++l) {
    Rng r = root.split(100 + l);
    c.blocks.push_back(BlockParams::init(dims, r));
  }
  return c;
}

std::size_t ModelCheckpoint::parameter_count() const {
  std::size_t count = embeddings.size();
  for (const auto& b : blocks) count += b.parameter_count();
  return count;
}

void write_checkpoint(std::ostream& out, const ModelCheckpoint& ckpt) {
  nlohmann::ordered_json header;
  header["format"] = 1;
  header["dims"] = {{"d_model", ckpt.dims.d_model},
                    {"heads", ckpt.dims.heads},
                    {"d_head", ckpt.dims.d_head},
                    {"d_ff", ckpt.dims.d_ff}};
  header["layers"] = ckpt.blocks.size();
  header["vocab"] = ckpt.embeddings.rows();
  header["seed"] = ckpt.seed;
  header["mode"] = to_string(ckpt.mode);
  header["count"] = ckpt.parameter_count();
  const std::string text = header.dump();

  out.write(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  auto put_tensor = [&](const Tensor& t) {
    for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  };
  put_tensor(ckpt.embeddings);
  for (const auto& b : ckpt.blocks) b.for_each_tensor(put_tensor);
  if (!out) throw FormatError("checkpoint: write failed");
}

ModelCheckpoint read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw FormatError("checkpoint: bad magic");
  const std::uint64_t len = get_u64(in);
  if (len > (1u << 20)) throw FormatError("checkpoint: header too large");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError("checkpoint: truncated header");

  ModelCheckpoint c;
  std::size_t layers = 0, vocab = 0, count = 0;
  try {
    auto header = nlohmann::json::parse(text);
    const auto& dims = header.at("dims");
    c.dims = {dims.at("d_model").get<std::size_t>(), dims.at("heads").get<std::size_t>(),
              dims.at("d_head").get<std::size_t>(), dims.at("d_ff").get<std::size_t>()};
    layers = header.at("layers").get<std::size_t>();
    vocab = header.at("vocab").get<std::size_t>();
    c.seed = header.at("seed").get<std::uint64_t>();
    c.mode = mask_mode_from_string(header.at("mode").get<std::string>());
    count = header.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("checkpoint header: {}", e.what()));
  } catch (const UsageError& e) {
    throw FormatError(fmt::format("checkpoint header: {}", e.what()));
  }
  try {
    c.dims.check();
  } catch (const UsageError& e) {
    throw FormatError(fmt::format("checkpoint header: {}", e.what()));
  }
  c.embeddings = Tensor(vocab, c.dims.d_model);
  c.blocks.assign(layers, BlockParams::zeros(c.dims));
  if (c.parameter_count() != count) {
    throw FormatError(fmt::format("checkpoint: header declares {} values, dimensions imply {}", count,
                                  c.parameter_count()));
  }
  auto get_tensor = [&](Tensor& t) {
    for (double& v : t.values()) v = std::bit_cast<double>(get_u64(in));
  };
  get_tensor(c.embeddings);
  for (auto& b : c.blocks) b.for_each_tensor(get_tensor);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint: trailing bytes");
  return c;
}

}  // namespace treeattn
