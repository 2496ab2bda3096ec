#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "treeattn/attention.hpp"
#include "treeattn/maskgen.hpp"
#include "treeattn/probe.hpp"
#include "treeattn/toytask.hpp"

namespace treeattn {

/// Experiment record read from a JSON file; command-line flags override individual fields.
struct RunConfig {
  MaskConfig masks;
  MaskMode mode = MaskMode::Additive;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  BlockDims dims;
  std::size_t layers = 1;
  std::size_t max_len = 64;  // rows of the positional embedding table

  ProbeConfig probe;
  double probe_train_fraction = 0.8;

  ToyDatasetConfig toy_data;
  ExperimentConfig toy;
  std::vector<MaskSource> toy_modes{MaskSource::Syntax, MaskSource::Random, MaskSource::Full};

  std::optional<std::string> input, params, embeddings, trees, output;
};

/// Throws UsageError on unknown keys or wrongly typed values.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// Entry point of the command-line tool. Returns the process exit code:
/// 0 success, 1 usage, 2 input format, 3 structure/validation, 4 numerical.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace treeattn
