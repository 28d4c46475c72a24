#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "timecf/run_config.hpp"

namespace timecf::cli {

// Command-line values that override the JSON config.
struct Overrides {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> instance;
  std::optional<std::string> classifier;
  std::optional<std::string> method;
};

RunConfig resolve_config(const Overrides& o);

int cmd_synth(const RunConfig& c, const Overrides& o);
int cmd_explain(const RunConfig& c);
int cmd_benchmark(const RunConfig& c);
int cmd_extract_shapelets(const RunConfig& c);
int cmd_train_gan(const RunConfig& c);

// Full entry point: 0 ok, 2 no counterfactual (explain), 1 error.
int run(std::vector<std::string> args);

}  // namespace timecf::cli
