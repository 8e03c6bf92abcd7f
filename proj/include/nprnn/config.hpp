#pragma once

// Experiment configuration and its flat `key = value` file format.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "nprnn/init.hpp"
#include "nprnn/optim.hpp"
#include "nprnn/tasks.hpp"

namespace nprnn {

struct ExperimentConfig {
  DatasetSpec data;  // data.seed mirrors `seed`
  InitScheme scheme = InitScheme::np_rnn();
  std::size_t hidden = 100;
  OptimizerKind optimizer = OptimizerKind::SGD;
  double lr0 = 1e-3;
  std::optional<double> clip;
  double rms_decay = 0.9;
  double rms_eps = 1e-8;
  std::vector<CoolingPoint> cooling;
  std::size_t batch_size = 1;
  std::size_t epochs = 10;
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
  std::size_t downscale = 1;  // MNIST mean-pool factor
  std::string output_dir;     // empty: keep results in memory only
  std::string mnist_dir;

  LrSchedule schedule() const { return {epochs, cooling}; }
  OptimizerState<double> optimizer_state() const;
  Eigen::Index n_in() const;
  Eigen::Index n_out() const;
  OutputKind output_kind() const;

  // Throws ContractViolation on any inconsistent or out-of-range field.
  void validate() const;
};

/// Unknown keys, duplicate keys and unparsable values throw ParseError with
/// the 1-based line number as offset. `#` starts a comment.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Every key with its effective value, in canonical order; parse_config reads it back.
std::string format_config(const ExperimentConfig& cfg);

}  // namespace nprnn
