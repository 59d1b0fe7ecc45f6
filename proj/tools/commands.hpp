#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hstc/model_io.hpp"
#include "hstc/tensor.hpp"

namespace hstc::cli {

/// Inputs shared by the subcommands; each command validates the subset it
/// needs. Defaults mirror the reference configuration (5x5 window, Q preset
/// 75 with 100 as the documented large-scene alternative).
struct RunConfig {
  std::filesystem::path cube;
  std::filesystem::path labels;  // defaults to <cube>.labels.raw
  std::filesystem::path model_path;
  std::filesystem::path out_dir = ".";
  std::string model_type = "tensor_lr";  // tensor_lr | rank1_fnn
  Index window = 5;
  Index num_hidden = 75;
  Index samples_per_class = 50;
  std::uint64_t seed = 1;
  // optimizer knobs (mirror TrainConfig)
  int max_sweeps = 200;
  int inner_steps = 10;
  double learning_rate = 1.0;
  double l2 = 0.0;
  double rel_tol = 1e-6;
  double init_scale = 0.1;
  // eval-only: override the split recorded in the model file
  std::optional<Index> eval_samples_per_class;
  std::optional<std::uint64_t> eval_seed;
  // bands-only; the defaults clamp to the band count, explicit values do not
  std::vector<Index> top_counts = {10, 20};
  bool top_counts_explicit = false;
};

struct EvalReport {
  double overall_accuracy = 0.0;
  Eigen::VectorXd per_class_accuracy;
  Eigen::MatrixXd confusion;  // rows = truth, cols = prediction
  Index train_samples = 0;
  Index test_samples = 0;
  double wall_time_seconds = 0.0;
};

/// Worker cap from HSTC_THREADS (default 1).
int thread_count();

/// load -> split -> normalize -> fit -> serialize; returns the model path.
std::filesystem::path cmd_train(const RunConfig& cfg);

/// Recomputes the recorded split and scores the test pixels.
EvalReport cmd_eval(const RunConfig& cfg);

/// Writes classmap.pgm and misclass.pgm for every labeled pixel.
void cmd_map(const RunConfig& cfg);

/// Writes the band ranking table(s); linear models only.
void cmd_bands(const RunConfig& cfg);

}  // namespace hstc::cli
