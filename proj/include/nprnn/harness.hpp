#pragma once

// Experiment runner: datasets, evaluation, the training loop and its on-disk
// artifacts (metrics.csv, run_meta.txt, summary.txt, checkpoints).

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nprnn/config.hpp"
#include "nprnn/net.hpp"
#include "nprnn/tasks.hpp"

namespace nprnn {

inline constexpr const char* kLibraryVersion = "1.0.0";

struct Dataset {
  TaskKind task = TaskKind::Addition;
  std::vector<Sequence<double>> inputs;
  std::vector<Target<double>> targets;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  bool classification() const { return task == TaskKind::SequentialMnist; }
};

Dataset to_dataset(TaskKind task, const std::vector<RegressionSample>& samples);
Dataset to_dataset(const std::vector<ClassificationSample>& samples);

struct DataSplit {
  Dataset train;
  Dataset test;
};

/// Regression tasks are generated from derived train/test seeds. MNIST takes
/// the first n_train / n_test images of the standard files in cfg.mnist_dir.
DataSplit load_data(const ExperimentConfig& cfg);

struct MetricsRow {
  std::size_t epoch = 0;  // completed epochs, 1-based
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;
  double grad_norm_mean = 0.0;
};

inline constexpr const char* kMetricsHeader = "epoch,train_loss,test_loss,test_accuracy,lr,wall_seconds,grad_norm_mean";
void write_metrics_row(std::ostream& out, const MetricsRow& row);

// Regression: target and raw output. Classification: label and arg-max class.
struct Prediction {
  double target = 0.0;
  double prediction = 0.0;
  double loss = 0.0;
  bool correct = false;
};

std::vector<Prediction> predict(const RnnParams<double>& params, const Dataset& data);

struct Evaluation {
  double loss = 0.0;      // mean per-sample loss
  double accuracy = 0.0;  // |err| < 0.04 for regression, top-1 for classification
  std::size_t count = 0;
};

// Throws ContractViolation on an empty dataset or a network of the wrong shape.
Evaluation evaluate(const RnnParams<double>& params, const Dataset& data);
Evaluation summarize(const std::vector<Prediction>& predictions);

void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions);

enum class RunStatus { Completed, Diverged };
std::string_view to_string(RunStatus s);

struct Divergence {
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;   // 1-based optimizer step within the epoch
  std::string reason;
};

struct TrainResult {
  RunStatus status = RunStatus::Completed;
  std::vector<MetricsRow> metrics;
  RnnParams<double> params;  // last finite parameters
  std::optional<Divergence> divergence;
  double final_accuracy = 0.0;
  double final_test_loss = 0.0;
  double best_accuracy = 0.0;
  std::size_t best_epoch = 0;
};

/// Seeded shuffle each epoch, mean gradient per batch, clip after averaging,
/// then an SGD or RMSprop step at lr_at(epoch). A non-finite loss, gradient or
/// parameter stops the run with a diagnostic metrics row instead of throwing.
/// With cfg.output_dir set, artifacts are written there as the run proceeds.
TrainResult train(const ExperimentConfig& cfg, const DataSplit& data, std::ostream* progress = nullptr);

// load_data + train.
TrainResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

struct GradCheckReport {
  double max_error = 0.0;  // worst relative error over all accepted draws
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// BPTT against central differences on random nets (2 inputs, m hidden,
/// T steps, 1 or 3 outputs). ReLU draws with some |s_t| < 1e-4 sit too close
/// to the kink and are redrawn; `skip_saturated` also redraws softmax outputs
/// outside [1e-6, 1 - 1e-6].
GradCheckReport random_grad_check(Activation activation, OutputKind output, std::size_t draws, Rng& rng,
                                  Eigen::Index m = 8, Eigen::Index steps = 12, bool skip_saturated = false);

}  // namespace nprnn
