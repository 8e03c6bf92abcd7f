#pragma once

// Benchmark data: the addition and multiplication problems, MNIST in IDX
// format presented one pixel per step, and constant-predictor baselines.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "nprnn/linalg.hpp"
#include "nprnn/net.hpp"
#include "nprnn/rng.hpp"

namespace nprnn {

enum class TaskKind { Addition, Multiplication, SequentialMnist };

std::string_view to_string(TaskKind t);
TaskKind parse_task(std::string_view name);

// |prediction - target| < 0.04 counts as correct on the regression tasks.
inline constexpr double kCorrectTolerance = 0.04;

inline bool is_correct(double prediction, double target) {
  return std::abs(prediction - target) < kCorrectTolerance;
}

struct RegressionSample {
  Sequence<double> inputs;  // 2 x T: row 0 signal in [0, 1], row 1 mask in {0, 1}
  double target = 0.0;
  std::size_t first = 0;   // marked steps, first < T/2 <= second
  std::size_t second = 0;

  std::size_t length() const { return static_cast<std::size_t>(inputs.cols()); }
};

struct ClassificationSample {
  Sequence<double> inputs;  // 1 x T pixel intensities in [0, 1]
  std::size_t label = 0;
};

struct DatasetSpec {
  TaskKind task = TaskKind::Addition;
  std::size_t length = 100;  // T; for MNIST this is (28 / downscale)^2
  std::size_t n_train = 1000;
  std::size_t n_test = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Signal i.i.d. Uniform[0,1) at every step; the first mark is uniform over
/// [0, T/2), the second over [T/2, T); target is the sum of the marked values.
std::vector<RegressionSample> gen_addition(std::size_t length, std::size_t n, Rng& rng);

// Same construction, target is the product of the marked values.
std::vector<RegressionSample> gen_multiplication(std::size_t length, std::size_t n, Rng& rng);

std::vector<RegressionSample> gen_regression(TaskKind task, std::size_t length, std::size_t n, Rng& rng);

// Monte Carlo MSE of always predicting `constant` on n fresh samples of length 2.
double baseline_mse(TaskKind task, double constant, std::size_t n, Rng& rng);

// Mean of (target - constant)^2 over the given samples.
double constant_predictor_mse(const std::vector<RegressionSample>& samples, double constant);

/// Scanline (row-major) flattening of a square image after optional k x k
/// mean pooling. The result has (d / k)^2 steps.
Sequence<double> sequentialize(const MatrixD& image, std::size_t downscale = 1);

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, image-major then row-major

  MatrixD image(std::size_t index) const;  // scaled to [0, 1] by 1/255
};

IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);
void write_idx_images(const std::string& path, const IdxImages& images);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

/// Pairs an IDX image file (magic 0x00000803) with its label file (magic
/// 0x00000801). Throws ParseError naming the byte offset of the first defect.
std::vector<ClassificationSample> load_mnist_idx(const std::string& image_path, const std::string& label_path,
                                                 std::size_t downscale = 1);

// Standard file names inside an MNIST directory.
struct MnistFiles {
  std::string train_images, train_labels, test_images, test_labels;
};
MnistFiles mnist_files(const std::string& dir);
bool mnist_available(const std::string& dir);

/// CSV export, one row per sample: T, first, second, x_0 .. x_{T-1}, target.
/// Values are written in shortest round-trip form.
void write_regression_csv(std::ostream& out, const std::vector<RegressionSample>& samples);
std::vector<RegressionSample> read_regression_csv(std::istream& in);

}  // namespace nprnn
