#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "doctest.h"
#include "nprnn/errors.hpp"
#include "nprnn/tasks.hpp"

using namespace nprnn;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nprnn_tasks_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

void check_sample(const RegressionSample& s, TaskKind task) {
  const auto T = s.length();
  REQUIRE(s.inputs.rows() == 2);
  double ones = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double mask = s.inputs(1, t);
    REQUIRE((mask == 0.0 || mask == 1.0));
    ones += mask;
    REQUIRE(s.inputs(0, t) >= 0.0);
    REQUIRE(s.inputs(0, t) < 1.0);
  }
  REQUIRE(ones == 2.0);
  REQUIRE(s.first < T / 2);
  REQUIRE(s.second >= T / 2);
  REQUIRE(s.second < T);
  REQUIRE(s.inputs(1, s.first) == 1.0);
  REQUIRE(s.inputs(1, s.second) == 1.0);
  const double a = s.inputs(0, s.first), b = s.inputs(0, s.second);
  if (task == TaskKind::Addition) {
    REQUIRE(s.target == a + b);
  } else {
    REQUIRE(s.target == a * b);
  }
}

}  // namespace

TEST_SUITE("tasks") {
  TEST_CASE("generated samples satisfy their invariants") {
    for (TaskKind task : {TaskKind::Addition, TaskKind::Multiplication}) {
      for (std::size_t T : {50u, 150u, 500u}) {
        Rng rng(derive_seed(11, T));
        for (const auto& s : gen_regression(task, T, 10000, rng)) check_sample(s, task);
      }
    }
  }

  TEST_CASE("shortest sequences and bad lengths") {
    Rng rng(1);
    for (const auto& s : gen_addition(2, 100, rng)) {
      CHECK(s.first == 0);
      CHECK(s.second == 1);
    }
    CHECK_THROWS_AS(gen_addition(1, 1, rng), ContractViolation);
    CHECK_THROWS_AS(gen_multiplication(0, 1, rng), ContractViolation);
    CHECK_THROWS_AS(gen_regression(TaskKind::SequentialMnist, 10, 1, rng), ContractViolation);
  }

  TEST_CASE("constant-predictor baselines") {
    Rng rng(2024);
    // Var(U + U) = 1/6
    CHECK(std::abs(baseline_mse(TaskKind::Addition, 1.0, 100000, rng) - 1.0 / 6.0) < 0.005);
    // E[(XY - 1/4)^2] = 1/9 - 1/8 + 1/16 = 7/144
    CHECK(std::abs(baseline_mse(TaskKind::Multiplication, 0.25, 100000, rng) - 7.0 / 144.0) < 0.003);

    const auto one = gen_addition(10, 1, rng);
    CHECK(constant_predictor_mse(one, one.front().target) == 0.0);
    CHECK_THROWS_AS(baseline_mse(TaskKind::Addition, 1.0, 0, rng), ContractViolation);
  }

  TEST_CASE("generation is deterministic per seed and streams are disjoint") {
    Rng a(derive_seed(5, 0)), b(derive_seed(5, 0));
    const auto xs = gen_addition(150, 200, a);
    const auto ys = gen_addition(150, 200, b);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CHECK(xs[i].inputs == ys[i].inputs);
      CHECK(xs[i].target == ys[i].target);
    }

    Rng train_rng(derive_seed(5, 1)), test_rng(derive_seed(5, 2));
    std::set<std::tuple<std::size_t, std::size_t, double>> seen;
    for (const auto& s : gen_addition(150, 10000, train_rng)) seen.emplace(s.first, s.second, s.inputs(0, s.first));
    std::size_t collisions = 0;
    for (const auto& s : gen_addition(150, 10000, test_rng))
      collisions += seen.count({s.first, s.second, s.inputs(0, s.first)});
    CHECK(collisions == 0);
  }

  TEST_CASE("correctness threshold") {
    CHECK(is_correct(1.0, 1.039));
    CHECK_FALSE(is_correct(1.0, 1.04));
    CHECK_FALSE(is_correct(0.0, -0.05));
  }

  TEST_CASE("sequentialize") {
    MatrixD img(2, 2);
    img << 0.1, 0.2, 0.3, 0.4;
    const auto seq = sequentialize(img);
    REQUIRE(seq.cols() == 4);
    CHECK(seq(0, 0) == 0.1);
    CHECK(seq(0, 1) == 0.2);
    CHECK(seq(0, 2) == 0.3);
    CHECK(seq(0, 3) == 0.4);

    const MatrixD big = MatrixD::Zero(28, 28);
    CHECK(sequentialize(big).cols() == 784);
    CHECK(sequentialize(big, 2).cols() == 196);
    CHECK(sequentialize(big).isZero());
    CHECK_THROWS_AS(sequentialize(big, 3), ContractViolation);
    CHECK_THROWS_AS(sequentialize(MatrixD::Zero(2, 3)), ContractViolation);

    MatrixD four(4, 4);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) four(r, c) = r * 4 + c;
    const auto pooled = sequentialize(four, 2);
    CHECK(pooled(0, 0) == doctest::Approx(2.5));   // mean of 0 1 4 5
    CHECK(pooled(0, 3) == doctest::Approx(12.5));  // mean of 10 11 14 15
  }

  TEST_CASE("IDX round trip and error offsets") {
    const auto dir = scratch_dir("idx");
    IdxImages images;
    images.count = 2;
    images.rows = 28;
    images.cols = 28;
    images.pixels.resize(2 * 28 * 28);
    for (std::size_t i = 0; i < images.pixels.size(); ++i) images.pixels[i] = static_cast<std::uint8_t>(i * 7);
    std::fill(images.pixels.begin(), images.pixels.begin() + 784, 0);
    const std::vector<std::uint8_t> labels{3, 9};
    const auto img_path = (dir / "img").string(), lbl_path = (dir / "lbl").string();
    write_idx_images(img_path, images);
    write_idx_labels(lbl_path, labels);

    const IdxImages back = read_idx_images(img_path);
    CHECK(back.count == 2);
    CHECK(back.pixels == images.pixels);
    CHECK(read_idx_labels(lbl_path) == labels);

    const auto samples = load_mnist_idx(img_path, lbl_path);
    REQUIRE(samples.size() == 2);
    CHECK(samples[0].inputs.cols() == 784);
    CHECK(samples[0].inputs.isZero());  // all-zero image
    CHECK(samples[1].label == 9);
    CHECK(samples[1].inputs(0, 5) == static_cast<double>(static_cast<std::uint8_t>((784 + 5) * 7)) / 255.0);
    CHECK(load_mnist_idx(img_path, lbl_path, 2).front().inputs.cols() == 196);

    // labels file with the image magic
    try {
      read_idx_labels(img_path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 0);
    }

    // truncated pixel block
    {
      std::ifstream in(img_path, std::ios::binary);
      std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      std::ofstream out((dir / "short").string(), std::ios::binary);
      out.write(bytes.data(), 100);
    }
    try {
      read_idx_images((dir / "short").string());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 100);
    }

    write_idx_labels((dir / "three").string(), {1, 2, 3});
    CHECK_THROWS_AS(load_mnist_idx(img_path, (dir / "three").string()), ParseError);
    write_idx_labels((dir / "bad").string(), {1, 12});
    try {
      read_idx_labels((dir / "bad").string());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 9);
    }
    CHECK_THROWS_AS(read_idx_images((dir / "missing").string()), ParseError);
  }

  TEST_CASE("MNIST directory detection") {
    const auto dir = scratch_dir("mnist_dir");
    CHECK_FALSE(mnist_available(""));
    CHECK_FALSE(mnist_available(dir.string()));
    CHECK(mnist_files(dir.string()).test_labels == (dir / "t10k-labels-idx1-ubyte").string());
  }

  TEST_CASE("CSV round trip") {
    Rng rng(9);
    const auto samples = gen_multiplication(20, 50, rng);
    std::stringstream ss;
    write_regression_csv(ss, samples);
    const auto back = read_regression_csv(ss);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].inputs == samples[i].inputs);
      CHECK(back[i].target == samples[i].target);
      CHECK(back[i].first == samples[i].first);
    }

    std::stringstream bad("T,first,second,x0,x1,target\n2,0,1,0.5,abc,1\n");
    try {
      read_regression_csv(bad);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 2);
    }
  }
}
