#include "nprnn/harness.hpp"

#include <Eigen/Core>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "nprnn/checkpoint.hpp"
#include "nprnn/errors.hpp"
#include "nprnn/init.hpp"
#include "nprnn/optim.hpp"

namespace nprnn {

namespace {

// Stream indices for derive_seed; fixed so every run is reproducible from `seed`.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kInitStream = 3;
constexpr std::uint64_t kShuffleStream = 4;

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<ClassificationSample> mnist_subset(const std::string& images_path, const std::string& labels_path,
                                               std::size_t n, std::size_t downscale) {
  const IdxImages images = read_idx_images(images_path);
  const auto labels = read_idx_labels(labels_path);
  if (labels.size() != images.count)
    throw ParseError("'" + labels_path + "': label count does not match '" + images_path + "'", 4);
  require(n <= images.count, "MNIST: requested " + std::to_string(n) + " samples but '" + images_path +
                                 "' holds " + std::to_string(images.count));
  std::vector<ClassificationSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({sequentialize(images.image(i), downscale), labels[i]});
  return out;
}

}  // namespace

Dataset to_dataset(TaskKind task, const std::vector<RegressionSample>& samples) {
  require(task != TaskKind::SequentialMnist, "to_dataset: regression samples need a regression task");
  Dataset d;
  d.task = task;
  d.inputs.reserve(samples.size());
  d.targets.reserve(samples.size());
  for (const auto& s : samples) {
    d.inputs.push_back(s.inputs);
    d.targets.push_back(scalar_target(s.target));
  }
  return d;
}

Dataset to_dataset(const std::vector<ClassificationSample>& samples) {
  Dataset d;
  d.task = TaskKind::SequentialMnist;
  for (const auto& s : samples) {
    d.inputs.push_back(s.inputs);
    d.targets.emplace_back(s.label);
  }
  return d;
}

DataSplit load_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& spec = cfg.data;
  if (spec.task == TaskKind::SequentialMnist) {
    require(mnist_available(cfg.mnist_dir),
            "MNIST files not found in '" + cfg.mnist_dir + "' (set mnist_dir to a directory holding the IDX files)");
    const auto files = mnist_files(cfg.mnist_dir);
    return {to_dataset(mnist_subset(files.train_images, files.train_labels, spec.n_train, cfg.downscale)),
            to_dataset(mnist_subset(files.test_images, files.test_labels, spec.n_test, cfg.downscale))};
  }
  Rng train_rng(derive_seed(spec.seed, kTrainStream));
  Rng test_rng(derive_seed(spec.seed, kTestStream));
  return {to_dataset(spec.task, gen_regression(spec.task, spec.length, spec.n_train, train_rng)),
          to_dataset(spec.task, gen_regression(spec.task, spec.length, spec.n_test, test_rng))};
}

void write_metrics_row(std::ostream& out, const MetricsRow& r) {
  out << r.epoch << ',' << num(r.train_loss) << ',' << num(r.test_loss) << ',' << num(r.test_accuracy) << ','
      << num(r.lr) << ',' << num(r.wall_seconds) << ',' << num(r.grad_norm_mean) << '\n';
}

std::vector<Prediction> predict(const RnnParams<double>& params, const Dataset& data) {
  require(!data.empty(), "evaluate: empty dataset");
  params.validate();
  const Eigen::Index n_in = data.classification() ? 1 : 2;
  const Eigen::Index n_out = data.classification() ? 10 : 1;
  const OutputKind out_kind = data.classification() ? OutputKind::Softmax : OutputKind::Linear;
  require(params.n_in() == n_in && params.n_out() == n_out && params.output == out_kind,
          "evaluate: network " + std::to_string(params.n_in()) + "->" + std::to_string(params.n_out()) + " (" +
              std::string(to_string(params.output)) + ") does not fit task " + std::string(to_string(data.task)));
  const LossKind kind = loss_for(out_kind);
  std::vector<Prediction> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    Prediction p;
    try {
      const auto tr = forward(params, data.inputs[i]);
      p.loss = loss(tr, data.targets[i], kind);
      if (data.classification()) {
        Eigen::Index best = 0;
        tr.output.maxCoeff(&best);
        p.target = static_cast<double>(std::get<std::size_t>(data.targets[i]));
        p.prediction = static_cast<double>(best);
        p.correct = p.prediction == p.target;
      } else {
        p.target = std::get<VectorD>(data.targets[i])(0);
        p.prediction = tr.prediction(0);
        p.correct = is_correct(p.prediction, p.target);
      }
    } catch (const NumericOverflow&) {
      p.loss = std::numeric_limits<double>::infinity();
      p.prediction = std::numeric_limits<double>::quiet_NaN();
      p.correct = false;
    }
    out.push_back(p);
  }
  return out;
}

Evaluation summarize(const std::vector<Prediction>& predictions) {
  require(!predictions.empty(), "evaluate: empty dataset");
  Evaluation e;
  e.count = predictions.size();
  std::size_t hits = 0;
  for (const auto& p : predictions) {
    e.loss += p.loss;
    hits += p.correct ? 1 : 0;
  }
  e.loss /= static_cast<double>(e.count);
  e.accuracy = static_cast<double>(hits) / static_cast<double>(e.count);
  return e;
}

Evaluation evaluate(const RnnParams<double>& params, const Dataset& data) { return summarize(predict(params, data)); }

void write_predictions_csv(std::ostream& out, const std::vector<Prediction>& predictions) {
  out << "index,target,prediction,loss,correct\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    out << i << ',' << num(p.target) << ',' << num(p.prediction) << ',' << num(p.loss) << ',' << (p.correct ? 1 : 0)
        << '\n';
  }
}

std::string_view to_string(RunStatus s) { return s == RunStatus::Completed ? "completed" : "diverged"; }

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(const ExperimentConfig& cfg) : dir_(cfg.output_dir) {
    if (dir_.empty()) return;
    std::filesystem::create_directories(dir_);
    metrics_.open(dir_ / "metrics.csv");
    require(static_cast<bool>(metrics_), "cannot write '" + (dir_ / "metrics.csv").string() + "'");
    metrics_ << kMetricsHeader << '\n';
    write_meta(cfg);
  }

  void row(const MetricsRow& r) {
    if (dir_.empty()) return;
    write_metrics_row(metrics_, r);
    metrics_.flush();
  }

  void checkpoint(const std::string& name, const RnnParams<double>& p) {
    if (!dir_.empty()) save_checkpoint((dir_ / name).string(), p);
  }

  void summary(const TrainResult& r) {
    if (dir_.empty()) return;
    std::ofstream out(dir_ / "summary.txt");
    out << "status = " << to_string(r.status) << '\n'
        << "epochs_recorded = " << r.metrics.size() << '\n'
        << "final_test_loss = " << num(r.final_test_loss) << '\n'
        << "final_accuracy = " << num(r.final_accuracy) << '\n'
        << "best_accuracy = " << num(r.best_accuracy) << '\n'
        << "best_epoch = " << r.best_epoch << '\n';
    if (r.divergence)
      out << "diverged_epoch = " << r.divergence->epoch << '\n'
          << "diverged_step = " << r.divergence->step << '\n'
          << "diverged_reason = " << r.divergence->reason << '\n';
  }

 private:
  void write_meta(const ExperimentConfig& cfg) {
    std::ofstream out(dir_ / "run_meta.txt");
    out << "# effective configuration\n" << format_config(cfg);
    out << "# run metadata\n"
        << "library_version = " << kLibraryVersion << '\n'
        << "eigen_version = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION
        << '\n'
        << "prng = xoshiro256** seeded by splitmix64\n"
        << "normal_sampler = box-muller\n"
        << "seed_streams = train:" << derive_seed(cfg.seed, kTrainStream)
        << " test:" << derive_seed(cfg.seed, kTestStream) << " init:" << derive_seed(cfg.seed, kInitStream)
        << " shuffle:" << derive_seed(cfg.seed, kShuffleStream) << '\n'
        << "loss = " << to_string(loss_for(cfg.output_kind())) << " at final step\n"
        << "gradient = batch mean, clipped by global norm after averaging\n"
        << "accuracy = " << (cfg.data.task == TaskKind::SequentialMnist ? "top-1" : "|err| < 0.04") << '\n'
        << "pixel_scale = 1/255\n"
        << "mask_positions = first uniform in [0, T/2), second uniform in [T/2, T)\n";
  }

  std::filesystem::path dir_;
  std::ofstream metrics_;
};

}  // namespace

TrainResult train(const ExperimentConfig& cfg, const DataSplit& data, std::ostream* progress) {
  cfg.validate();
  require(!data.train.empty(), "train: empty training set");
  require(!data.test.empty(), "train: empty test set");
  require(data.train.task == cfg.data.task && data.test.task == cfg.data.task, "train: dataset task mismatch");

  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  ArtifactWriter artifacts(cfg);
  Rng init_rng(derive_seed(cfg.seed, kInitStream));
  Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));

  TrainResult result;
  RnnParams<double> params = build_network<double>(cfg.scheme, cfg.n_in(), static_cast<Eigen::Index>(cfg.hidden),
                                                   cfg.n_out(), init_rng, cfg.output_kind());
  OptimizerState<double> opt = cfg.optimizer_state();
  const LrSchedule schedule = cfg.schedule();
  const LossKind kind = loss_for(cfg.output_kind());
  const std::size_t n = data.train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < cfg.epochs && !result.divergence; ++epoch) {
    const double lr = lr_at(schedule, cfg.lr0, epoch);
    for (const auto& c : schedule.cooling_points)
      if (c.epoch == epoch) artifacts.checkpoint("checkpoint_cool_e" + std::to_string(epoch) + ".bin", params);

    // Fisher-Yates with our own generator so the order is portable.
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.uniform_int(0, i + 1)]);

    double loss_sum = 0.0, grad_norm_sum = 0.0;
    std::size_t seen = 0, steps = 0;
    for (std::size_t begin = 0; begin < n && !result.divergence; begin += cfg.batch_size) {
      const std::size_t end = std::min(n, begin + cfg.batch_size);
      const auto fail = [&](const std::string& why) {
        result.divergence = Divergence{epoch + 1, steps + 1, why};
      };
      Gradients<double> g = params.zeros_like();
      try {
        for (std::size_t k = begin; k < end; ++k) {
          const std::size_t i = order[k];
          const auto tr = forward(params, data.train.inputs[i]);
          const double l = loss(tr, data.train.targets[i], kind);
          if (!std::isfinite(l)) throw NumericOverflow("non-finite loss", data.train.inputs[i].cols());
          loss_sum += l;
          g += backward(params, tr, data.train.targets[i], kind);
        }
      } catch (const NumericOverflow& e) {
        fail(e.what());
        break;
      }
      g *= 1.0 / static_cast<double>(end - begin);
      const double gn = g.norm();
      if (!std::isfinite(gn)) {
        fail("non-finite gradient norm");
        break;
      }
      grad_norm_sum += gn;
      if (opt.clip) g = clip_gradients(g, *opt.clip);
      RnnParams<double> next = opt.kind == OptimizerKind::SGD ? sgd_step(params, g, lr) : rmsprop_step(params, g, opt, lr);
      if (!next.all_finite()) {
        fail("non-finite parameters after update");
        break;
      }
      params = std::move(next);
      seen = end;
      ++steps;
    }

    MetricsRow row;
    row.epoch = epoch + 1;
    row.lr = lr;
    row.train_loss = seen ? loss_sum / static_cast<double>(seen) : std::numeric_limits<double>::quiet_NaN();
    row.grad_norm_mean = steps ? grad_norm_sum / static_cast<double>(steps) : 0.0;
    const bool last = epoch + 1 == cfg.epochs;
    if (result.divergence) {
      // Diagnostic row: the test metrics are undefined once the run has blown up.
      row.train_loss = std::numeric_limits<double>::infinity();
      row.test_loss = std::numeric_limits<double>::quiet_NaN();
      row.test_accuracy = 0.0;
    } else if (last || (epoch + 1) % cfg.eval_every == 0) {
      const Evaluation ev = evaluate(params, data.test);
      row.test_loss = ev.loss;
      row.test_accuracy = ev.accuracy;
      if (result.metrics.empty() || ev.accuracy > result.best_accuracy) {
        result.best_accuracy = ev.accuracy;
        result.best_epoch = epoch + 1;
      }
    } else {
      continue;
    }
    row.wall_seconds = elapsed();
    result.metrics.push_back(row);
    artifacts.row(row);
    if (progress) {
      *progress << "epoch " << row.epoch << "/" << cfg.epochs << " lr " << num(lr) << " train_loss "
                << num(row.train_loss) << " test_loss " << num(row.test_loss) << " accuracy "
                << num(row.test_accuracy) << " (" << num(std::round(row.wall_seconds * 10) / 10) << " s)";
      if (result.divergence)
        *progress << " diverged at step " << result.divergence->step << ": " << result.divergence->reason;
      *progress << std::endl;
    }
  }

  result.status = result.divergence ? RunStatus::Diverged : RunStatus::Completed;
  const MetricsRow& final_row = result.metrics.back();
  result.final_accuracy = final_row.test_accuracy;
  result.final_test_loss = final_row.test_loss;
  result.params = std::move(params);
  artifacts.checkpoint("checkpoint_final.bin", result.params);
  artifacts.summary(result);
  return result;
}

GradCheckReport random_grad_check(Activation activation, OutputKind output, std::size_t draws, Rng& rng,
                                  Eigen::Index m, Eigen::Index steps, bool skip_saturated) {
  require(draws >= 1 && m >= 1 && steps >= 1, "random_grad_check: draws, m and T must be >= 1");
  const Eigen::Index c = output == OutputKind::Linear ? 1 : 3;
  GradCheckReport rep;
  while (rep.accepted < draws) {
    RnnParams<double> p;
    p.activation = activation;
    p.output = output;
    p.w_hx = gaussian_matrix(m, 2, 0.0, 0.5, rng);
    p.w_hh = gaussian_matrix(m, m, 0.0, 1.0 / static_cast<double>(m), rng);
    p.w_yh = gaussian_matrix(c, m, 0.0, 0.5, rng);
    p.b_h = gaussian_matrix(m, 1, 0.0, 0.1, rng);
    p.b_y = gaussian_matrix(c, 1, 0.0, 0.1, rng);
    const Sequence<double> x = gaussian_matrix(2, steps, 0.0, 1.0, rng);
    const auto tr = forward(p, x);
    const bool kink = activation == Activation::ReLU && tr.pre.cwiseAbs().minCoeff() < 1e-4;
    const bool saturated = skip_saturated && output == OutputKind::Softmax &&
                           (tr.prediction.maxCoeff() > 1.0 - 1e-6 || tr.prediction.minCoeff() < 1e-6);
    if (kink || saturated) {
      ++rep.rejected;
      continue;
    }
    const Target<double> target = output == OutputKind::Linear
                                      ? scalar_target(rng.uniform() * 2.0)
                                      : Target<double>(static_cast<std::size_t>(rng.uniform_int(0, 3)));
    rep.max_error = std::max(rep.max_error, grad_check(p, x, target, loss_for(output), 1e-5));
    ++rep.accepted;
  }
  return rep;
}

TrainResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
  return train(cfg, load_data(cfg), progress);
}

}  // namespace nprnn
