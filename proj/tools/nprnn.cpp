// Command-line front end: data generation, training, evaluation and the
// spectral / dynamical / gradient diagnostics.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nprnn/checkpoint.hpp"
#include "nprnn/config.hpp"
#include "nprnn/dynamics.hpp"
#include "nprnn/errors.hpp"
#include "nprnn/harness.hpp"
#include "nprnn/init.hpp"

using namespace nprnn;

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Either a scheme drawn at size n or the W_hh of a checkpoint.
struct RecurrentSource {
  std::string scheme = "np";
  long n = 100;
  std::uint64_t seed = 0;
  std::string checkpoint;
  double scale = 1.0;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--scheme", scheme, "init scheme (IRNN, iRNN, np-RNN, np, nRNN, oRNN, gRNN, sRNN, ...)");
    cmd->add_option("--n", n, "hidden size")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "PRNG seed");
    cmd->add_option("--checkpoint", checkpoint, "read W_hh from a checkpoint instead of drawing it");
    cmd->add_option("--scale", scale, "multiply W_hh by this factor");
  }

  std::pair<MatrixD, Activation> load() const {
    if (!checkpoint.empty()) {
      const auto p = load_checkpoint(checkpoint);
      return {scale * p.w_hh, p.activation};
    }
    const InitScheme s = parse_scheme(scheme);
    Rng rng(seed);
    return {scale * recurrent_init<double>(s, n, rng), s.activation};
  }
};

int cmd_gen_data(const std::string& task, std::size_t length, std::size_t count, std::uint64_t seed,
                 const std::string& out_path) {
  const TaskKind kind = parse_task(task);
  require(kind != TaskKind::SequentialMnist, "gen-data: MNIST is read from IDX files, not generated");
  Rng rng(seed);
  const auto samples = gen_regression(kind, length, count, rng);
  if (out_path.empty()) {
    write_regression_csv(std::cout, samples);
  } else {
    std::ofstream out(out_path);
    require(static_cast<bool>(out), "gen-data: cannot write '" + out_path + "'");
    write_regression_csv(out, samples);
  }
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& output_dir, bool quiet) {
  ExperimentConfig cfg = load_config(config_path);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  const TrainResult r = run_experiment(cfg, quiet ? nullptr : &std::cerr);
  std::cout << "status = " << to_string(r.status) << '\n'
            << "final_test_loss = " << num(r.final_test_loss) << '\n'
            << "final_accuracy = " << num(r.final_accuracy) << '\n'
            << "best_accuracy = " << num(r.best_accuracy) << '\n'
            << "best_epoch = " << r.best_epoch << '\n';
  if (r.divergence)
    std::cout << "diverged_epoch = " << r.divergence->epoch << '\n'
              << "diverged_step = " << r.divergence->step << '\n';
  if (!cfg.output_dir.empty()) std::cout << "output_dir = " << cfg.output_dir << '\n';
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_path, const std::string& task,
             const std::string& config_path, const std::string& predictions_path) {
  const RnnParams<double> params = load_checkpoint(ckpt);
  Dataset data;
  if (!data_path.empty()) {
    std::ifstream in(data_path);
    if (!in) throw ParseError("cannot open dataset '" + data_path + "'", 0);
    data = to_dataset(parse_task(task), read_regression_csv(in));
  } else {
    require(!config_path.empty(), "eval: give --data or --config");
    data = load_data(load_config(config_path)).test;
  }
  const auto preds = predict(params, data);
  const Evaluation ev = summarize(preds);
  std::cout << "count = " << ev.count << '\n' << "loss = " << num(ev.loss) << '\n' << "accuracy = " << num(ev.accuracy) << '\n';
  if (!predictions_path.empty()) {
    std::ofstream out(predictions_path);
    require(static_cast<bool>(out), "eval: cannot write '" + predictions_path + "'");
    write_predictions_csv(out, preds);
  }
  return 0;
}

int cmd_spectrum(const RecurrentSource& src) {
  const auto [w, act] = src.load();
  const auto rep = spectrum_report(w);
  std::cout << "source = " << (src.checkpoint.empty() ? scheme_name(parse_scheme(src.scheme)) : src.checkpoint) << '\n'
            << "n = " << w.rows() << '\n'
            << "activation = " << to_string(act) << '\n'
            << "symmetric = " << (rep.is_symmetric ? "true" : "false") << '\n'
            << "positive_definite = " << (rep.is_positive_definite ? "true" : "false") << '\n'
            << "max_eig = " << num(rep.max_eig) << '\n'
            << "min_eig_magnitude = " << num(rep.eigenvalue_magnitudes(rep.eigenvalue_magnitudes.size() - 1)) << '\n'
            << "regime = " << to_string(rep.regime) << '\n'
            << "eigenvalue_magnitudes = ";
  for (Eigen::Index i = 0; i < rep.eigenvalue_magnitudes.size(); ++i)
    std::cout << (i ? "," : "") << num(rep.eigenvalue_magnitudes(i));
  std::cout << '\n';
  return 0;
}

int cmd_dynamics(const RecurrentSource& src, std::size_t steps, const std::string& h0_kind, std::uint64_t h0_seed) {
  const auto [w, act] = src.load();
  Rng rng(h0_seed);
  VectorD h0(w.rows());
  for (Eigen::Index i = 0; i < h0.size(); ++i) {
    if (h0_kind == "uniform") h0(i) = rng.uniform();
    else if (h0_kind == "gaussian") h0(i) = rng.normal();
    else if (h0_kind == "ones") h0(i) = 1.0;
    else throw ContractViolation("dynamics: --h0 must be uniform, gaussian or ones");
  }
  const auto rec = simulate_autonomous(w, h0, steps, act);
  std::cout << "step,norm,terminated\n";
  for (std::size_t t = 0; t < rec.norms.size(); ++t)
    std::cout << t << ',' << num(rec.norms[t]) << ',' << (rec.terminated_at && *rec.terminated_at == t ? 1 : 0) << '\n';
  std::cerr << "outcome = " << to_string(rec.outcome) << '\n';
  return 0;
}

int cmd_grad_check(std::uint64_t seed, std::size_t draws, long hidden, long steps) {
  Rng rng(seed);
  double worst = 0.0;
  std::cout << "activation,output,draws,rejected,max_relative_error\n";
  for (Activation a : {Activation::ReLU, Activation::Tanh})
    for (OutputKind o : {OutputKind::Linear, OutputKind::Softmax}) {
      const auto rep = random_grad_check(a, o, draws, rng, hidden, steps);
      worst = std::max(worst, rep.max_error);
      std::cout << to_string(a) << ',' << to_string(o) << ',' << rep.accepted << ',' << rep.rejected << ','
                << num(rep.max_error) << '\n';
    }
  const bool ok = worst < 1e-5;
  std::cout << "max_relative_error = " << num(worst) << '\n' << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent networks with normalized positive-definite initialization"};
  app.require_subcommand(1);

  std::string task = "addition", out_path;
  std::size_t length = 100, count = 1000;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen-data", "write a generated addition or multiplication dataset as CSV");
  gen->add_option("--task", task, "addition or multiplication");
  gen->add_option("--T", length, "sequence length");
  gen->add_option("--n", count, "number of samples");
  gen->add_option("--seed", seed, "PRNG seed");
  gen->add_option("--out", out_path, "output file (default stdout)");

  std::string config_path, output_dir;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "run the experiment described by a config file");
  train_cmd->add_option("--config", config_path, "config file")->required();
  train_cmd->add_option("--output-dir", output_dir, "override output_dir from the config");
  train_cmd->add_flag("--quiet", quiet, "no per-epoch progress on stderr");

  std::string ckpt, data_path, eval_config, predictions_path;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", data_path, "regression CSV from gen-data");
  eval_cmd->add_option("--task", task, "task of the --data CSV (addition or multiplication)");
  eval_cmd->add_option("--config", eval_config, "evaluate on the test split this config generates");
  eval_cmd->add_option("--predictions", predictions_path, "write per-sample predictions CSV");

  RecurrentSource spec_src;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "eigenvalue report for a recurrent matrix");
  spec_src.add_options(spectrum_cmd);

  RecurrentSource dyn_src;
  std::size_t dyn_steps = 100;
  std::string h0_kind = "uniform";
  std::uint64_t h0_seed = 1;
  auto* dynamics_cmd = app.add_subcommand("dynamics", "autonomous simulation h_t = f(W h_{t-1}) as CSV");
  dyn_src.add_options(dynamics_cmd);
  dynamics_cmd->add_option("--steps", dyn_steps, "number of steps")->check(CLI::PositiveNumber);
  dynamics_cmd->add_option("--h0", h0_kind, "initial state: uniform, gaussian or ones");
  dynamics_cmd->add_option("--h0-seed", h0_seed, "seed for the initial state");

  std::uint64_t gc_seed = 0;
  std::size_t gc_draws = 1;
  long gc_hidden = 8, gc_steps = 12;
  auto* gc_cmd = app.add_subcommand("grad-check", "BPTT against finite differences on random small nets");
  gc_cmd->add_option("--seed", gc_seed, "PRNG seed");
  gc_cmd->add_option("--draws", gc_draws, "accepted nets per configuration")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--hidden", gc_hidden, "hidden size")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--T", gc_steps, "sequence length")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_gen_data(task, length, count, seed, out_path);
    if (*train_cmd) return cmd_train(config_path, output_dir, quiet);
    if (*eval_cmd) return cmd_eval(ckpt, data_path, task, eval_config, predictions_path);
    if (*spectrum_cmd) return cmd_spectrum(spec_src);
    if (*dynamics_cmd) return cmd_dynamics(dyn_src, dyn_steps, h0_kind, h0_seed);
    if (*gc_cmd) return cmd_grad_check(gc_seed, gc_draws, gc_hidden, gc_steps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
