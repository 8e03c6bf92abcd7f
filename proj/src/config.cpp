#include "nprnn/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "nprnn/errors.hpp"

namespace nprnn {

OptimizerState<double> ExperimentConfig::optimizer_state() const {
  OptimizerState<double> s;
  s.kind = optimizer;
  s.lr0 = lr0;
  s.clip = clip;
  s.rms_decay = rms_decay;
  s.rms_eps = rms_eps;
  return s;
}

Eigen::Index ExperimentConfig::n_in() const { return data.task == TaskKind::SequentialMnist ? 1 : 2; }
Eigen::Index ExperimentConfig::n_out() const { return data.task == TaskKind::SequentialMnist ? 10 : 1; }
OutputKind ExperimentConfig::output_kind() const {
  return data.task == TaskKind::SequentialMnist ? OutputKind::Softmax : OutputKind::Linear;
}

void ExperimentConfig::validate() const {
  data.validate();
  require(hidden >= 1, "config: hidden must be >= 1");
  require(batch_size >= 1, "config: batch_size must be >= 1");
  require(epochs >= 1, "config: epochs must be >= 1");
  require(eval_every >= 1, "config: eval_every must be >= 1");
  require(downscale >= 1 && 28 % downscale == 0, "config: downscale must divide 28");
  if (data.task == TaskKind::SequentialMnist) {
    const std::size_t side = 28 / downscale;
    require(data.length == side * side, "config: MNIST with downscale " + std::to_string(downscale) +
                                            " has T = " + std::to_string(side * side));
  }
  optimizer_state().validate();
  schedule().validate();
  for (const auto& c : cooling)
    require(c.epoch >= 1 && c.epoch < epochs, "config: cooling epoch " + std::to_string(c.epoch) +
                                                  " must lie in [1, epochs)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_value(const std::string& text) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ContractViolation("bad number '" + text + "'");
  return v;
}

std::vector<CoolingPoint> parse_cooling(const std::string& text) {
  std::vector<CoolingPoint> out;
  if (text.empty() || text == "none") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ContractViolation("cooling entry '" + item + "' is not epoch:divisor");
    out.push_back({parse_value<std::size_t>(trim(item.substr(0, colon))),
                   parse_value<double>(trim(item.substr(colon + 1)))});
  }
  return out;
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  std::optional<std::size_t> length;
  std::optional<Activation> activation;

  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"task", [&](const std::string& v) { cfg.data.task = parse_task(v); }},
      {"T", [&](const std::string& v) { length = parse_value<std::size_t>(v); }},
      {"n_train", [&](const std::string& v) { cfg.data.n_train = parse_value<std::size_t>(v); }},
      {"n_test", [&](const std::string& v) { cfg.data.n_test = parse_value<std::size_t>(v); }},
      {"scheme", [&](const std::string& v) { cfg.scheme = parse_scheme(v); }},
      {"activation", [&](const std::string& v) { activation = parse_activation(v); }},
      {"hidden", [&](const std::string& v) { cfg.hidden = parse_value<std::size_t>(v); }},
      {"optimizer", [&](const std::string& v) { cfg.optimizer = parse_optimizer(v); }},
      {"lr0", [&](const std::string& v) { cfg.lr0 = parse_value<double>(v); }},
      {"clip",
       [&](const std::string& v) {
         if (v == "none") cfg.clip.reset();
         else cfg.clip = parse_value<double>(v);
       }},
      {"rms_decay", [&](const std::string& v) { cfg.rms_decay = parse_value<double>(v); }},
      {"rms_eps", [&](const std::string& v) { cfg.rms_eps = parse_value<double>(v); }},
      {"cooling", [&](const std::string& v) { cfg.cooling = parse_cooling(v); }},
      {"batch_size", [&](const std::string& v) { cfg.batch_size = parse_value<std::size_t>(v); }},
      {"epochs", [&](const std::string& v) { cfg.epochs = parse_value<std::size_t>(v); }},
      {"eval_every", [&](const std::string& v) { cfg.eval_every = parse_value<std::size_t>(v); }},
      {"seed", [&](const std::string& v) { cfg.seed = parse_value<std::uint64_t>(v); }},
      {"downscale", [&](const std::string& v) { cfg.downscale = parse_value<std::size_t>(v); }},
      {"output_dir", [&](const std::string& v) { cfg.output_dir = v; }},
      {"mnist_dir", [&](const std::string& v) { cfg.mnist_dir = v; }},
  };

  std::map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source + ": expected key = value, got '" + body + "'", line_no);
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ParseError(source + ": unknown key '" + key + "'", line_no);
    if (const auto prev = seen.find(key); prev != seen.end())
      throw ParseError(source + ": key '" + key + "' repeats line " + std::to_string(prev->second), line_no);
    seen[key] = line_no;
    try {
      it->second(value);
    } catch (const ContractViolation& e) {
      throw ParseError(source + ": " + key + ": " + e.what(), line_no);
    }
  }

  // np-tanhRNN names its nonlinearity; every other scheme takes the activation key as given.
  if (activation) {
    if (cfg.scheme.kind == InitKind::NormalizedPositiveDefinite && cfg.scheme.activation == Activation::Tanh &&
        *activation != Activation::Tanh)
      throw ParseError(source + ": activation " + std::string(to_string(*activation)) +
                           " contradicts scheme np-tanhRNN",
                       seen["activation"]);
    cfg.scheme.activation = *activation;
  }
  if (cfg.data.task == TaskKind::SequentialMnist) {
    const std::size_t side = cfg.downscale >= 1 && 28 % cfg.downscale == 0 ? 28 / cfg.downscale : 0;
    cfg.data.length = length.value_or(side * side);
  } else if (length) {
    cfg.data.length = *length;
  }
  cfg.data.seed = cfg.seed;
  try {
    cfg.validate();
  } catch (const ContractViolation& e) {
    throw ParseError(source + ": " + e.what(), line_no);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'", 0);
  return parse_config(in, path);
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "task = " << to_string(cfg.data.task) << '\n'
      << "T = " << cfg.data.length << '\n'
      << "n_train = " << cfg.data.n_train << '\n'
      << "n_test = " << cfg.data.n_test << '\n'
      << "scheme = " << scheme_name(cfg.scheme) << '\n'
      << "activation = " << to_string(cfg.scheme.activation) << '\n'
      << "hidden = " << cfg.hidden << '\n'
      << "optimizer = " << to_string(cfg.optimizer) << '\n'
      << "lr0 = " << shortest(cfg.lr0) << '\n'
      << "clip = " << (cfg.clip ? shortest(*cfg.clip) : "none") << '\n'
      << "rms_decay = " << shortest(cfg.rms_decay) << '\n'
      << "rms_eps = " << shortest(cfg.rms_eps) << '\n'
      << "cooling = ";
  if (cfg.cooling.empty()) out << "none";
  for (std::size_t i = 0; i < cfg.cooling.size(); ++i)
    out << (i ? "," : "") << cfg.cooling[i].epoch << ':' << shortest(cfg.cooling[i].divisor);
  out << '\n'
      << "batch_size = " << cfg.batch_size << '\n'
      << "epochs = " << cfg.epochs << '\n'
      << "eval_every = " << cfg.eval_every << '\n'
      << "seed = " << cfg.seed << '\n'
      << "downscale = " << cfg.downscale << '\n';
  if (!cfg.output_dir.empty()) out << "output_dir = " << cfg.output_dir << '\n';
  if (!cfg.mnist_dir.empty()) out << "mnist_dir = " << cfg.mnist_dir << '\n';
  return out.str();
}

}  // namespace nprnn
