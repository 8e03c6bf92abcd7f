#include "nprnn/tasks.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "nprnn/errors.hpp"

namespace nprnn {

std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::Addition: return "addition";
    case TaskKind::Multiplication: return "multiplication";
    case TaskKind::SequentialMnist: return "mnist";
  }
  return "?";
}

TaskKind parse_task(std::string_view name) {
  if (name == "addition") return TaskKind::Addition;
  if (name == "multiplication") return TaskKind::Multiplication;
  if (name == "mnist" || name == "sequential-mnist") return TaskKind::SequentialMnist;
  throw ContractViolation("unknown task '" + std::string(name) + "'");
}

void DatasetSpec::validate() const {
  if (task == TaskKind::SequentialMnist) {
    require(length >= 1, "dataset: MNIST sequence length must be >= 1");
  } else {
    require(length >= 2, "dataset: addition/multiplication need T >= 2");
  }
  require(n_train >= 1, "dataset: n_train must be >= 1");
  require(n_test >= 1, "dataset: n_test must be >= 1");
}

namespace {

RegressionSample draw_marked_sequence(std::size_t length, Rng& rng) {
  RegressionSample s;
  s.inputs = Sequence<double>::Zero(2, static_cast<Eigen::Index>(length));
  for (std::size_t t = 0; t < length; ++t) s.inputs(0, static_cast<Eigen::Index>(t)) = rng.uniform();
  const std::size_t half = length / 2;
  s.first = static_cast<std::size_t>(rng.uniform_int(0, half));
  s.second = static_cast<std::size_t>(rng.uniform_int(half, length));
  s.inputs(1, static_cast<Eigen::Index>(s.first)) = 1.0;
  s.inputs(1, static_cast<Eigen::Index>(s.second)) = 1.0;
  return s;
}

double marked(const RegressionSample& s, std::size_t t) { return s.inputs(0, static_cast<Eigen::Index>(t)); }

}  // namespace

std::vector<RegressionSample> gen_regression(TaskKind task, std::size_t length, std::size_t n, Rng& rng) {
  require(task != TaskKind::SequentialMnist, "gen_regression: MNIST is loaded, not generated");
  require(length >= 2, "gen_regression: T must be >= 2");
  std::vector<RegressionSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RegressionSample s = draw_marked_sequence(length, rng);
    s.target = task == TaskKind::Addition ? marked(s, s.first) + marked(s, s.second)
                                          : marked(s, s.first) * marked(s, s.second);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<RegressionSample> gen_addition(std::size_t length, std::size_t n, Rng& rng) {
  return gen_regression(TaskKind::Addition, length, n, rng);
}

std::vector<RegressionSample> gen_multiplication(std::size_t length, std::size_t n, Rng& rng) {
  return gen_regression(TaskKind::Multiplication, length, n, rng);
}

double constant_predictor_mse(const std::vector<RegressionSample>& samples, double constant) {
  require(!samples.empty(), "constant_predictor_mse: no samples");
  double sum = 0.0;
  for (const auto& s : samples) sum += (s.target - constant) * (s.target - constant);
  return sum / static_cast<double>(samples.size());
}

double baseline_mse(TaskKind task, double constant, std::size_t n, Rng& rng) {
  require(n >= 1, "baseline_mse: n must be >= 1");
  // Only the two marked values matter, so length-2 sequences suffice.
  return constant_predictor_mse(gen_regression(task, 2, n, rng), constant);
}

Sequence<double> sequentialize(const MatrixD& image, std::size_t downscale) {
  require(image.rows() == image.cols() && image.rows() > 0, "sequentialize: image must be square");
  require(downscale >= 1, "sequentialize: downscale must be >= 1");
  const auto k = static_cast<Eigen::Index>(downscale);
  require(image.rows() % k == 0, "sequentialize: downscale " + std::to_string(downscale) +
                                     " does not divide image size " + std::to_string(image.rows()));
  const Eigen::Index side = image.rows() / k;
  Sequence<double> seq(1, side * side);
  const double inv_area = 1.0 / static_cast<double>(k * k);
  for (Eigen::Index r = 0; r < side; ++r)
    for (Eigen::Index c = 0; c < side; ++c)
      seq(0, r * side + c) = k == 1 ? image(r, c) : image.block(r * k, c * k, k, k).sum() * inv_area;
  return seq;
}

MatrixD IdxImages::image(std::size_t index) const {
  require(index < count, "IdxImages::image: index out of range");
  MatrixD img(rows, cols);
  const std::size_t base = index * rows * cols;
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c)
      img(r, c) = static_cast<double>(pixels[base + r * cols + c]) / 255.0;
  return img;
}

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::string& path) {
  if (bytes.size() < offset + 4) throw ParseError("'" + path + "': truncated header", bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  const auto bytes = read_file(path);
  if (read_be32(bytes, 0, path) != kImageMagic) throw ParseError("'" + path + "': bad IDX image magic", 0);
  IdxImages out;
  out.count = read_be32(bytes, 4, path);
  out.rows = read_be32(bytes, 8, path);
  out.cols = read_be32(bytes, 12, path);
  const std::size_t expected = std::size_t{out.count} * out.rows * out.cols;
  if (bytes.size() < 16 + expected)
    throw ParseError("'" + path + "': truncated pixel data, expected " + std::to_string(expected) + " bytes",
                     bytes.size());
  out.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(expected));
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  const auto bytes = read_file(path);
  if (read_be32(bytes, 0, path) != kLabelMagic) throw ParseError("'" + path + "': bad IDX label magic", 0);
  const std::uint32_t count = read_be32(bytes, 4, path);
  if (bytes.size() < 8 + std::size_t{count})
    throw ParseError("'" + path + "': truncated label data", bytes.size());
  std::vector<std::uint8_t> labels(bytes.begin() + 8, bytes.begin() + 8 + count);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] > 9)
      throw ParseError("'" + path + "': label " + std::to_string(labels[i]) + " outside 0-9", 8 + i);
  return labels;
}

void write_idx_images(const std::string& path, const IdxImages& images) {
  require(images.pixels.size() == std::size_t{images.count} * images.rows * images.cols,
          "write_idx_images: pixel buffer does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "write_idx_images: cannot open '" + path + "'");
  put_be32(out, kImageMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "write_idx_labels: cannot open '" + path + "'");
  put_be32(out, kLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

std::vector<ClassificationSample> load_mnist_idx(const std::string& image_path, const std::string& label_path,
                                                 std::size_t downscale) {
  const IdxImages images = read_idx_images(image_path);
  const std::vector<std::uint8_t> labels = read_idx_labels(label_path);
  if (labels.size() != images.count)
    throw ParseError("'" + label_path + "': " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(images.count) + " images",
                     4);
  std::vector<ClassificationSample> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.push_back({sequentialize(images.image(i), downscale), labels[i]});
  return out;
}

MnistFiles mnist_files(const std::string& dir) {
  const std::filesystem::path d(dir);
  return {(d / "train-images-idx3-ubyte").string(), (d / "train-labels-idx1-ubyte").string(),
          (d / "t10k-images-idx3-ubyte").string(), (d / "t10k-labels-idx1-ubyte").string()};
}

bool mnist_available(const std::string& dir) {
  if (dir.empty()) return false;
  const auto f = mnist_files(dir);
  for (const auto& p : {f.train_images, f.train_labels, f.test_images, f.test_labels})
    if (!std::filesystem::is_regular_file(p)) return false;
  return true;
}

namespace {

void put_double(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line) {
  T value{};
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, value);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError("CSV: bad number '" + std::string(field) + "'", line);
  return value;
}

}  // namespace

void write_regression_csv(std::ostream& out, const std::vector<RegressionSample>& samples) {
  if (samples.empty()) return;
  const std::size_t length = samples.front().length();
  out << "T,first,second";
  for (std::size_t t = 0; t < length; ++t) out << ",x" << t;
  out << ",target\n";
  for (const auto& s : samples) {
    out << s.length() << ',' << s.first << ',' << s.second;
    for (std::size_t t = 0; t < s.length(); ++t) {
      out << ',';
      put_double(out, s.inputs(0, static_cast<Eigen::Index>(t)));
    }
    out << ',';
    put_double(out, s.target);
    out << '\n';
  }
}

std::vector<RegressionSample> read_regression_csv(std::istream& in) {
  std::vector<RegressionSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("T,", 0) == 0) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 4) throw ParseError("CSV: too few fields", line_no);
    RegressionSample s;
    const auto length = parse_number<std::size_t>(fields[0], line_no);
    if (fields.size() != length + 4) throw ParseError("CSV: row length does not match T", line_no);
    s.first = parse_number<std::size_t>(fields[1], line_no);
    s.second = parse_number<std::size_t>(fields[2], line_no);
    if (length < 2 || s.first >= s.second || s.second >= length)
      throw ParseError("CSV: invalid mask positions", line_no);
    s.inputs = Sequence<double>::Zero(2, static_cast<Eigen::Index>(length));
    for (std::size_t t = 0; t < length; ++t)
      s.inputs(0, static_cast<Eigen::Index>(t)) = parse_number<double>(fields[3 + t], line_no);
    s.inputs(1, static_cast<Eigen::Index>(s.first)) = 1.0;
    s.inputs(1, static_cast<Eigen::Index>(s.second)) = 1.0;
    s.target = parse_number<double>(fields.back(), line_no);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace nprnn
