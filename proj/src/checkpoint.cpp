#include "nprnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "nprnn/errors.hpp"

namespace nprnn {

namespace {

static_assert(sizeof(double) == 8);

void put_le64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

template <typename Array>
void put_array(std::ostream& out, const Array& a) {
  // Matrix is row-major, so row-major order is also storage order; index
  // explicitly anyway so vectors and matrices share the path.
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) put_le64(out, a(r, c));
}

template <typename Array>
void get_array(std::istream& in, Array& a, std::size_t& offset) {
  unsigned char b[8];
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("checkpoint: truncated weight data", offset);
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= std::uint64_t{b[i]} << (8 * i);
      a(r, c) = std::bit_cast<double>(bits);
      offset += 8;
    }
}

}  // namespace

void write_checkpoint(std::ostream& out, const RnnParams<double>& params) {
  params.validate();
  out << params.n_in() << ' ' << params.hidden() << ' ' << params.n_out() << ' ' << to_string(params.activation)
      << ' ' << to_string(params.output) << '\n';
  put_array(out, params.w_hx);
  put_array(out, params.w_hh);
  put_array(out, params.w_yh);
  put_array(out, params.b_h);
  put_array(out, params.b_y);
}

RnnParams<double> read_checkpoint(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("checkpoint: missing header line", 0);
  std::istringstream hs(header);
  long long n_in = 0, m = 0, c = 0;
  std::string act, out;
  if (!(hs >> n_in >> m >> c >> act >> out) || n_in < 1 || m < 1 || c < 1)
    throw ParseError("checkpoint: malformed header '" + header + "'", 0);
  RnnParams<double> p;
  try {
    p.activation = parse_activation(act);
    p.output = parse_output_kind(out);
  } catch (const ContractViolation& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), 0);
  }
  p.w_hx.resize(m, n_in);
  p.w_hh.resize(m, m);
  p.w_yh.resize(c, m);
  p.b_h.resize(m);
  p.b_y.resize(c);
  std::size_t offset = header.size() + 1;
  get_array(in, p.w_hx, offset);
  get_array(in, p.w_hh, offset);
  get_array(in, p.w_yh, offset);
  get_array(in, p.b_h, offset);
  get_array(in, p.b_y, offset);
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("checkpoint: trailing bytes", offset);
  return p;
}

void save_checkpoint(const std::string& path, const RnnParams<double>& params) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "save_checkpoint: cannot open '" + path + "'");
  write_checkpoint(out, params);
  require(static_cast<bool>(out), "save_checkpoint: write failed for '" + path + "'");
}

RnnParams<double> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'", 0);
  return read_checkpoint(in);
}

}  // namespace nprnn
