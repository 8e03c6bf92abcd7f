#pragma once

// Checkpoint files: one text header line "n_in m c activation output", then
// W_hx, W_hh, W_yh, b_h, b_y as little-endian float64, row-major.

#include <iosfwd>
#include <string>

#include "nprnn/net.hpp"

namespace nprnn {

void write_checkpoint(std::ostream& out, const RnnParams<double>& params);
RnnParams<double> read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const RnnParams<double>& params);
RnnParams<double> load_checkpoint(const std::string& path);

}  // namespace nprnn
