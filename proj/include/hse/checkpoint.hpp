#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hse/net.hpp"

namespace hse {

// Checkpoint layout:
//
//   S2HSE1\n
//   f=<int>\n
//   d=<int>\n
//   layers=<int>\n
//   then per conv layer: "conv <out_c> <in_c> <k>\n" followed by the kernel
//   and the bias as raw little-endian float64.
//
// Only conv weights are stored; the stage layout is rebuilt from (f, d).
void write_checkpoint(const Model& model, std::ostream& out);
Model read_checkpoint(std::istream& in, double dropout_rate = 0.5);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path, double dropout_rate = 0.5);

}  // namespace hse
