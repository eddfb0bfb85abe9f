#pragma once

#include "pnct/phantom.hpp"

#include <string>

namespace pnct {

/// 16-bit binary PGM (P5, big-endian), linear window [lo, hi] -> [0, 65535].
void write_pgm16(const Image& img, const std::string& path, double lo, double hi);

struct Pgm16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};
Pgm16 read_pgm16(const std::string& path);

/// One row of comma-separated values per image row.
void write_image_csv(const Image& img, const std::string& path);

/// "angle_index,ray_index,count" rows.
void write_sinogram_csv(const Sinogram& d, const std::string& path);
Sinogram read_sinogram_csv(const std::string& path);

}  // namespace pnct
