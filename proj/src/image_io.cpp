#include "pnct/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pnct {

void write_pgm16(const Image& img, const std::string& path, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("write_pgm16: empty window");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm16: cannot open " + path);
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (Eigen::Index i = 0; i < img.values.size(); ++i) {
    const double v = std::clamp((img.values[i] - lo) / (hi - lo), 0.0, 1.0);
    const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    out.write(bytes, 2);
  }
}

Pgm16 read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm16: cannot open " + path);
  std::string magic;
  int maxval = 0;
  Pgm16 img;
  in >> magic >> img.width >> img.height >> maxval;
  if (magic != "P5" || maxval != 65535) throw std::runtime_error("read_pgm16: not a 16-bit PGM");
  in.get();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (auto& p : img.pixels) {
    unsigned char bytes[2];
    in.read(reinterpret_cast<char*>(bytes), 2);
    p = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
  }
  if (!in) throw std::runtime_error("read_pgm16: truncated file");
  return img;
}

void write_image_csv(const Image& img, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_image_csv: cannot open " + path);
  out << std::setprecision(17);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (c > 0) out << ',';
      out << img(r, c);
    }
    out << '\n';
  }
}

void write_sinogram_csv(const Sinogram& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sinogram_csv: cannot open " + path);
  out << std::setprecision(17) << "angle_index,ray_index,count\n";
  for (int v = 0; v < d.n_angles; ++v) {
    for (int k = 0; k < d.n_rays; ++k) out << v << ',' << k << ',' << d(v, k) << '\n';
  }
}

Sinogram read_sinogram_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_sinogram_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "angle_index,ray_index,count") {
    throw std::runtime_error("read_sinogram_csv: unexpected header");
  }
  std::vector<std::tuple<int, int, double>> rows;
  int n_angles = 0;
  int n_rays = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    int v = 0;
    int k = 0;
    double c = 0.0;
    char sep1 = 0;
    char sep2 = 0;
    if (!(fields >> v >> sep1 >> k >> sep2 >> c) || sep1 != ',' || sep2 != ',') {
      throw std::runtime_error("read_sinogram_csv: malformed row: " + line);
    }
    n_angles = std::max(n_angles, v + 1);
    n_rays = std::max(n_rays, k + 1);
    rows.emplace_back(v, k, c);
  }
  Sinogram d{n_angles, n_rays, Vector::Zero(static_cast<Eigen::Index>(n_angles) * n_rays)};
  for (const auto& [v, k, c] : rows) d.values[static_cast<Eigen::Index>(v) * n_rays + k] = c;
  return d;
}

}  // namespace pnct
