#include "pnct/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace pnct {

double ssim(const Image& a, const Image& b, double dynamic_range) {
  if (a.width != b.width || a.height != b.height) throw std::invalid_argument("ssim: size mismatch");
  if (!(dynamic_range > 0.0)) throw std::invalid_argument("ssim: dynamic range must be > 0");
  constexpr int radius = 5;
  constexpr double sigma = 1.5;
  const double c1 = std::pow(0.01 * dynamic_range, 2);
  const double c2 = std::pow(0.03 * dynamic_range, 2);

  double kernel[2 * radius + 1];
  for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));

  double total = 0.0;
  for (int r = 0; r < a.height; ++r) {
    for (int c = 0; c < a.width; ++c) {
      double wsum = 0.0, ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int dr = -radius; dr <= radius; ++dr) {
        const int rr = r + dr;
        if (rr < 0 || rr >= a.height) continue;
        for (int dc = -radius; dc <= radius; ++dc) {
          const int cc = c + dc;
          if (cc < 0 || cc >= a.width) continue;
          const double w = kernel[dr + radius] * kernel[dc + radius];
          const double va = a(rr, cc);
          const double vb = b(rr, cc);
          wsum += w;
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      }
      ma /= wsum;
      mb /= wsum;
      const double var_a = saa / wsum - ma * ma;
      const double var_b = sbb / wsum - mb * mb;
      const double cov = sab / wsum - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
    }
  }
  return total / (static_cast<double>(a.width) * a.height);
}

}  // namespace pnct
