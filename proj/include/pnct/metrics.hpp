#pragma once

#include "pnct/phantom.hpp"

namespace pnct {

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, over the given dynamic range. Windows are clipped at
/// the image border.
double ssim(const Image& a, const Image& b, double dynamic_range);

}  // namespace pnct
