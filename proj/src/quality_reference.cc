#include "relcomp/quality_reference.h"

#include <cmath>

#include "relcomp/error.h"

namespace relcomp::reference {

double ssim_frame(const Frame& reference, const Frame& test) {
  using namespace ssim_params;
  if (reference.width != test.width || reference.height != test.height) {
    throw Error(ErrorKind::kValidation, "dimension mismatch");
  }
  const int w = reference.width;
  const int h = reference.height;
  if (w < kWindow || h < kWindow) {
    throw Error(ErrorKind::kValidation, "frame is smaller than the SSIM window");
  }

  // Weights straight from the Gaussian, normalized over the full 2-D window.
  double weight[kWindow][kWindow];
  const double radius = (kWindow - 1) / 2.0;
  double norm = 0;
  for (int i = 0; i < kWindow; ++i) {
    for (int j = 0; j < kWindow; ++j) {
      const double di = i - radius, dj = j - radius;
      weight[i][j] = std::exp(-(di * di + dj * dj) / (2 * kSigma * kSigma));
      norm += weight[i][j];
    }
  }
  for (auto& row : weight) {
    for (double& v : row) v /= norm;
  }

  double total = 0;
  long windows = 0;
  for (int y = 0; y + kWindow <= h; ++y) {
    for (int x = 0; x + kWindow <= w; ++x) {
      double mu_a = 0, mu_b = 0;
      for (int i = 0; i < kWindow; ++i) {
        for (int j = 0; j < kWindow; ++j) {
          mu_a += weight[i][j] * reference.at(x + j, y + i);
          mu_b += weight[i][j] * test.at(x + j, y + i);
        }
      }
      double var_a = 0, var_b = 0, cov = 0;
      for (int i = 0; i < kWindow; ++i) {
        for (int j = 0; j < kWindow; ++j) {
          const double da = reference.at(x + j, y + i) - mu_a;
          const double db = test.at(x + j, y + i) - mu_b;
          var_a += weight[i][j] * da * da;
          var_b += weight[i][j] * db * db;
          cov += weight[i][j] * da * db;
        }
      }
      total += ((2 * mu_a * mu_b + kC1) * (2 * cov + kC2)) /
               ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++windows;
    }
  }
  return total / windows;
}

}  // namespace relcomp::reference
