#pragma once

#include "relcomp/quality.h"

namespace relcomp::reference {

// Direct-formula SSIM: every window is evaluated independently with the 2-D
// Gaussian weights and two-pass mean/variance/covariance. Serial and slow;
// kept as the oracle for the optimized kernel and as the benchmark baseline.
double ssim_frame(const Frame& reference, const Frame& test);

}  // namespace relcomp::reference
