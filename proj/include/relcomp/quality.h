#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relcomp/profiles.h"

namespace relcomp {

// 8-bit planar picture. Chroma planes are either both empty (luma only) or
// 4:2:0 with ceil(w/2) x ceil(h/2) samples each.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> u;
  std::vector<std::uint8_t> v;

  static Frame luma(int width, int height, std::uint8_t fill = 0);
  static Frame yuv420(int width, int height, std::uint8_t luma_fill = 0,
                      std::uint8_t chroma_fill = 128);

  bool has_chroma() const { return !u.empty(); }
  int chroma_width() const { return (width + 1) / 2; }
  int chroma_height() const { return (height + 1) / 2; }
  std::uint8_t& at(int x, int row) { return y[static_cast<size_t>(row) * width + x]; }
  std::uint8_t at(int x, int row) const { return y[static_cast<size_t>(row) * width + x]; }
  bool operator==(const Frame&) const = default;
};

// Fixed SSIM parameters: 11x11 Gaussian window with sigma 1.5, K1 = 0.01,
// K2 = 0.03, dynamic range 255. Only windows fully inside the frame count.
namespace ssim_params {
inline constexpr int kWindow = 11;
inline constexpr double kSigma = 1.5;
inline constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
inline constexpr double kC2 = (0.03 * 255) * (0.03 * 255);
}  // namespace ssim_params

// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::span<const double, ssim_params::kWindow> ssim_gaussian_taps();

// Luma SSIM averaged over all window positions. Row blocks run in parallel
// with OpenMP; the reduction order is fixed, so the result does not depend on
// the thread count. Throws Error(kValidation) on dimension mismatch or when
// the frame is smaller than the window.
double ssim_frame(const Frame& reference, const Frame& test);

// Same kernel on raw planes.
double ssim_plane(std::span<const std::uint8_t> reference, std::span<const std::uint8_t> test,
                  int width, int height, bool parallel = true);

enum class ScaleFilter { kBilinear, kNearest };
std::string_view to_string(ScaleFilter filter);
std::optional<ScaleFilter> parse_scale_filter(std::string_view text);

// Resamples every plane to `target` using pixel-center alignment and edge
// clamping. Throws Error(kValidation) for a zero dimension.
Frame rescale(const Frame& frame, const Resolution& target,
              ScaleFilter filter = ScaleFilter::kBilinear);

struct SsimResult {
  std::vector<double> per_frame;
  double mean = 0;
};

double arithmetic_mean(std::span<const double> values);

// Test frames are rescaled to the reference resolution before comparison.
// Frames are evaluated in parallel; per_frame keeps clip order.
// Throws Error(kValidation) on a frame-count mismatch.
SsimResult ssim_clip(std::span<const Frame> reference, std::span<const Frame> test,
                     ScaleFilter filter = ScaleFilter::kBilinear);

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  // nullopt at end of stream.
  virtual std::optional<Frame> next() = 0;
};

// Streaming variant: pulls `batch` frames from each source at a time so a
// whole clip never has to be resident.
SsimResult ssim_clip(FrameSource& reference, FrameSource& test,
                     ScaleFilter filter = ScaleFilter::kBilinear, int batch = 32);

// Raw yuv420p exchange format; dimensions travel out of band.
std::optional<Frame> read_yuv420p(std::istream& in, int width, int height);
void write_yuv420p(std::ostream& out, const Frame& frame);

class YuvStreamSource : public FrameSource {
 public:
  YuvStreamSource(std::istream& in, int width, int height)
      : in_(in), width_(width), height_(height) {}
  std::optional<Frame> next() override { return read_yuv420p(in_, width_, height_); }

 private:
  std::istream& in_;
  int width_;
  int height_;
};

struct Measurement {
  EncodingProfile profile;
  double mean_ssim = 0;
  double bitrate_kbps = 0;
};

// Sorts by mean SSIM descending (ties: lower bitrate, then profile order)
// and numbers setups 1..N. Scope is the set of codecs present, unless given.
// Throws Error(kValidation) on empty input.
SetupCatalog build_catalog(std::vector<Measurement> measurements,
                           std::optional<std::vector<CodecFamily>> scope = std::nullopt);

// `setup,codec,crf,width,height,mean_ssim,bitrate_kbps`
std::string catalog_to_csv(const SetupCatalog& catalog);
SetupCatalog catalog_from_csv(std::string_view text);

// `codec,crf,width,height,mean_ssim,bitrate_kbps`
std::string measurements_to_csv(std::span<const Measurement> measurements);
std::vector<Measurement> measurements_from_csv(std::string_view text);

}  // namespace relcomp
