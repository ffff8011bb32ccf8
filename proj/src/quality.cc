#include "relcomp/quality.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "relcomp/csv.h"
#include "relcomp/error.h"

namespace relcomp {
namespace {

using ssim_params::kC1;
using ssim_params::kC2;
using ssim_params::kWindow;

std::array<double, kWindow> make_taps() {
  std::array<double, kWindow> taps{};
  const double radius = (kWindow - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - radius;
    taps[i] = std::exp(-(d * d) / (2 * ssim_params::kSigma * ssim_params::kSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

const std::array<double, kWindow>& taps() {
  static const std::array<double, kWindow> t = make_taps();
  return t;
}

void resample_plane(const std::uint8_t* src, int sw, int sh, std::uint8_t* dst, int dw, int dh,
                    ScaleFilter filter) {
  const double sx_scale = static_cast<double>(sw) / dw;
  const double sy_scale = static_cast<double>(sh) / dh;
  if (filter == ScaleFilter::kNearest) {
    for (int y = 0; y < dh; ++y) {
      const int sy = std::min(sh - 1, static_cast<int>((y + 0.5) * sy_scale));
      for (int x = 0; x < dw; ++x) {
        const int sx = std::min(sw - 1, static_cast<int>((x + 0.5) * sx_scale));
        dst[static_cast<size_t>(y) * dw + x] = src[static_cast<size_t>(sy) * sw + sx];
      }
    }
    return;
  }
  // Per-column source taps are shared by every row.
  std::vector<int> x0(dw), x1(dw);
  std::vector<double> fx(dw);
  for (int x = 0; x < dw; ++x) {
    double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, static_cast<double>(sw - 1));
    x0[x] = static_cast<int>(sx);
    x1[x] = std::min(x0[x] + 1, sw - 1);
    fx[x] = sx - x0[x];
  }
  for (int y = 0; y < dh; ++y) {
    double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, static_cast<double>(sh - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, sh - 1);
    const double fy = sy - y0;
    const std::uint8_t* r0 = src + static_cast<size_t>(y0) * sw;
    const std::uint8_t* r1 = src + static_cast<size_t>(y1) * sw;
    for (int x = 0; x < dw; ++x) {
      const double top = r0[x0[x]] + (r0[x1[x]] - r0[x0[x]]) * fx[x];
      const double bottom = r1[x0[x]] + (r1[x1[x]] - r1[x0[x]]) * fx[x];
      const double value = top + (bottom - top) * fy;
      dst[static_cast<size_t>(y) * dw + x] =
          static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
    }
  }
}

}  // namespace

Frame Frame::luma(int width, int height, std::uint8_t fill) {
  Frame f;
  f.width = width;
  f.height = height;
  f.y.assign(static_cast<size_t>(width) * height, fill);
  return f;
}

Frame Frame::yuv420(int width, int height, std::uint8_t luma_fill, std::uint8_t chroma_fill) {
  Frame f = luma(width, height, luma_fill);
  const size_t chroma = static_cast<size_t>(f.chroma_width()) * f.chroma_height();
  f.u.assign(chroma, chroma_fill);
  f.v.assign(chroma, chroma_fill);
  return f;
}

std::span<const double, ssim_params::kWindow> ssim_gaussian_taps() { return taps(); }

double ssim_plane(std::span<const std::uint8_t> reference, std::span<const std::uint8_t> test,
                  int width, int height, bool parallel) {
  const size_t samples = static_cast<size_t>(width) * height;
  if (reference.size() != samples || test.size() != samples) {
    throw Error(ErrorKind::kValidation, "plane size does not match dimensions");
  }
  if (width < kWindow || height < kWindow) {
    throw Error(ErrorKind::kValidation, "frame " + std::to_string(width) + "x" +
                                            std::to_string(height) +
                                            " is smaller than the SSIM window");
  }
  const auto& g = taps();
  const int out_w = width - kWindow + 1;
  const int out_h = height - kWindow + 1;
  const size_t hsize = static_cast<size_t>(height) * out_w;

  // Horizontal pass: windowed sums of a, b, a^2, b^2 and ab for every row.
  std::vector<double> ha(hsize), hb(hsize), haa(hsize), hbb(hsize), hab(hsize);
  const std::uint8_t* a = reference.data();
  const std::uint8_t* b = test.data();

#pragma omp parallel for schedule(static) if (parallel)
  for (int row = 0; row < height; ++row) {
    const std::uint8_t* ra = a + static_cast<size_t>(row) * width;
    const std::uint8_t* rb = b + static_cast<size_t>(row) * width;
    const size_t base = static_cast<size_t>(row) * out_w;
    for (int x = 0; x < out_w; ++x) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int k = 0; k < kWindow; ++k) {
        const double va = ra[x + k];
        const double vb = rb[x + k];
        sa += g[k] * va;
        sb += g[k] * vb;
        saa += g[k] * (va * va);
        sbb += g[k] * (vb * vb);
        sab += g[k] * (va * vb);
      }
      ha[base + x] = sa;
      hb[base + x] = sb;
      haa[base + x] = saa;
      hbb[base + x] = sbb;
      hab[base + x] = sab;
    }
  }

  // Vertical pass; one partial sum per output row, combined serially below.
  std::vector<double> row_sums(out_h);
#pragma omp parallel for schedule(static) if (parallel)
  for (int row = 0; row < out_h; ++row) {
    double acc = 0;
    for (int x = 0; x < out_w; ++x) {
      double mu_a = 0, mu_b = 0, eaa = 0, ebb = 0, eab = 0;
      for (int k = 0; k < kWindow; ++k) {
        const size_t i = static_cast<size_t>(row + k) * out_w + x;
        mu_a += g[k] * ha[i];
        mu_b += g[k] * hb[i];
        eaa += g[k] * haa[i];
        ebb += g[k] * hbb[i];
        eab += g[k] * hab[i];
      }
      const double var_a = eaa - mu_a * mu_a;
      const double var_b = ebb - mu_b * mu_b;
      const double cov = eab - mu_a * mu_b;
      const double num = (2 * (mu_a * mu_b) + kC1) * (2 * cov + kC2);
      const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      acc += num / den;
    }
    row_sums[row] = acc;
  }
  double total = 0;
  for (double s : row_sums) total += s;
  return total / (static_cast<double>(out_w) * out_h);
}

double ssim_frame(const Frame& reference, const Frame& test) {
  if (reference.width != test.width || reference.height != test.height) {
    throw Error(ErrorKind::kValidation,
                "dimension mismatch: " + std::to_string(reference.width) + "x" +
                    std::to_string(reference.height) + " vs " + std::to_string(test.width) +
                    "x" + std::to_string(test.height));
  }
  return ssim_plane(reference.y, test.y, reference.width, reference.height, true);
}

std::string_view to_string(ScaleFilter filter) {
  return filter == ScaleFilter::kNearest ? "nearest" : "bilinear";
}

std::optional<ScaleFilter> parse_scale_filter(std::string_view text) {
  if (text == "bilinear") return ScaleFilter::kBilinear;
  if (text == "nearest") return ScaleFilter::kNearest;
  return std::nullopt;
}

Frame rescale(const Frame& frame, const Resolution& target, ScaleFilter filter) {
  if (target.width <= 0 || target.height <= 0) {
    throw Error(ErrorKind::kValidation, "rescale target must have non-zero dimensions");
  }
  if (frame.width == target.width && frame.height == target.height) return frame;
  Frame out = frame.has_chroma() ? Frame::yuv420(target.width, target.height)
                                 : Frame::luma(target.width, target.height);
  resample_plane(frame.y.data(), frame.width, frame.height, out.y.data(), out.width, out.height,
                 filter);
  if (frame.has_chroma()) {
    resample_plane(frame.u.data(), frame.chroma_width(), frame.chroma_height(), out.u.data(),
                   out.chroma_width(), out.chroma_height(), filter);
    resample_plane(frame.v.data(), frame.chroma_width(), frame.chroma_height(), out.v.data(),
                   out.chroma_width(), out.chroma_height(), filter);
  }
  return out;
}

double arithmetic_mean(std::span<const double> values) {
  if (values.empty()) return 0;
  return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

namespace {

void compare_batch(std::span<const Frame> reference, std::span<const Frame> test,
                   ScaleFilter filter, std::vector<double>& out) {
  const size_t offset = out.size();
  out.resize(offset + reference.size());
  const int n = static_cast<int>(reference.size());
  // Parallel over frames; each frame runs the kernel single-threaded.
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const Frame& ref = reference[i];
    const Frame scaled = rescale(test[i], {ref.width, ref.height}, filter);
    out[offset + i] = ssim_plane(ref.y, scaled.y, ref.width, ref.height, false);
  }
}

}  // namespace

SsimResult ssim_clip(std::span<const Frame> reference, std::span<const Frame> test,
                     ScaleFilter filter) {
  if (reference.size() != test.size()) {
    throw Error(ErrorKind::kValidation, "frame-count mismatch: " +
                                            std::to_string(reference.size()) + " vs " +
                                            std::to_string(test.size()));
  }
  SsimResult result;
  compare_batch(reference, test, filter, result.per_frame);
  result.mean = arithmetic_mean(result.per_frame);
  return result;
}

SsimResult ssim_clip(FrameSource& reference, FrameSource& test, ScaleFilter filter, int batch) {
  SsimResult result;
  std::vector<Frame> ref_batch, test_batch;
  size_t ref_total = 0, test_total = 0;
  while (true) {
    ref_batch.clear();
    test_batch.clear();
    for (int i = 0; i < batch; ++i) {
      auto r = reference.next();
      if (r) ref_batch.push_back(std::move(*r));
      auto t = test.next();
      if (t) test_batch.push_back(std::move(*t));
      if (!r || !t) break;
    }
    ref_total += ref_batch.size();
    test_total += test_batch.size();
    if (ref_batch.size() != test_batch.size()) {
      // Drain the longer stream so the error reports true counts.
      while (reference.next()) ++ref_total;
      while (test.next()) ++test_total;
      throw Error(ErrorKind::kValidation, "frame-count mismatch: " + std::to_string(ref_total) +
                                              " vs " + std::to_string(test_total));
    }
    if (ref_batch.empty()) break;
    compare_batch(ref_batch, test_batch, filter, result.per_frame);
    if (static_cast<int>(ref_batch.size()) < batch) break;
  }
  result.mean = arithmetic_mean(result.per_frame);
  return result;
}

std::optional<Frame> read_yuv420p(std::istream& in, int width, int height) {
  Frame f = Frame::yuv420(width, height);
  auto read = [&](std::vector<std::uint8_t>& plane) {
    in.read(reinterpret_cast<char*>(plane.data()), static_cast<std::streamsize>(plane.size()));
    return static_cast<size_t>(in.gcount());
  };
  const size_t got = read(f.y);
  if (got == 0) return std::nullopt;
  if (got != f.y.size() || read(f.u) != f.u.size() || read(f.v) != f.v.size()) {
    throw Error(ErrorKind::kParse, "truncated yuv420p frame");
  }
  return f;
}

void write_yuv420p(std::ostream& out, const Frame& frame) {
  out.write(reinterpret_cast<const char*>(frame.y.data()),
            static_cast<std::streamsize>(frame.y.size()));
  if (frame.has_chroma()) {
    out.write(reinterpret_cast<const char*>(frame.u.data()),
              static_cast<std::streamsize>(frame.u.size()));
    out.write(reinterpret_cast<const char*>(frame.v.data()),
              static_cast<std::streamsize>(frame.v.size()));
  } else {
    const std::string neutral(
        2 * static_cast<size_t>(frame.chroma_width()) * frame.chroma_height(), '\x80');
    out.write(neutral.data(), static_cast<std::streamsize>(neutral.size()));
  }
}

SetupCatalog build_catalog(std::vector<Measurement> measurements,
                           std::optional<std::vector<CodecFamily>> scope) {
  if (measurements.empty()) throw Error(ErrorKind::kValidation, "no measurements to rank");
  std::stable_sort(measurements.begin(), measurements.end(),
                   [](const Measurement& x, const Measurement& y) {
                     if (x.mean_ssim != y.mean_ssim) return x.mean_ssim > y.mean_ssim;
                     if (x.bitrate_kbps != y.bitrate_kbps) return x.bitrate_kbps < y.bitrate_kbps;
                     return x.profile < y.profile;
                   });
  std::vector<SetupEntry> entries;
  entries.reserve(measurements.size());
  std::set<CodecFamily> present;
  for (size_t i = 0; i < measurements.size(); ++i) {
    const Measurement& m = measurements[i];
    entries.push_back({static_cast<int>(i) + 1, m.profile, m.mean_ssim, m.bitrate_kbps});
    present.insert(m.profile.codec);
  }
  return SetupCatalog(std::move(entries),
                      scope ? *scope : std::vector<CodecFamily>(present.begin(), present.end()));
}

namespace {

EncodingProfile profile_from_fields(const csv::Row& row, size_t first, int line) {
  auto codec = parse_codec(row[first]);
  if (!codec) {
    throw Error(ErrorKind::kParse,
                "line " + std::to_string(line) + ": unknown codec '" + row[first] + "'");
  }
  return {*codec, static_cast<int>(csv::to_int(row[first + 1], line)),
          {static_cast<int>(csv::to_int(row[first + 2], line)),
           static_cast<int>(csv::to_int(row[first + 3], line))}};
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::string catalog_to_csv(const SetupCatalog& catalog) {
  std::ostringstream out;
  out << "setup,codec,crf,width,height,mean_ssim,bitrate_kbps\n";
  for (const SetupEntry& e : catalog.entries()) {
    out << e.setup_number << ',' << to_string(e.profile.codec) << ',' << e.profile.crf << ','
        << e.profile.resolution.width << ',' << e.profile.resolution.height << ','
        << fixed(e.mean_ssim, 6) << ',' << fixed(e.bitrate_kbps, 2) << '\n';
  }
  return out.str();
}

SetupCatalog catalog_from_csv(std::string_view text) {
  csv::Table doc = csv::parse(text);
  csv::expect_header(doc, {"setup", "codec", "crf", "width", "height", "mean_ssim",
                           "bitrate_kbps"});
  std::vector<SetupEntry> entries;
  std::set<CodecFamily> present;
  for (size_t r = 0; r < doc.rows.size(); ++r) {
    const csv::Row& row = doc.rows[r];
    const int line = doc.lines[r];
    SetupEntry e;
    e.setup_number = static_cast<int>(csv::to_int(row[0], line));
    e.profile = profile_from_fields(row, 1, line);
    e.mean_ssim = csv::to_double(row[5], line);
    e.bitrate_kbps = csv::to_double(row[6], line);
    present.insert(e.profile.codec);
    entries.push_back(e);
  }
  return SetupCatalog(std::move(entries), {present.begin(), present.end()});
}

std::string measurements_to_csv(std::span<const Measurement> measurements) {
  std::ostringstream out;
  out << "codec,crf,width,height,mean_ssim,bitrate_kbps\n";
  for (const Measurement& m : measurements) {
    out << to_string(m.profile.codec) << ',' << m.profile.crf << ','
        << m.profile.resolution.width << ',' << m.profile.resolution.height << ','
        << fixed(m.mean_ssim, 6) << ',' << fixed(m.bitrate_kbps, 2) << '\n';
  }
  return out.str();
}

std::vector<Measurement> measurements_from_csv(std::string_view text) {
  csv::Table doc = csv::parse(text);
  csv::expect_header(doc, {"codec", "crf", "width", "height", "mean_ssim", "bitrate_kbps"});
  std::vector<Measurement> out;
  for (size_t r = 0; r < doc.rows.size(); ++r) {
    const csv::Row& row = doc.rows[r];
    const int line = doc.lines[r];
    out.push_back({profile_from_fields(row, 0, line), csv::to_double(row[4], line),
                   csv::to_double(row[5], line)});
  }
  return out;
}

}  // namespace relcomp
