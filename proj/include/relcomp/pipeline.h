#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "relcomp/analysis.h"
#include "relcomp/transcode.h"

namespace relcomp {

struct CompressRequest {
  std::filesystem::path video;
  std::filesystem::path annotations;
  CodecFamily codec = CodecFamily::kH264;
  IdlePolicy policy = IdlePolicy::kDrop;
  std::optional<std::filesystem::path> profiles;   // OptimalProfileTable JSON
  std::optional<std::filesystem::path> relevance;  // relevance override CSV
  std::filesystem::path output_dir;
  int workers = 0;  // <= 0: logical CPU count
  // Encode the whole source at this H.264 CRF (original resolution) and
  // report the measured saving against it.
  std::optional<int> baseline_crf = baseline::kHospitalCrfMax;
  bool measure_ssim = false;
  bool concatenate = false;
  EncoderBackend backend = EncoderBackend::ffmpeg();
};

struct CompressResult {
  EncodePlan plan;
  Manifest manifest;
  SavingsReport report;
  double idle_fraction = 0;
};

// parse -> plan -> extract + encode (worker pool) -> assemble -> report.
// Writes per-segment files, manifest.json, report.json, report.csv and
// timeline.csv into output_dir. Progress goes to `log` when given.
CompressResult compress(const CompressRequest& request, std::ostream* log = nullptr);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace relcomp
