#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relcomp/profiles.h"
#include "relcomp/study.h"
#include "relcomp/timeline.h"

namespace relcomp::testing {

// Blocks of the exemplary surgery bar, left to right. `units` are figure
// coordinates; colour 'g' = idle (gray), 'G' = relevant, 'Y' = somewhat
// relevant, 'O' = highly relevant (teaching).
struct BarBlock {
  double units;
  char colour;
  PhaseLabel label;
};
const std::vector<BarBlock>& surgery_bar_blocks();
inline constexpr int kFramesPerUnit = 100;
PhaseTimeline surgery_bar_timeline();

// A catalog row pinned at a given setup number. Missing fields are filled by
// seeded_catalog.
struct Anchor {
  int setup;
  double ssim;
  std::optional<EncodingProfile> profile;
  std::optional<double> kbps;
};

// Dense catalog over the full grid of `scope`. Anchors keep their values;
// other setups get unused grid profiles (seeded shuffle) and SSIM
// interpolated strictly between neighbours. Fillers at or before
// `eligible_until` cost more than 700 kbps, later ones less than 60 kbps.
SetupCatalog seeded_catalog(const std::vector<CodecFamily>& scope, std::vector<Anchor> anchors,
                            int eligible_until, unsigned seed = 7);

// The nine per-codec optimal rows for one category with the category's
// threshold pin.
struct ReferenceRow {
  CodecFamily codec;
  int setup;
  EncodingProfile profile;
  double ssim;
  double kbps;
  double compression_pct;
};
std::vector<ReferenceRow> reference_rows(RelevanceLevel level);
// Joint H264+AV1 catalog threshold and the H265-only one.
CategoryThreshold reference_threshold(RelevanceLevel level, bool h265);
SetupCatalog reference_catalog(RelevanceLevel level, bool h265);

std::string ffmpeg_executable();
// True when ffmpeg runs and has libx264, libx265 and libaom-av1.
bool ffmpeg_available();

// Synthetic "surgery": moving test pattern with temporal noise, encoded
// near-losslessly (H.264, yuv420p).
void make_synthetic_video(const std::filesystem::path& path, double seconds, int width, int height,
                          double fps);

std::filesystem::path temp_dir(const std::string& name);

}  // namespace relcomp::testing
