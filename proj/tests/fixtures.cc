#include "fixtures.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "relcomp/process.h"
#include "relcomp/transcode.h"

namespace fs = std::filesystem;

namespace relcomp::testing {

const std::vector<BarBlock>& surgery_bar_blocks() {
  using P = PhaseLabel;
  constexpr P I = P::kIdle;
  static const std::vector<BarBlock> blocks = {
      {0.45, 'g', I},
      {0.39, 'G', P::kIncision},
      {0.92, 'g', I},
      {1.12, 'G', P::kIncision},
      {1.14, 'g', I},
      {0.71, 'Y', P::kViscoelasticI},
      {1.54, 'g', I},
      {9.62, 'G', P::kIncision},
      {1.00, 'g', I},
      {2.65, 'O', P::kCapsulorhexis},
      {0.33, 'g', I},
      {1.06, 'O', P::kHydrodissection},
      {3.03, 'g', I},
      {16.90, 'O', P::kPhaco},
      {4.50, 'g', I},
      {19.30, 'G', P::kIrrigationAspiration},
      {1.63, 'g', I},
      {2.05, 'Y', P::kCapsulePolishing},
      {0.76, 'g', I},
      {0.81, 'Y', P::kViscoelasticII},
      {0.90, 'g', I},
      {2.60, 'G', P::kImplantation},
      {0.69, 'g', I},
      {1.64, 'G', P::kImplantation},
      {0.60, 'g', I},
      {12.38, 'G', P::kViscoelasticAspiration},
      {0.72, 'g', I},
      {4.55, 'G', P::kSealingOfIncisions},
      {1.01, 'g', I},
      {1.01, 'G', P::kSealingOfIncisions},
      {0.31, 'g', I},
      {0.90, 'G', P::kAntibioticInjection},
      {0.83, 'g', I},
      {1.09, 'G', P::kAntibioticInjection},
      {0.60, 'g', I},
  };
  return blocks;
}

PhaseTimeline surgery_bar_timeline() {
  std::vector<PhaseSegment> segments;
  FrameIndex at = 0;
  for (const BarBlock& b : surgery_bar_blocks()) {
    const auto frames = static_cast<FrameIndex>(std::lround(b.units * kFramesPerUnit));
    segments.push_back({b.label, at, at + frames});
    at += frames;
  }
  return PhaseTimeline({25.0, 1024, 768}, std::move(segments));
}

SetupCatalog seeded_catalog(const std::vector<CodecFamily>& scope, std::vector<Anchor> anchors,
                            int eligible_until, unsigned seed) {
  const int n = static_cast<int>(scope.size()) * 39;
  std::sort(anchors.begin(), anchors.end(),
            [](const Anchor& a, const Anchor& b) { return a.setup < b.setup; });

  // SSIM knots: anchors plus both ends.
  std::map<int, double> knots;
  knots[1] = 0.995;
  knots[n] = 0.80;
  for (const Anchor& a : anchors) knots[a.setup] = a.ssim;
  auto ssim_at = [&](int setup) {
    auto hi = knots.lower_bound(setup);
    if (hi->first == setup) return hi->second;
    auto lo = std::prev(hi);
    const double t = double(setup - lo->first) / double(hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
  };

  std::vector<EncodingProfile> pool;
  for (CodecFamily c : scope) {
    for (const EncodingProfile& p : setup_grid(c)) {
      const bool taken = std::any_of(anchors.begin(), anchors.end(), [&](const Anchor& a) {
        return a.profile && *a.profile == p;
      });
      if (!taken) pool.push_back(p);
    }
  }
  std::mt19937 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::uniform_real_distribution<double> expensive(701.0, 3000.0), cheap(5.0, 60.0);

  std::vector<SetupEntry> entries;
  size_t next = 0;
  for (int s = 1; s <= n; ++s) {
    auto a = std::find_if(anchors.begin(), anchors.end(), [&](const Anchor& x) { return x.setup == s; });
    SetupEntry e;
    e.setup_number = s;
    e.mean_ssim = ssim_at(s);
    if (a != anchors.end() && a->profile) {
      e.profile = *a->profile;
    } else {
      if (next >= pool.size()) throw std::logic_error("profile pool exhausted");
      e.profile = pool[next++];
    }
    if (a != anchors.end() && a->kbps) {
      e.bitrate_kbps = *a->kbps;
    } else {
      e.bitrate_kbps = s <= eligible_until ? expensive(rng) : cheap(rng);
    }
    entries.push_back(e);
  }
  return SetupCatalog(std::move(entries), scope);
}

std::vector<ReferenceRow> reference_rows(RelevanceLevel level) {
  using C = CodecFamily;
  const Resolution xga{1024, 768}, svga{800, 600}, vga{640, 480};
  switch (level) {
    case RelevanceLevel::kHighlyRelevant:
      return {{C::kH264, 34, {C::kH264, 25, vga}, 0.9260, 653.39, 94.68},
              {C::kH265, 16, {C::kH265, 31, vga}, 0.9174, 207.12, 98.31},
              {C::kAV1, 36, {C::kAV1, 57, xga}, 0.9250, 190.38, 98.45}};
    case RelevanceLevel::kRelevant:
      return {{C::kH264, 56, {C::kH264, 33, vga}, 0.9079, 252.11, 97.97},
              {C::kH265, 22, {C::kH265, 35, vga}, 0.9057, 130.10, 98.95},
              {C::kAV1, 57, {C::kAV1, 63, svga}, 0.9078, 68.32, 99.45}};
    case RelevanceLevel::kSomewhatRelevant:
      return {{C::kH264, 52, {C::kH264, 31, vga}, 0.9162, 248.49, 98.10},
              {C::kH265, 16, {C::kH265, 31, vga}, 0.9202, 173.66, 98.67},
              {C::kAV1, 51, {C::kAV1, 60, vga}, 0.9179, 75.46, 99.42}};
    case RelevanceLevel::kNotRelevant:
      break;
  }
  return {};
}

CategoryThreshold reference_threshold(RelevanceLevel level, bool h265) {
  switch (level) {
    case RelevanceLevel::kHighlyRelevant:
      return h265 ? CategoryThreshold{level, 17, 0.9160} : CategoryThreshold{level, 36, 0.9250};
    case RelevanceLevel::kRelevant:
      return h265 ? CategoryThreshold{level, 22, 0.9057} : CategoryThreshold{level, 59, 0.9048};
    case RelevanceLevel::kSomewhatRelevant:
      return h265 ? CategoryThreshold{level, 17, 0.9185} : CategoryThreshold{level, 53, 0.9157};
    case RelevanceLevel::kNotRelevant:
      break;
  }
  throw std::invalid_argument("no threshold for N");
}

SetupCatalog reference_catalog(RelevanceLevel level, bool h265) {
  std::vector<Anchor> anchors;
  for (const ReferenceRow& r : reference_rows(level)) {
    if ((r.codec == CodecFamily::kH265) == h265) {
      anchors.push_back({r.setup, r.ssim, r.profile, r.kbps});
    }
  }
  const CategoryThreshold t = reference_threshold(level, h265);
  if (std::none_of(anchors.begin(), anchors.end(),
                   [&](const Anchor& a) { return a.setup == t.setup_number; })) {
    anchors.push_back({t.setup_number, t.ssim, std::nullopt, std::nullopt});
  }
  const std::vector<CodecFamily> scope =
      h265 ? std::vector<CodecFamily>{CodecFamily::kH265}
           : std::vector<CodecFamily>{CodecFamily::kH264, CodecFamily::kAV1};
  return seeded_catalog(scope, std::move(anchors), t.setup_number);
}

std::string ffmpeg_executable() { return EncoderBackend::default_executable(); }

bool ffmpeg_available() {
  try {
    const ProcessResult r =
        run_process(ffmpeg_executable(), {"-hide_banner", "-encoders"}, std::chrono::seconds(20));
    if (r.exit_code != 0) return false;
    for (const char* enc : {"libx264", "libx265", "libaom-av1"}) {
      if (r.stdout_text.find(enc) == std::string::npos) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void make_synthetic_video(const fs::path& path, double seconds, int width, int height,
                          double fps) {
  const std::string src = "testsrc2=size=" + std::to_string(width) + "x" + std::to_string(height) +
                          ":rate=" + std::to_string(fps) + ":duration=" + std::to_string(seconds);
  const ProcessResult r = run_process(
      ffmpeg_executable(),
      {"-nostdin", "-y", "-loglevel", "error", "-f", "lavfi", "-i", src, "-vf",
       "noise=alls=3:allf=t", "-c:v", "libx264", "-preset", "ultrafast", "-crf", "8", "-pix_fmt",
       "yuv420p", path.string()});
  if (r.exit_code != 0) throw std::runtime_error("synthetic video: " + r.stderr_text);
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("relcomp_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace relcomp::testing
