#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "relcomp/timeline.h"

namespace relcomp {

enum class CodecFamily { kH264, kH265, kAV1 };
inline constexpr std::array<CodecFamily, 3> kAllCodecs = {CodecFamily::kH264, CodecFamily::kH265,
                                                          CodecFamily::kAV1};

// "h264", "h265", "av1".
std::string_view to_string(CodecFamily codec);
std::optional<CodecFamily> parse_codec(std::string_view text);

struct Resolution {
  int width = 0;
  int height = 0;

  long area() const { return static_cast<long>(width) * height; }
  auto operator<=>(const Resolution&) const = default;
};

std::string to_string(const Resolution& r);  // "640x480"

// Candidate resolutions, largest first.
inline constexpr std::array<Resolution, 3> kCatalogResolutions = {
    Resolution{1024, 768}, Resolution{800, 600}, Resolution{640, 480}};

struct CrfLadder {
  int min_crf;
  int max_crf;
  int step;

  std::vector<int> values() const;
  bool contains(int crf) const;
};

// H.264/H.265: 23..47 step 2. AV1: 27..63 step 3.
CrfLadder crf_ladder(CodecFamily codec);

struct EncodingProfile {
  CodecFamily codec = CodecFamily::kH264;
  int crf = 0;
  Resolution resolution;

  auto operator<=>(const EncodingProfile&) const = default;
};

std::string to_string(const EncodingProfile& p);  // "h264 crf25 640x480"
// Filesystem-safe, e.g. "h264_crf25_640x480".
std::string profile_slug(const EncodingProfile& p);

// True when crf lies on the codec's ladder and the resolution is a catalog one.
bool is_grid_profile(const EncodingProfile& p);

// Every CRF on the codec's ladder crossed with the three catalog resolutions.
// CRF ascending, then resolution by descending area.
std::vector<EncodingProfile> setup_grid(CodecFamily codec);

struct SetupEntry {
  int setup_number = 0;  // 1 = best quality
  EncodingProfile profile;
  double mean_ssim = 0;
  double bitrate_kbps = 0;

  bool operator==(const SetupEntry&) const = default;
};

// Quality-ordered list of encode setups for one representative clip.
class SetupCatalog {
 public:
  // Throws Error(kValidation) unless setup numbers are 1..N in order, SSIM is
  // non-increasing and every entry's codec is in `scope`.
  SetupCatalog(std::vector<SetupEntry> entries, std::vector<CodecFamily> scope);

  const std::vector<SetupEntry>& entries() const { return entries_; }
  const std::vector<CodecFamily>& scope() const { return scope_; }
  int size() const { return static_cast<int>(entries_.size()); }
  // Throws Error(kNotFound) when out of range.
  const SetupEntry& at(int setup_number) const;
  const SetupEntry* find(const EncodingProfile& profile) const;

 private:
  std::vector<SetupEntry> entries_;
  std::vector<CodecFamily> scope_;
};

struct OptimalEntry {
  int setup_number = 0;  // 0 when unknown
  EncodingProfile profile;
  double ssim = 0;
  double bitrate_kbps = 0;
  double saving = 0;  // fraction relative to the category's source bitrate

  bool operator==(const OptimalEntry&) const = default;
};

// Per (relevance level, codec) encoding profile for HR, R and SR content.
class OptimalProfileTable {
 public:
  void set(RelevanceLevel level, CodecFamily codec, OptimalEntry entry);
  const OptimalEntry* find(RelevanceLevel level, CodecFamily codec) const;
  const std::map<std::pair<RelevanceLevel, CodecFamily>, OptimalEntry>& entries() const {
    return entries_;
  }
  bool operator==(const OptimalProfileTable&) const = default;

 private:
  std::map<std::pair<RelevanceLevel, CodecFamily>, OptimalEntry> entries_;
};

// The nine study-derived profiles (three levels x three codecs).
OptimalProfileTable default_optimal_table();

// Throws Error(kValidation, "irrelevant content must be dropped or merged")
// for NotRelevant and Error(kNotFound) when the table has no such entry.
EncodingProfile profile_for(RelevanceLevel level, CodecFamily codec,
                            const OptimalProfileTable& table);

// {"HR": {"h264": {setup, width, height, crf, ssim, kbps, saving}, ...}, ...}
std::string optimal_table_to_json(const OptimalProfileTable& table);
OptimalProfileTable optimal_table_from_json(std::string_view text);

}  // namespace relcomp
