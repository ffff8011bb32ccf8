#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "relcomp/process.h"
#include "relcomp/profiles.h"
#include "relcomp/quality.h"
#include "relcomp/timeline.h"

namespace relcomp {

struct FrameRange {
  FrameIndex start = 0;  // inclusive
  FrameIndex end = 0;    // exclusive

  FrameIndex frames() const { return end - start; }
  bool operator==(const FrameRange&) const = default;
};

struct VideoInfo {
  VideoGeometry geometry;
  FrameIndex frame_count = 0;
  std::string codec_name;
};

// How to drive an external transcoder. Argument templates may use the
// placeholders {input}, {output}, {crf}, {width}, {height}, {start}, {last}
// and {fps}; each placeholder is substituted inside a single argv element,
// no shell is involved.
//
// Reference mapping for ffmpeg: codec selector `-c:v libx264|libx265|
// libaom-av1`, quality `-crf {crf}`, scaling `-vf scale={width}:{height}`.
struct EncoderBackend {
  struct CodecTemplate {
    std::vector<std::string> args;
    std::string extension;  // output container, without dot
  };

  std::string name = "ffmpeg";
  std::string executable;
  std::map<CodecFamily, CodecTemplate> codecs;  // capability set
  std::vector<std::string> extract_args;        // lossless, frame-accurate cut
  std::string extract_extension = "mkv";
  std::vector<std::string> decode_args;  // raw yuv420p to stdout
  std::chrono::milliseconds timeout = std::chrono::minutes(30);

  bool supports(CodecFamily codec) const { return codecs.count(codec) != 0; }

  // ffmpeg with libx264, libx265 and libaom-av1, single-threaded per job so
  // output bytes do not depend on the host's core count.
  static EncoderBackend ffmpeg(std::string executable = default_executable());

  // Overrides fields of the ffmpeg defaults from a JSON document:
  // {"name", "executable", "timeout_seconds", "extract": [...],
  //  "decode": [...], "codecs": {"h264": {"args": [...], "extension": "mp4"}}}
  static EncoderBackend from_json(std::string_view text);

  // $RELCOMP_FFMPEG, else the transcoder found at build time, else "ffmpeg".
  static std::string default_executable();
};

std::vector<std::string> substitute(const std::vector<std::string>& args,
                                    const std::map<std::string, std::string>& values);

// Reads geometry and exact frame count by remuxing the video stream to null.
// Throws Error(kInput) for a missing file and Error(kBackend) if the stream
// cannot be read.
VideoInfo probe_video(const EncoderBackend& backend, const std::filesystem::path& source);

struct ClipRef {
  std::filesystem::path path;  // file holding exactly `range`
  FrameRange range;            // position in the original source
  double fps = 0;
  bool passthrough = false;    // path is the source itself

  double duration_seconds() const { return range.frames() / fps; }
};

// Cuts [range.start, range.end) losslessly into `output`. The full range is
// passed through without re-encoding. Throws Error(kValidation) for an empty
// or out-of-bounds range and Error(kBackend) on decode failure.
ClipRef extract_segment(const EncoderBackend& backend, const std::filesystem::path& source,
                        const VideoInfo& info, FrameRange range,
                        const std::filesystem::path& output);

struct EncodedClip {
  std::filesystem::path path;
  EncodingProfile profile;
  std::uint64_t bytes = 0;
  double duration_seconds = 0;
  double bitrate_kbps = 0;
  double wall_seconds = 0;
  std::optional<double> mean_ssim;
};

// kbps = bytes * 8 / seconds / 1000. Throws Error(kValidation) if seconds <= 0.
double measure_bitrate(std::uint64_t bytes, double seconds);

// Encodes `clip` into `output` (extension appended from the template when
// `output` has none). Throws Error(kBackend) for an unsupported codec
// ("unsupported codec"), a non-zero exit or a timeout.
EncodedClip encode_clip(const ClipRef& clip, const EncodingProfile& profile,
                        const EncoderBackend& backend, const std::filesystem::path& output);

// Decodes a video file to yuv420p frames at its native resolution.
class DecodedVideo : public FrameSource {
 public:
  DecodedVideo(const EncoderBackend& backend, const std::filesystem::path& path,
               Resolution resolution);
  std::optional<Frame> next() override;
  // Throws Error(kBackend) if the decoder exited with an error.
  void finish();

 private:
  ProcessStream process_;
  Resolution resolution_;
  bool finished_ = false;
};

// Mean luma SSIM of `encoded` against `reference`, upscaling the encode to
// the reference resolution.
SsimResult measure_clip_ssim(const EncoderBackend& backend, const std::filesystem::path& reference,
                             Resolution reference_resolution,
                             const std::filesystem::path& encoded, Resolution encoded_resolution,
                             ScaleFilter filter = ScaleFilter::kBilinear);

// Runs independent jobs on at most `workers` threads and returns results in
// job order. If any job throws, the exception of the lowest-indexed failing
// job is rethrown after all jobs have finished.
template <typename T>
std::vector<T> run_jobs(std::vector<std::function<T()>> jobs, int workers) {
  std::vector<std::optional<T>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i].emplace(jobs[i]());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int count = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

struct ManifestSegment {
  std::vector<PhaseLabel> sources;
  RelevanceLevel level = RelevanceLevel::kNotRelevant;
  FrameRange frames;
  EncodingProfile profile;
  std::string file;  // relative to the manifest directory
  std::uint64_t bytes = 0;
  double duration_seconds = 0;
  double bitrate_kbps = 0;
  std::optional<double> ssim;

  bool operator==(const ManifestSegment&) const = default;
};

struct Manifest {
  std::string source;
  IdlePolicy policy = IdlePolicy::kDrop;
  VideoGeometry geometry;
  FrameIndex total_frames = 0;
  FrameIndex dropped_frames = 0;
  std::vector<ManifestSegment> segments;
  std::optional<std::string> archive;  // single concatenated container
  std::string backend;
  std::map<std::string, std::vector<std::string>> encoder_templates;

  FrameIndex planned_frames() const;
  double planned_duration_seconds() const { return planned_frames() / geometry.fps; }
  std::uint64_t total_bytes() const;
};

struct AssembleOptions {
  std::string source;
  std::filesystem::path output_dir;
  // Also write one concatenated container; requires a shared codec and
  // resolution across all segments.
  bool concatenate = false;
};

// Pairs each planned segment with its encoded clip, in timeline order, and
// writes `manifest.json` (plus the archive when concatenating) into
// output_dir. Throws Error(kValidation) for a missing clip, an empty plan or
// a codec/resolution mix under concatenate.
Manifest assemble(const EncodePlan& plan, std::span<const EncodedClip> clips,
                  const EncoderBackend& backend, const AssembleOptions& options);

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(std::string_view text);

}  // namespace relcomp
