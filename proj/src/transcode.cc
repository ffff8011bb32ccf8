#include "relcomp/transcode.h"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "relcomp/error.h"

namespace fs = std::filesystem;

namespace relcomp {
namespace {

const std::vector<std::string> kCommonInput = {"-hide_banner", "-nostdin", "-loglevel", "error",
                                               "-y", "-i", "{input}"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string tail_lines(const std::string& text, size_t max_chars = 600) {
  if (text.size() <= max_chars) return text;
  return "..." + text.substr(text.size() - max_chars);
}

std::string format_number(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

}  // namespace

std::string EncoderBackend::default_executable() {
  if (const char* env = std::getenv("RELCOMP_FFMPEG"); env && *env) return env;
  std::string configured = RELCOMP_DEFAULT_FFMPEG;
  if (!configured.empty()) return configured;
  return "ffmpeg";
}

EncoderBackend EncoderBackend::ffmpeg(std::string executable) {
  EncoderBackend b;
  b.name = "ffmpeg";
  b.executable = std::move(executable);
  const std::vector<std::string> scale = {
      "-map", "0:v:0", "-an", "-sn", "-vf", "scale={width}:{height}:flags=bicubic",
      "-pix_fmt", "yuv420p"};
  const std::vector<std::string> bitexact = {"-map_metadata", "-1", "-fflags", "+bitexact",
                                             "-flags:v", "+bitexact", "{output}"};
  b.codecs[CodecFamily::kH264] = {
      concat(concat(concat(kCommonInput, scale),
                    {"-c:v", "libx264", "-preset", "medium", "-crf", "{crf}", "-threads", "1"}),
             bitexact),
      "mp4"};
  b.codecs[CodecFamily::kH265] = {
      concat(concat(concat(kCommonInput, scale),
                    {"-c:v", "libx265", "-preset", "medium", "-crf", "{crf}", "-tag:v", "hvc1",
                     "-x265-params", "pools=1:frame-threads=1:log-level=error"}),
             bitexact),
      "mp4"};
  b.codecs[CodecFamily::kAV1] = {
      concat(concat(concat(kCommonInput, scale),
                    {"-c:v", "libaom-av1", "-cpu-used", "6", "-row-mt", "0", "-threads", "1",
                     "-crf", "{crf}", "-b:v", "0"}),
             bitexact),
      "mp4"};
  b.extract_args = concat(kCommonInput, {"-map", "0:v:0", "-an", "-sn", "-vf",
                                         "select=between(n\\,{start}\\,{last}),"
                                         "setpts=N/FRAME_RATE/TB",
                                         "-fps_mode", "passthrough", "-c:v", "ffv1", "-level",
                                         "3", "-g", "1", "-map_metadata", "-1", "{output}"});
  b.decode_args = {"-hide_banner", "-nostdin", "-loglevel", "error", "-i", "{input}",
                   "-map", "0:v:0", "-fps_mode", "passthrough", "-f", "rawvideo",
                   "-pix_fmt", "yuv420p", "-"};
  return b;
}

EncoderBackend EncoderBackend::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("backend config: ") + e.what());
  }
  EncoderBackend b = ffmpeg(doc.value("executable", default_executable()));
  try {
    b.name = doc.value("name", b.name);
    if (doc.contains("timeout_seconds")) {
      b.timeout = std::chrono::seconds(doc.at("timeout_seconds").get<long>());
    }
    if (doc.contains("extract")) b.extract_args = doc.at("extract").get<std::vector<std::string>>();
    if (doc.contains("decode")) b.decode_args = doc.at("decode").get<std::vector<std::string>>();
    if (doc.contains("codecs")) {
      // Per-codec override; null removes the codec.
      for (const auto& [key, value] : doc.at("codecs").items()) {
        auto codec = parse_codec(key);
        if (!codec) throw Error(ErrorKind::kParse, "backend config: unknown codec '" + key + "'");
        if (value.is_null()) {
          b.codecs.erase(*codec);
          continue;
        }
        b.codecs[*codec] = {value.at("args").get<std::vector<std::string>>(),
                            value.value("extension", "mp4")};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("backend config: ") + e.what());
  }
  return b;
}

std::vector<std::string> substitute(const std::vector<std::string>& args,
                                    const std::map<std::string, std::string>& values) {
  std::vector<std::string> out;
  out.reserve(args.size());
  for (std::string arg : args) {
    for (const auto& [key, value] : values) {
      const std::string token = "{" + key + "}";
      for (size_t pos = arg.find(token); pos != std::string::npos;
           pos = arg.find(token, pos + value.size())) {
        arg.replace(pos, token.size(), value);
      }
    }
    out.push_back(std::move(arg));
  }
  return out;
}

VideoInfo probe_video(const EncoderBackend& backend, const fs::path& source) {
  if (!fs::is_regular_file(source)) {
    throw Error(ErrorKind::kInput, "cannot read video '" + source.string() + "'");
  }
  ProcessResult r = run_process(
      backend.executable,
      {"-hide_banner", "-nostdin", "-i", source.string(), "-map", "0:v:0", "-f", "null",
       "-progress", "pipe:1", "-"},
      backend.timeout);
  if (r.timed_out || r.exit_code != 0) {
    throw Error(ErrorKind::kBackend,
                "cannot decode '" + source.string() + "': " + tail_lines(r.stderr_text));
  }
  VideoInfo info;
  static const std::regex stream_re(R"(Stream #\d+:\d+[^:]*: Video: (\w+).*?, (\d+)x(\d+))");
  static const std::regex fps_re(R"(, (\d+(?:\.\d+)?) fps)");
  static const std::regex frame_re(R"(frame=(\d+))");
  std::smatch m;
  if (!std::regex_search(r.stderr_text, m, stream_re)) {
    throw Error(ErrorKind::kBackend, "no video stream in '" + source.string() + "'");
  }
  info.codec_name = m[1];
  info.geometry.width = std::stoi(m[2]);
  info.geometry.height = std::stoi(m[3]);
  const std::string rest = m.suffix();
  const std::string stream_line = m.str() + rest.substr(0, rest.find('\n'));
  if (std::regex_search(stream_line, m, fps_re)) info.geometry.fps = std::stod(m[1]);
  for (auto it = std::sregex_iterator(r.stdout_text.begin(), r.stdout_text.end(), frame_re);
       it != std::sregex_iterator(); ++it) {
    info.frame_count = std::stoll((*it)[1]);
  }
  if (info.geometry.fps <= 0 || info.frame_count <= 0) {
    throw Error(ErrorKind::kBackend, "cannot determine frame rate or count of '" +
                                         source.string() + "'");
  }
  return info;
}

ClipRef extract_segment(const EncoderBackend& backend, const fs::path& source,
                        const VideoInfo& info, FrameRange range, const fs::path& output) {
  if (range.start < 0 || range.end <= range.start) {
    throw Error(ErrorKind::kValidation, "empty frame range [" + std::to_string(range.start) +
                                            "," + std::to_string(range.end) + ")");
  }
  if (range.end > info.frame_count) {
    throw Error(ErrorKind::kValidation,
                "range end " + std::to_string(range.end) + " beyond the source's " +
                    std::to_string(info.frame_count) + " frames");
  }
  ClipRef clip{source, range, info.geometry.fps, false};
  if (range.start == 0 && range.end == info.frame_count) {
    clip.passthrough = true;
    return clip;
  }
  fs::path out = output;
  if (!out.has_extension()) out.replace_extension(backend.extract_extension);
  auto args = substitute(backend.extract_args, {{"input", source.string()},
                                                {"output", out.string()},
                                                {"start", std::to_string(range.start)},
                                                {"last", std::to_string(range.end - 1)},
                                                {"fps", format_number(info.geometry.fps)}});
  ProcessResult r = run_process(backend.executable, args, backend.timeout);
  if (r.timed_out) throw Error(ErrorKind::kBackend, "segment extraction timed out");
  if (r.exit_code != 0) {
    throw Error(ErrorKind::kBackend, "segment extraction failed (exit " +
                                         std::to_string(r.exit_code) +
                                         "): " + tail_lines(r.stderr_text));
  }
  clip.path = out;
  return clip;
}

double measure_bitrate(std::uint64_t bytes, double seconds) {
  if (!(seconds > 0)) throw Error(ErrorKind::kValidation, "duration must be positive");
  return static_cast<double>(bytes) * 8.0 / seconds / 1000.0;
}

EncodedClip encode_clip(const ClipRef& clip, const EncodingProfile& profile,
                        const EncoderBackend& backend, const fs::path& output) {
  auto it = backend.codecs.find(profile.codec);
  if (it == backend.codecs.end()) {
    throw Error(ErrorKind::kBackend, "unsupported codec " + std::string(to_string(profile.codec)) +
                                         " for backend " + backend.name);
  }
  fs::path out = output;
  if (!out.has_extension()) out.replace_extension(it->second.extension);
  std::map<std::string, std::string> values = {
      {"input", clip.path.string()},
      {"output", out.string()},
      {"crf", std::to_string(profile.crf)},
      {"width", std::to_string(profile.resolution.width)},
      {"height", std::to_string(profile.resolution.height)},
      {"fps", format_number(clip.fps)}};
  const auto started = std::chrono::steady_clock::now();
  ProcessResult r = run_process(backend.executable, substitute(it->second.args, values),
                                backend.timeout);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (r.timed_out) {
    throw Error(ErrorKind::kBackend, "encode of " + to_string(profile) + " timed out");
  }
  if (r.exit_code != 0) {
    throw Error(ErrorKind::kBackend, "encode of " + to_string(profile) + " failed (exit " +
                                         std::to_string(r.exit_code) +
                                         "): " + tail_lines(r.stderr_text));
  }
  EncodedClip encoded;
  encoded.path = out;
  encoded.profile = profile;
  encoded.bytes = fs::file_size(out);
  encoded.duration_seconds = clip.duration_seconds();
  encoded.bitrate_kbps = measure_bitrate(encoded.bytes, encoded.duration_seconds);
  encoded.wall_seconds = wall;
  return encoded;
}

DecodedVideo::DecodedVideo(const EncoderBackend& backend, const fs::path& path,
                           Resolution resolution)
    : process_(backend.executable, substitute(backend.decode_args, {{"input", path.string()}})),
      resolution_(resolution) {}

std::optional<Frame> DecodedVideo::next() {
  if (finished_) return std::nullopt;
  auto frame = read_yuv420p(process_.out(), resolution_.width, resolution_.height);
  if (!frame) finish();
  return frame;
}

void DecodedVideo::finish() {
  if (finished_) return;
  finished_ = true;
  const int code = process_.finish();
  if (code != 0) {
    throw Error(ErrorKind::kBackend, "decoder exited with code " + std::to_string(code));
  }
}

SsimResult measure_clip_ssim(const EncoderBackend& backend, const fs::path& reference,
                             Resolution reference_resolution, const fs::path& encoded,
                             Resolution encoded_resolution, ScaleFilter filter) {
  DecodedVideo ref(backend, reference, reference_resolution);
  DecodedVideo test(backend, encoded, encoded_resolution);
  SsimResult result = ssim_clip(ref, test, filter);
  ref.finish();
  test.finish();
  return result;
}

FrameIndex Manifest::planned_frames() const {
  FrameIndex sum = 0;
  for (const auto& s : segments) sum += s.frames.frames();
  return sum;
}

std::uint64_t Manifest::total_bytes() const {
  std::uint64_t sum = 0;
  for (const auto& s : segments) sum += s.bytes;
  return sum;
}

Manifest assemble(const EncodePlan& plan, std::span<const EncodedClip> clips,
                  const EncoderBackend& backend, const AssembleOptions& options) {
  if (plan.segments.empty()) throw Error(ErrorKind::kValidation, "nothing to assemble");
  if (clips.size() != plan.segments.size()) {
    throw Error(ErrorKind::kValidation,
                "missing clip: " + std::to_string(plan.segments.size()) + " planned segments, " +
                    std::to_string(clips.size()) + " encoded clips");
  }
  Manifest m;
  m.source = options.source;
  m.policy = plan.idle_policy;
  m.geometry = plan.geometry;
  m.total_frames = plan.total_frames;
  m.dropped_frames = plan.dropped_frames;
  m.backend = backend.name;
  std::set<CodecFamily> used;
  for (size_t i = 0; i < plan.segments.size(); ++i) {
    const PlannedSegment& seg = plan.segments[i];
    const EncodedClip& clip = clips[i];
    if (!fs::is_regular_file(clip.path)) {
      throw Error(ErrorKind::kValidation, "missing clip " + clip.path.string());
    }
    ManifestSegment out;
    out.sources = seg.sources;
    out.level = seg.level;
    out.frames = {seg.start_frame, seg.end_frame};
    out.profile = clip.profile;
    out.file = fs::relative(clip.path, options.output_dir).generic_string();
    out.bytes = clip.bytes;
    out.duration_seconds = clip.duration_seconds;
    out.bitrate_kbps = clip.bitrate_kbps;
    out.ssim = clip.mean_ssim;
    m.segments.push_back(std::move(out));
    used.insert(clip.profile.codec);
  }
  for (CodecFamily c : used) {
    m.encoder_templates[std::string(to_string(c))] = backend.codecs.at(c).args;
  }

  if (options.concatenate) {
    const ManifestSegment& first = m.segments.front();
    for (const ManifestSegment& s : m.segments) {
      if (s.profile.codec != first.profile.codec ||
          s.profile.resolution != first.profile.resolution) {
        throw Error(ErrorKind::kValidation,
                    "cannot concatenate segments with mixed codec or resolution");
      }
    }
    const fs::path list = options.output_dir / "concat.txt";
    {
      std::ofstream out(list);
      for (const auto& s : m.segments) out << "file '" << s.file << "'\n";
    }
    const std::string archive =
        "archive." + backend.codecs.at(first.profile.codec).extension;
    ProcessResult r = run_process(
        backend.executable,
        {"-hide_banner", "-nostdin", "-loglevel", "error", "-y", "-f", "concat", "-safe", "0",
         "-i", list.string(), "-c", "copy", "-map_metadata", "-1", "-fflags", "+bitexact",
         (options.output_dir / archive).string()},
        backend.timeout);
    fs::remove(list);
    if (r.exit_code != 0 || r.timed_out) {
      throw Error(ErrorKind::kBackend, "concatenation failed: " + tail_lines(r.stderr_text));
    }
    m.archive = archive;
  }

  std::ofstream(options.output_dir / "manifest.json") << manifest_to_json(m);
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json doc;
  doc["source"] = m.source;
  doc["policy"] = std::string(to_string(m.policy));
  doc["fps"] = m.geometry.fps;
  doc["width"] = m.geometry.width;
  doc["height"] = m.geometry.height;
  doc["total_frames"] = m.total_frames;
  doc["dropped_frames"] = m.dropped_frames;
  doc["planned_frames"] = m.planned_frames();
  doc["total_bytes"] = m.total_bytes();
  doc["segments"] = nlohmann::ordered_json::array();
  for (const ManifestSegment& s : m.segments) {
    nlohmann::ordered_json seg;
    std::vector<std::string> labels;
    for (PhaseLabel l : s.sources) labels.emplace_back(to_string(l));
    // Primary label: first surgical phase covered.
    std::string label = labels.front();
    for (PhaseLabel l : s.sources) {
      if (is_surgical(l)) {
        label = std::string(to_string(l));
        break;
      }
    }
    seg["label"] = label;
    seg["sources"] = labels;
    seg["relevance"] = std::string(to_string(s.level));
    seg["frames"] = {s.frames.start, s.frames.end};
    seg["profile"] = {{"codec", std::string(to_string(s.profile.codec))},
                      {"crf", s.profile.crf},
                      {"width", s.profile.resolution.width},
                      {"height", s.profile.resolution.height}};
    seg["file"] = s.file;
    seg["bytes"] = s.bytes;
    seg["duration_s"] = s.duration_seconds;
    seg["kbps"] = s.bitrate_kbps;
    if (s.ssim) seg["ssim"] = *s.ssim;
    doc["segments"].push_back(std::move(seg));
  }
  if (m.archive) doc["archive"] = *m.archive;
  doc["backend"] = m.backend;
  doc["encoder_templates"] = m.encoder_templates;
  return doc.dump(2) + "\n";
}

Manifest manifest_from_json(std::string_view text) {
  Manifest m;
  try {
    auto doc = nlohmann::json::parse(text);
    m.source = doc.at("source").get<std::string>();
    auto policy = parse_idle_policy(doc.at("policy").get<std::string>());
    if (!policy) throw Error(ErrorKind::kParse, "manifest: unknown idle policy");
    m.policy = *policy;
    m.geometry = {doc.at("fps").get<double>(), doc.at("width").get<int>(),
                  doc.at("height").get<int>()};
    m.total_frames = doc.at("total_frames").get<FrameIndex>();
    m.dropped_frames = doc.at("dropped_frames").get<FrameIndex>();
    for (const auto& seg : doc.at("segments")) {
      ManifestSegment s;
      for (const auto& l : seg.at("sources")) {
        auto label = parse_phase_label(l.get<std::string>());
        if (!label) throw Error(ErrorKind::kParse, "manifest: unknown label");
        s.sources.push_back(*label);
      }
      auto level = parse_relevance_level(seg.at("relevance").get<std::string>());
      auto codec = parse_codec(seg.at("profile").at("codec").get<std::string>());
      if (!level || !codec) throw Error(ErrorKind::kParse, "manifest: bad relevance or codec");
      s.level = *level;
      s.frames = {seg.at("frames").at(0).get<FrameIndex>(), seg.at("frames").at(1).get<FrameIndex>()};
      s.profile = {*codec, seg.at("profile").at("crf").get<int>(),
                   {seg.at("profile").at("width").get<int>(),
                    seg.at("profile").at("height").get<int>()}};
      s.file = seg.at("file").get<std::string>();
      s.bytes = seg.at("bytes").get<std::uint64_t>();
      s.duration_seconds = seg.at("duration_s").get<double>();
      s.bitrate_kbps = seg.at("kbps").get<double>();
      if (seg.contains("ssim")) s.ssim = seg.at("ssim").get<double>();
      m.segments.push_back(std::move(s));
    }
    if (doc.contains("archive")) m.archive = doc.at("archive").get<std::string>();
    m.backend = doc.value("backend", "");
    if (doc.contains("encoder_templates")) {
      m.encoder_templates =
          doc.at("encoder_templates").get<std::map<std::string, std::vector<std::string>>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("manifest: ") + e.what());
  }
  return m;
}

}  // namespace relcomp
