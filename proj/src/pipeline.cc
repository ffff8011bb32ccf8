#include "relcomp/pipeline.h"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "relcomp/error.h"

namespace fs = std::filesystem;

namespace relcomp {

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::kInput, "cannot write '" + path.string() + "'");
}

}  // namespace

CompressResult compress(const CompressRequest& request, std::ostream* log) {
  const EncoderBackend& backend = request.backend;
  if (!backend.supports(request.codec)) {
    throw Error(ErrorKind::kBackend, "unsupported codec " + std::string(to_string(request.codec)));
  }
  const std::string annotation_text = read_text_file(request.annotations);
  RelevanceTable table = RelevanceTable::clinical_default();
  if (request.relevance) {
    table = apply_relevance_overrides(read_text_file(*request.relevance), table);
  }
  const OptimalProfileTable profiles = request.profiles
                                           ? optimal_table_from_json(read_text_file(*request.profiles))
                                           : default_optimal_table();

  const VideoInfo info = probe_video(backend, request.video);
  AnnotationOptions options;
  options.geometry = info.geometry;
  options.total_frames = info.frame_count;
  const PhaseTimeline timeline = parse_annotations(annotation_text, options);

  CompressResult result;
  result.idle_fraction = idle_fraction(timeline);
  result.plan = plan_segments(timeline, table, request.policy);
  // Resolve every profile before any encoder runs.
  std::vector<EncodingProfile> seg_profiles;
  for (const PlannedSegment& seg : result.plan.segments) {
    seg_profiles.push_back(profile_for(seg.level, request.codec, profiles));
  }

  fs::create_directories(request.output_dir);
  const fs::path work = request.output_dir / ".work";
  fs::create_directories(work);
  if (log) {
    *log << "relcomp: " << result.plan.segments.size() << " segments, "
         << result.plan.dropped_frames << " of " << result.plan.total_frames
         << " frames dropped (" << to_string(request.policy) << ")\n";
  }

  std::vector<std::function<EncodedClip()>> jobs;
  for (size_t i = 0; i < result.plan.segments.size(); ++i) {
    jobs.push_back([&, i]() {
      const PlannedSegment& seg = result.plan.segments[i];
      std::ostringstream stem;
      stem << "segment_" << std::setw(3) << std::setfill('0') << i << '_' << to_string(seg.level);
      const ClipRef clip = extract_segment(backend, request.video, info,
                                           {seg.start_frame, seg.end_frame},
                                           work / stem.str());
      EncodedClip encoded =
          encode_clip(clip, seg_profiles[i], backend, request.output_dir / stem.str());
      if (request.measure_ssim) {
        encoded.mean_ssim =
            measure_clip_ssim(backend, clip.path, {info.geometry.width, info.geometry.height},
                              encoded.path, seg_profiles[i].resolution)
                .mean;
      }
      if (!clip.passthrough) fs::remove(clip.path);
      if (log) {
        std::ostringstream line;
        line << "relcomp: " << stem.str() << " " << to_string(encoded.profile) << " "
             << std::fixed << std::setprecision(2) << encoded.bitrate_kbps << " kbps in "
             << encoded.wall_seconds << " s\n";
        *log << line.str();
      }
      return encoded;
    });
  }
  const int workers = request.workers > 0
                          ? request.workers
                          : std::max(1u, std::thread::hardware_concurrency());
  std::vector<EncodedClip> clips = run_jobs(std::move(jobs), workers);

  AssembleOptions assemble_options;
  assemble_options.source = request.video.string();
  assemble_options.output_dir = request.output_dir;
  assemble_options.concatenate = request.concatenate;
  result.manifest = assemble(result.plan, clips, backend, assemble_options);

  result.report = savings_report(profiles, result.idle_fraction);
  if (request.baseline_crf) {
    const ClipRef whole{request.video, {0, info.frame_count}, info.geometry.fps, true};
    const EncodingProfile hospital{CodecFamily::kH264, *request.baseline_crf,
                                   {info.geometry.width, info.geometry.height}};
    const EncodedClip base = encode_clip(whole, hospital, backend, work / "baseline");
    MeasuredSavings measured;
    measured.baseline_crf = *request.baseline_crf;
    measured.baseline_bytes = base.bytes;
    measured.archive_bytes = result.manifest.total_bytes();
    measured.source_seconds = info.frame_count / info.geometry.fps;
    measured.planned_seconds = result.manifest.planned_duration_seconds();
    measured.saving = 1.0 - static_cast<double>(measured.archive_bytes) /
                                static_cast<double>(measured.baseline_bytes);
    result.report.measured = measured;
    fs::remove(base.path);
    if (log) {
      *log << "relcomp: baseline h264 crf" << *request.baseline_crf << " " << base.bytes
           << " bytes, archive " << measured.archive_bytes << " bytes, saving "
           << format_percent(measured.saving) << "%\n";
    }
  }
  fs::remove_all(work);

  write_text_file(request.output_dir / "report.json", emit_report(result.report, ReportFormat::kJson));
  write_text_file(request.output_dir / "report.csv", emit_report(result.report, ReportFormat::kCsv));
  write_text_file(request.output_dir / "timeline.csv",
                  timeline_plot_csv(timeline, table, Purpose::kTeaching));
  return result;
}

}  // namespace relcomp
