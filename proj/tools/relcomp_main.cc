// relcomp: relevance-based compression of cataract surgery videos.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "relcomp/analysis.h"
#include "relcomp/csv.h"
#include "relcomp/error.h"
#include "relcomp/pipeline.h"
#include "relcomp/quality.h"
#include "relcomp/service.h"
#include "relcomp/study.h"
#include "relcomp/transcode.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace relcomp;

namespace {

constexpr int kExitUsage = 2;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInput: return 3;
    case ErrorKind::kParse: return 4;
    case ErrorKind::kValidation: return 5;
    case ErrorKind::kBackend: return 6;
    case ErrorKind::kNotFound: return 7;
    case ErrorKind::kConflict: return 8;
    case ErrorKind::kGone: return 9;
  }
  return 1;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

CodecFamily codec_arg(const std::string& text) {
  auto codec = parse_codec(text);
  if (!codec) throw Error(ErrorKind::kValidation, "unknown codec '" + text + "'");
  return *codec;
}

std::vector<CodecFamily> codecs_arg(const std::vector<std::string>& texts) {
  std::vector<CodecFamily> out;
  for (const auto& t : texts) {
    std::stringstream parts(t);
    std::string part;
    while (std::getline(parts, part, ',')) {
      const CodecFamily c = codec_arg(part);
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
  }
  return out;
}

EncoderBackend backend_arg(const std::string& path) {
  return path.empty() ? EncoderBackend::ffmpeg() : EncoderBackend::from_json(read_text_file(path));
}

// --- compress -------------------------------------------------------------

struct CompressArgs {
  std::string video, annotations, codec = "h264", policy = "drop", profiles, relevance, out,
                                  backend;
  int workers = 0;
  int baseline_crf = baseline::kHospitalCrfMax;
  bool no_baseline = false, ssim = false, concat = false, as_json = false;
};

int run_compress(const CompressArgs& a) {
  CompressRequest req;
  req.video = a.video;
  req.annotations = a.annotations;
  req.codec = codec_arg(a.codec);
  auto policy = parse_idle_policy(a.policy);
  if (!policy) throw Error(ErrorKind::kValidation, "unknown idle policy '" + a.policy + "'");
  req.policy = *policy;
  if (!a.profiles.empty()) req.profiles = a.profiles;
  if (!a.relevance.empty()) req.relevance = a.relevance;
  req.output_dir = a.out.empty() ? fs::path(a.video).stem().string() + "_relcomp" : a.out;
  req.workers = a.workers;
  req.baseline_crf = a.no_baseline ? std::nullopt : std::optional<int>(a.baseline_crf);
  req.measure_ssim = a.ssim;
  req.concatenate = a.concat;
  req.backend = backend_arg(a.backend);
  // Fail on unreadable inputs before the backend is touched.
  for (const fs::path& p : {req.video, req.annotations}) {
    if (!fs::is_regular_file(p)) throw Error(ErrorKind::kInput, "cannot read '" + p.string() + "'");
  }

  const CompressResult r = compress(req, &std::cerr);
  if (a.as_json) {
    json doc;
    doc["output_dir"] = req.output_dir.string();
    doc["manifest"] = json::parse(manifest_to_json(r.manifest));
    doc["report"] = json::parse(emit_report(r.report, ReportFormat::kJson));
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "segment,relevance,start_frame,end_frame,codec,crf,width,height,bytes,kbps\n";
    for (size_t i = 0; i < r.manifest.segments.size(); ++i) {
      const ManifestSegment& s = r.manifest.segments[i];
      std::cout << i << ',' << to_string(s.level) << ',' << s.frames.start << ','
                << s.frames.end << ',' << to_string(s.profile.codec) << ',' << s.profile.crf
                << ',' << s.profile.resolution.width << ',' << s.profile.resolution.height << ','
                << s.bytes << ',' << fixed(s.bitrate_kbps, 2) << "\n";
    }
  }
  std::cerr << "relcomp: wrote " << (req.output_dir / "manifest.json").string() << "; planned "
            << r.manifest.planned_frames() << " of " << r.manifest.total_frames << " frames\n";
  if (r.report.measured) {
    std::cerr << "relcomp: measured saving " << format_percent(r.report.measured->saving)
              << "% vs h264 crf" << r.report.measured->baseline_crf << "\n";
  }
  return 0;
}

// --- grid -----------------------------------------------------------------

int run_grid(const std::vector<std::string>& codec_texts, bool as_json) {
  const auto codecs = codecs_arg(codec_texts);
  json rows = json::array();
  if (!as_json) std::cout << "codec,crf,width,height\n";
  size_t count = 0;
  for (CodecFamily c : codecs) {
    for (const EncodingProfile& p : setup_grid(c)) {
      ++count;
      if (as_json) {
        rows.push_back({{"codec", to_string(p.codec)},
                        {"crf", p.crf},
                        {"width", p.resolution.width},
                        {"height", p.resolution.height}});
      } else {
        std::cout << to_string(p.codec) << ',' << p.crf << ',' << p.resolution.width << ','
                  << p.resolution.height << "\n";
      }
    }
  }
  if (as_json) std::cout << rows.dump(2) << "\n";
  std::cerr << "relcomp: " << count << " profiles\n";
  return 0;
}

// --- rank -----------------------------------------------------------------

int run_rank(const std::string& path, const std::vector<std::string>& scope_texts,
             const std::string& out) {
  std::optional<std::vector<CodecFamily>> scope;
  if (!scope_texts.empty()) scope = codecs_arg(scope_texts);
  const SetupCatalog catalog = build_catalog(measurements_from_csv(read_text_file(path)), scope);
  const std::string text = catalog_to_csv(catalog);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw Error(ErrorKind::kInput, "cannot write '" + out + "'");
  }
  std::cout << text;
  std::cerr << "relcomp: ranked " << catalog.size() << " setups\n";
  return 0;
}

// --- measure --------------------------------------------------------------

struct MeasureArgs {
  std::string video, out, range, filter = "bilinear", backend;
  std::vector<std::string> codecs{"h264"};
  std::vector<int> crfs;
  int workers = 0;
};

int run_measure(const MeasureArgs& a) {
  const EncoderBackend backend = backend_arg(a.backend);
  auto filter = parse_scale_filter(a.filter);
  if (!filter) throw Error(ErrorKind::kValidation, "unknown scale filter '" + a.filter + "'");
  if (a.out.empty()) throw Error(ErrorKind::kValidation, "--out is required");
  const fs::path out = a.out;
  fs::create_directories(out);

  const VideoInfo info = probe_video(backend, a.video);
  FrameRange range{0, info.frame_count};
  if (!a.range.empty()) {
    const auto colon = a.range.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::kValidation, "--range wants START:END");
    range = {csv::to_int(a.range.substr(0, colon), 0), csv::to_int(a.range.substr(colon + 1), 0)};
  }
  const ClipRef clip = extract_segment(backend, a.video, info, range, out / "reference");
  const Resolution ref_res{info.geometry.width, info.geometry.height};

  std::vector<EncodingProfile> profiles;
  for (CodecFamily c : codecs_arg(a.codecs)) {
    for (const EncodingProfile& p : setup_grid(c)) {
      if (a.crfs.empty() || std::find(a.crfs.begin(), a.crfs.end(), p.crf) != a.crfs.end()) {
        profiles.push_back(p);
      }
    }
  }
  if (profiles.empty()) throw Error(ErrorKind::kValidation, "no grid profile matches --crf");

  std::vector<std::function<Measurement()>> jobs;
  for (const EncodingProfile& p : profiles) {
    jobs.push_back([&, p] {
      const EncodedClip enc = encode_clip(clip, p, backend, out / profile_slug(p));
      const SsimResult q =
          measure_clip_ssim(backend, clip.path, ref_res, enc.path, p.resolution, *filter);
      std::cerr << "relcomp: " << to_string(p) << " ssim " << fixed(q.mean, 4) << " "
                << fixed(enc.bitrate_kbps, 2) << " kbps\n";
      return Measurement{p, q.mean, enc.bitrate_kbps};
    });
  }
  const int workers =
      a.workers > 0 ? a.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const std::vector<Measurement> measured = run_jobs(std::move(jobs), workers);
  const std::string text = measurements_to_csv(measured);
  std::ofstream f(out / "measurements.csv", std::ios::binary | std::ios::trunc);
  f << text;
  std::cout << text;
  return 0;
}

// --- study serve ----------------------------------------------------------

int run_serve(const std::string& config_path, std::optional<int> port) {
  ServiceConfig config =
      ServiceConfig::from_json(read_text_file(config_path), fs::path(config_path).parent_path());
  if (port) config.port = *port;
  RatingService service(config);
  const int bound = service.bind();
  std::cout << json{{"host", config.host}, {"port", bound}}.dump() << std::endl;
  std::cerr << "relcomp: rating service on http://" << config.host << ':' << bound << "\n";
  service.listen();
  return 0;
}

// --- thresholds -----------------------------------------------------------

struct ThresholdArgs {
  std::string results;
  std::vector<std::string> catalogs;  // PATH or LEVEL=PATH
  std::vector<std::string> categories;
  std::string emit_profiles;
  bool as_json = false;
};

int run_thresholds(const ThresholdArgs& a) {
  std::optional<SetupCatalog> shared;
  std::map<RelevanceLevel, SetupCatalog> per_level;
  for (const std::string& spec : a.catalogs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      shared = catalog_from_csv(read_text_file(spec));
      continue;
    }
    auto level = parse_relevance_level(spec.substr(0, eq));
    if (!level) throw Error(ErrorKind::kValidation, "unknown category in '" + spec + "'");
    per_level.insert_or_assign(*level, catalog_from_csv(read_text_file(spec.substr(eq + 1))));
  }

  std::map<RelevanceLevel, std::vector<int>> grouped;
  for (const StudyResult& r : results_from_csv(read_text_file(a.results))) {
    grouped[r.category].push_back(r.result_setup);
  }
  std::set<RelevanceLevel> wanted;
  for (const auto& c : a.categories) {
    auto level = parse_relevance_level(c);
    if (!level) throw Error(ErrorKind::kValidation, "unknown category '" + c + "'");
    wanted.insert(*level);
  }

  OptimalProfileTable table;
  json doc = json::array();
  if (!a.as_json) {
    std::cout << "category,threshold_setup,threshold_ssim,used,excluded_none,codec,setup,crf,"
                 "width,height,ssim,kbps\n";
  }
  // HR, R, SR.
  for (auto it = grouped.rbegin(); it != grouped.rend(); ++it) {
    const RelevanceLevel level = it->first;
    if (!wanted.empty() && !wanted.count(level)) continue;
    const SetupCatalog* catalog = nullptr;
    if (auto f = per_level.find(level); f != per_level.end()) {
      catalog = &f->second;
    } else if (shared) {
      catalog = &*shared;
    } else {
      throw Error(ErrorKind::kValidation,
                  "no catalog for category " + std::string(to_string(level)));
    }
    const ThresholdDerivation d = threshold_from_ratings(level, it->second, *catalog);
    const Selection sel = select_optimal(*catalog, d.threshold);
    json entry{{"category", to_string(level)},
               {"threshold_setup", d.threshold.setup_number},
               {"threshold_ssim", d.threshold.ssim},
               {"used", d.used},
               {"excluded_none_acceptable", d.excluded_none_acceptable},
               {"optimal", json::object()}};
    for (const auto& [codec, choice] : sel.per_codec) {
      const double saving = segment_saving(baseline::source_kbps(level), choice.bitrate_kbps);
      table.set(level, codec,
                {choice.setup_number, choice.profile, choice.ssim, choice.bitrate_kbps, saving});
      entry["optimal"][std::string(to_string(codec))] = {
          {"setup", choice.setup_number},        {"crf", choice.profile.crf},
          {"width", choice.profile.resolution.width}, {"height", choice.profile.resolution.height},
          {"ssim", choice.ssim},                 {"kbps", choice.bitrate_kbps}};
      if (!a.as_json) {
        std::cout << to_string(level) << ',' << d.threshold.setup_number << ','
                  << fixed(d.threshold.ssim, 4) << ',' << d.used << ','
                  << d.excluded_none_acceptable << ',' << to_string(codec) << ','
                  << choice.setup_number << ',' << choice.profile.crf << ','
                  << choice.profile.resolution.width << ',' << choice.profile.resolution.height
                  << ',' << fixed(choice.ssim, 4) << ',' << fixed(choice.bitrate_kbps, 2) << "\n";
      }
    }
    for (CodecFamily c : sel.omitted) {
      std::cerr << "relcomp: " << to_string(level) << ": no " << to_string(c)
                << " setup reaches the threshold\n";
    }
    std::cerr << "relcomp: " << to_string(level) << " threshold setup "
              << d.threshold.setup_number << " (ssim " << fixed(d.threshold.ssim, 4) << ") from "
              << d.used << " results, " << d.excluded_none_acceptable << " none-acceptable\n";
    doc.push_back(std::move(entry));
  }
  if (a.as_json) std::cout << doc.dump(2) << "\n";
  if (!a.emit_profiles.empty()) {
    std::ofstream f(a.emit_profiles, std::ios::binary | std::ios::trunc);
    f << optimal_table_to_json(table);
    if (!f) throw Error(ErrorKind::kInput, "cannot write '" + a.emit_profiles + "'");
  }
  return 0;
}

// --- report ---------------------------------------------------------------

int run_report(const std::string& profiles, const std::string& format, double idle) {
  auto fmt = parse_report_format(format);
  if (!fmt) throw Error(ErrorKind::kValidation, "unknown report format '" + format + "'");
  const OptimalProfileTable table = profiles.empty()
                                        ? default_optimal_table()
                                        : optimal_table_from_json(read_text_file(profiles));
  std::cout << emit_report(savings_report(table, idle), *fmt);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relevance-based compression for cataract surgery video archives"};
  app.require_subcommand(1);
  std::function<int()> action;

  CompressArgs ca;
  auto* compress_cmd = app.add_subcommand("compress", "Encode a video by phase relevance");
  compress_cmd->add_option("video", ca.video, "Source video")->required();
  compress_cmd->add_option("annotations", ca.annotations, "Phase annotation CSV")->required();
  compress_cmd->add_option("--codec", ca.codec, "h264, h265 or av1")->capture_default_str();
  compress_cmd->add_option("--idle-policy", ca.policy, "drop, merge-preceding or merge-subsequent")
      ->capture_default_str();
  compress_cmd->add_option("--profiles", ca.profiles, "Optimal profile table JSON");
  compress_cmd->add_option("--relevance", ca.relevance, "Relevance override CSV");
  compress_cmd->add_option("--out,-o", ca.out, "Output directory");
  compress_cmd->add_option("--workers,-j", ca.workers, "Parallel encode jobs (0 = all cores)");
  compress_cmd->add_option("--baseline-crf", ca.baseline_crf, "H.264 CRF of the baseline encode")
      ->capture_default_str();
  compress_cmd->add_flag("--no-baseline", ca.no_baseline, "Skip the baseline encode");
  compress_cmd->add_flag("--ssim", ca.ssim, "Measure SSIM of every segment");
  compress_cmd->add_flag("--concat", ca.concat, "Also write one concatenated archive");
  compress_cmd->add_option("--backend", ca.backend, "Encoder backend JSON");
  compress_cmd->add_flag("--json", ca.as_json, "Print manifest and report as JSON");
  compress_cmd->callback([&] { action = [&] { return run_compress(ca); }; });

  std::vector<std::string> grid_codecs{"h264"};
  bool grid_json = false;
  auto* grid_cmd = app.add_subcommand("grid", "List the encoding profile grid");
  grid_cmd->add_option("--codec", grid_codecs, "Codec(s), repeat or comma-separate")
      ->capture_default_str();
  grid_cmd->add_flag("--json", grid_json);
  grid_cmd->callback([&] { action = [&] { return run_grid(grid_codecs, grid_json); }; });

  std::string rank_input, rank_out;
  std::vector<std::string> rank_scope;
  auto* rank_cmd = app.add_subcommand("rank", "Rank measurements into a setup catalog");
  rank_cmd->add_option("measurements", rank_input, "Measurements CSV")->required();
  rank_cmd->add_option("--scope", rank_scope, "Codecs in scope (default: those present)");
  rank_cmd->add_option("--out,-o", rank_out, "Also write the catalog here");
  rank_cmd->callback([&] { action = [&] { return run_rank(rank_input, rank_scope, rank_out); }; });

  MeasureArgs ma;
  auto* measure_cmd =
      app.add_subcommand("measure", "Encode a clip over the grid and measure SSIM and bitrate");
  measure_cmd->add_option("video", ma.video, "Source video")->required();
  measure_cmd->add_option("--out,-o", ma.out, "Directory for clips and measurements.csv")
      ->required();
  measure_cmd->add_option("--codec", ma.codecs, "Codec(s)")->capture_default_str();
  measure_cmd->add_option("--crf", ma.crfs, "Restrict to these CRF values");
  measure_cmd->add_option("--range", ma.range, "Frames START:END of the source");
  measure_cmd->add_option("--filter", ma.filter, "bilinear or nearest")->capture_default_str();
  measure_cmd->add_option("--workers,-j", ma.workers);
  measure_cmd->add_option("--backend", ma.backend, "Encoder backend JSON");
  measure_cmd->callback([&] { action = [&] { return run_measure(ma); }; });

  std::string serve_config;
  std::optional<int> serve_port;
  auto* study_cmd = app.add_subcommand("study", "Rating study");
  study_cmd->require_subcommand(1);
  auto* serve_cmd = study_cmd->add_subcommand("serve", "Run the rating HTTP service");
  serve_cmd->add_option("--config", serve_config, "Service config JSON")->required();
  serve_cmd->add_option("--port", serve_port, "Override the configured port");
  serve_cmd->callback([&] { action = [&] { return run_serve(serve_config, serve_port); }; });

  ThresholdArgs ta;
  auto* thr_cmd = app.add_subcommand("thresholds", "Derive thresholds and optimal profiles");
  thr_cmd->add_option("results", ta.results, "Study results CSV")->required();
  thr_cmd->add_option("--catalog", ta.catalogs, "Catalog CSV, or LEVEL=CSV per category")
      ->required();
  thr_cmd->add_option("--category", ta.categories, "Only these categories (HR, R, SR)");
  thr_cmd->add_option("--emit-profiles", ta.emit_profiles, "Write a profile table JSON");
  thr_cmd->add_flag("--json", ta.as_json);
  thr_cmd->callback([&] { action = [&] { return run_thresholds(ta); }; });

  std::string report_profiles, report_format = "csv";
  double report_idle = baseline::kCorpusIdleFraction;
  auto* report_cmd = app.add_subcommand("report", "Savings report for a profile table");
  report_cmd->add_option("--profiles", report_profiles, "Profile table JSON (default: built-in)");
  report_cmd->add_option("--format", report_format, "json, csv or totals-csv")
      ->capture_default_str();
  report_cmd->add_option("--idle", report_idle, "Idle fraction")->capture_default_str();
  report_cmd->callback(
      [&] { action = [&] { return run_report(report_profiles, report_format, report_idle); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    return action ? action() : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "relcomp: " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "relcomp: " << e.what() << "\n";
    return 1;
  }
}
