// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "fixtures.h"
#include "json.hpp"
#include "relcomp/analysis.h"
#include "relcomp/process.h"
#include "relcomp/quality.h"
#include "relcomp/quality_reference.h"
#include "relcomp/study.h"
#include "relcomp/transcode.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace relcomp;
using L = RelevanceLevel;
using C = CodecFamily;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string num(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string fixture_dir() {
  static const fs::path dir = testing::temp_dir("acceptance");
  return dir.string();
}

int failures = 0;

void criterion(const std::string& name, std::optional<double> limit_s,
               const std::function<Outcome()>& body) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s && secs >= *limit_s) {
    out.pass = false;
    out.detail += (out.detail.empty() ? "" : "; ") + std::string("runtime limit ") +
                  num(*limit_s, 0) + " s exceeded";
  }
  if (!out.pass) ++failures;
  std::cout << (out.pass ? "PASS" : "FAIL") << "  " << name << "  (" << out.detail
            << (out.detail.empty() ? "" : ", ") << num(secs, 3) << " s)" << std::endl;
}

Outcome table3_arithmetic() {
  Outcome o;
  double worst = 0;
  int n = 0;
  for (L level : {L::kHighlyRelevant, L::kRelevant, L::kSomewhatRelevant}) {
    for (const auto& row : testing::reference_rows(level)) {
      const double pct = segment_saving(baseline::source_kbps(level), row.kbps) * 100;
      const double dev = std::abs(pct - row.compression_pct);
      worst = std::max(worst, dev);
      ++n;
      o.require(dev <= 0.005, std::string(to_string(row.codec)) + "/" +
                                  std::string(to_string(level)) + " " + num(pct, 4));
    }
  }
  o.require(n == 9, "expected 9 rows");
  if (o.pass) o.detail = "9/9 within 0.005 pp, max dev " + num(worst, 4) + " pp";
  return o;
}

Outcome headline_savings() {
  Outcome o;
  const std::vector<std::pair<double, double>> cases = {
      {653.39, 95.94}, {207.12, 98.71}, {190.38, 98.82}};
  std::string got;
  for (auto [kbps, pct] : cases) {
    const double v = total_saving(0.2375, 12278, kbps) * 100;
    o.require(std::abs(v - pct) <= 0.01, num(v, 4) + " vs " + num(pct, 2));
    got += (got.empty() ? "" : " / ") + num(v, 2);
  }
  if (o.pass) o.detail = got + " within 0.01 pp";
  return o;
}

Outcome grid_cardinalities() {
  Outcome o;
  for (C c : kAllCodecs) o.require(setup_grid(c).size() == 39, std::string(to_string(c)) + " != 39");
  o.require(setup_grid(C::kH264).size() + setup_grid(C::kAV1).size() == 78, "joint != 78");
  std::vector<int> h26x, av1;
  for (int v = 23; v <= 47; v += 2) h26x.push_back(v);
  for (int v = 27; v <= 63; v += 3) av1.push_back(v);
  o.require(crf_ladder(C::kH264).values() == h26x, "h264 ladder");
  o.require(crf_ladder(C::kH265).values() == h26x, "h265 ladder");
  o.require(crf_ladder(C::kAV1).values() == av1, "av1 ladder");
  if (o.pass) o.detail = "39 per codec, 78 joint, ladders 23..47/2 and 27..63/3";
  return o;
}

Outcome dichotomous_search() {
  Outcome o;
  o.require(*RatingSession("p", L::kHighlyRelevant, "c", 78).current() == 39, "N=78 midpoint");
  for (int n : {39, 78}) {
    const int bound = static_cast<int>(std::ceil(std::log2(n + 1.0)));
    o.require(bound == (n == 39 ? 6 : 7), "step bound");
    int worst = 0;
    for (int k = 0; k <= n; ++k) {
      RatingSession s("p", L::kHighlyRelevant, "c", n);
      while (!s.done()) s.record_verdict(*s.current() <= k);
      const int steps = static_cast<int>(s.history().size());
      worst = std::max(worst, steps);
      if (*s.result() != k || steps > bound) {
        o.require(false, "N=" + std::to_string(n) + " k=" + std::to_string(k));
      }
    }
    o.detail += (o.detail.empty() ? "" : ", ") + std::string("N=") + std::to_string(n) +
                ": all " + std::to_string(n + 1) + " boundaries, max " + std::to_string(worst) +
                " steps";
  }
  return o;
}

Outcome threshold_derivation() {
  Outcome o;
  struct Case {
    L level;
    bool h265;
    std::vector<int> results;
    int setup;
    double ssim;
  };
  const std::vector<Case> cases = {
      {L::kHighlyRelevant, false, {28, 33, 35, 37, 40, 44, 0}, 36, 0.9250},
      {L::kRelevant, false, {45, 52, 59, 63, 70}, 59, 0.9048},
      {L::kSomewhatRelevant, false, {49, 53, 54, 61}, 53, 0.9157},
      {L::kHighlyRelevant, true, {11, 15, 17, 19, 25}, 17, 0.9160},
      {L::kRelevant, true, {20, 22, 22, 30, 0}, 22, 0.9057},
      {L::kSomewhatRelevant, true, {14, 16, 18, 21}, 17, 0.9185},
  };
  std::string got;
  for (const Case& c : cases) {
    const auto d = threshold_from_ratings(c.level, c.results, testing::reference_catalog(c.level, c.h265));
    o.require(d.threshold.setup_number == c.setup && std::abs(d.threshold.ssim - c.ssim) < 1e-9,
              std::string(to_string(c.level)) + (c.h265 ? "/h265" : "/joint"));
    got += (got.empty() ? "" : " ") + std::to_string(d.threshold.setup_number) + "->" +
           num(d.threshold.ssim, 4);
  }
  if (o.pass) o.detail = got;
  return o;
}

Outcome select_optimal_check() {
  Outcome o;
  std::mt19937 rng(20240521);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<C> scope;
    for (C c : kAllCodecs)
      if (rng() % 2) scope.push_back(c);
    if (scope.empty()) scope.push_back(kAllCodecs[rng() % 3]);
    std::vector<EncodingProfile> pool;
    for (C c : scope)
      for (const auto& p : setup_grid(c)) pool.push_back(p);
    std::shuffle(pool.begin(), pool.end(), rng);
    const int n = 1 + static_cast<int>(rng() % pool.size());
    std::vector<double> ssim(n);
    for (auto& s : ssim) s = 0.80 + 0.002 * (rng() % 100);
    std::sort(ssim.rbegin(), ssim.rend());
    std::vector<SetupEntry> entries;
    for (int i = 0; i < n; ++i) entries.push_back({i + 1, pool[i], ssim[i], double(10 + rng() % 90)});
    const SetupCatalog cat(entries, scope);
    const int t = 1 + static_cast<int>(rng() % n);
    const CategoryThreshold thr{L::kRelevant, t, cat.at(t).mean_ssim};
    const Selection sel = select_optimal(cat, thr);

    // Brute force: filter, then argmin (kbps, -ssim, setup).
    std::map<C, const SetupEntry*> best;
    for (const SetupEntry& e : cat.entries()) {
      if (e.mean_ssim < thr.ssim) continue;
      const SetupEntry*& b = best[e.profile.codec];
      if (!b || std::tuple(e.bitrate_kbps, -e.mean_ssim, e.setup_number) <
                    std::tuple(b->bitrate_kbps, -b->mean_ssim, b->setup_number)) {
        b = &e;
      }
    }
    bool same = sel.per_codec.size() == best.size();
    for (const auto& [codec, e] : best) {
      auto it = sel.per_codec.find(codec);
      same = same && it != sel.per_codec.end() && it->second.setup_number == e->setup_number;
    }
    if (!same) ++mismatches;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + "/1000 random catalogs disagree");

  int exact = 0;
  for (L level : {L::kHighlyRelevant, L::kRelevant, L::kSomewhatRelevant}) {
    for (bool h265 : {false, true}) {
      const Selection sel = select_optimal(testing::reference_catalog(level, h265),
                                           testing::reference_threshold(level, h265));
      for (const auto& row : testing::reference_rows(level)) {
        if ((row.codec == C::kH265) != h265) continue;
        auto it = sel.per_codec.find(row.codec);
        const bool ok = it != sel.per_codec.end() && it->second.setup_number == row.setup &&
                        it->second.profile == row.profile && it->second.bitrate_kbps == row.kbps;
        o.require(ok, std::string(to_string(row.codec)) + "/" + std::string(to_string(level)));
        exact += ok;
      }
    }
  }
  if (o.pass) o.detail = "1000/1000 random catalogs match brute force, " + std::to_string(exact) +
                         "/9 reference profiles exact";
  return o;
}

Outcome ssim_correctness() {
  Outcome o;
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> px(0, 255), noise(-40, 40);
  double worst_ref = 0, worst_sym = 0;
  bool identity = true;
  for (int i = 0; i < 100; ++i) {
    Frame a = Frame::luma(32, 32), b = Frame::luma(32, 32);
    for (size_t j = 0; j < a.y.size(); ++j) {
      a.y[j] = static_cast<std::uint8_t>(px(rng));
      b.y[j] = static_cast<std::uint8_t>(std::clamp(a.y[j] + noise(rng), 0, 255));
    }
    identity = identity && ssim_frame(a, a) == 1.0;
    const double ab = ssim_frame(a, b);
    worst_sym = std::max(worst_sym, std::abs(ab - ssim_frame(b, a)));
    worst_ref = std::max(worst_ref, std::abs(ab - reference::ssim_frame(a, b)));
  }
  o.require(identity, "ssim(a,a) != 1.0");
  o.require(worst_sym <= 1e-12, "symmetry " + std::to_string(worst_sym));
  o.require(worst_ref <= 1e-6, "reference dev " + std::to_string(worst_ref));
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  const double closed = (2 * 100.0 * 110.0 + c1) * c2 / ((100.0 * 100 + 110.0 * 110 + c1) * c2);
  const double got = ssim_frame(Frame::luma(24, 24, 100), Frame::luma(24, 24, 110));
  o.require(std::abs(got - closed) <= 1e-9, "constant case " + num(got, 9));
  if (o.pass) {
    std::ostringstream d;
    d << "identity exact, symmetry dev " << std::scientific << std::setprecision(1) << worst_sym
      << ", reference dev " << worst_ref << " over 100 frames, constant 100/110 = "
      << std::fixed << std::setprecision(6) << got;
    o.detail = d.str();
  }
  return o;
}

// 10 s, 25 fps, 1024x768; three annotated phases and two idle gaps.
constexpr int kE2eFrames = 250;
constexpr double kE2eFps = 25;
const char* kE2eAnnotations =
    "label,start_frame,end_frame\n"
    "Capsulorhexis,0,80\n"
    "IrrigationAspiration,115,190\n"
    "ViscoelasticII,210,250\n";

fs::path e2e_source() {
  const fs::path src = fs::path(fixture_dir()) / "surgery.mp4";
  if (!fs::exists(src)) testing::make_synthetic_video(src, kE2eFrames / kE2eFps, 1024, 768, kE2eFps);
  return src;
}

Outcome end_to_end() {
  Outcome o;
  if (!testing::ffmpeg_available()) {
    o.require(false, "ffmpeg with libx264/libx265/libaom-av1 not found");
    return o;
  }
  const fs::path dir = fixture_dir();
  const fs::path src = e2e_source();
  std::ofstream(dir / "surgery.csv") << kE2eAnnotations;

  const auto t0 = std::chrono::steady_clock::now();
  const ProcessResult r = run_process(
      RELCOMP_CLI_PATH, {"compress", src.string(), (dir / "surgery.csv").string(), "--codec", "h265",
                         "--idle-policy", "drop", "--out", (dir / "archive").string(), "--json"},
      std::chrono::minutes(10));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.exit_code != 0) {
    o.require(false, "compress exit " + std::to_string(r.exit_code) + ": " + r.stderr_text);
    return o;
  }
  const json doc = json::parse(r.stdout_text);
  const json& manifest = doc.at("manifest");

  // Oracle: idle share straight from the annotation rows.
  const int annotated = (80 - 0) + (190 - 115) + (250 - 210);
  const double idle = double(kE2eFrames - annotated) / kE2eFrames;
  const double source_s = kE2eFrames / kE2eFps;
  const double planned_s = manifest.at("planned_frames").get<double>() / manifest.at("fps").get<double>();
  const double expected_s = (1 - idle) * source_s;
  o.require(std::abs(planned_s - expected_s) <= 1 / kE2eFps,
            "planned " + num(planned_s, 3) + " s vs " + num(expected_s, 3) + " s");

  std::uintmax_t archive = 0;
  for (const auto& seg : manifest.at("segments")) {
    archive += fs::file_size(dir / "archive" / seg.at("file").get<std::string>());
  }
  const json& measured = doc.at("report").at("measured");
  const double baseline = measured.at("baseline_bytes").get<double>();
  const double saving = 1.0 - archive / baseline;
  o.require(saving > 0.90, "saving " + num(saving * 100, 2) + "%");
  o.require(std::abs(saving - measured.at("saving").get<double>()) < 1e-12,
            "reported saving differs from file sizes");
  o.require(secs < 300, "compress took " + num(secs, 1) + " s");
  if (o.pass) {
    o.detail = "planned " + num(planned_s, 3) + " s = (1 - " + num(idle, 2) + ") x " +
               num(source_s, 0) + " s, saving " + num(saving * 100, 2) + "% vs h264 crf16 (" +
               std::to_string(archive) + " / " + num(baseline, 0) + " bytes), compress " +
               num(secs, 1) + " s";
  }
  return o;
}

Outcome crf_monotonicity() {
  Outcome o;
  if (!testing::ffmpeg_available()) {
    o.require(false, "ffmpeg not found");
    return o;
  }
  const EncoderBackend backend = EncoderBackend::ffmpeg();
  const fs::path dir = fs::path(fixture_dir()) / "ladder";
  fs::create_directories(dir);
  const fs::path src = e2e_source();
  const VideoInfo info = probe_video(backend, src);
  // One second of the synthetic clip.
  const ClipRef clip = extract_segment(backend, src, info, {0, 25}, dir / "clip");
  const Resolution fixed_res{640, 480};
  std::string summary;
  for (C codec : kAllCodecs) {
    std::vector<std::function<EncodedClip()>> jobs;
    for (int crf : crf_ladder(codec).values()) {
      const EncodingProfile p{codec, crf, fixed_res};
      jobs.push_back([&, p] { return encode_clip(clip, p, backend, dir / profile_slug(p)); });
    }
    const auto encoded = run_jobs(std::move(jobs), static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
    for (size_t i = 1; i < encoded.size(); ++i) {
      o.require(encoded[i].bytes <= encoded[i - 1].bytes,
                std::string(to_string(codec)) + " crf" + std::to_string(encoded[i].profile.crf) +
                    " " + std::to_string(encoded[i].bytes) + " > crf" +
                    std::to_string(encoded[i - 1].profile.crf) + " " +
                    std::to_string(encoded[i - 1].bytes));
    }
    summary += (summary.empty() ? "" : ", ") + std::string(to_string(codec)) + " " +
               std::to_string(encoded.front().bytes) + "->" + std::to_string(encoded.back().bytes) +
               " B";
  }
  if (o.pass) o.detail = "13-step ladders at 640x480 non-increasing: " + summary;
  return o;
}

Outcome surgery_bar_distribution() {
  Outcome o;
  const auto d = relevance_distribution(testing::surgery_bar_timeline(),
                                        RelevanceTable::clinical_default(), Purpose::kTeaching);
  const double got = (d.at(L::kRelevant) + d.at(L::kHighlyRelevant)) * 100;
  double relevant = 0, total = 0;
  for (const auto& b : testing::surgery_bar_blocks()) {
    total += b.units;
    if (b.colour == 'G' || b.colour == 'O') relevant += b.units;
  }
  o.require(std::abs(got - 100 * relevant / total) < 1e-9, "differs from block-sum oracle");
  o.require(std::abs(got - 75.48) <= 0.5, "R+HR " + num(got, 2) + "%");
  if (o.pass) o.detail = "R+HR " + num(got, 2) + "% (target 75.48 +/- 0.5)";
  return o;
}

}  // namespace

int main() {
  criterion("Per-category savings arithmetic", 1.0, table3_arithmetic);
  criterion("Headline savings", 1.0, headline_savings);
  criterion("Grid cardinalities", std::nullopt, grid_cardinalities);
  criterion("Dichotomous search", 1.0, dichotomous_search);
  criterion("Threshold derivation", std::nullopt, threshold_derivation);
  criterion("select_optimal vs brute force", std::nullopt, select_optimal_check);
  criterion("SSIM correctness", std::nullopt, ssim_correctness);
  criterion("End-to-end desk scale", 300.0, end_to_end);
  criterion("CRF monotonicity", std::nullopt, crf_monotonicity);
  criterion("Timeline distribution", std::nullopt, surgery_bar_distribution);
  std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : std::to_string(failures) + " CRITERIA FAILED")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
