#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relcomp/profiles.h"
#include "relcomp/study.h"
#include "relcomp/timeline.h"

namespace relcomp {

// Reference figures of the hospital archive the savings are measured against.
namespace baseline {
inline constexpr double kReferenceFileMiB = 506;
inline constexpr int kHospitalCrfMin = 14;
inline constexpr int kHospitalCrfMax = 16;
inline constexpr double kHospitalFps = 60;
// Share of idle frames over the annotated 20-video corpus.
inline constexpr double kCorpusIdleFraction = 0.2375;

// Source bitrate of the representative clip per relevance category
// (capsulorhexis, irrigation/aspiration, viscoelastic). 0 for NotRelevant.
double source_kbps(RelevanceLevel level);
}  // namespace baseline

// 1 - compressed/original. Throws Error(kValidation) unless original > 0 and
// compressed >= 0.
double segment_saving(double original_kbps, double compressed_kbps);

// Saving when the idle share is removed and the rest is compressed:
// 1 - (1 - idle_fraction) * compressed/original.
// Throws Error(kValidation) unless idle_fraction is in [0, 1).
double total_saving(double idle_fraction, double original_kbps, double compressed_kbps);

struct CategorySavings {
  RelevanceLevel level = RelevanceLevel::kHighlyRelevant;
  CodecFamily codec = CodecFamily::kH264;
  int setup_number = 0;
  EncodingProfile profile;
  double ssim = 0;
  double original_kbps = 0;
  double compressed_kbps = 0;
  double segment_saving = 0;

  bool operator==(const CategorySavings&) const = default;
};

// Whole-surgery saving per codec after idle removal, using the highly
// relevant profile (the most expensive category) for all remaining content.
struct SurgerySavings {
  CodecFamily codec = CodecFamily::kH264;
  double idle_fraction = 0;
  double total_saving = 0;

  bool operator==(const SurgerySavings&) const = default;
};

// Bytes actually written by a compress run versus a baseline encode of the
// same source.
struct MeasuredSavings {
  int baseline_crf = 16;
  std::uint64_t baseline_bytes = 0;
  std::uint64_t archive_bytes = 0;
  double source_seconds = 0;
  double planned_seconds = 0;
  double saving = 0;

  bool operator==(const MeasuredSavings&) const = default;
};

struct SavingsReport {
  std::vector<CategorySavings> categories;
  std::vector<SurgerySavings> surgery;
  std::optional<MeasuredSavings> measured;

  bool operator==(const SavingsReport&) const = default;
};

// Category rows for every entry of `table` (ordered by codec, then
// HR, R, SR) plus whole-surgery rows for codecs with an HR entry.
SavingsReport savings_report(const OptimalProfileTable& table,
                             double idle_fraction = baseline::kCorpusIdleFraction);

enum class ReportFormat { kJson, kCsv, kTotalsCsv };
std::optional<ReportFormat> parse_report_format(std::string_view text);

// Deterministic output; percentages are rendered with two decimals.
// kCsv holds the category rows, kTotalsCsv the whole-surgery rows.
std::string emit_report(const SavingsReport& report, ReportFormat format);
SavingsReport report_from_json(std::string_view text);

struct TimelineDistribution {
  // Indexed by RelevanceLevel.
  std::array<double, 4> fractions{};

  double at(RelevanceLevel level) const { return fractions[static_cast<size_t>(level)]; }
};

// Duration share of each level using the single-purpose relevance.
TimelineDistribution relevance_distribution(const PhaseTimeline& timeline,
                                            const RelevanceTable& table, Purpose purpose);

// Stacked-bar plot data: `segment,label,relevance,frames`.
std::string timeline_plot_csv(const PhaseTimeline& timeline, const RelevanceTable& table,
                              Purpose purpose);

enum class WhiskerRule { kMinMax, kTukey };

struct BoxplotStats {
  double lower_whisker = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double upper_whisker = 0;
};

// Quartiles interpolate linearly between order statistics. kMinMax whiskers
// are the sample extremes; kTukey whiskers are the extreme samples within
// 1.5 IQR of the box. Throws Error(kValidation) on an empty sample.
BoxplotStats boxplot(std::span<const double> values, WhiskerRule rule = WhiskerRule::kMinMax);

// Linear-interpolation quantile, p in [0, 1], on unsorted input.
double quantile(std::span<const double> values, double p);

enum class CorrelationMethod { kPearson, kSpearman };

// Throws Error(kValidation) for unequal lengths, fewer than two samples or a
// constant series.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

double experience_correlation(std::span<const ParticipantProfile> participants,
                              std::span<const double> chosen_ssim,
                              CorrelationMethod method = CorrelationMethod::kPearson);

// "94.68"
std::string format_percent(double fraction);

}  // namespace relcomp
