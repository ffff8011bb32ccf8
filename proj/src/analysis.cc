#include "relcomp/analysis.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "relcomp/error.h"

namespace relcomp {

double baseline::source_kbps(RelevanceLevel level) {
  switch (level) {
    case RelevanceLevel::kHighlyRelevant: return 12278;
    case RelevanceLevel::kRelevant: return 12416;
    case RelevanceLevel::kSomewhatRelevant: return 13074;
    case RelevanceLevel::kNotRelevant: return 0;
  }
  return 0;
}

double segment_saving(double original_kbps, double compressed_kbps) {
  if (!(original_kbps > 0)) throw Error(ErrorKind::kValidation, "original bitrate must be positive");
  if (compressed_kbps < 0) throw Error(ErrorKind::kValidation, "compressed bitrate is negative");
  return 1.0 - compressed_kbps / original_kbps;
}

double total_saving(double idle_fraction, double original_kbps, double compressed_kbps) {
  if (!(idle_fraction >= 0 && idle_fraction < 1)) {
    throw Error(ErrorKind::kValidation, "idle fraction must lie in [0, 1)");
  }
  segment_saving(original_kbps, compressed_kbps);  // validates the bitrates
  return 1.0 - (1.0 - idle_fraction) * (compressed_kbps / original_kbps);
}

std::string format_percent(double fraction) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << fraction * 100.0;
  return s.str();
}

SavingsReport savings_report(const OptimalProfileTable& table, double idle_fraction) {
  SavingsReport report;
  for (CodecFamily codec : kAllCodecs) {
    for (RelevanceLevel level : {RelevanceLevel::kHighlyRelevant, RelevanceLevel::kRelevant,
                                 RelevanceLevel::kSomewhatRelevant}) {
      const OptimalEntry* e = table.find(level, codec);
      if (!e) continue;
      const double original = baseline::source_kbps(level);
      report.categories.push_back({level, codec, e->setup_number, e->profile, e->ssim, original,
                                   e->bitrate_kbps, segment_saving(original, e->bitrate_kbps)});
    }
    if (const OptimalEntry* hr = table.find(RelevanceLevel::kHighlyRelevant, codec)) {
      const double original = baseline::source_kbps(RelevanceLevel::kHighlyRelevant);
      report.surgery.push_back(
          {codec, idle_fraction, total_saving(idle_fraction, original, hr->bitrate_kbps)});
    }
  }
  return report;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "json") return ReportFormat::kJson;
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "totals-csv") return ReportFormat::kTotalsCsv;
  return std::nullopt;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::string emit_report(const SavingsReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) {
    std::ostringstream out;
    out << "codec,relevance,setup,resolution,crf,ssim,kbps,original_kbps,saving_pct\n";
    for (const CategorySavings& c : report.categories) {
      out << to_string(c.codec) << ',' << to_string(c.level) << ',' << c.setup_number << ','
          << to_string(c.profile.resolution) << ',' << c.profile.crf << ',' << fixed(c.ssim, 4)
          << ',' << fixed(c.compressed_kbps, 2) << ',' << fixed(c.original_kbps, 2) << ','
          << format_percent(c.segment_saving) << '\n';
    }
    return out.str();
  }
  if (format == ReportFormat::kTotalsCsv) {
    std::ostringstream out;
    out << "codec,idle_pct,total_saving_pct\n";
    for (const SurgerySavings& s : report.surgery) {
      out << to_string(s.codec) << ',' << format_percent(s.idle_fraction) << ','
          << format_percent(s.total_saving) << '\n';
    }
    return out.str();
  }

  nlohmann::ordered_json doc;
  doc["baseline"] = {{"codec", "h264"},
                     {"crf_min", baseline::kHospitalCrfMin},
                     {"crf_max", baseline::kHospitalCrfMax},
                     {"reference_mib", baseline::kReferenceFileMiB}};
  doc["categories"] = nlohmann::ordered_json::array();
  for (const CategorySavings& c : report.categories) {
    doc["categories"].push_back({{"codec", std::string(to_string(c.codec))},
                                 {"relevance", std::string(to_string(c.level))},
                                 {"setup", c.setup_number},
                                 {"width", c.profile.resolution.width},
                                 {"height", c.profile.resolution.height},
                                 {"crf", c.profile.crf},
                                 {"ssim", c.ssim},
                                 {"original_kbps", c.original_kbps},
                                 {"compressed_kbps", c.compressed_kbps},
                                 {"segment_saving", c.segment_saving},
                                 {"segment_saving_pct", format_percent(c.segment_saving)}});
  }
  doc["surgery"] = nlohmann::ordered_json::array();
  for (const SurgerySavings& s : report.surgery) {
    doc["surgery"].push_back({{"codec", std::string(to_string(s.codec))},
                              {"idle_fraction", s.idle_fraction},
                              {"total_saving", s.total_saving},
                              {"total_saving_pct", format_percent(s.total_saving)}});
  }
  if (report.measured) {
    const MeasuredSavings& m = *report.measured;
    doc["measured"] = {{"baseline_crf", m.baseline_crf},
                       {"baseline_bytes", m.baseline_bytes},
                       {"archive_bytes", m.archive_bytes},
                       {"source_seconds", m.source_seconds},
                       {"planned_seconds", m.planned_seconds},
                       {"saving", m.saving},
                       {"saving_pct", format_percent(m.saving)}};
  }
  return doc.dump(2) + "\n";
}

SavingsReport report_from_json(std::string_view text) {
  SavingsReport report;
  try {
    auto doc = nlohmann::json::parse(text);
    for (const auto& c : doc.at("categories")) {
      auto level = parse_relevance_level(c.at("relevance").get<std::string>());
      auto codec = parse_codec(c.at("codec").get<std::string>());
      if (!level || !codec) throw Error(ErrorKind::kParse, "report: bad relevance or codec");
      CategorySavings row;
      row.level = *level;
      row.codec = *codec;
      row.setup_number = c.at("setup").get<int>();
      row.profile = {*codec, c.at("crf").get<int>(),
                     {c.at("width").get<int>(), c.at("height").get<int>()}};
      row.ssim = c.at("ssim").get<double>();
      row.original_kbps = c.at("original_kbps").get<double>();
      row.compressed_kbps = c.at("compressed_kbps").get<double>();
      row.segment_saving = c.at("segment_saving").get<double>();
      report.categories.push_back(row);
    }
    for (const auto& s : doc.at("surgery")) {
      auto codec = parse_codec(s.at("codec").get<std::string>());
      if (!codec) throw Error(ErrorKind::kParse, "report: bad codec");
      report.surgery.push_back(
          {*codec, s.at("idle_fraction").get<double>(), s.at("total_saving").get<double>()});
    }
    if (doc.contains("measured")) {
      const auto& m = doc.at("measured");
      report.measured = MeasuredSavings{m.at("baseline_crf").get<int>(),
                                        m.at("baseline_bytes").get<std::uint64_t>(),
                                        m.at("archive_bytes").get<std::uint64_t>(),
                                        m.at("source_seconds").get<double>(),
                                        m.at("planned_seconds").get<double>(),
                                        m.at("saving").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("report: ") + e.what());
  }
  return report;
}

TimelineDistribution relevance_distribution(const PhaseTimeline& timeline,
                                            const RelevanceTable& table, Purpose purpose) {
  std::array<FrameIndex, 4> frames{};
  for (const PhaseSegment& s : timeline.segments()) {
    frames[static_cast<size_t>(table.level(s.label, purpose))] += s.frames();
  }
  TimelineDistribution d;
  const double total = static_cast<double>(timeline.total_frames());
  for (size_t i = 0; i < frames.size(); ++i) d.fractions[i] = frames[i] / total;
  return d;
}

std::string timeline_plot_csv(const PhaseTimeline& timeline, const RelevanceTable& table,
                              Purpose purpose) {
  std::ostringstream out;
  out << "segment,label,relevance,frames\n";
  int index = 0;
  for (const PhaseSegment& s : timeline.segments()) {
    out << index++ << ',' << to_string(s.label) << ',' << to_string(table.level(s.label, purpose))
        << ',' << s.frames() << '\n';
  }
  return out.str();
}

namespace {

double sorted_quantile(const std::vector<double>& sorted, double p) {
  const double h = (sorted.size() - 1) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

void require_pairs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::kValidation, "series lengths differ");
  if (x.size() < 2) throw Error(ErrorKind::kValidation, "correlation needs at least two samples");
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (i + j) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::kValidation, "quantile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile(sorted, p);
}

BoxplotStats boxplot(std::span<const double> values, WhiskerRule rule) {
  if (values.empty()) throw Error(ErrorKind::kValidation, "boxplot of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  BoxplotStats b;
  b.q1 = sorted_quantile(sorted, 0.25);
  b.median = sorted_quantile(sorted, 0.5);
  b.q3 = sorted_quantile(sorted, 0.75);
  b.lower_whisker = sorted.front();
  b.upper_whisker = sorted.back();
  if (rule == WhiskerRule::kTukey) {
    const double fence = 1.5 * (b.q3 - b.q1);
    for (double v : sorted) {
      if (v >= b.q1 - fence) {
        b.lower_whisker = std::min(v, b.q1);
        break;
      }
    }
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
      if (*it <= b.q3 + fence) {
        b.upper_whisker = std::max(*it, b.q3);
        break;
      }
    }
  }
  return b;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) {
    throw Error(ErrorKind::kValidation, "correlation is undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double experience_correlation(std::span<const ParticipantProfile> participants,
                              std::span<const double> chosen_ssim, CorrelationMethod method) {
  std::vector<double> years;
  years.reserve(participants.size());
  for (const auto& p : participants) years.push_back(p.experience_years);
  return method == CorrelationMethod::kSpearman ? spearman(years, chosen_ssim)
                                                : pearson(years, chosen_ssim);
}

}  // namespace relcomp
