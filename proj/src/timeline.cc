#include "relcomp/timeline.h"

#include <algorithm>
#include <sstream>

#include "relcomp/csv.h"
#include "relcomp/error.h"

namespace relcomp {
namespace {

constexpr std::array<std::string_view, 13> kLabelNames = {
    "Incision",          "ViscoelasticI",          "Capsulorhexis",
    "Hydrodissection",   "Phaco",                  "IrrigationAspiration",
    "CapsulePolishing",  "ViscoelasticII",         "Implantation",
    "ViscoelasticAspiration", "SealingOfIncisions", "AntibioticInjection",
    "Idle",
};

std::string range_text(FrameIndex start, FrameIndex end) {
  return "[" + std::to_string(start) + "," + std::to_string(end) + ")";
}

}  // namespace

std::string_view to_string(PhaseLabel label) {
  return kLabelNames[static_cast<size_t>(label)];
}

std::optional<PhaseLabel> parse_phase_label(std::string_view text) {
  for (size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == text) return static_cast<PhaseLabel>(i);
  }
  return std::nullopt;
}

std::string_view to_string(Purpose purpose) {
  switch (purpose) {
    case Purpose::kTeaching: return "teaching";
    case Purpose::kDocumentation: return "documentation";
    case Purpose::kResearch: return "research";
  }
  return "?";
}

std::string_view to_string(RelevanceLevel level) {
  switch (level) {
    case RelevanceLevel::kNotRelevant: return "N";
    case RelevanceLevel::kSomewhatRelevant: return "SR";
    case RelevanceLevel::kRelevant: return "R";
    case RelevanceLevel::kHighlyRelevant: return "HR";
  }
  return "?";
}

std::optional<RelevanceLevel> parse_relevance_level(std::string_view text) {
  if (text == "N") return RelevanceLevel::kNotRelevant;
  if (text == "SR") return RelevanceLevel::kSomewhatRelevant;
  if (text == "R") return RelevanceLevel::kRelevant;
  if (text == "HR") return RelevanceLevel::kHighlyRelevant;
  return std::nullopt;
}

RelevanceTable RelevanceTable::clinical_default() {
  using L = RelevanceLevel;
  constexpr L HR = L::kHighlyRelevant, R = L::kRelevant, SR = L::kSomewhatRelevant;
  RelevanceTable table;
  // teaching, documentation, research
  table.levels_ = {{
      {R, SR, SR},    // Incision
      {SR, SR, SR},   // Viscoelastic I
      {HR, R, R},     // Capsulorhexis
      {HR, SR, SR},   // Hydrodissection
      {HR, R, R},     // Phaco
      {R, SR, SR},    // Irrigation/aspiration
      {SR, SR, SR},   // Capsule polishing
      {SR, SR, SR},   // Viscoelastic II
      {R, R, R},      // Implantation
      {R, SR, SR},    // Viscoelastic aspiration
      {R, SR, SR},    // Sealing of incisions
      {R, R, R},      // Antibiotic injection
  }};
  return table;
}

RelevanceLevel RelevanceTable::level(PhaseLabel label, Purpose purpose) const {
  if (!is_surgical(label)) return RelevanceLevel::kNotRelevant;
  return levels_[static_cast<size_t>(label)][static_cast<size_t>(purpose)];
}

void RelevanceTable::set(PhaseLabel label, Purpose purpose, RelevanceLevel level) {
  if (!is_surgical(label)) {
    throw Error(ErrorKind::kValidation, "Idle relevance cannot be overridden");
  }
  levels_[static_cast<size_t>(label)][static_cast<size_t>(purpose)] = level;
}

RelevanceTable apply_relevance_overrides(std::string_view csv_text, RelevanceTable base) {
  csv::Table doc = csv::parse(csv_text);
  csv::expect_header(doc, {"label", "teaching", "documentation", "research"});
  for (size_t r = 0; r < doc.rows.size(); ++r) {
    const csv::Row& row = doc.rows[r];
    const std::string line = "line " + std::to_string(doc.lines[r]) + ": ";
    auto label = parse_phase_label(row[0]);
    if (!label) throw Error(ErrorKind::kParse, line + "unknown label '" + row[0] + "'");
    if (!is_surgical(*label)) {
      throw Error(ErrorKind::kValidation, line + "Idle relevance cannot be overridden");
    }
    for (size_t p = 0; p < kAllPurposes.size(); ++p) {
      auto level = parse_relevance_level(row[p + 1]);
      if (!level) {
        throw Error(ErrorKind::kParse, line + "unknown relevance level '" + row[p + 1] + "'");
      }
      base.set(*label, kAllPurposes[p], *level);
    }
  }
  return base;
}

RelevanceLevel effective_relevance(PhaseLabel label, const RelevanceTable& table) {
  RelevanceLevel best = RelevanceLevel::kNotRelevant;
  for (Purpose p : kAllPurposes) best = std::max(best, table.level(label, p));
  return best;
}

PhaseTimeline::PhaseTimeline(VideoGeometry geometry, std::vector<PhaseSegment> segments)
    : geometry_(geometry), segments_(std::move(segments)) {
  if (!(geometry_.fps > 0)) throw Error(ErrorKind::kValidation, "fps must be positive");
  if (geometry_.width <= 0 || geometry_.height <= 0) {
    throw Error(ErrorKind::kValidation, "frame dimensions must be positive");
  }
  if (segments_.empty()) throw Error(ErrorKind::kValidation, "timeline has no segments");
  FrameIndex expected_start = 0;
  for (size_t i = 0; i < segments_.size(); ++i) {
    const PhaseSegment& s = segments_[i];
    if (s.start_frame >= s.end_frame) {
      throw Error(ErrorKind::kValidation,
                  "out-of-order range " + range_text(s.start_frame, s.end_frame));
    }
    if (s.start_frame != expected_start) {
      throw Error(ErrorKind::kValidation, "segment " + range_text(s.start_frame, s.end_frame) +
                                              " is not contiguous with frame " +
                                              std::to_string(expected_start));
    }
    if (i > 0 && segments_[i - 1].label == s.label) {
      throw Error(ErrorKind::kValidation,
                  "adjacent segments share label " + std::string(to_string(s.label)));
    }
    expected_start = s.end_frame;
  }
}

FrameIndex PhaseTimeline::total_frames() const { return segments_.back().end_frame; }

PhaseTimeline parse_annotations(std::string_view csv_text, const AnnotationOptions& options) {
  csv::Table doc = csv::parse(csv_text);
  csv::expect_header(doc, {"label", "start_frame", "end_frame"});
  if (doc.rows.empty()) throw Error(ErrorKind::kParse, "empty document");

  std::vector<PhaseSegment> segments;
  FrameIndex cursor = 0;
  for (size_t r = 0; r < doc.rows.size(); ++r) {
    const csv::Row& row = doc.rows[r];
    const int line_no = doc.lines[r];
    const std::string line = "line " + std::to_string(line_no) + ": ";
    auto label = parse_phase_label(row[0]);
    if (!label || !is_surgical(*label)) {
      throw Error(ErrorKind::kParse, line + "unknown label '" + row[0] + "'");
    }
    FrameIndex start = csv::to_int(row[1], line_no);
    FrameIndex end = csv::to_int(row[2], line_no);
    if (start < 0 || start >= end) {
      throw Error(ErrorKind::kValidation,
                  line + "out-of-order range " + range_text(start, end));
    }
    if (start < cursor) {
      throw Error(ErrorKind::kValidation,
                  line + "overlapping range " + range_text(start, end));
    }
    if (start > cursor) segments.push_back({PhaseLabel::kIdle, cursor, start});
    segments.push_back({*label, start, end});
    cursor = end;
  }
  if (options.total_frames && *options.total_frames > cursor) {
    segments.push_back({PhaseLabel::kIdle, cursor, *options.total_frames});
  } else if (options.total_frames && *options.total_frames < cursor) {
    throw Error(ErrorKind::kValidation,
                "annotations end at frame " + std::to_string(cursor) + " beyond the video's " +
                    std::to_string(*options.total_frames) + " frames");
  }
  return PhaseTimeline(options.geometry, std::move(segments));
}

std::string serialize_annotations(const PhaseTimeline& timeline) {
  std::ostringstream out;
  out << "label,start_frame,end_frame\n";
  for (const PhaseSegment& s : timeline.segments()) {
    if (!is_surgical(s.label)) continue;
    out << to_string(s.label) << ',' << s.start_frame << ',' << s.end_frame << '\n';
  }
  return out.str();
}

std::string_view to_string(IdlePolicy policy) {
  switch (policy) {
    case IdlePolicy::kDrop: return "drop";
    case IdlePolicy::kMergePreceding: return "merge-preceding";
    case IdlePolicy::kMergeSubsequent: return "merge-subsequent";
  }
  return "?";
}

std::optional<IdlePolicy> parse_idle_policy(std::string_view text) {
  if (text == "drop") return IdlePolicy::kDrop;
  if (text == "merge-preceding") return IdlePolicy::kMergePreceding;
  if (text == "merge-subsequent") return IdlePolicy::kMergeSubsequent;
  return std::nullopt;
}

FrameIndex EncodePlan::planned_frames() const {
  FrameIndex sum = 0;
  for (const auto& s : segments) sum += s.frames();
  return sum;
}

EncodePlan plan_segments(const PhaseTimeline& timeline, const RelevanceTable& table,
                         IdlePolicy policy) {
  EncodePlan plan;
  plan.idle_policy = policy;
  plan.total_frames = timeline.total_frames();
  plan.geometry = timeline.geometry();

  std::vector<PlannedSegment> planned;
  // Irrelevant segments seen before the first relevant one (MergePreceding)
  // or since the last relevant one (MergeSubsequent).
  std::vector<PhaseSegment> pending;

  auto absorb_front = [](PlannedSegment& target, const std::vector<PhaseSegment>& gaps) {
    if (gaps.empty()) return;
    target.start_frame = gaps.front().start_frame;
    std::vector<PhaseLabel> sources;
    for (const auto& g : gaps) sources.push_back(g.label);
    sources.insert(sources.end(), target.sources.begin(), target.sources.end());
    target.sources = std::move(sources);
  };
  auto absorb_back = [](PlannedSegment& target, const PhaseSegment& gap) {
    target.end_frame = gap.end_frame;
    target.sources.push_back(gap.label);
  };

  for (const PhaseSegment& seg : timeline.segments()) {
    const RelevanceLevel level = effective_relevance(seg.label, table);
    if (level != RelevanceLevel::kNotRelevant) {
      PlannedSegment next{seg.start_frame, seg.end_frame, level, {seg.label}};
      absorb_front(next, pending);
      pending.clear();
      planned.push_back(std::move(next));
      continue;
    }
    switch (policy) {
      case IdlePolicy::kDrop:
        plan.dropped_frames += seg.frames();
        break;
      case IdlePolicy::kMergePreceding:
        if (planned.empty()) {
          pending.push_back(seg);
        } else {
          absorb_back(planned.back(), seg);
        }
        break;
      case IdlePolicy::kMergeSubsequent:
        pending.push_back(seg);
        break;
    }
  }
  if (planned.empty()) throw Error(ErrorKind::kValidation, "no relevant content");
  // Trailing irrelevant content under MergeSubsequent has no successor.
  for (const PhaseSegment& gap : pending) absorb_back(planned.back(), gap);

  for (PlannedSegment& seg : planned) {
    if (!plan.segments.empty()) {
      PlannedSegment& prev = plan.segments.back();
      if (prev.end_frame == seg.start_frame && prev.level == seg.level) {
        prev.end_frame = seg.end_frame;
        prev.sources.insert(prev.sources.end(), seg.sources.begin(), seg.sources.end());
        continue;
      }
    }
    plan.segments.push_back(std::move(seg));
  }
  return plan;
}

double idle_fraction(const PhaseTimeline& timeline) {
  FrameIndex idle = 0;
  for (const PhaseSegment& s : timeline.segments()) {
    if (!is_surgical(s.label)) idle += s.frames();
  }
  return static_cast<double>(idle) / static_cast<double>(timeline.total_frames());
}

}  // namespace relcomp
