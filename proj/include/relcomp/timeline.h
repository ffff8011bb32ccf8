#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relcomp {

using FrameIndex = std::int64_t;

// The twelve phases of a regular cataract surgery plus the idle gaps
// between them. Declaration order is the surgical order.
enum class PhaseLabel {
  kIncision,
  kViscoelasticI,
  kCapsulorhexis,
  kHydrodissection,
  kPhaco,
  kIrrigationAspiration,
  kCapsulePolishing,
  kViscoelasticII,
  kImplantation,
  kViscoelasticAspiration,
  kSealingOfIncisions,
  kAntibioticInjection,
  kIdle,
};

inline constexpr int kSurgicalPhaseCount = 12;

std::string_view to_string(PhaseLabel label);
std::optional<PhaseLabel> parse_phase_label(std::string_view text);
constexpr bool is_surgical(PhaseLabel label) { return label != PhaseLabel::kIdle; }

enum class Purpose { kTeaching, kDocumentation, kResearch };
inline constexpr std::array<Purpose, 3> kAllPurposes = {
    Purpose::kTeaching, Purpose::kDocumentation, Purpose::kResearch};
std::string_view to_string(Purpose purpose);

// Ordered: comparisons and std::max are meaningful.
enum class RelevanceLevel {
  kNotRelevant = 0,
  kSomewhatRelevant = 1,
  kRelevant = 2,
  kHighlyRelevant = 3,
};

// Short forms: N, SR, R, HR.
std::string_view to_string(RelevanceLevel level);
std::optional<RelevanceLevel> parse_relevance_level(std::string_view text);

// Per-phase, per-purpose clinical relevance. Idle is not stored; it is
// NotRelevant for every purpose and cannot be overridden.
class RelevanceTable {
 public:
  // Clinician survey medians for the twelve regular phases.
  static RelevanceTable clinical_default();

  RelevanceLevel level(PhaseLabel label, Purpose purpose) const;

  // Throws Error(kValidation) for Idle.
  void set(PhaseLabel label, Purpose purpose, RelevanceLevel level);

  bool operator==(const RelevanceTable&) const = default;

 private:
  std::array<std::array<RelevanceLevel, 3>, kSurgicalPhaseCount> levels_{};
};

// Applies an override document (`label,teaching,documentation,research`,
// values in {N,SR,R,HR}) on top of `base`. Rows may cover any subset of the
// surgical phases; Idle rows are rejected.
RelevanceTable apply_relevance_overrides(std::string_view csv_text, RelevanceTable base);

// Max over the three purposes; Idle is always NotRelevant.
RelevanceLevel effective_relevance(PhaseLabel label, const RelevanceTable& table);

struct PhaseSegment {
  PhaseLabel label;
  FrameIndex start_frame;  // inclusive
  FrameIndex end_frame;    // exclusive

  FrameIndex frames() const { return end_frame - start_frame; }
  bool operator==(const PhaseSegment&) const = default;
};

struct VideoGeometry {
  double fps = 0;
  int width = 0;
  int height = 0;
};

// Contiguous, gap-free sequence of segments starting at frame 0. Adjacent
// segments never share a label.
class PhaseTimeline {
 public:
  // Throws Error(kValidation) when any invariant is violated.
  PhaseTimeline(VideoGeometry geometry, std::vector<PhaseSegment> segments);

  double fps() const { return geometry_.fps; }
  int frame_width() const { return geometry_.width; }
  int frame_height() const { return geometry_.height; }
  const VideoGeometry& geometry() const { return geometry_; }
  const std::vector<PhaseSegment>& segments() const { return segments_; }
  FrameIndex total_frames() const;
  double duration_seconds() const { return total_frames() / fps(); }

 private:
  VideoGeometry geometry_;
  std::vector<PhaseSegment> segments_;
};

struct AnnotationOptions {
  VideoGeometry geometry{60.0, 1024, 768};
  // When set and larger than the last annotated end frame, the remainder of
  // the video is materialized as a trailing Idle segment.
  std::optional<FrameIndex> total_frames;
};

// Parses `label,start_frame,end_frame` rows. Gaps before, between and (with
// total_frames) after annotated phases become Idle segments.
PhaseTimeline parse_annotations(std::string_view csv_text, const AnnotationOptions& options);

// Canonical form: header plus one row per surgical segment, Idle implicit.
std::string serialize_annotations(const PhaseTimeline& timeline);

enum class IdlePolicy { kDrop, kMergePreceding, kMergeSubsequent };
std::string_view to_string(IdlePolicy policy);
std::optional<IdlePolicy> parse_idle_policy(std::string_view text);

struct PlannedSegment {
  FrameIndex start_frame;
  FrameIndex end_frame;
  RelevanceLevel level;
  // Timeline labels covered by this segment, in order. Contains Idle when an
  // idle gap was merged in.
  std::vector<PhaseLabel> sources;

  FrameIndex frames() const { return end_frame - start_frame; }
  bool operator==(const PlannedSegment&) const = default;
};

struct EncodePlan {
  std::vector<PlannedSegment> segments;
  IdlePolicy idle_policy = IdlePolicy::kDrop;
  FrameIndex dropped_frames = 0;
  FrameIndex total_frames = 0;
  VideoGeometry geometry;

  FrameIndex planned_frames() const;
};

// Irrelevant content (Idle, or a surgical phase whose effective level is
// NotRelevant) is dropped or merged according to `policy`; contiguous
// planned segments with equal level are coalesced.
// Throws Error(kValidation, "no relevant content") when nothing remains.
EncodePlan plan_segments(const PhaseTimeline& timeline, const RelevanceTable& table,
                         IdlePolicy policy = IdlePolicy::kDrop);

double idle_fraction(const PhaseTimeline& timeline);

}  // namespace relcomp
