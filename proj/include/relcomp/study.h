#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relcomp/profiles.h"
#include "relcomp/timeline.h"

namespace relcomp {

enum class Sector { kPrivate, kPublic, kBoth };

struct ParticipantProfile {
  std::string id;
  double experience_years = 0;
  Sector sector = Sector::kPrivate;
  std::set<Purpose> activities;
};

// How a verdict moves the search interval.
//
// kWorstAcceptable: an acceptable setup raises the lower bound, so the search
// continues toward worse quality and converges on the worst setup the rater
// still accepts.
// kLiteral: an acceptable setup lowers the upper bound (the boundary-update
// wording taken at face value with 1 = best); converges on the best setup
// the rater rejects, or the first setup. Kept for methodological comparison.
enum class BoundaryRule { kWorstAcceptable, kLiteral };
std::string_view to_string(BoundaryRule rule);

// Dichotomous search over a quality-ordered catalog of N setups for one
// participant and one relevance category. Bounds are exclusive: lo = 0 and
// hi = N + 1 are sentinels.
class RatingSession {
 public:
  // Throws Error(kValidation) for an empty catalog or category N.
  RatingSession(std::string participant, RelevanceLevel category, std::string catalog_id,
                int catalog_size, BoundaryRule rule = BoundaryRule::kWorstAcceptable);

  // Throws Error(kGone) when the session is already done.
  void record_verdict(bool acceptable);

  const std::string& participant() const { return participant_; }
  RelevanceLevel category() const { return category_; }
  const std::string& catalog_id() const { return catalog_id_; }
  int catalog_size() const { return catalog_size_; }
  BoundaryRule rule() const { return rule_; }
  int lo() const { return lo_; }
  int hi() const { return hi_; }
  // Setup under review; nullopt once done.
  std::optional<int> current() const { return current_; }
  const std::vector<std::pair<int, bool>>& history() const { return history_; }
  bool done() const { return hi_ - lo_ == 1; }
  // 1-based number of the verdict being requested (history size + 1).
  int step() const { return static_cast<int>(history_.size()) + 1; }
  // Once done: worst acceptable setup, or 0 when nothing was acceptable.
  std::optional<int> result() const;
  bool none_acceptable() const { return done() && result() == 0; }
  // Bumped on every verdict; used for optimistic concurrency.
  int version() const { return version_; }

  std::string to_json() const;
  static RatingSession from_json(std::string_view text);

 private:
  RatingSession() = default;
  void advance();

  std::string participant_;
  RelevanceLevel category_ = RelevanceLevel::kHighlyRelevant;
  std::string catalog_id_;
  int catalog_size_ = 0;
  BoundaryRule rule_ = BoundaryRule::kWorstAcceptable;
  int lo_ = 0;
  int hi_ = 0;
  std::optional<int> current_;
  std::vector<std::pair<int, bool>> history_;
  int version_ = 0;
};

// ceil(log2(N + 1)): verdicts needed in the worst case.
int max_search_steps(int catalog_size);

struct CategoryThreshold {
  RelevanceLevel category = RelevanceLevel::kHighlyRelevant;
  int setup_number = 0;
  double ssim = 0;
};

struct ThresholdDerivation {
  CategoryThreshold threshold;
  int used = 0;
  int excluded_none_acceptable = 0;
};

// Median of the per-participant result setups, floored; NoneAcceptable
// results (0) are excluded and counted. Throws Error(kValidation) when no
// usable result remains, Error(kNotFound) if the setup is not in the catalog.
ThresholdDerivation threshold_from_ratings(RelevanceLevel category,
                                           const std::vector<int>& result_setups,
                                           const SetupCatalog& catalog);

struct OptimalChoice {
  int setup_number = 0;
  EncodingProfile profile;
  double ssim = 0;
  double bitrate_kbps = 0;
};

struct Selection {
  std::map<CodecFamily, OptimalChoice> per_codec;
  // Codecs in scope with no entry at or above the threshold.
  std::vector<CodecFamily> omitted;
};

// Per codec in the catalog's scope: lowest bitrate among entries whose SSIM
// is at least the threshold's. Ties: higher SSIM, then lower setup number.
Selection select_optimal(const SetupCatalog& catalog, const CategoryThreshold& threshold);

struct StudyResult {
  std::string participant;
  RelevanceLevel category = RelevanceLevel::kHighlyRelevant;
  int result_setup = 0;  // 0 = none acceptable
  std::optional<double> result_ssim;
};

// `participant,category,result_setup,result_ssim`; NoneAcceptable rows carry
// `none` and an empty SSIM.
std::string results_to_csv(const std::vector<StudyResult>& results);
std::vector<StudyResult> results_from_csv(std::string_view text);

}  // namespace relcomp
