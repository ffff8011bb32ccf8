#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "relcomp/study.h"

namespace relcomp {

// Rating sessions persisted as one JSON document per session under a
// directory, rewritten after every verdict. All methods are thread-safe.
class SessionStore {
 public:
  // Loads existing sessions from `directory` (created if missing).
  explicit SessionStore(std::filesystem::path directory);

  // Throws Error(kConflict) if the participant has an open session for the
  // category.
  std::string create(const std::string& participant, RelevanceLevel category,
                     const std::string& catalog_id, int catalog_size,
                     BoundaryRule rule = BoundaryRule::kWorstAcceptable);

  // Applies a verdict iff `expected_version` matches. Throws Error(kNotFound),
  // Error(kGone) for a finished session, Error(kConflict) on a stale version.
  RatingSession apply_verdict(const std::string& id, bool acceptable, int expected_version);

  std::optional<RatingSession> get(const std::string& id) const;
  // (id, session) pairs in id order.
  std::vector<std::pair<std::string, RatingSession>> list() const;

 private:
  void persist(const std::string& id, const RatingSession& session) const;

  std::filesystem::path directory_;
  mutable std::mutex mutex_;
  std::map<std::string, RatingSession> sessions_;
  int next_id_ = 1;
};

}  // namespace relcomp
