#include "relcomp/session_store.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "relcomp/error.h"

namespace fs = std::filesystem;

namespace relcomp {
namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

SessionStore::SessionStore(fs::path directory) : directory_(std::move(directory)) {
  fs::create_directories(directory_);
  for (const auto& entry : fs::directory_iterator(directory_)) {
    if (entry.path().extension() != ".json") continue;
    const std::string id = entry.path().stem().string();
    sessions_.emplace(id, RatingSession::from_json(read_file(entry.path())));
    if (id.starts_with("s")) {
      try {
        next_id_ = std::max(next_id_, std::stoi(id.substr(1)) + 1);
      } catch (const std::exception&) {
      }
    }
  }
}

void SessionStore::persist(const std::string& id, const RatingSession& session) const {
  // Write-then-rename so a crash never leaves a truncated document.
  const fs::path target = directory_ / (id + ".json");
  const fs::path temp = directory_ / (id + ".json.tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    out << session.to_json();
    if (!out) throw Error(ErrorKind::kInput, "cannot write session " + target.string());
  }
  fs::rename(temp, target);
}

std::string SessionStore::create(const std::string& participant, RelevanceLevel category,
                                 const std::string& catalog_id, int catalog_size,
                                 BoundaryRule rule) {
  std::lock_guard lock(mutex_);
  for (const auto& [id, s] : sessions_) {
    if (s.participant() == participant && s.category() == category && !s.done()) {
      throw Error(ErrorKind::kConflict, "participant " + participant + " already has open session " +
                                            id + " for category " +
                                            std::string(to_string(category)));
    }
  }
  RatingSession session(participant, category, catalog_id, catalog_size, rule);
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%06d", next_id_++);
  const std::string id = buf;
  persist(id, session);
  sessions_.emplace(id, std::move(session));
  return id;
}

RatingSession SessionStore::apply_verdict(const std::string& id, bool acceptable,
                                          int expected_version) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorKind::kNotFound, "no session " + id);
  if (it->second.done()) throw Error(ErrorKind::kGone, "session " + id + " is complete");
  if (it->second.version() != expected_version) {
    throw Error(ErrorKind::kConflict, "stale version " + std::to_string(expected_version) +
                                          ", session is at " +
                                          std::to_string(it->second.version()));
  }
  RatingSession updated = it->second;
  updated.record_verdict(acceptable);
  persist(id, updated);
  it->second = updated;
  return updated;
}

std::optional<RatingSession> SessionStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<std::string, RatingSession>> SessionStore::list() const {
  std::lock_guard lock(mutex_);
  return {sessions_.begin(), sessions_.end()};
}

}  // namespace relcomp
