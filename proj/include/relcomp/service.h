#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relcomp/profiles.h"
#include "relcomp/session_store.h"

namespace relcomp {

struct CatalogSource {
  std::string id;
  std::filesystem::path catalog_csv;
  // Pre-encoded clip per setup, named `<profile_slug>.<ext>`.
  std::filesystem::path clips_dir;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "relcomp-data";
  std::vector<CatalogSource> catalogs;
  std::optional<std::filesystem::path> static_dir;
  // When non-empty every API request must carry `X-Participant-Token`.
  std::string token;

  // {"host", "port", "data_dir", "static_dir", "token",
  //  "catalogs": [{"id", "catalog", "clips"}]}; relative paths resolve
  // against `base_dir`.
  static ServiceConfig from_json(std::string_view text, const std::filesystem::path& base_dir);
};

// HTTP front of the rating protocol:
//   POST /sessions                 {participant, category, catalog_id}
//   GET  /sessions/{id}
//   POST /sessions/{id}/verdict    {acceptable, version}
//   GET  /sessions/{id}/clip       current clip, byte ranges supported
//   GET  /results?category=HR      results CSV
// Responses never carry the search bounds or the SSIM of the clip under
// review.
class RatingService {
 public:
  explicit RatingService(ServiceConfig config);
  ~RatingService();
  RatingService(const RatingService&) = delete;
  RatingService& operator=(const RatingService&) = delete;

  // Binds the configured host/port (port 0 picks a free one) and returns
  // the bound port.
  int bind();
  // Serves until stop(); call after bind().
  void listen();
  // bind() + listen() on a background thread; returns the bound port.
  int start();
  void stop();

  const SessionStore& store() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace relcomp
