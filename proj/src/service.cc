#include "relcomp/service.h"

#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "relcomp/error.h"
#include "relcomp/quality.h"
#include "relcomp/study.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace relcomp {
namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kGone: return 410;
    case ErrorKind::kParse:
    case ErrorKind::kValidation: return 400;
    case ErrorKind::kInput:
    case ErrorKind::kBackend: return 500;
  }
  return 500;
}

const char* content_type_for(const fs::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".mkv") return "video/x-matroska";
  return "application/octet-stream";
}

struct LoadedCatalog {
  SetupCatalog catalog;
  fs::path clips_dir;
};

}  // namespace

ServiceConfig ServiceConfig::from_json(std::string_view text, const fs::path& base_dir) {
  ServiceConfig c;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    auto doc = json::parse(text);
    c.host = doc.value("host", c.host);
    c.port = doc.value("port", c.port);
    c.data_dir = resolve(doc.value("data_dir", c.data_dir.string()));
    if (doc.contains("static_dir")) c.static_dir = resolve(doc.at("static_dir").get<std::string>());
    c.token = doc.value("token", "");
    for (const auto& cat : doc.at("catalogs")) {
      c.catalogs.push_back({cat.at("id").get<std::string>(),
                            resolve(cat.at("catalog").get<std::string>()),
                            resolve(cat.at("clips").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("service config: ") + e.what());
  }
  return c;
}

struct RatingService::Impl {
  ServiceConfig config;
  std::map<std::string, LoadedCatalog> catalogs;
  SessionStore store;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit Impl(ServiceConfig c) : config(std::move(c)), store(config.data_dir / "sessions") {
    for (const CatalogSource& src : config.catalogs) {
      catalogs.emplace(src.id,
                       LoadedCatalog{catalog_from_csv(read_file(src.catalog_csv)), src.clips_dir});
    }
    routes();
  }

  std::optional<fs::path> clip_path(const LoadedCatalog& cat, int setup) const {
    const std::string slug = profile_slug(cat.catalog.at(setup).profile);
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(cat.clips_dir, ec)) {
      if (entry.path().stem() == slug) return entry.path();
    }
    return std::nullopt;
  }

  json resource(const std::string& id, const RatingSession& s) const {
    json r;
    r["id"] = id;
    r["participant"] = s.participant();
    r["category"] = std::string(to_string(s.category()));
    r["catalog_id"] = s.catalog_id();
    r["step"] = s.done() ? static_cast<int>(s.history().size()) : s.step();
    r["max_steps"] = max_search_steps(s.catalog_size());
    r["done"] = s.done();
    r["version"] = s.version();
    if (s.current()) {
      r["current_setup"] = *s.current();
      r["clip_url"] = "/sessions/" + id + "/clip?v=" + std::to_string(s.version());
    } else {
      r["current_setup"] = nullptr;
      r["clip_url"] = nullptr;
    }
    if (auto result = s.result()) {
      r["result"] = *result > 0 ? json(*result) : json(nullptr);
      r["none_acceptable"] = *result == 0;
    } else {
      r["result"] = nullptr;
    }
    return r;
  }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
  }

  bool authorized(const httplib::Request& req, httplib::Response& res) const {
    if (config.token.empty() || req.get_header_value("X-Participant-Token") == config.token) {
      return true;
    }
    send_error(res, 401, "missing or wrong participant token");
    return false;
  }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, status_for(e.kind()), e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, e.what());
      }
    };
  }

  void routes() {
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = json::parse(req.body);
      const std::string participant = body.at("participant").get<std::string>();
      const auto category = parse_relevance_level(body.at("category").get<std::string>());
      if (!category || *category == RelevanceLevel::kNotRelevant) {
        throw Error(ErrorKind::kValidation, "category must be HR, R or SR");
      }
      const std::string catalog_id = body.at("catalog_id").get<std::string>();
      auto cat = catalogs.find(catalog_id);
      if (cat == catalogs.end()) throw Error(ErrorKind::kNotFound, "unknown catalog " + catalog_id);
      const std::string id =
          store.create(participant, *category, catalog_id, cat->second.catalog.size());
      send_json(res, 201, resource(id, *store.get(id)));
    }));

    server.Get(R"(/sessions/([^/]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 auto s = store.get(id);
                 if (!s) throw Error(ErrorKind::kNotFound, "no session " + id);
                 send_json(res, 200, resource(id, *s));
               }));

    server.Post(R"(/sessions/([^/]+)/verdict)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const json body = json::parse(req.body);
                  const RatingSession s = store.apply_verdict(
                      id, body.at("acceptable").get<bool>(), body.at("version").get<int>());
                  send_json(res, 200, resource(id, s));
                }));

    server.Get(R"(/sessions/([^/]+)/clip)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 auto s = store.get(id);
                 if (!s) throw Error(ErrorKind::kNotFound, "no session " + id);
                 if (!s->current()) throw Error(ErrorKind::kGone, "session " + id + " is complete");
                 const LoadedCatalog& cat = catalogs.at(s->catalog_id());
                 auto path = clip_path(cat, *s->current());
                 if (!path) throw Error(ErrorKind::kNotFound, "clip not available");
                 // Served from memory; httplib answers Range requests with 206.
                 res.set_content(read_file(*path), content_type_for(*path));
                 res.set_header("Cache-Control", "no-store");
               }));

    server.Get("/results", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::optional<RelevanceLevel> filter;
      if (req.has_param("category")) {
        filter = parse_relevance_level(req.get_param_value("category"));
        if (!filter) throw Error(ErrorKind::kValidation, "unknown category");
      }
      std::vector<StudyResult> results;
      for (const auto& [id, s] : store.list()) {
        if (!s.done() || (filter && s.category() != *filter)) continue;
        StudyResult r{s.participant(), s.category(), *s.result(), std::nullopt};
        auto cat = catalogs.find(s.catalog_id());
        if (r.result_setup > 0 && cat != catalogs.end()) {
          r.result_ssim = cat->second.catalog.at(r.result_setup).mean_ssim;
        }
        results.push_back(std::move(r));
      }
      res.set_content(results_to_csv(results), "text/csv");
    }));

    if (config.static_dir) server.set_mount_point("/", config.static_dir->string());
  }
};

RatingService::RatingService(ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

RatingService::~RatingService() { stop(); }

int RatingService::bind() {
  if (impl_->config.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (impl_->server.bind_to_port(impl_->config.host, impl_->config.port)) {
    impl_->port = impl_->config.port;
  } else {
    impl_->port = -1;
  }
  if (impl_->port <= 0) {
    throw Error(ErrorKind::kInput, "cannot bind " + impl_->config.host + ":" +
                                       std::to_string(impl_->config.port));
  }
  return impl_->port;
}

void RatingService::listen() { impl_->server.listen_after_bind(); }

int RatingService::start() {
  const int port = bind();
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
  return port;
}

void RatingService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

const SessionStore& RatingService::store() const { return impl_->store; }

}  // namespace relcomp
