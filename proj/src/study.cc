#include "relcomp/study.h"

#include <algorithm>
#include <bit>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "relcomp/csv.h"
#include "relcomp/error.h"

namespace relcomp {

std::string_view to_string(BoundaryRule rule) {
  return rule == BoundaryRule::kLiteral ? "literal" : "worst-acceptable";
}

RatingSession::RatingSession(std::string participant, RelevanceLevel category,
                             std::string catalog_id, int catalog_size, BoundaryRule rule)
    : participant_(std::move(participant)),
      category_(category),
      catalog_id_(std::move(catalog_id)),
      catalog_size_(catalog_size),
      rule_(rule),
      lo_(0),
      hi_(catalog_size + 1) {
  if (catalog_size < 1) throw Error(ErrorKind::kValidation, "catalog is empty");
  if (category == RelevanceLevel::kNotRelevant) {
    throw Error(ErrorKind::kValidation, "irrelevant content is not rated");
  }
  advance();
}

void RatingSession::advance() {
  if (done()) {
    current_.reset();
  } else {
    current_ = (lo_ + hi_) / 2;
  }
}

void RatingSession::record_verdict(bool acceptable) {
  if (done() || !current_) throw Error(ErrorKind::kGone, "session is already complete");
  const int setup = *current_;
  history_.emplace_back(setup, acceptable);
  const bool raise_lower = rule_ == BoundaryRule::kWorstAcceptable ? acceptable : !acceptable;
  if (raise_lower) {
    lo_ = setup;
  } else {
    hi_ = setup;
  }
  ++version_;
  advance();
}

std::optional<int> RatingSession::result() const {
  if (!done()) return std::nullopt;
  if (rule_ == BoundaryRule::kWorstAcceptable) return lo_;
  // Literal rule: the upper bound is the best setup still called acceptable.
  return hi_ <= catalog_size_ ? hi_ : 0;
}

std::string RatingSession::to_json() const {
  nlohmann::ordered_json doc;
  doc["participant"] = participant_;
  doc["category"] = std::string(to_string(category_));
  doc["catalog_id"] = catalog_id_;
  doc["catalog_size"] = catalog_size_;
  doc["rule"] = std::string(to_string(rule_));
  doc["lo"] = lo_;
  doc["hi"] = hi_;
  doc["current"] = current_ ? nlohmann::ordered_json(*current_) : nlohmann::ordered_json();
  doc["history"] = nlohmann::ordered_json::array();
  for (const auto& [setup, ok] : history_) {
    doc["history"].push_back({{"setup", setup}, {"acceptable", ok}});
  }
  doc["version"] = version_;
  auto r = result();
  doc["result"] = r ? nlohmann::ordered_json(*r) : nlohmann::ordered_json();
  return doc.dump(2) + "\n";
}

RatingSession RatingSession::from_json(std::string_view text) {
  RatingSession s;
  try {
    auto doc = nlohmann::json::parse(text);
    s.participant_ = doc.at("participant").get<std::string>();
    auto category = parse_relevance_level(doc.at("category").get<std::string>());
    if (!category || *category == RelevanceLevel::kNotRelevant) {
      throw Error(ErrorKind::kParse, "session: bad category");
    }
    s.category_ = *category;
    s.catalog_id_ = doc.at("catalog_id").get<std::string>();
    s.catalog_size_ = doc.at("catalog_size").get<int>();
    s.rule_ = doc.value("rule", "worst-acceptable") == "literal" ? BoundaryRule::kLiteral
                                                                 : BoundaryRule::kWorstAcceptable;
    s.lo_ = doc.at("lo").get<int>();
    s.hi_ = doc.at("hi").get<int>();
    for (const auto& h : doc.at("history")) {
      s.history_.emplace_back(h.at("setup").get<int>(), h.at("acceptable").get<bool>());
    }
    s.version_ = doc.at("version").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("session: ") + e.what());
  }
  if (!(0 <= s.lo_ && s.lo_ < s.hi_ && s.hi_ <= s.catalog_size_ + 1)) {
    throw Error(ErrorKind::kValidation, "session: bounds violate 0 <= lo < hi <= N+1");
  }
  s.advance();
  return s;
}

int max_search_steps(int catalog_size) {
  return static_cast<int>(std::bit_width(static_cast<unsigned>(catalog_size)));
}

ThresholdDerivation threshold_from_ratings(RelevanceLevel category,
                                           const std::vector<int>& result_setups,
                                           const SetupCatalog& catalog) {
  ThresholdDerivation out;
  std::vector<int> usable;
  for (int setup : result_setups) {
    if (setup <= 0) {
      ++out.excluded_none_acceptable;
    } else {
      usable.push_back(setup);
    }
  }
  if (usable.empty()) {
    throw Error(ErrorKind::kValidation, "no participant found any setup acceptable");
  }
  std::sort(usable.begin(), usable.end());
  const size_t n = usable.size();
  // Integer floor of the median; even sizes average the two middle values.
  const int median = n % 2 == 1 ? usable[n / 2] : (usable[n / 2 - 1] + usable[n / 2]) / 2;
  out.used = static_cast<int>(n);
  out.threshold = {category, median, catalog.at(median).mean_ssim};
  return out;
}

Selection select_optimal(const SetupCatalog& catalog, const CategoryThreshold& threshold) {
  Selection out;
  for (CodecFamily codec : catalog.scope()) {
    const SetupEntry* best = nullptr;
    for (const SetupEntry& e : catalog.entries()) {
      if (e.profile.codec != codec || e.mean_ssim < threshold.ssim) continue;
      if (!best || e.bitrate_kbps < best->bitrate_kbps ||
          (e.bitrate_kbps == best->bitrate_kbps &&
           (e.mean_ssim > best->mean_ssim ||
            (e.mean_ssim == best->mean_ssim && e.setup_number < best->setup_number)))) {
        best = &e;
      }
    }
    if (best) {
      out.per_codec[codec] = {best->setup_number, best->profile, best->mean_ssim,
                              best->bitrate_kbps};
    } else {
      out.omitted.push_back(codec);
    }
  }
  return out;
}

std::string results_to_csv(const std::vector<StudyResult>& results) {
  std::ostringstream out;
  out << "participant,category,result_setup,result_ssim\n";
  for (const StudyResult& r : results) {
    out << r.participant << ',' << to_string(r.category) << ',';
    if (r.result_setup > 0) {
      out << r.result_setup << ',';
      if (r.result_ssim) out << std::fixed << std::setprecision(4) << *r.result_ssim;
    } else {
      out << "none,";
    }
    out << '\n';
  }
  return out.str();
}

std::vector<StudyResult> results_from_csv(std::string_view text) {
  csv::Table doc = csv::parse(text);
  csv::expect_header(doc, {"participant", "category", "result_setup", "result_ssim"});
  std::vector<StudyResult> out;
  for (size_t i = 0; i < doc.rows.size(); ++i) {
    const csv::Row& row = doc.rows[i];
    const int line = doc.lines[i];
    StudyResult r;
    r.participant = row[0];
    auto category = parse_relevance_level(row[1]);
    if (!category || *category == RelevanceLevel::kNotRelevant) {
      throw Error(ErrorKind::kParse,
                  "line " + std::to_string(line) + ": bad category '" + row[1] + "'");
    }
    r.category = *category;
    r.result_setup = row[2] == "none" ? 0 : static_cast<int>(csv::to_int(row[2], line));
    if (!row[3].empty()) r.result_ssim = csv::to_double(row[3], line);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace relcomp
