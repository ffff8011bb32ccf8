#include "relcomp/profiles.h"

#include <algorithm>

#include "json.hpp"
#include "relcomp/error.h"

namespace relcomp {

std::string_view to_string(CodecFamily codec) {
  switch (codec) {
    case CodecFamily::kH264: return "h264";
    case CodecFamily::kH265: return "h265";
    case CodecFamily::kAV1: return "av1";
  }
  return "?";
}

std::optional<CodecFamily> parse_codec(std::string_view text) {
  for (CodecFamily c : kAllCodecs) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::string to_string(const Resolution& r) {
  return std::to_string(r.width) + "x" + std::to_string(r.height);
}

std::vector<int> CrfLadder::values() const {
  std::vector<int> out;
  for (int crf = min_crf; crf <= max_crf; crf += step) out.push_back(crf);
  return out;
}

bool CrfLadder::contains(int crf) const {
  return crf >= min_crf && crf <= max_crf && (crf - min_crf) % step == 0;
}

CrfLadder crf_ladder(CodecFamily codec) {
  if (codec == CodecFamily::kAV1) return {27, 63, 3};
  return {23, 47, 2};
}

std::string to_string(const EncodingProfile& p) {
  return std::string(to_string(p.codec)) + " crf" + std::to_string(p.crf) + " " +
         to_string(p.resolution);
}

std::string profile_slug(const EncodingProfile& p) {
  return std::string(to_string(p.codec)) + "_crf" + std::to_string(p.crf) + "_" +
         to_string(p.resolution);
}

bool is_grid_profile(const EncodingProfile& p) {
  return crf_ladder(p.codec).contains(p.crf) &&
         std::find(kCatalogResolutions.begin(), kCatalogResolutions.end(), p.resolution) !=
             kCatalogResolutions.end();
}

std::vector<EncodingProfile> setup_grid(CodecFamily codec) {
  std::vector<EncodingProfile> grid;
  for (int crf : crf_ladder(codec).values()) {
    for (const Resolution& r : kCatalogResolutions) grid.push_back({codec, crf, r});
  }
  return grid;
}

SetupCatalog::SetupCatalog(std::vector<SetupEntry> entries, std::vector<CodecFamily> scope)
    : entries_(std::move(entries)), scope_(std::move(scope)) {
  if (entries_.empty()) throw Error(ErrorKind::kValidation, "catalog is empty");
  for (size_t i = 0; i < entries_.size(); ++i) {
    const SetupEntry& e = entries_[i];
    if (e.setup_number != static_cast<int>(i) + 1) {
      throw Error(ErrorKind::kValidation,
                  "setup numbers must be dense from 1; found " + std::to_string(e.setup_number) +
                      " at position " + std::to_string(i + 1));
    }
    if (i > 0 && e.mean_ssim > entries_[i - 1].mean_ssim) {
      throw Error(ErrorKind::kValidation, "catalog is not sorted by SSIM at setup " +
                                              std::to_string(e.setup_number));
    }
    if (std::find(scope_.begin(), scope_.end(), e.profile.codec) == scope_.end()) {
      throw Error(ErrorKind::kValidation, "setup " + std::to_string(e.setup_number) +
                                              " codec outside catalog scope");
    }
  }
}

const SetupEntry& SetupCatalog::at(int setup_number) const {
  if (setup_number < 1 || setup_number > size()) {
    throw Error(ErrorKind::kNotFound, "no setup " + std::to_string(setup_number) +
                                          " in a catalog of " + std::to_string(size()));
  }
  return entries_[setup_number - 1];
}

const SetupEntry* SetupCatalog::find(const EncodingProfile& profile) const {
  for (const SetupEntry& e : entries_) {
    if (e.profile == profile) return &e;
  }
  return nullptr;
}

void OptimalProfileTable::set(RelevanceLevel level, CodecFamily codec, OptimalEntry entry) {
  if (level == RelevanceLevel::kNotRelevant) {
    throw Error(ErrorKind::kValidation, "irrelevant content has no encoding profile");
  }
  entries_[{level, codec}] = entry;
}

const OptimalEntry* OptimalProfileTable::find(RelevanceLevel level, CodecFamily codec) const {
  auto it = entries_.find({level, codec});
  return it == entries_.end() ? nullptr : &it->second;
}

OptimalProfileTable default_optimal_table() {
  using L = RelevanceLevel;
  using C = CodecFamily;
  constexpr Resolution k1024{1024, 768}, k800{800, 600}, k640{640, 480};
  OptimalProfileTable t;
  t.set(L::kHighlyRelevant, C::kH264, {34, {C::kH264, 25, k640}, 0.9260, 653.39, 0.9468});
  t.set(L::kRelevant, C::kH264, {56, {C::kH264, 33, k640}, 0.9079, 252.11, 0.9797});
  t.set(L::kSomewhatRelevant, C::kH264, {52, {C::kH264, 31, k640}, 0.9162, 248.49, 0.9810});
  t.set(L::kHighlyRelevant, C::kH265, {16, {C::kH265, 31, k640}, 0.9174, 207.12, 0.9831});
  t.set(L::kRelevant, C::kH265, {22, {C::kH265, 35, k640}, 0.9057, 130.10, 0.9895});
  t.set(L::kSomewhatRelevant, C::kH265, {16, {C::kH265, 31, k640}, 0.9202, 173.66, 0.9867});
  t.set(L::kHighlyRelevant, C::kAV1, {36, {C::kAV1, 57, k1024}, 0.9250, 190.38, 0.9845});
  t.set(L::kRelevant, C::kAV1, {57, {C::kAV1, 63, k800}, 0.9078, 68.32, 0.9945});
  t.set(L::kSomewhatRelevant, C::kAV1, {51, {C::kAV1, 60, k640}, 0.9179, 75.46, 0.9942});
  return t;
}

EncodingProfile profile_for(RelevanceLevel level, CodecFamily codec,
                            const OptimalProfileTable& table) {
  if (level == RelevanceLevel::kNotRelevant) {
    throw Error(ErrorKind::kValidation, "irrelevant content must be dropped or merged");
  }
  const OptimalEntry* entry = table.find(level, codec);
  if (!entry) {
    throw Error(ErrorKind::kNotFound, "no profile for " + std::string(to_string(level)) + "/" +
                                          std::string(to_string(codec)));
  }
  return entry->profile;
}

std::string optimal_table_to_json(const OptimalProfileTable& table) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (RelevanceLevel level : {RelevanceLevel::kHighlyRelevant, RelevanceLevel::kRelevant,
                               RelevanceLevel::kSomewhatRelevant}) {
    for (CodecFamily codec : kAllCodecs) {
      const OptimalEntry* e = table.find(level, codec);
      if (!e) continue;
      doc[std::string(to_string(level))][std::string(to_string(codec))] = {
          {"setup", e->setup_number},
          {"width", e->profile.resolution.width},
          {"height", e->profile.resolution.height},
          {"crf", e->profile.crf},
          {"ssim", e->ssim},
          {"kbps", e->bitrate_kbps},
          {"saving", e->saving},
      };
    }
  }
  return doc.dump(2) + "\n";
}

OptimalProfileTable optimal_table_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("profile table: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::kParse, "profile table must be a JSON object");
  OptimalProfileTable table;
  try {
    for (const auto& [level_key, codecs] : doc.items()) {
      auto level = parse_relevance_level(level_key);
      if (!level || *level == RelevanceLevel::kNotRelevant) {
        throw Error(ErrorKind::kParse, "profile table: bad relevance key '" + level_key + "'");
      }
      for (const auto& [codec_key, v] : codecs.items()) {
        auto codec = parse_codec(codec_key);
        if (!codec) throw Error(ErrorKind::kParse, "profile table: bad codec key '" + codec_key + "'");
        OptimalEntry e;
        e.setup_number = v.value("setup", 0);
        e.profile = {*codec, v.at("crf").get<int>(),
                     {v.at("width").get<int>(), v.at("height").get<int>()}};
        e.ssim = v.value("ssim", 0.0);
        e.bitrate_kbps = v.value("kbps", 0.0);
        e.saving = v.value("saving", 0.0);
        if (e.profile.resolution.width <= 0 || e.profile.resolution.height <= 0) {
          throw Error(ErrorKind::kValidation, "profile table: non-positive resolution");
        }
        table.set(*level, *codec, e);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("profile table: ") + e.what());
  }
  return table;
}

}  // namespace relcomp
