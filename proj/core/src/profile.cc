#include "cityexpo/profile.h"

#include <algorithm>

#include "cityexpo/errors.h"

namespace cityexpo {
namespace {

Token token_field(const nlohmann::json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError("'" + key + "' must be a string or null");
  return it->get<std::string>();
}

void check_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                const char* where) {
  for (auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError(std::string("unknown field '") + key + "' in " + where);
    }
  }
}

std::optional<LocationIndex> find_location(std::span<const Location> locations,
                                           const std::string& id) {
  auto it = std::lower_bound(locations.begin(), locations.end(), id,
                             [](const Location& l, const std::string& x) { return l.id < x; });
  if (it == locations.end() || it->id != id) return std::nullopt;
  return static_cast<LocationIndex>(it - locations.begin());
}

}  // namespace

std::string_view to_string(VisibleField f) {
  switch (f) {
    case VisibleField::kHometown:
      return "HT";
    case VisibleField::kWorkEducation:
      return "WE";
    case VisibleField::kFriends:
      return "F";
  }
  return "?";
}

bool Visibility::visible(VisibleField f) const {
  switch (f) {
    case VisibleField::kHometown:
      return hometown;
    case VisibleField::kWorkEducation:
      return work_education;
    case VisibleField::kFriends:
      return friends;
  }
  return false;
}

std::size_t Profile::friend_count() const {
  return friends.size() + (friend_summary ? friend_summary->count : 0);
}

Visibility Profile::visibility() const {
  Visibility v;
  v.hometown = attrs.size() > kHometown && attrs[kHometown].has_value();
  v.work_education = attrs.size() > kWorkEducation && attrs[kWorkEducation].has_value();
  v.friends = friend_count() > 0;
  return v;
}

double Profile::pct_friends_with_attrs() const {
  const std::size_t n = friend_count();
  if (n == 0) return 0.0;
  double with = 0.0;
  for (const auto& f : friends) {
    if (std::any_of(f.attrs.begin(), f.attrs.end(), [](const Token& t) { return t.has_value(); })) {
      with += 1.0;
    }
  }
  if (friend_summary) {
    with += friend_summary->pct_with_attrs * static_cast<double>(friend_summary->count);
  }
  return std::clamp(with / static_cast<double>(n), 0.0, 1.0);
}

Profile Profile::with_hidden(VisibleField f) const {
  Profile p = *this;
  switch (f) {
    case VisibleField::kHometown:
      if (p.attrs.size() > kHometown) p.attrs[kHometown].reset();
      break;
    case VisibleField::kWorkEducation:
      if (p.attrs.size() > kWorkEducation) p.attrs[kWorkEducation].reset();
      break;
    case VisibleField::kFriends:
      p.friends.clear();
      p.friend_summary.reset();
      break;
  }
  return p;
}

Profile profile_from_json(const nlohmann::json& j, const std::vector<std::string>& kinds) {
  if (!j.is_object()) throw ValidationError("profile must be a JSON object");
  std::vector<std::string> allowed = kinds;
  allowed.insert(allowed.end(), {"id", "friends", "friends_summary"});
  check_keys(j, allowed, "profile");

  Profile p;
  if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ValidationError("'id' must be a string");
    p.id = it->get<std::string>();
  }
  for (const auto& k : kinds) p.attrs.push_back(token_field(j, k));

  if (auto it = j.find("friends"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ValidationError("'friends' must be an array");
    std::vector<std::string> friend_keys = kinds;
    friend_keys.insert(friend_keys.end(), {"id", "current_city"});
    for (const auto& jf : *it) {
      if (!jf.is_object()) throw ValidationError("each friend must be an object");
      check_keys(jf, friend_keys, "friend");
      FriendProfile f;
      f.current_city = token_field(jf, "current_city");
      for (const auto& k : kinds) f.attrs.push_back(token_field(jf, k));
      p.friends.push_back(std::move(f));
    }
  }
  if (auto it = j.find("friends_summary"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw ValidationError("'friends_summary' must be an object");
    check_keys(*it, {"count", "pct_with_attrs", "cities"}, "friends_summary");
    FriendSummary s;
    try {
      s.count = it->value("count", std::size_t{0});
      s.pct_with_attrs = it->value("pct_with_attrs", 0.0);
      if (auto c = it->find("cities"); c != it->end() && !c->is_null()) {
        s.city_counts = c->get<std::map<std::string, std::size_t>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("bad friends_summary: ") + e.what());
    }
    if (!(s.pct_with_attrs >= 0.0 && s.pct_with_attrs <= 1.0)) {
      throw ValidationError("friends_summary.pct_with_attrs must be in [0, 1]");
    }
    std::size_t located = 0;
    for (const auto& [id, n] : s.city_counts) located += n;
    if (located > s.count) {
      throw ValidationError("friends_summary.cities counts exceed friends_summary.count");
    }
    p.friend_summary = std::move(s);
  }
  return p;
}

nlohmann::ordered_json to_json(const Profile& p, const std::vector<std::string>& kinds) {
  nlohmann::ordered_json j;
  if (!p.id.empty()) j["id"] = p.id;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    j[kinds[k]] = p.attrs[k] ? nlohmann::ordered_json(*p.attrs[k]) : nlohmann::ordered_json(nullptr);
  }
  nlohmann::ordered_json friends = nlohmann::ordered_json::array();
  for (const auto& f : p.friends) {
    nlohmann::ordered_json jf;
    jf["current_city"] = f.current_city ? nlohmann::ordered_json(*f.current_city) : nlohmann::ordered_json(nullptr);
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      jf[kinds[k]] = f.attrs[k] ? nlohmann::ordered_json(*f.attrs[k]) : nlohmann::ordered_json(nullptr);
    }
    friends.push_back(std::move(jf));
  }
  j["friends"] = std::move(friends);
  if (p.friend_summary) {
    j["friends_summary"] = {{"count", p.friend_summary->count},
                            {"pct_with_attrs", p.friend_summary->pct_with_attrs},
                            {"cities", p.friend_summary->city_counts}};
  }
  return j;
}

Profile profile_of(const SocialDataset& ds, UserIndex u) {
  const User& user = ds.user(u);
  Profile p;
  p.id = user.id;
  p.attrs = user.attrs;
  for (UserIndex f : user.friends) {
    const User& fr = ds.user(f);
    FriendProfile fp;
    if (fr.current_city) fp.current_city = ds.location(*fr.current_city).id;
    fp.attrs = fr.attrs;
    p.friends.push_back(std::move(fp));
  }
  return p;
}

ResolvedProfile::ResolvedProfile(const Profile& profile, std::span<const Location> locations)
    : attrs_(profile.attrs), null_attrs_(profile.attrs.size()) {
  friend_attrs_.reserve(profile.friends.size());
  std::vector<std::optional<LocationIndex>> cities;
  for (const auto& f : profile.friends) {
    if (f.attrs.size() != attrs_.size()) {
      throw ValidationError("friend attribute count does not match profile");
    }
    friend_attrs_.push_back(f.attrs);
    std::optional<LocationIndex> city;
    if (f.current_city) {
      city = find_location(locations, *f.current_city);
      if (!city) throw ValidationError("unknown friend city '" + *f.current_city + "'");
    }
    cities.push_back(city);
  }
  view_.attrs = attrs_;
  for (std::size_t i = 0; i < friend_attrs_.size(); ++i) {
    if (cities[i]) {
      view_.la_friends.push_back({*cities[i], friend_attrs_[i]});
    } else {
      view_.ln_friends.push_back(friend_attrs_[i]);
    }
  }
  if (profile.friend_summary) {
    for (const auto& [id, n] : profile.friend_summary->city_counts) {
      auto city = find_location(locations, id);
      if (!city) throw ValidationError("unknown friend city '" + id + "'");
      for (std::size_t i = 0; i < n; ++i) view_.la_friends.push_back({*city, null_attrs_});
    }
    // Attribute-less LN-friends add no indication mass; they only count
    // toward visibility and the friends-with-attributes ratio.
  }
}

}  // namespace cityexpo
