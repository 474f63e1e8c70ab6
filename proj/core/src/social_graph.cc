#include "cityexpo/social_graph.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "cityexpo/errors.h"

namespace cityexpo {

bool User::has_any_attribute() const {
  return std::any_of(attrs.begin(), attrs.end(),
                     [](const Token& t) { return t.has_value(); });
}

SocialDataset SocialDataset::from_records(std::vector<Location> locations,
                                          std::vector<UserRecord> records,
                                          std::vector<std::string> kinds) {
  SocialDataset ds;
  {
    std::set<std::string> seen;
    for (const auto& k : kinds) {
      if (k.empty() || !seen.insert(k).second) {
        throw ValidationError("attribute kinds must be non-empty and unique");
      }
    }
  }
  ds.kinds_ = std::move(kinds);

  for (const auto& loc : locations) {
    if (!std::isfinite(loc.lat) || !std::isfinite(loc.lon) || loc.lat < -90.0 ||
        loc.lat > 90.0 || loc.lon < -180.0 || loc.lon > 180.0) {
      throw ValidationError("location '" + loc.id + "' has out-of-range coordinates");
    }
  }
  std::sort(locations.begin(), locations.end(),
            [](const Location& a, const Location& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (i > 0 && locations[i].id == locations[i - 1].id) {
      throw ValidationError("duplicate location id '" + locations[i].id + "'");
    }
    ds.location_by_id_.emplace(locations[i].id, static_cast<LocationIndex>(i));
  }
  ds.locations_ = std::move(locations);

  std::sort(records.begin(), records.end(),
            [](const UserRecord& a, const UserRecord& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].id == records[i - 1].id) {
      throw ValidationError("duplicate user id '" + records[i].id + "'");
    }
    ds.user_by_id_.emplace(records[i].id, static_cast<UserIndex>(i));
  }

  std::vector<std::set<UserIndex>> adjacency(records.size());
  ds.users_.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& rec = records[i];
    User& user = ds.users_[i];
    user.id = rec.id;
    if (rec.current_city) {
      auto it = ds.location_by_id_.find(*rec.current_city);
      if (it == ds.location_by_id_.end()) {
        throw ValidationError("user '" + rec.id + "' references unknown location '" +
                              *rec.current_city + "'");
      }
      user.current_city = it->second;
    }
    user.attrs.assign(ds.kinds_.size(), std::nullopt);
    for (auto& [kind, value] : rec.attrs) {
      auto pos = std::find(ds.kinds_.begin(), ds.kinds_.end(), kind);
      if (pos == ds.kinds_.end()) {
        throw ValidationError("user '" + rec.id + "' has unknown attribute kind '" +
                              kind + "'");
      }
      user.attrs[static_cast<std::size_t>(pos - ds.kinds_.begin())] = std::move(value);
    }
    for (const auto& fid : rec.friends) {
      auto it = ds.user_by_id_.find(fid);
      if (it == ds.user_by_id_.end()) {
        throw ValidationError("user '" + rec.id + "' lists unknown friend '" + fid + "'");
      }
      if (it->second == i) continue;
      adjacency[i].insert(it->second);
      adjacency[it->second].insert(static_cast<UserIndex>(i));
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    ds.users_[i].friends.assign(adjacency[i].begin(), adjacency[i].end());
  }
  return ds;
}

std::optional<UserIndex> SocialDataset::find_user(std::string_view id) const {
  auto it = user_by_id_.find(std::string(id));
  if (it == user_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<LocationIndex> SocialDataset::find_location(std::string_view id) const {
  auto it = location_by_id_.find(std::string(id));
  if (it == location_by_id_.end()) return std::nullopt;
  return it->second;
}

UserIndex SocialDataset::user_index(std::string_view id) const {
  auto u = find_user(id);
  if (!u) throw UnknownUser(std::string(id));
  return *u;
}

SocialDataset SocialDataset::with_hidden_cities(std::span<const UserIndex> hidden) const {
  SocialDataset copy = *this;
  for (UserIndex u : hidden) copy.users_.at(u).current_city.reset();
  return copy;
}

std::vector<UserRecord> SocialDataset::to_records() const {
  std::vector<UserRecord> out;
  out.reserve(users_.size());
  for (const auto& u : users_) {
    UserRecord rec;
    rec.id = u.id;
    if (u.current_city) rec.current_city = locations_[*u.current_city].id;
    for (std::size_t k = 0; k < kinds_.size(); ++k) rec.attrs[kinds_[k]] = u.attrs[k];
    for (UserIndex f : u.friends) rec.friends.push_back(users_[f].id);
    out.push_back(std::move(rec));
  }
  return out;
}

bool operator==(const SocialDataset& a, const SocialDataset& b) {
  if (a.kinds_ != b.kinds_ || a.locations_ != b.locations_ ||
      a.users_.size() != b.users_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.users_.size(); ++i) {
    const User& x = a.users_[i];
    const User& y = b.users_[i];
    if (x.id != y.id || x.current_city != y.current_city || x.attrs != y.attrs ||
        x.friends != y.friends) {
      return false;
    }
  }
  return true;
}

UserPartition partition_users(const SocialDataset& ds) {
  UserPartition p;
  for (UserIndex u = 0; u < ds.num_users(); ++u) {
    (ds.is_la(u) ? p.la : p.ln).push_back(u);
  }
  return p;
}

FriendPartition friend_partition(const SocialDataset& ds, UserIndex u) {
  FriendPartition p;
  for (UserIndex f : ds.user(u).friends) (ds.is_la(f) ? p.la : p.ln).push_back(f);
  return p;
}

FriendPartition friend_partition(const SocialDataset& ds, std::string_view user_id) {
  return friend_partition(ds, ds.user_index(user_id));
}

}  // namespace cityexpo
