#ifndef CITYEXPO_PROFILE_H_
#define CITYEXPO_PROFILE_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cityexpo/pfli.h"
#include "cityexpo/social_graph.h"

namespace cityexpo {

// The three pieces of self-exposed information a user can toggle.
enum class VisibleField { kHometown, kWorkEducation, kFriends };

inline constexpr VisibleField kAllVisibleFields[] = {
    VisibleField::kHometown, VisibleField::kWorkEducation, VisibleField::kFriends};

// "HT", "WE", "F"
std::string_view to_string(VisibleField f);

struct Visibility {
  bool hometown = false;
  bool work_education = false;
  bool friends = false;

  bool visible(VisibleField f) const;
  bool any() const { return hometown || work_education || friends; }
};

struct FriendProfile {
  std::optional<std::string> current_city;  // location id
  std::vector<Token> attrs;                 // one per attribute kind
};

// Aggregate friend information for clients that do not upload friend lists.
// Friends counted under `city_counts` act as LA-friends with no visible
// attributes; the rest of `count` act as attribute-less LN-friends.
struct FriendSummary {
  std::size_t count = 0;
  double pct_with_attrs = 0.0;
  std::map<std::string, std::size_t> city_counts;
};

// A user's self-exposed information, independent of any dataset.
struct Profile {
  std::string id;
  std::vector<Token> attrs;  // one per attribute kind
  std::vector<FriendProfile> friends;
  std::optional<FriendSummary> friend_summary;

  std::size_t friend_count() const;
  Visibility visibility() const;
  double pct_friends_with_attrs() const;
  Profile with_hidden(VisibleField f) const;
};

// {"id"?, "hometown", "work_education", "friends": [{"current_city",
// "hometown", "work_education"}...], "friends_summary": {"count",
// "pct_with_attrs", "cities": {id: n}}}. Unknown attribute keys beyond the
// kinds list are rejected. Throws ValidationError.
Profile profile_from_json(const nlohmann::json& j, const std::vector<std::string>& kinds);
nlohmann::ordered_json to_json(const Profile& p, const std::vector<std::string>& kinds);

// A dataset user's visible information as a profile.
Profile profile_of(const SocialDataset& ds, UserIndex u);

// Owns the storage a UserView borrows. Friend cities are resolved against
// `locations` (sorted by id); unknown ids throw ValidationError.
class ResolvedProfile {
 public:
  ResolvedProfile(const Profile& profile, std::span<const Location> locations);

  const UserView& view() const { return view_; }

 private:
  std::vector<Token> attrs_;
  std::vector<std::vector<Token>> friend_attrs_;
  std::vector<Token> null_attrs_;
  UserView view_;
};

}  // namespace cityexpo

#endif  // CITYEXPO_PROFILE_H_
