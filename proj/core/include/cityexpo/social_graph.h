#ifndef CITYEXPO_SOCIAL_GRAPH_H_
#define CITYEXPO_SOCIAL_GRAPH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cityexpo {

using LocationIndex = std::uint32_t;
using UserIndex = std::uint32_t;

// An attribute value. std::nullopt is the NULL token: hidden or absent. It is
// distinct from every user-supplied string, including the empty string.
using Token = std::optional<std::string>;

inline constexpr std::size_t kHometown = 0;
inline constexpr std::size_t kWorkEducation = 1;

// Attribute kinds every dataset carries, in index order.
inline const std::vector<std::string>& default_kinds() {
  static const std::vector<std::string> kinds = {"hometown", "work_education"};
  return kinds;
}

struct Location {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const Location&, const Location&) = default;
};

struct User {
  std::string id;
  std::optional<LocationIndex> current_city;
  std::vector<Token> attrs;        // one entry per attribute kind
  std::vector<UserIndex> friends;  // sorted, unique, never contains self

  bool has_any_attribute() const;
};

// A user record as read from a file, before ids are resolved.
struct UserRecord {
  std::string id;
  std::optional<std::string> current_city;
  std::map<std::string, Token> attrs;  // kind name -> value
  std::vector<std::string> friends;
};

// The social graph G = (U, E, L). Immutable once built. Locations and users
// are stored sorted by id, so LocationIndex / UserIndex order is id order and
// "lowest id" tie-breaks reduce to "lowest index".
class SocialDataset {
 public:
  SocialDataset() : kinds_(default_kinds()) {}

  // Validates and canonicalizes raw records: friendship is closed to be
  // symmetric, dangling friend ids / duplicate ids / bad coordinates throw
  // ValidationError. Attribute kinds missing from a record default to NULL.
  static SocialDataset from_records(std::vector<Location> locations,
                                    std::vector<UserRecord> users,
                                    std::vector<std::string> kinds = default_kinds());

  std::span<const Location> locations() const { return locations_; }
  std::span<const User> users() const { return users_; }
  const std::vector<std::string>& kinds() const { return kinds_; }
  std::size_t num_kinds() const { return kinds_.size(); }
  std::size_t num_users() const { return users_.size(); }
  std::size_t num_locations() const { return locations_.size(); }

  const User& user(UserIndex u) const { return users_.at(u); }
  const Location& location(LocationIndex l) const { return locations_.at(l); }

  std::optional<UserIndex> find_user(std::string_view id) const;
  std::optional<LocationIndex> find_location(std::string_view id) const;
  // Throws UnknownUser.
  UserIndex user_index(std::string_view id) const;

  bool is_la(UserIndex u) const { return users_.at(u).current_city.has_value(); }

  // Copy of this dataset with the current city of the given users set to
  // NULL. Used to mask evaluation users so nothing downstream can read them.
  SocialDataset with_hidden_cities(std::span<const UserIndex> hidden) const;

  // Round-trips through from_records.
  std::vector<UserRecord> to_records() const;

  friend bool operator==(const SocialDataset& a, const SocialDataset& b);

 private:
  std::vector<std::string> kinds_;
  std::vector<Location> locations_;
  std::vector<User> users_;
  std::unordered_map<std::string, LocationIndex> location_by_id_;
  std::unordered_map<std::string, UserIndex> user_by_id_;
};

struct UserPartition {
  std::vector<UserIndex> la;  // current city visible
  std::vector<UserIndex> ln;  // current city hidden
};

UserPartition partition_users(const SocialDataset& ds);

struct FriendPartition {
  std::vector<UserIndex> la;
  std::vector<UserIndex> ln;
};

FriendPartition friend_partition(const SocialDataset& ds, UserIndex u);
// Throws UnknownUser.
FriendPartition friend_partition(const SocialDataset& ds, std::string_view user_id);

enum class DatasetFormat { kJsonl, kCsvBundle };

// Parses "jsonl" / "csv" / "csv-bundle". Throws ConfigError.
DatasetFormat parse_dataset_format(std::string_view name);

// For kCsvBundle `path` is a directory holding locations.csv, users.csv and
// edges.csv. Throws ParseError / ValidationError.
SocialDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const SocialDataset& ds, const std::filesystem::path& path,
                  DatasetFormat format);

SocialDataset read_jsonl(std::istream& in);
void write_jsonl(const SocialDataset& ds, std::ostream& out);

SocialDataset read_csv_bundle(std::istream& locations, std::istream& users,
                              std::istream& edges);
void write_csv_bundle(const SocialDataset& ds, std::ostream& locations,
                      std::ostream& users, std::ostream& edges);

}  // namespace cityexpo

#endif  // CITYEXPO_SOCIAL_GRAPH_H_
