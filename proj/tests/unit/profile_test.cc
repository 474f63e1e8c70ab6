#include <gtest/gtest.h>

#include "cityexpo/errors.h"
#include "cityexpo/profile.h"
#include "testing.h"

namespace cityexpo {
namespace {

using nlohmann::json;
using testing::rec;

const std::vector<std::string>& kinds() { return default_kinds(); }

TEST(Profile, FromJsonFullShape) {
  auto p = profile_from_json(json::parse(R"({
    "id": "me", "hometown": "Lyon", "work_education": null,
    "friends": [{"current_city": "c1", "hometown": "x"}, {"work_education": "acme"}],
    "friends_summary": {"count": 8, "pct_with_attrs": 0.5, "cities": {"c0": 3}}
  })"), kinds());
  EXPECT_EQ(p.id, "me");
  EXPECT_EQ(p.attrs, (std::vector<Token>{"Lyon", std::nullopt}));
  ASSERT_EQ(p.friends.size(), 2u);
  EXPECT_EQ(p.friends[0].current_city, "c1");
  EXPECT_FALSE(p.friends[1].current_city.has_value());
  EXPECT_EQ(p.friend_count(), 10u);
  EXPECT_DOUBLE_EQ(p.pct_friends_with_attrs(), (2.0 + 4.0) / 10.0);
  auto v = p.visibility();
  EXPECT_TRUE(v.hometown);
  EXPECT_FALSE(v.work_education);
  EXPECT_TRUE(v.friends);
}

TEST(Profile, JsonRoundTrip) {
  auto j = json::parse(R"({"hometown": "a", "work_education": "b",
    "friends": [{"current_city": null, "hometown": null, "work_education": "w"}],
    "friends_summary": {"count": 2, "pct_with_attrs": 0.25, "cities": {"c0": 1}}})");
  auto p = profile_from_json(j, kinds());
  auto back = profile_from_json(json::parse(to_json(p, kinds()).dump()), kinds());
  EXPECT_EQ(to_json(back, kinds()).dump(), to_json(p, kinds()).dump());
}

TEST(Profile, RejectsMalformedInput) {
  EXPECT_THROW(profile_from_json(json::array(), kinds()), ValidationError);
  EXPECT_THROW(profile_from_json(json::parse(R"({"shoe": "42"})"), kinds()), ValidationError);
  EXPECT_THROW(profile_from_json(json::parse(R"({"hometown": 7})"), kinds()), ValidationError);
  EXPECT_THROW(profile_from_json(json::parse(R"({"friends": {}})"), kinds()), ValidationError);
  EXPECT_THROW(profile_from_json(json::parse(R"({"friends": [{"age": 3}]})"), kinds()),
               ValidationError);
  EXPECT_THROW(profile_from_json(json::parse(R"({"friends_summary": {"count": 1, "pct_with_attrs": 2}})"),
                                 kinds()),
               ValidationError);
  EXPECT_THROW(profile_from_json(json::parse(R"({"friends_summary": {"count": 1, "cities": {"c": 2}}})"),
                                 kinds()),
               ValidationError);
  EXPECT_THROW(profile_from_json(json::parse(R"({"friends_summary": {"count": "many"}})"), kinds()),
               ValidationError);
}

TEST(Profile, HidingFields) {
  auto p = profile_from_json(json::parse(R"({"hometown": "a", "work_education": "b",
    "friends": [{"hometown": "x"}], "friends_summary": {"count": 3}})"), kinds());
  EXPECT_FALSE(p.with_hidden(VisibleField::kHometown).visibility().hometown);
  EXPECT_TRUE(p.with_hidden(VisibleField::kHometown).visibility().work_education);
  EXPECT_FALSE(p.with_hidden(VisibleField::kWorkEducation).visibility().work_education);
  auto nf = p.with_hidden(VisibleField::kFriends);
  EXPECT_FALSE(nf.visibility().friends);
  EXPECT_EQ(nf.friend_count(), 0u);
  EXPECT_DOUBLE_EQ(nf.pct_friends_with_attrs(), 0.0);
  auto none = p.with_hidden(VisibleField::kHometown)
                  .with_hidden(VisibleField::kWorkEducation)
                  .with_hidden(VisibleField::kFriends);
  EXPECT_FALSE(none.visibility().any());
}

TEST(Profile, ProfileOfDatasetUser) {
  auto ds = SocialDataset::from_records(
      {{"c0", 1, 1}, {"c1", 2, 2}},
      {rec("u", {}, "h", {}, {"a", "b"}), rec("a", "c1", std::nullopt, "w"), rec("b", {})});
  auto p = profile_of(ds, ds.user_index("u"));
  EXPECT_EQ(p.id, "u");
  ASSERT_EQ(p.friends.size(), 2u);
  EXPECT_EQ(p.friends[0].current_city, "c1");
  EXPECT_DOUBLE_EQ(p.pct_friends_with_attrs(), 0.5);

  // The resolved view matches the dataset view.
  ResolvedProfile r(p, ds.locations());
  auto v = make_user_view(ds, ds.user_index("u"));
  ASSERT_EQ(r.view().la_friends.size(), v.la_friends.size());
  EXPECT_EQ(r.view().la_friends[0].city, v.la_friends[0].city);
  EXPECT_EQ(r.view().ln_friends.size(), v.ln_friends.size());
}

TEST(ResolvedProfile, SummaryCitiesBecomeAttributeLessLaFriends) {
  std::vector<Location> locs = {{"c0", 1, 1}, {"c1", 2, 2}};
  auto p = profile_from_json(
      json::parse(R"({"friends_summary": {"count": 5, "cities": {"c1": 2}}})"), kinds());
  ResolvedProfile r(p, locs);
  ASSERT_EQ(r.view().la_friends.size(), 2u);
  EXPECT_EQ(r.view().la_friends[0].city, 1u);
  EXPECT_FALSE(r.view().la_friends[0].attrs[0].has_value());

  auto bad = profile_from_json(json::parse(R"({"friends": [{"current_city": "atlantis"}]})"), kinds());
  EXPECT_THROW(ResolvedProfile(bad, locs), ValidationError);
  auto bad_summary =
      profile_from_json(json::parse(R"({"friends_summary": {"count": 1, "cities": {"zz": 1}}})"), kinds());
  EXPECT_THROW(ResolvedProfile(bad_summary, locs), ValidationError);
}

}  // namespace
}  // namespace cityexpo
