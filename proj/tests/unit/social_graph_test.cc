#include <sstream>

#include <gtest/gtest.h>

#include "cityexpo/errors.h"
#include "cityexpo/social_graph.h"
#include "testing.h"

namespace cityexpo {
namespace {

using testing::rec;

std::vector<Location> two_cities() {
  return {{"paris", 48.8566, 2.3522}, {"evry", 48.6241, 2.4278}};
}

TEST(SocialDataset, EmptyInput) {
  auto ds = SocialDataset::from_records({}, {});
  EXPECT_EQ(ds.num_users(), 0u);
  EXPECT_EQ(ds.num_locations(), 0u);
}

TEST(SocialDataset, FriendshipIsClosedToSymmetric) {
  auto ds = SocialDataset::from_records(two_cities(),
                                        {rec("u1", "paris", {}, {}, {"u2"}), rec("u2", "evry")});
  EXPECT_EQ(ds.user(ds.user_index("u1")).friends, std::vector<UserIndex>{ds.user_index("u2")});
  EXPECT_EQ(ds.user(ds.user_index("u2")).friends, std::vector<UserIndex>{ds.user_index("u1")});
}

TEST(SocialDataset, SelfLoopsAndDuplicateEdgesAreDropped) {
  auto ds = SocialDataset::from_records(
      two_cities(), {rec("u1", "paris", {}, {}, {"u2", "u2", "u1"}), rec("u2", "evry", {}, {}, {"u1"})});
  EXPECT_EQ(ds.user(0).friends.size(), 1u);
  EXPECT_EQ(ds.user(1).friends.size(), 1u);
}

TEST(SocialDataset, DanglingFriendNamesTheId) {
  try {
    SocialDataset::from_records(two_cities(), {rec("u1", "paris", {}, {}, {"ghost"})});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(SocialDataset, RejectsBadRecords) {
  EXPECT_THROW(SocialDataset::from_records(two_cities(), {rec("u1", "paris"), rec("u1", "evry")}),
               ValidationError);
  EXPECT_THROW(SocialDataset::from_records({{"x", 91.0, 0.0}}, {}), ValidationError);
  EXPECT_THROW(SocialDataset::from_records({{"x", 0.0, 181.0}}, {}), ValidationError);
  EXPECT_THROW(SocialDataset::from_records(two_cities(), {rec("u1", "london")}), ValidationError);
  auto bad_kind = rec("u1", "paris");
  bad_kind.attrs["shoe_size"] = "42";
  EXPECT_THROW(SocialDataset::from_records(two_cities(), {bad_kind}), ValidationError);
}

TEST(SocialDataset, IdsAreSortedSoIndexOrderIsIdOrder) {
  auto ds = SocialDataset::from_records(two_cities(), {rec("b", "paris"), rec("a", "evry")});
  EXPECT_EQ(ds.user(0).id, "a");
  EXPECT_EQ(ds.location(0).id, "evry");
  EXPECT_EQ(*ds.user(0).current_city, *ds.find_location("evry"));
}

TEST(SocialDataset, EmptyStringIsNotNull) {
  auto ds = SocialDataset::from_records(two_cities(), {rec("u1", "paris", "", std::nullopt)});
  ASSERT_TRUE(ds.user(0).attrs[kHometown].has_value());
  EXPECT_EQ(*ds.user(0).attrs[kHometown], "");
  EXPECT_FALSE(ds.user(0).attrs[kWorkEducation].has_value());
}

TEST(PartitionUsers, Examples) {
  auto all = SocialDataset::from_records(two_cities(), {rec("u1", "paris"), rec("u2", "evry")});
  EXPECT_EQ(partition_users(all).la.size(), 2u);
  EXPECT_TRUE(partition_users(all).ln.empty());

  auto none = SocialDataset::from_records(two_cities(), {rec("u1", {}), rec("u2", {})});
  EXPECT_TRUE(partition_users(none).la.empty());
  EXPECT_EQ(partition_users(none).ln.size(), 2u);

  auto one = SocialDataset::from_records(
      two_cities(), {rec("u1", "paris"), rec("u2", {}), rec("u3", "evry")});
  auto p = partition_users(one);
  EXPECT_EQ(p.la, (std::vector<UserIndex>{0, 2}));
  EXPECT_EQ(p.ln, (std::vector<UserIndex>{1}));
}

TEST(FriendPartition, Examples) {
  auto ds = SocialDataset::from_records(
      two_cities(), {rec("u", {}, {}, {}, {"f1", "f2"}), rec("f1", "paris"), rec("f2", {}),
                     rec("lonely", "paris"), rec("g", {}, {}, {}, {"h"}), rec("h", "evry")});
  EXPECT_TRUE(friend_partition(ds, "lonely").la.empty());
  EXPECT_TRUE(friend_partition(ds, "lonely").ln.empty());
  auto g = friend_partition(ds, "g");
  EXPECT_EQ(g.la, std::vector<UserIndex>{ds.user_index("h")});
  EXPECT_TRUE(g.ln.empty());
  auto u = friend_partition(ds, "u");
  EXPECT_EQ(u.la, std::vector<UserIndex>{ds.user_index("f1")});
  EXPECT_EQ(u.ln, std::vector<UserIndex>{ds.user_index("f2")});
  EXPECT_THROW(friend_partition(ds, "nobody"), UnknownUser);
}

TEST(SocialDataset, WithHiddenCitiesMasksOnlyThoseUsers) {
  auto ds = SocialDataset::from_records(two_cities(), {rec("u1", "paris"), rec("u2", "evry")});
  std::vector<UserIndex> hide = {0};
  auto masked = ds.with_hidden_cities(hide);
  EXPECT_FALSE(masked.is_la(0));
  EXPECT_TRUE(masked.is_la(1));
  EXPECT_TRUE(ds.is_la(0));
}

TEST(DatasetIo, JsonlRoundTrip) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto ds = testing::random_dataset(rng);
    std::stringstream ss;
    write_jsonl(ds, ss);
    EXPECT_EQ(read_jsonl(ss), ds);
  }
}

TEST(DatasetIo, CsvRoundTripKeepsNullDistinctFromEmpty) {
  auto ds = SocialDataset::from_records(
      two_cities(), {rec("u1", "paris", "", std::nullopt, {"u2"}),
                     rec("u2", {}, "a \"quoted\", value", "x")});
  std::stringstream l, u, e;
  write_csv_bundle(ds, l, u, e);
  EXPECT_EQ(read_csv_bundle(l, u, e), ds);

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = testing::random_dataset(rng);
    std::stringstream l2, u2, e2;
    write_csv_bundle(r, l2, u2, e2);
    EXPECT_EQ(read_csv_bundle(l2, u2, e2), r);
  }
}

TEST(DatasetIo, FileRoundTripBothFormats) {
  testing::TempDir dir;
  Rng rng(5);
  auto ds = testing::random_dataset(rng);
  save_dataset(ds, dir / "d.jsonl", DatasetFormat::kJsonl);
  save_dataset(ds, dir / "csv", DatasetFormat::kCsvBundle);
  EXPECT_EQ(load_dataset(dir / "d.jsonl", DatasetFormat::kJsonl), ds);
  EXPECT_EQ(load_dataset(dir / "csv", DatasetFormat::kCsvBundle), ds);
  EXPECT_THROW(load_dataset(dir / "missing.jsonl", DatasetFormat::kJsonl), DataError);
}

TEST(DatasetIo, ParseErrorsCarryLineNumbers) {
  std::stringstream ss(
      "{\"type\":\"location\",\"id\":\"c\",\"lat\":1,\"lon\":2}\n"
      "\n"
      "{\"type\":\"user\",\"id\":\"u\"\n");
  try {
    read_jsonl(ss);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream bad_type("{\"type\":\"planet\",\"id\":\"p\"}\n");
  EXPECT_THROW(read_jsonl(bad_type), ParseError);
  std::stringstream loc("id,lat,lon\nc,1,north\n"), users("id,current_city\n"), edges("a,b\n");
  try {
    read_csv_bundle(loc, users, edges);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(DatasetIo, FormatNames) {
  EXPECT_EQ(parse_dataset_format("jsonl"), DatasetFormat::kJsonl);
  EXPECT_EQ(parse_dataset_format("csv"), DatasetFormat::kCsvBundle);
  EXPECT_EQ(parse_dataset_format("csv-bundle"), DatasetFormat::kCsvBundle);
  EXPECT_THROW(parse_dataset_format("xml"), ConfigError);
}

}  // namespace
}  // namespace cityexpo
