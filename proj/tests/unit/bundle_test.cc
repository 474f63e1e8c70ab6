#include <fstream>

#include <gtest/gtest.h>

#include "cityexpo/bundle.h"
#include "cityexpo/errors.h"
#include "cityexpo/synth.h"
#include "testing.h"

namespace cityexpo {
namespace {

using testing::small_bundle;

TEST(Bundle, JsonRoundTripPreservesEverything) {
  const auto& b = small_bundle();
  EXPECT_EQ(b.id.size(), 16u);
  const std::string text = to_json(b).dump();
  auto back = bundle_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.id, b.id);
  EXPECT_EQ(to_json(back).dump(), text);
  EXPECT_EQ(back.model.locations, b.model.locations);
  EXPECT_EQ(back.model.weights.mu, b.model.weights.mu);
  EXPECT_EQ(back.exposure_k_grid, b.exposure_k_grid);
}

TEST(Bundle, FileRoundTripAndIdentity) {
  const auto& b = small_bundle();
  testing::TempDir dir;
  save_bundle(b, dir / "m.json");
  auto loaded = load_bundle(dir / "m.json");
  EXPECT_EQ(loaded.id, b.id);
  save_bundle(loaded, dir / "again.json");
  EXPECT_EQ(testing::read_file(dir / "m.json"), testing::read_file(dir / "again.json"));
}

TEST(Bundle, LoadedModelPredictsIdentically) {
  const auto& b = small_bundle();
  auto back = bundle_from_json(nlohmann::json::parse(to_json(b).dump()));
  auto ds = generate_world(testing::small_world_config()).masked;
  for (UserIndex u = 0; u < ds.num_users(); u += 13) {
    auto p = profile_of(ds, u);
    auto r1 = estimate_exposure(p, b.model, b.exposure, 40);
    auto r2 = estimate_exposure(p, back.model, back.exposure, 40);
    EXPECT_EQ(to_json(r1).dump(), to_json(r2).dump());
  }
}

TEST(Bundle, RejectsBadInput) {
  const auto& b = small_bundle();
  auto j = nlohmann::json::parse(to_json(b).dump());
  auto wrong_version = j;
  wrong_version["format_version"] = 99;
  EXPECT_THROW(bundle_from_json(wrong_version), BundleError);
  auto tampered = j;
  tampered["weights"]["mu"][0] = 123.0;
  EXPECT_THROW(bundle_from_json(tampered), BundleError);
  auto missing = j;
  missing.erase("exposure");
  EXPECT_THROW(bundle_from_json(missing), BundleError);
  EXPECT_THROW(bundle_from_json(nlohmann::json::array()), BundleError);

  testing::TempDir dir;
  EXPECT_THROW(load_bundle(dir / "absent.json"), BundleError);
  std::ofstream(dir / "junk.json") << "{not json";
  EXPECT_THROW(load_bundle(dir / "junk.json"), BundleError);
}

TEST(Bundle, TrainingIsDeterministic) {
  WorldConfig wc;
  wc.n_users = 250;
  wc.n_cities = 15;
  wc.n_orgs = 20;
  BundleOptions opt;
  opt.forest.trees = 10;
  auto ds = generate_world(wc).masked;
  EXPECT_EQ(train_bundle(ds, PipelineConfig{}, opt).id, train_bundle(ds, PipelineConfig{}, opt).id);
}

}  // namespace
}  // namespace cityexpo
