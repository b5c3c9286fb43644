#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "odm/env.hpp"

namespace fs = std::filesystem;
using odm::ActionId;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("odm_env_" + name);
  std::ofstream(p) << text;
  return p;
}

std::array<double, 3> class_frequencies(double q, int n, std::uint64_t seed) {
  odm::Rng rng(seed);
  std::array<double, 3> f{};
  const odm::GaussSineParams p{q};
  for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(odm::gauss_sine_draw(p, rng).y.index)] += 1.0 / n;
  return f;
}

}  // namespace

TEST(GaussSine, OriginMapsToMiddleClass) { EXPECT_EQ(odm::gauss_sine_label(0.0, 0.0, 0.0, 0.0), ActionId(1)); }

TEST(GaussSine, LabelsClampedToRange) {
  EXPECT_EQ(odm::gauss_sine_label(std::numbers::pi / 2, 0.0, 0.0, 0.5), ActionId(2));
  EXPECT_EQ(odm::gauss_sine_label(-std::numbers::pi / 2, 0.0, 0.0, -0.5), ActionId(0));
}

TEST(GaussSine, DrawsAreTwoDimensionalAndInRange) {
  odm::Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto e = odm::gauss_sine_draw({0.0}, rng);
    ASSERT_EQ(e.x.size(), 2);
    ASSERT_GE(e.y.index, 0);
    ASSERT_LE(e.y.index, 2);
  }
}

// Class frequencies frozen from an independent 10^6-draw Monte-Carlo run.
TEST(GaussSine, ClassFrequenciesMatchMonteCarlo) {
  const auto f = class_frequencies(0.0, 100000, 11);
  EXPECT_NEAR(f[0], 0.2816, 0.006);
  EXPECT_NEAR(f[1], 0.3419, 0.006);
  EXPECT_NEAR(f[2], 0.3765, 0.006);
  for (double v : f) EXPECT_GT(v, 0.0);
  EXPECT_GT(f[2], f[1]);
  EXPECT_GT(f[1], f[0]);
}

TEST(GaussSine, SmallNoiseIsCloseToNoiseFree) {
  const auto a = class_frequencies(0.0, 100000, 3);
  const auto b = class_frequencies(0.01, 100000, 4);
  double tv = 0.0;
  for (int k = 0; k < 3; ++k) tv += 0.5 * std::abs(a[static_cast<std::size_t>(k)] - b[static_cast<std::size_t>(k)]);
  EXPECT_LT(tv, 0.02);
}

TEST(GaussSine, HalfNoiseFrequencies) {
  const auto f = class_frequencies(0.5, 100000, 5);
  EXPECT_NEAR(f[0], 0.2801, 0.006);
  EXPECT_NEAR(f[1], 0.3469, 0.006);
  EXPECT_NEAR(f[2], 0.3730, 0.006);
}

TEST(GaussSine, SameSeedSameStream) {
  odm::Rng a(99), b(99);
  for (int i = 0; i < 500; ++i) {
    const auto ea = odm::gauss_sine_draw({0.2}, a);
    const auto eb = odm::gauss_sine_draw({0.2}, b);
    ASSERT_EQ(ea.y, eb.y);
    ASSERT_EQ(ea.x, eb.x);
  }
}

TEST(Human, NoPerturbation) {
  odm::Rng rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(odm::human_action(ActionId(i % 3), {0.0}, 3, rng), ActionId(i % 3));
}

TEST(Human, ForcedFlipForTwoClasses) {
  odm::Rng rng(2);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(odm::human_action(ActionId(i % 2), {1.0}, 2, rng), ActionId(1 - i % 2));
}

TEST(Human, ErrorRateIsAlpha) {
  odm::Rng rng(3);
  const int n = 100000;
  int wrong = 0;
  std::array<int, 3> picks{};
  for (int i = 0; i < n; ++i) {
    const ActionId h = odm::human_action(ActionId(0), {0.5}, 3, rng);
    wrong += h != ActionId(0);
    ++picks[static_cast<std::size_t>(h.index)];
  }
  EXPECT_NEAR(static_cast<double>(wrong) / n, 0.5, 0.01);
  EXPECT_NEAR(static_cast<double>(picks[1]) / n, 0.25, 0.01);
  EXPECT_NEAR(static_cast<double>(picks[2]) / n, 0.25, 0.01);
}

TEST(Tabular, LabelsInFirstAppearanceOrder) {
  const auto p = write_temp("toy.csv", "f1,f2,label\n1,2,a\n2,3,b\n3,5,a\n4,7,b\n");
  const auto pool = odm::read_tabular_pool({p, "label", {}, '\0'});
  EXPECT_EQ(pool.num_classes(), 2);
  EXPECT_EQ(pool.class_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(pool.labels, (std::vector<ActionId>{ActionId(0), ActionId(1), ActionId(0), ActionId(1)}));
  EXPECT_EQ(pool.features.cols(), 2);
}

TEST(Tabular, LabelOrderFollowsFileNotName) {
  const auto p = write_temp("rev.csv", "x,y\n0,zebra\n1,apple\n");
  const auto pool = odm::read_tabular_pool({p, "y", {}, '\0'});
  EXPECT_EQ(pool.class_names, (std::vector<std::string>{"zebra", "apple"}));
}

TEST(Tabular, FeaturesStandardized) {
  const auto p = write_temp("std.csv", "a,b,c,label\n1,10,5,x\n2,20,5,y\n3,30,5,x\n4,40,5,y\n5,50,5,x\n");
  const auto pool = odm::read_tabular_pool({p, "label", {}, '\0'});
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto col = pool.features.col(j);
    EXPECT_NEAR(col.mean(), 0.0, 1e-12);
    EXPECT_NEAR((col.array() - col.mean()).square().mean(), 1.0, 1e-12);
  }
  EXPECT_TRUE(pool.features.col(2).isZero());
}

TEST(Tabular, TabDelimiterSniffed) {
  const auto p = write_temp("toy.tsv", "f1\tlabel\n1\ta\n2\tb\n");
  const auto pool = odm::read_tabular_pool({p, "label", {}, '\0'});
  EXPECT_EQ(pool.size(), 2);
  EXPECT_EQ(pool.features.cols(), 1);
}

TEST(Tabular, FeatureColumnSelection) {
  const auto p = write_temp("sel.csv", "f1,f2,f3,label\n1,2,3,a\n2,3,1,b\n");
  const auto pool = odm::read_tabular_pool({p, "label", {"f3", "f1"}, '\0'});
  EXPECT_EQ(pool.feature_names, (std::vector<std::string>{"f3", "f1"}));
}

TEST(Tabular, DistinctErrors) {
  auto kind_of = [](const std::function<void()>& f) {
    try {
      f();
    } catch (const odm::TabularError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no TabularError";
    return odm::TabularErrorKind::Malformed;
  };
  EXPECT_EQ(kind_of([] { odm::read_tabular_pool({"/nonexistent/file.csv", "label", {}, '\0'}); }),
            odm::TabularErrorKind::MissingFile);
  const auto toy = write_temp("err.csv", "f1,label\n1,a\n2,b\n3,a\n4,b\n");
  EXPECT_EQ(kind_of([&] { odm::read_tabular_pool({toy, "nope", {}, '\0'}); }), odm::TabularErrorKind::UnknownColumn);
  const auto nan = write_temp("nan.csv", "f1,label\n1,a\nnan,b\n");
  EXPECT_EQ(kind_of([&] { odm::read_tabular_pool({nan, "label", {}, '\0'}); }), odm::TabularErrorKind::NonFiniteValue);
  odm::Rng rng(1);
  const auto pool = odm::read_tabular_pool({toy, "label", {}, '\0'});
  try {
    odm::sample_tabular(pool, 10, 0, rng);
    FAIL();
  } catch (const odm::TabularError& e) {
    EXPECT_EQ(e.kind(), odm::TabularErrorKind::InsufficientExamples);
    EXPECT_NE(std::string(e.what()).find("insufficient examples"), std::string::npos);
  }
}

TEST(Tabular, HeldoutDisjointFromStream) {
  std::string text = "id,label\n";
  for (int i = 0; i < 50; ++i) text += std::to_string(i) + "," + (i % 3 == 0 ? "a" : "b") + "\n";
  const auto p = write_temp("disj.csv", text);
  const auto pool = odm::read_tabular_pool({p, "label", {}, '\0'});
  odm::Rng rng(5);
  const auto env = odm::sample_tabular(pool, 30, 2000, rng);
  EXPECT_EQ(env.examples.size(), 30u);
  EXPECT_EQ(env.heldout.size(), 20u);
  EXPECT_EQ(env.m, 2);
  std::set<double> seen;
  for (const auto& e : env.examples) seen.insert(e.x(0));
  for (const auto& e : env.heldout) EXPECT_FALSE(seen.contains(e.x(0)));
  EXPECT_EQ(seen.size(), 30u);
}
