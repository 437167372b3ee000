#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "adc/adc.hpp"

using namespace adc;
using namespace adc::synth;

namespace {

std::string jsonl(const SynthConfig& c) {
  std::ostringstream out;
  write_dataset(out, generate(c));
  return out.str();
}

double cosine(const Vector& a, const Vector& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST(Synth, SameSeedSameBytes) {
  SynthConfig c;
  c.num_classes = 3;
  c.images_per_class = 4;
  c.feature_dim = 16;
  EXPECT_EQ(jsonl(c), jsonl(c));
  SynthConfig other = c;
  other.seed = 2;
  EXPECT_NE(jsonl(c), jsonl(other));
}

TEST(Synth, ZeroNoiseSharesClassFeatures) {
  SynthConfig c;
  c.num_classes = 3;
  c.images_per_class = 5;
  c.feature_dim = 32;
  c.noise_sigma = 0.0;
  const auto ex = generate(c);
  for (const auto& e : ex) {
    EXPECT_NEAR(e.features.norm(), 1.0, 1e-12);
    for (const auto& o : ex)
      if (o.class_label == e.class_label) EXPECT_EQ(o.features, e.features);
  }
}

TEST(Synth, PrototypesNearlyOrthogonal) {
  SynthConfig c;
  c.num_classes = 2;
  c.images_per_class = 1;
  c.feature_dim = 256;
  c.noise_sigma = 0.0;
  c.split = {1.0, 0.0, 0.0};
  double sum = 0.0, sum_abs = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    c.seed = seed;
    const auto ex = generate(c);
    const double cs = cosine(ex[0].features, ex[1].features);
    sum += cs;
    sum_abs += std::abs(cs);
  }
  // Each cosine has standard deviation about 1/sqrt(256).
  EXPECT_LT(std::abs(sum / 100.0), 0.02);
  EXPECT_LT(sum_abs / 100.0, 0.1);
}

TEST(Synth, WithinClassCloserThanBetween) {
  SynthConfig c;
  c.num_classes = 4;
  c.images_per_class = 6;
  c.feature_dim = 64;
  c.noise_sigma = 0.3;
  const auto ex = generate(c);
  double within = 0.0, between = 0.0;
  int nw = 0, nb = 0;
  for (std::size_t i = 0; i < ex.size(); ++i)
    for (std::size_t j = i + 1; j < ex.size(); ++j) {
      const double cs = cosine(ex[i].features, ex[j].features);
      if (ex[i].class_label == ex[j].class_label) {
        within += cs;
        ++nw;
      } else {
        between += cs;
        ++nb;
      }
    }
  EXPECT_GT(within / nw, between / nb);
}

TEST(Synth, OwnCorpusHasNoUnknownWords) {
  SynthConfig c;
  const Dataset ds = generate_dataset(c);
  for (const auto& e : ds.examples)
    for (const auto& cap : e.raw_captions) {
      const auto words = tokenize(cap);
      EXPECT_EQ(words.size(), 5u) << cap;
      for (const auto& w : words) EXPECT_TRUE(ds.vocabulary.contains(w)) << w;
    }
  EXPECT_LE(ds.vocabulary.size(), 100u);
}

TEST(Synth, SplitsAreExhaustiveAndFollowFractions) {
  const auto s = assign_splits(10, {0.8, 0.1, 0.1});
  ASSERT_EQ(s.size(), 10u);
  EXPECT_EQ(std::count(s.begin(), s.end(), Split::kTrain), 8);
  EXPECT_EQ(std::count(s.begin(), s.end(), Split::kVal), 1);
  EXPECT_EQ(std::count(s.begin(), s.end(), Split::kTest), 1);

  SynthConfig c;
  c.num_classes = 3;
  c.images_per_class = 7;
  c.feature_dim = 8;
  const Dataset ds = generate_dataset(c);
  std::set<std::size_t> seen;
  for (Split sp : {Split::kTrain, Split::kVal, Split::kTest})
    for (std::size_t i : ds.indices(sp)) EXPECT_TRUE(seen.insert(i).second);
  EXPECT_EQ(seen.size(), ds.examples.size());
}

TEST(Synth, ConfigValidation) {
  SynthConfig c;
  c.num_classes = 1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SynthConfig{};
  c.num_classes = 17;  // the built-in pool has 16 classes
  EXPECT_THROW(c.validate(), ValidationError);
  c = SynthConfig{};
  c.noise_sigma = -0.1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = SynthConfig{};
  c.split = {0.5, 0.2, 0.2};
  EXPECT_THROW(c.validate(), ValidationError);

  const SynthConfig j = synth_config_from_json(nlohmann::json{{"num_classes", 3}, {"seed", 9}});
  EXPECT_EQ(j.num_classes, 3);
  EXPECT_EQ(j.seed, 9u);
  EXPECT_THROW(synth_config_from_json(nlohmann::json{{"num_classes", "x"}}), ParseError);
}
