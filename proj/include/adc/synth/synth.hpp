#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adc/error.hpp"
#include "adc/nn/rng.hpp"
#include "adc/text/dataset.hpp"

namespace adc::synth {

struct ClassWords {
  std::string name;
  std::vector<std::string> adjectives;
  std::vector<std::string> nouns;
};

/// Per-class word lists plus words shared by every class.
struct VocabPool {
  std::vector<ClassWords> classes;
  std::vector<std::string> articles;
  std::vector<std::string> relations;
  std::vector<std::string> shared_nouns;

  /// Scene classes with deliberately overlapping adjectives.
  static VocabPool remote_sensing() {
    VocabPool p;
    p.classes = {
        {"airport", {"large", "gray", "busy"}, {"airport", "runway"}},
        {"beach", {"sandy", "yellow", "long"}, {"beach", "coast"}},
        {"farmland", {"green", "square", "large"}, {"farmland", "fields"}},
        {"forest", {"dense", "dark", "green"}, {"forest", "woods"}},
        {"harbor", {"busy", "blue", "crowded"}, {"harbor", "port"}},
        {"industrial", {"gray", "large", "flat"}, {"factory", "warehouse"}},
        {"meadow", {"open", "green", "quiet"}, {"meadow", "grassland"}},
        {"parking", {"crowded", "paved", "large"}, {"parkinglot", "carpark"}},
        {"residential", {"dense", "quiet", "red"}, {"neighborhood", "suburb"}},
        {"river", {"winding", "blue", "long"}, {"river", "stream"}},
        {"desert", {"bare", "yellow", "dry"}, {"desert", "dunes"}},
        {"mountain", {"steep", "dark", "rocky"}, {"mountain", "ridge"}},
        {"stadium", {"round", "large", "white"}, {"stadium", "arena"}},
        {"bridge", {"long", "narrow", "white"}, {"bridge", "viaduct"}},
        {"pond", {"small", "round", "blue"}, {"pond", "lake"}},
        {"church", {"old", "white", "tall"}, {"church", "chapel"}},
    };
    p.articles = {"a", "the"};
    p.relations = {"near", "beside", "with", "around", "along"};
    p.shared_nouns = {"roads", "buildings", "trees", "water", "houses", "cars"};
    return p;
  }
};

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SynthConfig {
  int num_classes = 8;
  int images_per_class = 40;
  int captions_per_image = 5;
  long feature_dim = 256;
  double noise_sigma = 0.05;
  VocabPool vocab_pool = VocabPool::remote_sensing();
  std::uint64_t seed = 1;
  SplitFractions split;

  void validate() const {
    if (num_classes < 2) throw ValidationError("synth: num_classes must be >= 2");
    if (images_per_class < 1) throw ValidationError("synth: images_per_class must be >= 1");
    if (captions_per_image < 1) throw ValidationError("synth: captions_per_image must be >= 1");
    if (feature_dim < 1) throw ValidationError("synth: feature_dim must be >= 1");
    if (!(noise_sigma >= 0.0)) throw ValidationError("synth: noise_sigma must be >= 0");
    if (split.train < 0 || split.val < 0 || split.test < 0 ||
        std::abs(split.train + split.val + split.test - 1.0) > 1e-9)
      throw ValidationError("synth: split fractions must be non-negative and sum to 1");
    if (static_cast<std::size_t>(num_classes) > vocab_pool.classes.size())
      throw ValidationError("synth: vocab_pool has " + std::to_string(vocab_pool.classes.size()) +
                            " classes, config asks for " + std::to_string(num_classes));
    for (int c = 0; c < num_classes; ++c) {
      const auto& cw = vocab_pool.classes[static_cast<std::size_t>(c)];
      if (cw.adjectives.empty() || cw.nouns.empty())
        throw ValidationError("synth: vocab_pool class '" + cw.name + "' needs adjectives and nouns");
    }
    if (vocab_pool.articles.empty() || vocab_pool.relations.empty() || vocab_pool.shared_nouns.empty())
      throw ValidationError("synth: vocab_pool needs articles, relations and shared_nouns");
  }
};

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    c.num_classes = j.value("num_classes", c.num_classes);
    c.images_per_class = j.value("images_per_class", c.images_per_class);
    c.captions_per_image = j.value("captions_per_image", c.captions_per_image);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.seed = j.value("seed", c.seed);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split = {s.value("train", 0.0), s.value("val", 0.0), s.value("test", 0.0)};
    }
    if (j.contains("vocab_pool")) {
      const auto& v = j.at("vocab_pool");
      VocabPool p;
      for (const auto& cls : v.at("classes"))
        p.classes.push_back({cls.at("name").get<std::string>(), cls.at("adjectives").get<std::vector<std::string>>(),
                             cls.at("nouns").get<std::vector<std::string>>()});
      p.articles = v.at("articles").get<std::vector<std::string>>();
      p.relations = v.at("relations").get<std::vector<std::string>>();
      p.shared_nouns = v.at("shared_nouns").get<std::vector<std::string>>();
      c.vocab_pool = std::move(p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

inline Vector normalized(Vector v) {
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : v;
}

/// Interleaves splits within a class so each prefix of images tracks the
/// requested fractions (largest deficit first, ties in train/val/test order).
inline std::vector<Split> assign_splits(int n, const SplitFractions& f) {
  const double frac[3] = {f.train, f.val, f.test};
  const Split tags[3] = {Split::kTrain, Split::kVal, Split::kTest};
  double assigned[3] = {0, 0, 0};
  std::vector<Split> out;
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double best_deficit = -1e300;
    for (int s = 0; s < 3; ++s) {
      if (frac[s] <= 0.0) continue;
      const double deficit = frac[s] * (i + 1) - assigned[s];
      if (deficit > best_deficit + 1e-12) {
        best_deficit = deficit;
        best = s;
      }
    }
    assigned[best] += 1.0;
    out.push_back(tags[best]);
  }
  return out;
}

/// Deterministic dataset: unit-norm class prototypes, per-image gaussian
/// noise, captions filled from "<article> <adjective> <noun> <relation> <shared-noun>".
inline std::vector<CaptionedExample> generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const long F = cfg.feature_dim;
  std::vector<Vector> prototypes;
  for (int c = 0; c < cfg.num_classes; ++c) {
    Vector p(F);
    for (long d = 0; d < F; ++d) p[d] = rng.normal();
    prototypes.push_back(normalized(p));
  }
  const auto pick = [&rng](const std::vector<std::string>& words) -> const std::string& {
    return words[rng.below(words.size())];
  };

  std::vector<CaptionedExample> out;
  const auto splits = assign_splits(cfg.images_per_class, cfg.split);
  for (int c = 0; c < cfg.num_classes; ++c) {
    const ClassWords& cw = cfg.vocab_pool.classes[static_cast<std::size_t>(c)];
    for (int i = 0; i < cfg.images_per_class; ++i) {
      CaptionedExample ex;
      std::ostringstream id;
      id << cw.name << '_' << std::setw(3) << std::setfill('0') << i;
      ex.id = id.str();
      ex.class_label = cw.name;
      ex.split = splits[static_cast<std::size_t>(i)];
      Vector f = prototypes[static_cast<std::size_t>(c)];
      for (long d = 0; d < F; ++d) f[d] += cfg.noise_sigma * rng.normal();
      ex.features = normalized(f);
      for (int k = 0; k < cfg.captions_per_image; ++k) {
        std::string s = pick(cfg.vocab_pool.articles);
        s += ' ' + pick(cw.adjectives);
        s += ' ' + pick(cw.nouns);
        s += ' ' + pick(cfg.vocab_pool.relations);
        s += ' ' + pick(cfg.vocab_pool.shared_nouns);
        ex.raw_captions.push_back(std::move(s));
      }
      out.push_back(std::move(ex));
    }
  }
  return out;
}

inline void write_jsonl(const std::string& path, const std::vector<CaptionedExample>& examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_dataset(out, examples);
  if (!out) throw IoError("failed writing '" + path + "'");
}

/// Generates in memory and runs the loader's encoding path.
inline Dataset generate_dataset(const SynthConfig& cfg, const LoadOptions& opts = {}) {
  std::stringstream buf;
  write_dataset(buf, generate(cfg));
  return parse_dataset(buf, opts, "<synth>");
}

}  // namespace adc::synth
