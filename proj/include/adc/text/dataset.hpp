#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adc/error.hpp"
#include "adc/nn/types.hpp"
#include "adc/text/vocabulary.hpp"

namespace adc {

enum class Split { kTrain, kVal, kTest };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split '" + s + "' (expected train, val or test)");
}

struct CaptionedExample {
  std::string id;
  std::string class_label;
  Split split = Split::kTrain;
  Vector features;
  std::vector<std::string> raw_captions;
  std::vector<Tokens> captions;  // each terminated by Vocabulary::kEnd
};

struct Dataset {
  Vocabulary vocabulary;
  long feature_dim = 0;
  std::vector<CaptionedExample> examples;

  std::vector<std::size_t> indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < examples.size(); ++i)
      if (examples[i].split == s) out.push_back(i);
    return out;
  }

  const CaptionedExample& by_id(const std::string& id) const {
    for (const auto& ex : examples)
      if (ex.id == id) return ex;
    throw ValidationError("no example with id '" + id + "'");
  }
};

struct LoadOptions {
  std::optional<long> expected_feature_dim;
  int min_count = 1;
  int max_caption_tokens = 20;  // including the end token
};

/// Re-encodes raw captions against `vocab` and checks the length cap.
inline void encode_captions(Dataset& ds, int max_caption_tokens) {
  for (auto& ex : ds.examples) {
    ex.captions.clear();
    for (const auto& raw : ex.raw_captions) {
      Tokens ids = ds.vocabulary.encode(tokenize(raw));
      ids.push_back(Vocabulary::kEnd);
      if (static_cast<int>(ids.size()) > max_caption_tokens)
        throw ValidationError("example '" + ex.id + "': caption '" + raw + "' has " +
                              std::to_string(ids.size()) + " tokens, limit is " +
                              std::to_string(max_caption_tokens));
      ex.captions.push_back(std::move(ids));
    }
  }
}

/// Parses the JSON Lines dataset format. Unknown keys are ignored. The
/// vocabulary is built from train-split captions only.
inline Dataset parse_dataset(std::istream& in, const LoadOptions& opts = {},
                             const std::string& source = "<stream>") {
  Dataset ds;
  std::string line;
  long line_no = 0;
  std::optional<long> dim = opts.expected_feature_dim;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": malformed JSON: " + e.what());
    }
    CaptionedExample ex;
    try {
      if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
      ex.id = j.at("id").get<std::string>();
      ex.class_label = j.value("class", std::string{});
      ex.split = parse_split(j.value("split", std::string("train")));
      const auto& feats = j.at("features");
      if (!feats.is_array()) throw ParseError(where + ": 'features' must be an array");
      ex.features.resize(static_cast<long>(feats.size()));
      for (std::size_t k = 0; k < feats.size(); ++k) ex.features[static_cast<long>(k)] = feats[k].get<double>();
      ex.raw_captions = j.at("captions").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!ex.features.allFinite())
      throw ValidationError(where + ": example '" + ex.id + "' has non-finite features");
    if (ex.raw_captions.empty())
      throw ValidationError(where + ": example '" + ex.id + "' has an empty caption list");
    if (!dim) dim = ex.features.size();
    if (ex.features.size() != *dim)
      throw ShapeError(where + ": example '" + ex.id + "' has " + std::to_string(ex.features.size()) +
                       " features, expected " + std::to_string(*dim));
    ds.examples.push_back(std::move(ex));
  }
  ds.feature_dim = dim.value_or(0);

  std::vector<std::vector<std::string>> corpus;
  for (const auto& ex : ds.examples)
    if (ex.split == Split::kTrain)
      for (const auto& raw : ex.raw_captions) corpus.push_back(tokenize(raw));
  ds.vocabulary = Vocabulary::build(corpus, opts.min_count);
  encode_captions(ds, opts.max_caption_tokens);
  return ds;
}

inline Dataset load_dataset(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return parse_dataset(in, opts, path);
}

inline nlohmann::json example_to_json(const CaptionedExample& ex) {
  nlohmann::json j;
  j["id"] = ex.id;
  j["class"] = ex.class_label;
  j["split"] = to_string(ex.split);
  j["features"] = std::vector<double>(ex.features.data(), ex.features.data() + ex.features.size());
  j["captions"] = ex.raw_captions;
  return j;
}

inline void write_dataset(std::ostream& out, const std::vector<CaptionedExample>& examples) {
  for (const auto& ex : examples) out << example_to_json(ex).dump() << '\n';
}

}  // namespace adc
