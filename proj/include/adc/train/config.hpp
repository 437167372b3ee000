#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <json.hpp>

#include "adc/error.hpp"
#include "adc/model/encdec_critic.hpp"
#include "adc/nn/adam.hpp"

namespace adc {

enum class RewardMetric { kRougeL, kBleu1, kBleu2, kBleu3, kBleu4 };

inline std::string to_string(RewardMetric m) {
  switch (m) {
    case RewardMetric::kRougeL: return "rouge_l";
    case RewardMetric::kBleu1: return "bleu1";
    case RewardMetric::kBleu2: return "bleu2";
    case RewardMetric::kBleu3: return "bleu3";
    case RewardMetric::kBleu4: return "bleu4";
  }
  return "?";
}

inline RewardMetric parse_reward_metric(const std::string& s) {
  if (s == "rouge_l") return RewardMetric::kRougeL;
  if (s == "bleu1") return RewardMetric::kBleu1;
  if (s == "bleu2") return RewardMetric::kBleu2;
  if (s == "bleu3") return RewardMetric::kBleu3;
  if (s == "bleu4") return RewardMetric::kBleu4;
  throw ValidationError("unknown reward metric '" + s + "'");
}

struct TrainConfig {
  int total_epochs = 100;
  int episodes_per_epoch = 0;  // 0: one pass over the train split
  int pretrain_epochs_actor = 20;
  int pretrain_epochs_critics = 20;
  RewardMetric reward_metric = RewardMetric::kRougeL;
  double gamma = 1.0;
  int T_max = 20;
  AdamConfig adam;
  DeltaSchedule delta_schedule;  // total_epochs follows total_epochs unless set explicitly
  std::uint64_t seed = 1;
  int checkpoint_every = 1;
  // model and data
  long hidden_size = 256;
  double dropout = 0.2;
  int min_count = 1;

  void validate() const {
    if (total_epochs < 1) throw ValidationError("config: total_epochs must be >= 1");
    if (episodes_per_epoch < 0) throw ValidationError("config: episodes_per_epoch must be >= 0");
    if (pretrain_epochs_actor < 0 || pretrain_epochs_critics < 0)
      throw ValidationError("config: pretraining epochs must be >= 0");
    if (gamma != 1.0) throw ValidationError("config: gamma must be 1.0 (terminal-only rewards)");
    if (T_max < 1) throw ValidationError("config: T_max must be >= 1");
    if (checkpoint_every < 1) throw ValidationError("config: checkpoint_every must be >= 1");
    if (hidden_size < 1) throw ValidationError("config: hidden_size must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("config: dropout must lie in [0, 1)");
    if (min_count < 1) throw ValidationError("config: min_count must be >= 1");
    adam.validate();
    delta_schedule.validate();
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"total_epochs", c.total_epochs},
      {"episodes_per_epoch", c.episodes_per_epoch},
      {"pretrain_epochs_actor", c.pretrain_epochs_actor},
      {"pretrain_epochs_critics", c.pretrain_epochs_critics},
      {"reward_metric", to_string(c.reward_metric)},
      {"gamma", c.gamma},
      {"T_max", c.T_max},
      {"adam",
       {{"lr", c.adam.lr},
        {"beta1", c.adam.beta1},
        {"beta2", c.adam.beta2},
        {"eps", c.adam.eps},
        {"decay_factor", c.adam.decay_factor},
        {"decay_every", c.adam.decay_every}}},
      {"delta_schedule",
       {{"start", c.delta_schedule.start},
        {"end", c.delta_schedule.end},
        {"total_epochs", c.delta_schedule.total_epochs}}},
      {"seed", c.seed},
      {"checkpoint_every", c.checkpoint_every},
      {"hidden_size", c.hidden_size},
      {"dropout", c.dropout},
      {"min_count", c.min_count},
  };
}

/// Reads known keys over the defaults; unknown keys are rejected so typos
/// do not silently fall back to defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  bool delta_epochs_set = false;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "total_epochs") c.total_epochs = v.get<int>();
      else if (key == "episodes_per_epoch") c.episodes_per_epoch = v.get<int>();
      else if (key == "pretrain_epochs_actor") c.pretrain_epochs_actor = v.get<int>();
      else if (key == "pretrain_epochs_critics") c.pretrain_epochs_critics = v.get<int>();
      else if (key == "reward_metric") c.reward_metric = parse_reward_metric(v.get<std::string>());
      else if (key == "gamma") c.gamma = v.get<double>();
      else if (key == "T_max") c.T_max = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "checkpoint_every") c.checkpoint_every = v.get<int>();
      else if (key == "hidden_size") c.hidden_size = v.get<long>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "min_count") c.min_count = v.get<int>();
      else if (key == "adam") {
        c.adam.lr = v.value("lr", c.adam.lr);
        c.adam.beta1 = v.value("beta1", c.adam.beta1);
        c.adam.beta2 = v.value("beta2", c.adam.beta2);
        c.adam.eps = v.value("eps", c.adam.eps);
        c.adam.decay_factor = v.value("decay_factor", c.adam.decay_factor);
        c.adam.decay_every = v.value("decay_every", c.adam.decay_every);
      } else if (key == "delta_schedule") {
        c.delta_schedule.start = v.value("start", c.delta_schedule.start);
        c.delta_schedule.end = v.value("end", c.delta_schedule.end);
        if (v.contains("total_epochs")) {
          c.delta_schedule.total_epochs = v.at("total_epochs").get<int>();
          delta_epochs_set = true;
        }
      } else {
        throw ParseError("config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!delta_epochs_set) c.delta_schedule.total_epochs = c.total_epochs;
  c.validate();
  return c;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace adc
