#include <gtest/gtest.h>

#include <sstream>

#include "adc/adc.hpp"

using namespace adc;

namespace {

Dataset tiny_dataset() {
  synth::SynthConfig sc;
  sc.num_classes = 2;
  sc.images_per_class = 5;
  sc.captions_per_image = 2;
  sc.feature_dim = 12;
  sc.seed = 3;
  return synth::generate_dataset(sc);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.total_epochs = 3;
  c.delta_schedule.total_epochs = 3;
  c.pretrain_epochs_actor = 2;
  c.pretrain_epochs_critics = 2;
  c.hidden_size = 8;
  c.T_max = 8;
  c.seed = 42;
  return c;
}

struct RunResult {
  std::string log;
  std::string checkpoint;
};

RunResult run(const Dataset& ds, const TrainConfig& cfg, int first_leg_epochs = -1) {
  std::ostringstream log;
  Session s = new_session(ds, cfg);
  RunOptions opts;
  opts.reward_log = &log;
  if (first_leg_epochs >= 0) {
    opts.max_epochs = first_leg_epochs;
    run_training(ds, cfg, s, opts);
    s = session_from_checkpoint(decode_checkpoint(encode_checkpoint(session_to_checkpoint(s, &cfg))));
    opts.max_epochs = -1;
  }
  run_training(ds, cfg, s, opts);
  return {log.str(), encode_checkpoint(session_to_checkpoint(s, &cfg))};
}

}  // namespace

TEST(ValueAdvantages, Examples) {
  EXPECT_EQ(value_advantages(0.8, {0.3, 0.3, 0.3}), std::vector<double>(3, 0.8 - 0.3));
  EXPECT_EQ(value_advantages(0.6, {0.6, 0.6}), std::vector<double>(2, 0.0));
  const auto a = value_advantages(0.0, {0.2, -0.1});
  EXPECT_DOUBLE_EQ(a[0], -0.2);
  EXPECT_DOUBLE_EQ(a[1], 0.1);
  EXPECT_THROW(value_advantages(0.5, {0.1}, 0.9), ValidationError);
  EXPECT_THROW(value_advantages(0.5, {0.1}, 1.0, 2), ValidationError);
}

TEST(ValueAdvantages, AppendingPerfectBaselineStepsAddsZeros) {
  const auto base = value_advantages(0.7, {0.1, 0.4});
  const auto longer = value_advantages(0.7, {0.1, 0.4, 0.7, 0.7});
  EXPECT_EQ(std::vector<double>(longer.begin(), longer.begin() + 2), base);
  EXPECT_EQ(longer[2], 0.0);
  EXPECT_EQ(longer[3], 0.0);
}

TEST(ComputeReward, Examples) {
  const Tokens ref = {4, 5, 6};
  EXPECT_DOUBLE_EQ(compute_reward(ref, {ref}, RewardMetric::kRougeL), 1.0);
  EXPECT_EQ(compute_reward({}, {ref}, RewardMetric::kRougeL), 0.0);
  EXPECT_EQ(compute_reward({}, {ref}, RewardMetric::kBleu1), 0.0);
  EXPECT_NEAR(compute_reward({4, 5, 6}, {{4, 5, 7}}, RewardMetric::kBleu1), 2.0 / 3.0, 1e-12);
  EXPECT_THROW(compute_reward(ref, {}, RewardMetric::kRougeL), ValidationError);
}

TEST(TrainEpisode, ZeroAdvantagesLeavePolicyUnchanged) {
  const Dataset ds = tiny_dataset();
  TrainConfig cfg = tiny_config();
  Rng rng(1);
  Models m(dims_for(ds, cfg), rng);
  // v = 0 and r_T = 0 give A_pi = 0; a zero reconstruction gives
  // A_gen = A_orig = 0 and so A_ed = 0.
  m.value.params().set_zero();
  m.encdec.params().set_zero();
  m.encdec.params().find("proj_norm.bias")->value.setConstant(1.0);
  const ParamStore before = m.actor.params();
  auto zero_reward = [](const Tokens&, const std::vector<Tokens>&) { return 0.0; };
  const RewardRecord rec = train_episode(m, ds.examples[0], cfg, 0, rng, zero_reward);
  EXPECT_EQ(rec.mean_adv_pi, 0.0);
  EXPECT_EQ(rec.a_ed, 0.0);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(m.actor.params().at(i).value, before.at(i).value);
}

TEST(TrainEpisode, SameSeedSameRecord) {
  const Dataset ds = tiny_dataset();
  const TrainConfig cfg = tiny_config();
  auto once = [&] {
    Rng rng(5);
    Models m(dims_for(ds, cfg), rng);
    return train_episode(m, ds.examples[1], cfg, 0, rng);
  };
  const RewardRecord a = once(), b = once();
  EXPECT_EQ(a.r_T, b.r_T);
  EXPECT_EQ(a.a_ed, b.a_ed);
  EXPECT_EQ(a.policy_loss_pi, b.policy_loss_pi);
  EXPECT_EQ(a.policy_loss_ed, b.policy_loss_ed);
}

TEST(Training, DeterministicAndRowPerEpisode) {
  const Dataset ds = tiny_dataset();
  const TrainConfig cfg = tiny_config();
  const RunResult a = run(ds, cfg), b = run(ds, cfg);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.checkpoint, b.checkpoint);
  const long rows = std::count(a.log.begin(), a.log.end(), '\n');
  EXPECT_EQ(rows, static_cast<long>(cfg.total_epochs * ds.indices(Split::kTrain).size()));
  std::istringstream in(a.log);
  for (std::string line; std::getline(in, line);) {
    const double r = std::stod(line.substr(line.find(',') + 1));
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
  }
}

TEST(Training, ResumeMatchesUninterruptedRun) {
  const Dataset ds = tiny_dataset();
  const TrainConfig cfg = tiny_config();
  const RunResult straight = run(ds, cfg);
  const RunResult resumed = run(ds, cfg, 1);
  EXPECT_EQ(straight.log, resumed.log);
  EXPECT_EQ(straight.checkpoint, resumed.checkpoint);
}

TEST(Training, CheckpointRejectsOtherDataset) {
  const Dataset ds = tiny_dataset();
  Session s = new_session(ds, tiny_config());
  synth::SynthConfig other;
  other.num_classes = 3;
  other.images_per_class = 3;
  other.feature_dim = 12;
  EXPECT_THROW(check_compatible(s, synth::generate_dataset(other)), ValidationError);
}

TEST(Pretrain, MemorizesSingleCaption) {
  synth::SynthConfig sc;
  sc.num_classes = 2;
  sc.images_per_class = 1;
  sc.captions_per_image = 1;
  sc.feature_dim = 8;
  sc.split = {1.0, 0.0, 0.0};
  Dataset ds = synth::generate_dataset(sc);
  ds.examples.resize(1);
  TrainConfig cfg;
  cfg.hidden_size = 16;
  cfg.pretrain_epochs_actor = 300;
  cfg.pretrain_epochs_critics = 0;
  cfg.adam.lr = 5e-3;
  Rng rng(2);
  Models m(dims_for(ds, cfg), rng);
  const PretrainReport rep = pretrain(m, ds, cfg, rng);
  for (double l : rep.actor_nll) EXPECT_TRUE(std::isfinite(l));
  const auto& ex = ds.examples[0];
  EXPECT_LT(m.actor.nll_pretrain_loss(ex.features, ex.captions[0]), 0.1);
  EXPECT_EQ(m.actor.greedy_decode(ex.features, 20), strip_end(ex.captions[0]));
}

TEST(Evaluate, BoundsAndIdentity) {
  const Dataset ds = tiny_dataset();
  Rng rng(3);
  Models m(dims_for(ds, tiny_config()), rng);
  const Evaluation ev = evaluate(m.actor, ds, Split::kTrain, 8);
  const auto& r = ev.report;
  for (double v : {r.bleu1, r.bleu2, r.bleu3, r.bleu4, r.rouge_l}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GE(r.cider, 0.0);
  EXPECT_LE(r.cider, 10.0);
  EXPECT_EQ(ev.ids.size(), ds.indices(Split::kTrain).size());
}

TEST(Config, JsonRoundTripAndValidation) {
  TrainConfig c = tiny_config();
  c.reward_metric = RewardMetric::kBleu3;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));

  const TrainConfig synced = train_config_from_json(nlohmann::json{{"total_epochs", 7}});
  EXPECT_EQ(synced.delta_schedule.total_epochs, 7);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"gamma", 0.9}}), ValidationError);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"totl_epochs", 7}}), ParseError);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"reward_metric", "meteor"}}), ValidationError);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"total_epochs", 0}}), ValidationError);
}
