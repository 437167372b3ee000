#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adc/metrics/metrics.hpp"
#include "adc/model/actor.hpp"
#include "adc/model/encdec_critic.hpp"
#include "adc/model/value_critic.hpp"
#include "adc/nn/checkpoint.hpp"
#include "adc/text/dataset.hpp"
#include "adc/train/config.hpp"

namespace adc {

/// Actor, value critic and encoder-decoder critic, each with its own
/// parameters and optimizer state.
struct Models {
  Actor actor;
  ValueCritic value;
  EncDecCritic encdec;

  Models() = default;
  Models(const ModelDims& dims, Rng& rng) : actor(dims, rng), value(dims, rng), encdec(dims, rng) {}
};

inline ModelDims dims_for(const Dataset& ds, const TrainConfig& cfg) {
  return {ds.feature_dim, static_cast<long>(ds.vocabulary.size()), cfg.hidden_size, cfg.dropout};
}

/// Candidate and references are surface token sequences (no end token).
using RewardFn = std::function<double(const Tokens&, const std::vector<Tokens>&)>;

/// Metric score against the references, max over references.
inline double compute_reward(const Tokens& candidate, const std::vector<Tokens>& refs, RewardMetric metric) {
  if (refs.empty()) throw ValidationError("compute_reward: empty reference set");
  switch (metric) {
    case RewardMetric::kRougeL: return metrics::rouge_l(candidate, refs);
    case RewardMetric::kBleu1:
    case RewardMetric::kBleu2:
    case RewardMetric::kBleu3:
    case RewardMetric::kBleu4: {
      const int n = static_cast<int>(metric) - static_cast<int>(RewardMetric::kBleu1) + 1;
      double best = 0.0;
      for (const auto& r : refs) best = std::max(best, metrics::bleu_n(candidate, {r}, n));
      return best;
    }
  }
  return 0.0;
}

inline RewardFn metric_reward(RewardMetric metric) {
  return [metric](const Tokens& c, const std::vector<Tokens>& refs) { return compute_reward(c, refs, metric); };
}

/// A_t = r_T - v_{t-1} (gamma = 1, terminal-only reward).
inline std::vector<double> value_advantages(double reward, const std::vector<double>& values, double gamma,
                                            std::size_t length) {
  if (gamma != 1.0) throw ValidationError("value_advantages: only gamma = 1 is supported");
  if (values.size() != length)
    throw ValidationError("value_advantages: " + std::to_string(values.size()) + " values for " +
                          std::to_string(length) + " steps");
  std::vector<double> adv(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) adv[t] = reward - values[t];
  return adv;
}

inline std::vector<double> value_advantages(double reward, const std::vector<double>& values, double gamma = 1.0) {
  return value_advantages(reward, values, gamma, values.size());
}

inline std::vector<Tokens> surface_references(const CaptionedExample& ex) {
  std::vector<Tokens> refs;
  refs.reserve(ex.captions.size());
  for (const auto& c : ex.captions) refs.push_back(strip_end(c));
  return refs;
}

struct RewardRecord {
  long episode = 0;
  double r_T = 0.0;
  double mean_adv_pi = 0.0;
  double a_ed = 0.0;
  double policy_loss_pi = 0.0;
  double policy_loss_ed = 0.0;
  bool skipped = false;
};

inline void write_reward_header(std::ostream& out) {
  out << "episode,r_T,mean_adv_pi,a_ed,policy_loss_pi,policy_loss_ed\n";
}

inline void write_reward_row(std::ostream& out, const RewardRecord& r) {
  const auto old = out.precision(17);
  out << r.episode << ',' << r.r_T << ',' << r.mean_adv_pi << ',' << r.a_ed << ',' << r.policy_loss_pi << ','
      << r.policy_loss_ed << '\n';
  out.precision(old);
}

/// One episode of actor dual-critic training:
///  (a) sample a caption; (b) terminal reward; (c) A_pi from the value critic;
///  (d) REINFORCE with A_pi; (e) value critic Huber step; (f) A_gen, A_orig
///  and A_ed from the encoder-decoder critic; (g) REINFORCE with A_ed on
///  every step; (h) encoder-decoder critic step on a ground-truth caption.
inline RewardRecord train_episode(Models& m, const CaptionedExample& ex, const TrainConfig& cfg, int epoch,
                                  Rng& rng, const RewardFn& reward_fn) {
  if (ex.captions.empty()) throw ValidationError("train_episode: example '" + ex.id + "' has no references");
  RewardRecord rec;
  const EpisodeTrace trace = m.actor.sample_caption(ex.features, cfg.T_max, rng);
  if (trace.length() == 0) {
    rec.skipped = true;
    return rec;
  }
  const Tokens& gt = ex.captions[rng.below(ex.captions.size())];

  rec.r_T = reward_fn(trace.surface(), surface_references(ex));

  const std::vector<double> adv = value_advantages(rec.r_T, m.value.values(ex.features, trace.tokens), cfg.gamma);
  for (double a : adv) rec.mean_adv_pi += a / static_cast<double>(adv.size());
  rec.policy_loss_pi = reinforce_update(m.actor, ex.features, trace, adv, cfg.adam, epoch);

  m.value.params().zero_grad();
  m.value.episode_loss(ex.features, trace.tokens, rec.r_T);
  adam_step(m.value.params(), cfg.adam, epoch);

  const double a_gen = m.encdec.cosine_accuracy(ex.features, trace.tokens);
  const double a_orig = m.encdec.cosine_accuracy(ex.features, gt);
  rec.a_ed = advantage_ed(a_gen, a_orig, cfg.delta_schedule, epoch);
  rec.policy_loss_ed = reinforce_update(m.actor, ex.features, trace,
                                        std::vector<double>(trace.length(), rec.a_ed), cfg.adam, epoch);

  m.encdec.params().zero_grad();
  m.encdec.recon_loss(ex.features, gt);
  adam_step(m.encdec.params(), cfg.adam, epoch);
  return rec;
}

inline RewardRecord train_episode(Models& m, const CaptionedExample& ex, const TrainConfig& cfg, int epoch,
                                  Rng& rng) {
  return train_episode(m, ex, cfg, epoch, rng, metric_reward(cfg.reward_metric));
}

// ---------------------------------------------------------------------------
// Pretraining

struct PretrainReport {
  std::vector<double> actor_nll;     // per-epoch mean per-token NLL (training mode)
  std::vector<double> value_loss;    // per-epoch mean Huber loss
  std::vector<double> encdec_loss;   // per-epoch mean reconstruction MSE
};

struct PretrainOptions {
  std::ostream* log = nullptr;
  RewardFn reward_fn;  // defaults to the configured metric
};

namespace detail {

inline void check_finite(double v, const char* what, int epoch) {
  if (!std::isfinite(v))
    throw NumericsError(std::string(what) + " became non-finite in epoch " + std::to_string(epoch));
}

}  // namespace detail

/// Teacher forcing for the actor, reconstruction for the encoder-decoder
/// critic on ground-truth pairs, then Huber regression of the value critic
/// toward the reward of the actor's greedy captions.
inline PretrainReport pretrain(Models& m, const Dataset& ds, const TrainConfig& cfg, Rng& rng,
                               const PretrainOptions& opts = {}) {
  const std::vector<std::size_t> train = ds.indices(Split::kTrain);
  if (train.empty()) throw ValidationError("pretrain: train split is empty");
  const RewardFn reward_fn = opts.reward_fn ? opts.reward_fn : metric_reward(cfg.reward_metric);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i : train)
    for (std::size_t c = 0; c < ds.examples[i].captions.size(); ++c) pairs.emplace_back(i, c);

  PretrainReport report;
  for (int epoch = 0; epoch < cfg.pretrain_epochs_actor; ++epoch) {
    rng.shuffle(pairs);
    double sum = 0.0;
    for (const auto& [i, c] : pairs) {
      const auto& ex = ds.examples[i];
      m.actor.params().zero_grad();
      sum += m.actor.nll_pretrain_loss(ex.features, ex.captions[c], true, &rng);
      adam_step(m.actor.params(), cfg.adam, epoch);
    }
    report.actor_nll.push_back(sum / static_cast<double>(pairs.size()));
    detail::check_finite(report.actor_nll.back(), "actor pretraining loss", epoch);
    if (opts.log) *opts.log << "pretrain actor epoch " << epoch + 1 << " nll " << report.actor_nll.back() << '\n';
  }

  for (int epoch = 0; epoch < cfg.pretrain_epochs_critics; ++epoch) {
    rng.shuffle(pairs);
    double sum = 0.0;
    for (const auto& [i, c] : pairs) {
      const auto& ex = ds.examples[i];
      m.encdec.params().zero_grad();
      sum += m.encdec.recon_loss(ex.features, ex.captions[c]);
      adam_step(m.encdec.params(), cfg.adam, epoch);
    }
    report.encdec_loss.push_back(sum / static_cast<double>(pairs.size()));
    detail::check_finite(report.encdec_loss.back(), "encdec pretraining loss", epoch);
    if (opts.log) *opts.log << "pretrain encdec epoch " << epoch + 1 << " mse " << report.encdec_loss.back() << '\n';
  }

  if (cfg.pretrain_epochs_critics > 0) {
    // The actor is frozen here, so greedy captions and their rewards are fixed.
    std::vector<Tokens> greedy(ds.examples.size());
    std::vector<double> reward(ds.examples.size());
    for (std::size_t i : train) {
      greedy[i] = m.actor.greedy_tokens(ds.examples[i].features, cfg.T_max);
      reward[i] = reward_fn(strip_end(greedy[i]), surface_references(ds.examples[i]));
    }
    std::vector<std::size_t> order = train;
    for (int epoch = 0; epoch < cfg.pretrain_epochs_critics; ++epoch) {
      rng.shuffle(order);
      double sum = 0.0;
      for (std::size_t i : order) {
        m.value.params().zero_grad();
        sum += m.value.episode_loss(ds.examples[i].features, greedy[i], reward[i]);
        adam_step(m.value.params(), cfg.adam, epoch);
      }
      report.value_loss.push_back(sum / static_cast<double>(order.size()));
      detail::check_finite(report.value_loss.back(), "value pretraining loss", epoch);
      if (opts.log) *opts.log << "pretrain value epoch " << epoch + 1 << " huber " << report.value_loss.back() << '\n';
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sessions: models + rng + progress, persisted as one checkpoint

struct TrainingProgress {
  bool pretrained = false;
  int epochs_done = 0;
  long episodes_done = 0;
};

struct Session {
  ModelDims dims;
  Models models;
  Rng rng;
  TrainingProgress progress;
  std::vector<std::string> vocabulary;  // words in id order, for compatibility checks
  std::optional<TrainConfig> config;    // as recorded in the checkpoint, if any
};

inline Session new_session(const Dataset& ds, const TrainConfig& cfg) {
  Session s;
  s.dims = dims_for(ds, cfg);
  s.rng = Rng(cfg.seed);
  s.models = Models(s.dims, s.rng);
  s.vocabulary = ds.vocabulary.words();
  s.config = cfg;
  return s;
}

inline Checkpoint session_to_checkpoint(const Session& s, const TrainConfig* cfg = nullptr) {
  Checkpoint ck;
  ck.add_store("actor", s.models.actor.params(), true);
  ck.add_store("value", s.models.value.params(), true);
  ck.add_store("encdec", s.models.encdec.params(), true);
  nlohmann::json meta = {
      {"dims",
       {{"feature_dim", s.dims.feature_dim},
        {"vocab_size", s.dims.vocab_size},
        {"hidden", s.dims.hidden},
        {"dropout", s.dims.dropout}}},
      {"progress",
       {{"pretrained", s.progress.pretrained},
        {"epochs_done", s.progress.epochs_done},
        {"episodes_done", s.progress.episodes_done}}},
      {"adam_steps",
       {{"actor", s.models.actor.params().step_count()},
        {"value", s.models.value.params().step_count()},
        {"encdec", s.models.encdec.params().step_count()}}},
      {"rng", s.rng.serialize()},
      {"vocabulary", s.vocabulary},
  };
  if (cfg) meta["config"] = to_json(*cfg);
  ck.metadata = meta.dump();
  return ck;
}

inline Session session_from_checkpoint(const Checkpoint& ck) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ck.metadata);
    Session s;
    const auto& d = meta.at("dims");
    s.dims = {d.at("feature_dim").get<long>(), d.at("vocab_size").get<long>(), d.at("hidden").get<long>(),
              d.at("dropout").get<double>()};
    Rng scratch(0);
    s.models = Models(s.dims, scratch);
    ck.restore_store("actor", s.models.actor.params());
    ck.restore_store("value", s.models.value.params());
    ck.restore_store("encdec", s.models.encdec.params());
    const auto& steps = meta.at("adam_steps");
    s.models.actor.params().set_step_count(steps.at("actor").get<long>());
    s.models.value.params().set_step_count(steps.at("value").get<long>());
    s.models.encdec.params().set_step_count(steps.at("encdec").get<long>());
    const auto& p = meta.at("progress");
    s.progress = {p.at("pretrained").get<bool>(), p.at("epochs_done").get<int>(), p.at("episodes_done").get<long>()};
    s.rng = Rng::deserialize(meta.at("rng").get<std::string>());
    s.vocabulary = meta.at("vocabulary").get<std::vector<std::string>>();
    if (meta.contains("config")) s.config = train_config_from_json(meta.at("config"));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what());
  }
}

inline void save_session(const std::string& path, const Session& s, const TrainConfig* cfg = nullptr) {
  save_checkpoint(path, session_to_checkpoint(s, cfg));
}

inline Session load_session(const std::string& path) { return session_from_checkpoint(load_checkpoint(path)); }

/// Fails when the dataset's vocabulary or feature size differ from the session's.
inline void check_compatible(const Session& s, const Dataset& ds) {
  if (s.vocabulary != ds.vocabulary.words())
    throw ValidationError("dataset vocabulary does not match the checkpoint's vocabulary");
  if (s.dims.feature_dim != ds.feature_dim)
    throw ShapeError("dataset feature_dim " + std::to_string(ds.feature_dim) + " does not match checkpoint's " +
                     std::to_string(s.dims.feature_dim));
}

// ---------------------------------------------------------------------------
// Training loop

struct RunOptions {
  std::ostream* reward_log = nullptr;
  std::ostream* log = nullptr;
  std::string checkpoint_path;  // empty: no checkpoints
  int max_epochs = -1;          // epochs to run in this invocation; < 0: until total_epochs
  RewardFn reward_fn;           // defaults to the configured metric
};

struct RunSummary {
  std::vector<RewardRecord> records;
  PretrainReport pretrain;
};

/// Pretrains (unless already done) and then runs ADC epochs from the
/// session's progress. A checkpoint is written every `checkpoint_every`
/// epochs, at the final epoch and when stopping early.
inline RunSummary run_training(const Dataset& ds, const TrainConfig& cfg, Session& s, const RunOptions& opts = {}) {
  cfg.validate();
  check_compatible(s, ds);
  const RewardFn reward_fn = opts.reward_fn ? opts.reward_fn : metric_reward(cfg.reward_metric);
  RunSummary summary;
  auto checkpoint = [&] {
    if (!opts.checkpoint_path.empty()) save_session(opts.checkpoint_path, s, &cfg);
  };

  if (!s.progress.pretrained) {
    summary.pretrain = pretrain(s.models, ds, cfg, s.rng, {opts.log, reward_fn});
    s.progress.pretrained = true;
  }

  const std::vector<std::size_t> train = ds.indices(Split::kTrain);
  if (train.empty()) throw ValidationError("run_training: train split is empty");
  const int per_epoch = cfg.episodes_per_epoch > 0 ? cfg.episodes_per_epoch : static_cast<int>(train.size());

  int ran = 0;
  while (s.progress.epochs_done < cfg.total_epochs && (opts.max_epochs < 0 || ran < opts.max_epochs)) {
    const int epoch = s.progress.epochs_done;
    std::vector<std::size_t> order = train;
    double reward_sum = 0.0;
    int counted = 0;
    for (int k = 0; k < per_epoch; ++k) {
      if (k % static_cast<int>(order.size()) == 0) s.rng.shuffle(order);
      RewardRecord rec = train_episode(s.models, ds.examples[order[k % order.size()]], cfg, epoch, s.rng, reward_fn);
      if (rec.skipped) {
        if (opts.log) *opts.log << "warning: skipped empty episode\n";
        continue;
      }
      rec.episode = ++s.progress.episodes_done;
      if (opts.reward_log) write_reward_row(*opts.reward_log, rec);
      reward_sum += rec.r_T;
      ++counted;
      summary.records.push_back(rec);
    }
    ++s.progress.epochs_done;
    ++ran;
    if (opts.log)
      *opts.log << "epoch " << s.progress.epochs_done << "/" << cfg.total_epochs << " delta "
                << cfg.delta_schedule.at(epoch) << " mean r_T " << (counted ? reward_sum / counted : 0.0) << '\n';
    const bool last = s.progress.epochs_done == cfg.total_epochs;
    const bool stopping = opts.max_epochs >= 0 && ran == opts.max_epochs;
    if (last || stopping || s.progress.epochs_done % cfg.checkpoint_every == 0) checkpoint();
  }
  if (ran == 0) checkpoint();
  return summary;
}

// ---------------------------------------------------------------------------
// Evaluation

struct Evaluation {
  metrics::MetricReport report;
  std::vector<std::string> ids;
  std::vector<Tokens> candidates;
};

/// Greedy-decodes every example of the split and scores it.
inline Evaluation evaluate(const Actor& actor, const Dataset& ds, Split split, int t_max) {
  const auto idx = ds.indices(split);
  if (idx.empty()) throw ValidationError("evaluate: split '" + to_string(split) + "' is empty");
  Evaluation ev;
  std::vector<std::vector<Tokens>> refs;
  for (std::size_t i : idx) {
    ev.ids.push_back(ds.examples[i].id);
    ev.candidates.push_back(actor.greedy_decode(ds.examples[i].features, t_max));
    refs.push_back(surface_references(ds.examples[i]));
  }
  ev.report = metrics::score_corpus(ev.candidates, refs);
  return ev;
}

inline nlohmann::json to_json(const metrics::MetricReport& r) {
  return {{"bleu1", r.bleu1}, {"bleu2", r.bleu2},     {"bleu3", r.bleu3},
          {"bleu4", r.bleu4}, {"rouge_l", r.rouge_l}, {"cider", r.cider}};
}

inline void write_report_table(std::ostream& out, const metrics::MetricReport& r) {
  const auto flags = out.flags();
  const auto prec = out.precision(5);
  out << std::fixed;
  out << std::left << std::setw(10) << "metric" << std::right << std::setw(10) << "score" << '\n';
  const std::pair<const char*, double> rows[] = {{"BLEU-1", r.bleu1}, {"BLEU-2", r.bleu2},   {"BLEU-3", r.bleu3},
                                                 {"BLEU-4", r.bleu4}, {"ROUGE-L", r.rouge_l}, {"CIDEr", r.cider}};
  for (const auto& [name, v] : rows) out << std::left << std::setw(10) << name << std::right << std::setw(10) << v << '\n';
  out.flags(flags);
  out.precision(prec);
}

}  // namespace adc
