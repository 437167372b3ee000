#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adc/adc.hpp"

namespace adc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

namespace detail {

/// Config keys settable from the command line, mirroring TrainConfig names.
struct Overrides {
  std::optional<int> total_epochs, episodes_per_epoch, pretrain_epochs_actor, pretrain_epochs_critics, T_max,
      checkpoint_every, min_count, decay_every, delta_total_epochs;
  std::optional<std::string> reward_metric;
  std::optional<double> gamma, dropout, lr, beta1, beta2, eps, decay_factor, delta_start, delta_end;
  std::optional<long> hidden_size;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    app.add_option("--total_epochs", total_epochs);
    app.add_option("--episodes_per_epoch", episodes_per_epoch);
    app.add_option("--pretrain_epochs_actor", pretrain_epochs_actor);
    app.add_option("--pretrain_epochs_critics", pretrain_epochs_critics);
    app.add_option("--reward_metric", reward_metric);
    app.add_option("--gamma", gamma);
    app.add_option("--T_max", T_max);
    app.add_option("--checkpoint_every", checkpoint_every);
    app.add_option("--hidden_size", hidden_size);
    app.add_option("--dropout", dropout);
    app.add_option("--min_count", min_count);
    app.add_option("--adam.lr", lr);
    app.add_option("--adam.beta1", beta1);
    app.add_option("--adam.beta2", beta2);
    app.add_option("--adam.eps", eps);
    app.add_option("--adam.decay_factor", decay_factor);
    app.add_option("--adam.decay_every", decay_every);
    app.add_option("--delta_schedule.start", delta_start);
    app.add_option("--delta_schedule.end", delta_end);
    app.add_option("--delta_schedule.total_epochs", delta_total_epochs);
    app.add_option("--seed", seed, "random seed");
  }

  void apply(nlohmann::json& j) const {
    auto set = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    auto set_nested = [&](const char* group, const char* key, const auto& v) {
      if (v) j[group][key] = *v;
    };
    set("total_epochs", total_epochs);
    set("episodes_per_epoch", episodes_per_epoch);
    set("pretrain_epochs_actor", pretrain_epochs_actor);
    set("pretrain_epochs_critics", pretrain_epochs_critics);
    set("reward_metric", reward_metric);
    set("gamma", gamma);
    set("T_max", T_max);
    set("checkpoint_every", checkpoint_every);
    set("hidden_size", hidden_size);
    set("dropout", dropout);
    set("min_count", min_count);
    set("seed", seed);
    set_nested("adam", "lr", lr);
    set_nested("adam", "beta1", beta1);
    set_nested("adam", "beta2", beta2);
    set_nested("adam", "eps", eps);
    set_nested("adam", "decay_factor", decay_factor);
    set_nested("adam", "decay_every", decay_every);
    set_nested("delta_schedule", "start", delta_start);
    set_nested("delta_schedule", "end", delta_end);
    set_nested("delta_schedule", "total_epochs", delta_total_epochs);
  }
};

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline TrainConfig resolve_config(const std::string& path, const Overrides& ov) {
  nlohmann::json j = path.empty() ? nlohmann::json::object() : read_json_file(path);
  if (!j.is_object()) throw ParseError(path + ": expected a JSON object");
  ov.apply(j);
  return train_config_from_json(j);
}

inline Dataset load_for_session(const std::string& data, const Session& s) {
  LoadOptions lo;
  if (s.config) {
    lo.min_count = s.config->min_count;
    lo.max_caption_tokens = std::max(lo.max_caption_tokens, s.config->T_max);
  }
  Dataset ds = load_dataset(data, lo);
  check_compatible(s, ds);
  return ds;
}

inline int default_t_max(const Session& s, std::optional<int> flag) {
  if (flag) return *flag;
  return s.config ? s.config->T_max : 20;
}

inline std::ofstream open_out(const std::string& path, bool append = false) {
  std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

}  // namespace detail

/// Runs one command; machine-readable output goes to `out`, progress and
/// diagnostics to `err`. Exit code 0 on success, 1 on validation errors,
/// 2 on I/O errors.
inline int dispatch(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Actor dual-critic caption training"};
  app.require_subcommand(1);
  app.allow_extras(false);

  std::string config, data, checkpoint, out_path, log_path, id, split = "test", source;
  std::optional<int> t_max_flag, max_epochs;
  std::uint64_t seed = 1;
  bool all_test = false;
  detail::Overrides pre_ov, train_ov;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset (JSONL)");
  synth->add_option("--config", config, "SynthConfig JSON")->required();
  synth->add_option("--out", out_path, "output JSONL path")->required();
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--seed", synth_seed, "override the config seed");

  CLI::App* pre = app.add_subcommand("pretrain", "pretrain actor and both critics");
  pre->add_option("--config", config, "TrainConfig JSON");
  pre->add_option("--data", data, "dataset JSONL")->required();
  pre->add_option("--out", out_path, "output checkpoint")->required();
  pre_ov.attach(*pre);

  CLI::App* train = app.add_subcommand("train", "actor dual-critic training (pretrains first when needed)");
  train->add_option("--config", config, "TrainConfig JSON");
  train->add_option("--data", data, "dataset JSONL")->required();
  train->add_option("--checkpoint", checkpoint, "checkpoint to start or resume from");
  train->add_option("--out", out_path, "output checkpoint")->required();
  train->add_option("--log", log_path, "reward log CSV (default: standard output)");
  train->add_option("--max_epochs", max_epochs, "stop after this many epochs in this run");
  train_ov.attach(*train);

  CLI::App* caption = app.add_subcommand("caption", "greedy captions for examples");
  caption->add_option("--checkpoint", checkpoint)->required();
  caption->add_option("--data", data)->required();
  auto* id_opt = caption->add_option("--id", id, "example id");
  auto* all_opt = caption->add_flag("--all-test", all_test, "caption every test example");
  id_opt->excludes(all_opt);
  caption->add_option("--T_max", t_max_flag);

  CLI::App* eval = app.add_subcommand("evaluate", "BLEU/ROUGE-L/CIDEr of greedy captions");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--data", data)->required();
  eval->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--T_max", t_max_flag);

  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gc->add_option("--seed", seed);

  CLI::App* probe = app.add_subcommand("probe", "encoder-decoder critic probe as CSV");
  probe->add_option("--checkpoint", checkpoint)->required();
  probe->add_option("--data", data)->required();
  probe->add_option("--id", id)->required();
  probe->add_option("--source", source)->required()->check(CLI::IsMember({"gt", "gen", "cross"}));
  probe->add_option("--out", out_path, "CSV path (default: standard output)");
  probe->add_option("--T_max", t_max_flag);

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (*synth) {
      synth::SynthConfig sc = synth::synth_config_from_json(detail::read_json_file(config));
      if (synth_seed) sc.seed = *synth_seed;
      const auto examples = synth::generate(sc);
      synth::write_jsonl(out_path, examples);
      err << "wrote " << examples.size() << " examples to " << out_path << '\n';
    } else if (*pre) {
      const TrainConfig cfg = detail::resolve_config(config, pre_ov);
      LoadOptions lo;
      lo.min_count = cfg.min_count;
      lo.max_caption_tokens = cfg.T_max;
      const Dataset ds = load_dataset(data, lo);
      Session s = new_session(ds, cfg);
      const PretrainReport rep = pretrain(s.models, ds, cfg, s.rng, {&err, {}});
      s.progress.pretrained = true;
      save_session(out_path, s, &cfg);
      nlohmann::json j = {{"actor_nll", rep.actor_nll}, {"value_loss", rep.value_loss}, {"encdec_loss", rep.encdec_loss}};
      out << j.dump() << '\n';
    } else if (*train) {
      const TrainConfig cfg = detail::resolve_config(config, train_ov);
      LoadOptions lo;
      lo.min_count = cfg.min_count;
      lo.max_caption_tokens = cfg.T_max;
      const Dataset ds = load_dataset(data, lo);
      Session s = checkpoint.empty() ? new_session(ds, cfg) : load_session(checkpoint);
      if (!checkpoint.empty() && s.dims.hidden != cfg.hidden_size)
        throw ValidationError("config hidden_size " + std::to_string(cfg.hidden_size) +
                              " does not match checkpoint hidden size " + std::to_string(s.dims.hidden));
      const bool fresh_log = s.progress.episodes_done == 0;
      std::ofstream log_file;
      std::ostream* reward_log = &out;
      if (!log_path.empty()) {
        log_file = detail::open_out(log_path, !fresh_log);
        reward_log = &log_file;
      }
      if (fresh_log) write_reward_header(*reward_log);
      RunOptions ro;
      ro.reward_log = reward_log;
      ro.log = &err;
      ro.checkpoint_path = out_path;
      ro.max_epochs = max_epochs.value_or(-1);
      run_training(ds, cfg, s, ro);
      if (log_file.is_open() && !log_file) throw IoError("failed writing '" + log_path + "'");
    } else if (*caption) {
      if (id.empty() && !all_test) throw ValidationError("caption: pass --id or --all-test");
      const Session s = load_session(checkpoint);
      const Dataset ds = detail::load_for_session(data, s);
      const int t_max = detail::default_t_max(s, t_max_flag);
      std::vector<const CaptionedExample*> targets;
      if (all_test) {
        for (std::size_t i : ds.indices(Split::kTest)) targets.push_back(&ds.examples[i]);
      } else {
        targets.push_back(&ds.by_id(id));
      }
      for (const auto* ex : targets)
        out << ex->id << '\t' << ds.vocabulary.to_text(s.models.actor.greedy_decode(ex->features, t_max)) << '\n';
    } else if (*eval) {
      const Session s = load_session(checkpoint);
      const Dataset ds = detail::load_for_session(data, s);
      const Evaluation ev = evaluate(s.models.actor, ds, parse_split(split), detail::default_t_max(s, t_max_flag));
      out << to_json(ev.report).dump() << '\n';
      write_report_table(err, ev.report);
    } else if (*gc) {
      bool all_pass = true;
      const auto old = out.precision(3);
      for (const auto& e : run_gradcheck_suite(seed)) {
        const bool pass = e.result.max_rel_error < 1e-4;
        all_pass = all_pass && pass;
        out << std::left << std::setw(16) << e.name << std::scientific << e.result.max_rel_error << std::defaultfloat
            << "  " << (pass ? "PASS" : "FAIL") << '\n';
      }
      out.precision(old);
      return all_pass ? kExitOk : kExitValidation;
    } else if (*probe) {
      const Session s = load_session(checkpoint);
      const Dataset ds = detail::load_for_session(data, s);
      const CaptionedExample& ex = ds.by_id(id);
      Tokens sentence;
      if (source == "gt") {
        sentence = ex.captions.front();
      } else if (source == "gen") {
        sentence = s.models.actor.greedy_tokens(ex.features, detail::default_t_max(s, t_max_flag));
      } else {
        const CaptionedExample* other = nullptr;
        for (const auto& cand : ds.examples)
          if (cand.class_label != ex.class_label) {
            other = &cand;
            break;
          }
        if (!other) throw ValidationError("probe: no example from a different class");
        sentence = other->captions.front();
      }
      const ProbeRecord rec = s.models.encdec.probe(ex.features, sentence);
      if (out_path.empty()) {
        rec.write_csv(out);
      } else {
        std::ofstream f = detail::open_out(out_path);
        rec.write_csv(f);
      }
    }
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace adc::cli
