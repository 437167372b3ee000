// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//
//   acceptance [--only N,...] [--known-fail N,...] [--hidden H]
//
// Exit status is 0 when every criterion outside --known-fail passes and
// every criterion listed there still fails (so a fixed one gets noticed).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "adc/adc.hpp"
#include "adc/cli.hpp"

using namespace adc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');)
    if (!tok.empty()) out.insert(std::stoi(tok));
  return out;
}

Tokens encode(const Vocabulary& v, const std::string& s) { return v.encode(tokenize(s)); }

Outcome gradients() {
  Timer t;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& e : run_gradcheck_suite(1)) {
    if (e.result.max_rel_error >= worst) {
      worst = e.result.max_rel_error;
      worst_name = e.name;
    }
  }
  const double secs = t.seconds();
  return {worst < 1e-4 && secs < 60.0,
          "max rel error " + fmt(worst, 3) + " (" + worst_name + "), " + fmt(secs, 3) + " s"};
}

Outcome metric_oracles() {
  using namespace metrics;
  const Vocabulary v = Vocabulary::build({tokenize("a b c d e f g h")});
  auto t = [&](const std::string& s) { return encode(v, s); };
  std::vector<std::string> bad;
  auto expect = [&](const char* what, double got, double want) {
    if (!(std::abs(got - want) <= 1e-4)) bad.push_back(std::string(what) + "=" + fmt(got));
  };
  expect("lcs identity", lcs_length(t("a b c"), t("a b c")), 3);
  expect("lcs", lcs_length(t("a b c d"), t("a c d")), 3);
  expect("lcs disjoint", lcs_length(t("a b"), t("e f g")), 0);
  expect("rouge identity", rouge_l(t("a b c"), {t("a b c")}), 1.0);
  expect("rouge", rouge_l(t("a b c d"), {t("a c d")}), 2.44 * 0.75 / (1.0 + 1.44 * 0.75));
  expect("rouge empty", rouge_l({}, {t("a")}), 0.0);
  for (int n = 1; n <= 4; ++n) expect("bleu identity", bleu_n(t("a b c d"), {t("a b c d")}, n), 1.0);
  expect("bleu1", bleu_n(t("a b c"), {t("a b d")}, 1), 2.0 / 3.0);
  expect("bleu4 short", bleu_n(t("a b"), {t("a b")}, 4), 0.0);
  const std::vector<std::vector<Tokens>> refs = {{t("a b c d")}, {t("e f g h")}};
  const IdfTable idf = IdfTable::build(refs);
  expect("cider unique", cider({t("a b c d"), t("e f g h")}, refs, idf), 10.0);
  expect("cider disjoint", cider_single(t("e f g h"), refs[0], idf), 0.0);
  const std::vector<std::vector<Tokens>> shared = {{t("a b c h")}, {t("d e f h")}};
  expect("idf everywhere", IdfTable::build(shared).weight(t("h")), 0.0);
  std::string detail = bad.empty() ? "all examples match" : "";
  for (const auto& b : bad) detail += b + " ";
  return {bad.empty(), detail};
}

Outcome huber() {
  const double got[3] = {huber_loss(0.0, 0.0), huber_loss(0.3, 0.0), huber_loss(1.0, 0.0)};
  const double want[3] = {0.0, 0.09, 0.375};
  bool ok = true;
  for (int i = 0; i < 3; ++i) ok = ok && std::abs(got[i] - want[i]) <= 1e-12;
  return {ok, fmt(got[0], 17) + " / " + fmt(got[1], 17) + " / " + fmt(got[2], 17)};
}

Outcome bandit() {
  Timer t;
  constexpr TokenId kTarget = 5;
  Rng rng(3);
  const ModelDims dims{4, static_cast<long>(Vocabulary::kNumSpecials) + 3, 8, 0.0};
  Models m(dims, rng);
  CaptionedExample ex;
  ex.id = "bandit";
  ex.features = synth::normalized(Vector::Constant(4, 1.0));
  ex.captions = {{kTarget, Vocabulary::kEnd}};
  TrainConfig cfg;
  cfg.T_max = 1;
  cfg.adam.lr = 5e-2;
  cfg.total_epochs = 1;
  cfg.delta_schedule.total_epochs = 1;
  auto reward = [&](const Tokens& cand, const std::vector<Tokens>&) {
    return cand.size() == 1 && cand[0] == kTarget ? 1.0 : 0.0;
  };
  for (int episode = 0; episode < 500; ++episode) train_episode(m, ex, cfg, 0, rng, reward);
  const double p = std::exp(m.actor.log_prob(ex.features, {kTarget}));
  const double secs = t.seconds();
  return {p > 0.9 && secs < 10.0, "pi(target) " + fmt(p) + ", " + fmt(secs, 3) + " s"};
}

Outcome memorization(long hidden) {
  Timer t;
  synth::SynthConfig sc;
  sc.num_classes = 4;
  sc.images_per_class = 10;
  sc.captions_per_image = 1;
  sc.split = {1.0, 0.0, 0.0};
  sc.seed = 5;
  const Dataset ds = synth::generate_dataset(sc);
  TrainConfig cfg;
  cfg.hidden_size = hidden;
  cfg.T_max = 8;
  cfg.pretrain_epochs_critics = 0;
  cfg.adam.lr = 2e-3;
  Rng rng(cfg.seed);
  Models m(dims_for(ds, cfg), rng);
  const auto train = ds.indices(Split::kTrain);

  double nll = 0.0;
  int exact = 0, epochs = 0;
  auto measure = [&] {
    double sum = 0.0;
    long tokens = 0;
    exact = 0;
    for (std::size_t i : train) {
      const auto& ex = ds.examples[i];
      sum -= m.actor.log_prob(ex.features, ex.captions[0]);
      tokens += static_cast<long>(ex.captions[0].size());
      exact += m.actor.greedy_decode(ex.features, cfg.T_max) == strip_end(ex.captions[0]);
    }
    nll = sum / static_cast<double>(tokens);
  };
  // Pretrain in blocks of 25 epochs and stop once both targets are met.
  cfg.pretrain_epochs_actor = 25;
  while (epochs < 300) {
    pretrain(m, ds, cfg, rng);
    epochs += cfg.pretrain_epochs_actor;
    measure();
    if (nll < 0.1 && exact >= 0.9 * static_cast<double>(train.size())) break;
  }
  const double secs = t.seconds();
  const double frac = static_cast<double>(exact) / static_cast<double>(train.size());
  return {nll < 0.1 && frac >= 0.9 && secs < 300.0,
          "per-token nll " + fmt(nll) + ", exact " + std::to_string(exact) + "/" + std::to_string(train.size()) +
              " after " + std::to_string(epochs) + " epochs, " + fmt(secs, 3) + " s"};
}

struct AdcRun {
  Outcome improvement;
  Outcome discrimination;
};

AdcRun adc_run(long hidden) {
  Timer t;
  synth::SynthConfig sc;  // 8 classes x 40 images x 5 captions
  const Dataset ds = synth::generate_dataset(sc);
  TrainConfig cfg;
  cfg.total_epochs = 20;
  cfg.delta_schedule.total_epochs = 20;
  cfg.hidden_size = hidden;
  cfg.validate();
  Session s = new_session(ds, cfg);
  RunOptions pre_only;
  pre_only.max_epochs = 0;
  run_training(ds, cfg, s, pre_only);

  AdcRun out;
  {
    const auto train = ds.indices(Split::kTrain), test = ds.indices(Split::kTest);
    double a_orig = 0.0;
    for (std::size_t i : train) a_orig += s.models.encdec.cosine_accuracy(ds.examples[i].features, ds.examples[i].captions[0]);
    a_orig /= static_cast<double>(train.size());
    int wins = 0;
    for (std::size_t i : test) {
      const auto& ex = ds.examples[i];
      const CaptionedExample* other = nullptr;
      for (std::size_t j : train)
        if (ds.examples[j].class_label != ex.class_label) {
          other = &ds.examples[j];
          break;
        }
      wins += s.models.encdec.cosine_accuracy(ex.features, ex.captions[0]) >
              s.models.encdec.cosine_accuracy(ex.features, other->captions[0]);
    }
    const double frac = static_cast<double>(wins) / static_cast<double>(test.size());
    out.discrimination = {a_orig >= 0.9 && frac >= 0.8,
                          "mean A_orig " + fmt(a_orig) + ", matched > cross on " + std::to_string(wins) + "/" +
                              std::to_string(test.size()) + " test images"};
  }

  const RunSummary run = run_training(ds, cfg, s);
  const auto& recs = run.records;
  double first = 0.0, last = 0.0;
  const std::size_t k = std::min<std::size_t>(50, recs.size());
  for (std::size_t i = 0; i < k; ++i) {
    first += recs[i].r_T / static_cast<double>(k);
    last += recs[recs.size() - 1 - i].r_T / static_cast<double>(k);
  }
  const double rouge = evaluate(s.models.actor, ds, Split::kTest, cfg.T_max).report.rouge_l;
  const double secs = t.seconds();
  out.improvement = {last >= first + 0.05 && rouge >= 0.6 && secs < 1800.0,
                     "r_T first 50 " + fmt(first) + ", last 50 " + fmt(last) + ", held-out ROUGE-L " + fmt(rouge) +
                         ", vocab " + std::to_string(ds.vocabulary.size()) + ", " + fmt(secs, 3) + " s"};
  return out;
}

Outcome delta_schedule() {
  DeltaSchedule d;
  d.total_epochs = 20;
  bool ok = std::abs(d.at(0) - 0.01) <= 1e-12 && std::abs(d.at(19) - 1.0) <= 1e-12;
  for (int e = 1; e < 20; ++e) ok = ok && d.at(e) > d.at(e - 1);
  return {ok, "delta(0) " + fmt(d.at(0), 17) + ", delta(19) " + fmt(d.at(19), 17)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("adc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto p = [&](const char* name) { return (dir / name).string(); };
  std::ofstream(p("synth.json")) << R"({"num_classes":3,"images_per_class":6,"captions_per_image":2,"feature_dim":16})";
  std::ofstream(p("train.json")) << R"({"total_epochs":3,"pretrain_epochs_actor":2,"pretrain_epochs_critics":2,"hidden_size":12})";
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "adc");
    return cli::dispatch(args, sink, sink);
  };
  int rc = run({"synth", "--config", p("synth.json"), "--out", p("data.jsonl")});
  rc |= run({"pretrain", "--config", p("train.json"), "--data", p("data.jsonl"), "--out", p("pre.adc")});
  for (const char* tag : {"a", "b"})
    rc |= run({"train", "--config", p("train.json"), "--data", p("data.jsonl"), "--checkpoint", p("pre.adc"), "--out",
               p((std::string(tag) + ".adc").c_str()), "--log", p((std::string(tag) + ".csv").c_str())});
  const bool same_log = slurp(p("a.csv")) == slurp(p("b.csv")) && !slurp(p("a.csv")).empty();
  const bool same_ckpt = slurp(p("a.adc")) == slurp(p("b.adc")) && !slurp(p("a.adc")).empty();

  const Session s = load_session(p("a.adc"));
  save_session(p("c.adc"), s);
  const Session back = load_session(p("c.adc"));
  bool round_trip = true;
  for (auto [x, y] : {std::pair{&s.models.actor.params(), &back.models.actor.params()},
                      std::pair{&s.models.value.params(), &back.models.value.params()},
                      std::pair{&s.models.encdec.params(), &back.models.encdec.params()}})
    for (std::size_t i = 0; i < x->size(); ++i) round_trip = round_trip && x->at(i).value == y->at(i).value;
  save_session(p("d.adc"), back);
  round_trip = round_trip && slurp(p("c.adc")) == slurp(p("d.adc"));
  fs::remove_all(dir);
  return {rc == 0 && same_log && same_ckpt && round_trip,
          std::string("logs ") + (same_log ? "identical" : "differ") + ", checkpoints " +
              (same_ckpt ? "identical" : "differ") + ", round trip " + (round_trip ? "exact" : "lossy")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, known_fail;
  long hidden = 64;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") only = parse_list(argv[i + 1]);
    else if (flag == "--known-fail") known_fail = parse_list(argv[i + 1]);
    else if (flag == "--hidden") hidden = std::stol(argv[i + 1]);
    else {
      std::cerr << "unknown flag " << flag << '\n';
      return 2;
    }
  }
  auto wanted = [&](int n) { return only.empty() || only.count(n); };

  std::map<int, Outcome> results;
  if (wanted(1)) results[1] = gradients();
  if (wanted(2)) results[2] = metric_oracles();
  if (wanted(3)) results[3] = huber();
  if (wanted(4)) results[4] = bandit();
  if (wanted(5)) results[5] = memorization(hidden);
  if (wanted(6) || wanted(7)) {
    AdcRun r = adc_run(hidden);
    if (wanted(6)) results[6] = r.improvement;
    if (wanted(7)) results[7] = r.discrimination;
  }
  if (wanted(8)) results[8] = delta_schedule();
  if (wanted(9)) results[9] = determinism();

  static const char* names[] = {"",
                                "gradient integrity",
                                "metric oracles",
                                "huber fidelity",
                                "reinforce bandit",
                                "pretraining memorization",
                                "adc improvement",
                                "critic discrimination",
                                "delta schedule",
                                "determinism"};
  bool ok = true;
  for (const auto& [n, r] : results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  " << n << ". " << names[n] << ": " << r.detail;
    if (known_fail.count(n)) std::cout << "  [known failure]";
    std::cout << std::endl;
    ok = ok && (r.pass != static_cast<bool>(known_fail.count(n)));
  }
  return ok ? 0 : 1;
}
