// Acceptance suite: runs every release criterion at full desk scale and
// prints one PASS/FAIL line per criterion. Exits non-zero if any fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dialoglearn/checkpoint.hpp"
#include "dialoglearn/dialogfmt.hpp"
#include "dialoglearn/experiment.hpp"
#include "dialoglearn/memn2n.hpp"
#include "dialoglearn/training.hpp"
#include "naive_memn2n.hpp"

using namespace dialoglearn;

namespace {

int g_failures = 0;

void report(int index, bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s [%2d] %s (%s)\n", pass ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

GridSpec base_spec() {
  GridSpec spec;
  spec.seeds = {1};
  return spec;
}

std::vector<ResultRecord> run(GridSpec spec, std::vector<int> tasks, std::vector<double> pis,
                              std::vector<Strategy> strategies) {
  spec.tasks = std::move(tasks);
  spec.pis = std::move(pis);
  spec.strategies = std::move(strategies);
  return run_grid(spec);
}

const ResultRecord* find(const std::vector<ResultRecord>& rs, int task, double pi) {
  for (const auto& r : rs)
    if (r.task == task && r.pi == pi) return &r;
  return nullptr;
}

std::string acc_text(const ResultRecord* r) {
  if (!r) return "missing";
  if (!r->ok()) return "error: " + r->error;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", r->test_acc);
  return buf;
}

void criterion_imitation_expert() {
  auto rs = run(base_spec(), {1}, {0.5, 0.1, 0.01}, {Strategy::imitation});
  bool pass = true;
  std::string detail;
  for (double pi : {0.5, 0.1, 0.01}) {
    const ResultRecord* r = find(rs, 1, pi);
    pass = pass && r && r->ok() && r->test_acc >= 95.0;
    detail += "pi=" + format_pi(pi) + ": " + acc_text(r) + "  ";
  }
  report(1, pass, "imitation masters expert dialogs on task 1 at every policy level (>=95%)",
         detail);
}

void criterion_imitation_fails_on_noise() {
  auto rs = run(base_spec(), {2}, {0.01}, {Strategy::imitation});
  const ResultRecord* r = find(rs, 2, 0.01);
  bool pass = r && r->ok() && r->test_acc <= 40.0;
  report(2, pass, "imitation of a nearly-always-wrong policy stays weak on task 2 (<=40%)",
         "pi=0.01: " + acc_text(r));
}

void criterion_rbi() {
  auto good = run(base_spec(), {3}, {0.5}, {Strategy::rbi});
  const ResultRecord* r3 = find(good, 3, 0.5);
  bool pass = r3 && r3->ok() && r3->test_acc >= 95.0;
  std::string detail = "task 3 pi=0.5: " + acc_text(r3);

  auto starved = run(base_spec(), {7}, {0.5, 0.1, 0.01}, {Strategy::rbi});
  for (double pi : {0.5, 0.1, 0.01}) {
    const ResultRecord* r7 = find(starved, 7, pi);
    pass = pass && r7 && r7->ok() && r7->test_acc <= 35.0;
    detail += "  task 7 pi=" + format_pi(pi) + ": " + acc_text(r7);
  }
  report(3, pass, "reward filtering learns task 3 (>=95%) and stays at chance on task 7 (<=35%)",
         detail);
}

void criterion_fp_no_reward() {
  auto rs = run(base_spec(), {7}, {0.5}, {Strategy::fp});
  const ResultRecord* r = find(rs, 7, 0.5);
  bool pass = r && r->ok() && r->test_acc >= 90.0;
  report(4, pass, "forward prediction learns task 7 without any reward (>=90%)",
         "pi=0.5: " + acc_text(r));
}

void criterion_fp_poor_policy() {
  auto rs = run(base_spec(), {3}, {0.01}, {Strategy::fp});
  const ResultRecord* r = find(rs, 3, 0.01);
  bool pass = r && r->ok() && r->test_acc >= 90.0;
  report(5, pass, "forward prediction survives a nearly-always-wrong policy on task 3 (>=90%)",
         "pi=0.01: " + acc_text(r));
}

void criterion_combined_grid() {
  auto rs = run(base_spec(), {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0.5, 0.01},
                {Strategy::rbi_fp});
  auto summaries = summarize(rs);
  int at_05 = -1, at_001 = -1;
  double max_cell_s = 0.0;
  for (const auto& s : summaries) {
    if (s.pi == 0.5) at_05 = s.completed;
    if (s.pi == 0.01) at_001 = s.completed;
  }
  for (const auto& r : rs) max_cell_s = std::max(max_cell_s, r.wall_time_s);
  bool pass = at_05 >= 8 && at_001 >= 6;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "pi=0.5: %d/10 (need >=8)  pi=0.01: %d/10 (need >=6)  slowest cell %.0fs",
                at_05, at_001, max_cell_s);
  report(6, pass, "the combined strategy completes most tasks at both policy levels", buf);
}

void criterion_biased_policy_probe() {
  GridSpec spec = base_spec();
  spec.biased = true;
  auto rs = run(spec, {2}, {0.5}, {Strategy::fp});
  const ResultRecord* r = find(rs, 2, 0.5);
  bool pass = r && r->ok() && r->test_acc >= 55.0 && r->test_acc <= 80.0;
  report(7, pass,
         "forward prediction under the fixed-wrong-answer policy lands in [55%, 80%]",
         "measured " + acc_text(r));
}

void criterion_gradient_gate() {
  std::vector<std::string> texts = {"alpha beta gamma", "delta epsilon",
                                    "zeta eta theta iota", "kappa lambda mu",
                                    "nu xi omicron", "alpha delta zeta"};
  Vocabulary vocab = Vocabulary::build(texts);
  CandidateSet cands = CandidateSet::build({"alpha", "delta", "kappa nu", "beta"}, vocab);
  ResponseSet resps = ResponseSet::build(
      {"alpha beta", "gamma delta epsilon", "zeta kappa", "mu nu xi", "omicron alpha"},
      vocab);
  double worst = 0.0;
  std::size_t coords_answer = 0, coords_fp = 0;
  for (int d : {2, 8}) {
    ModelParams params(ModelConfig{d, 2, 16}, vocab.size());
    Rng rng(derive_seed(1, (std::uint64_t)d));
    params.init(rng, 0.1);
    std::vector<Bow> ctx = {encode_bow(texts[0], vocab), encode_bow(texts[1], vocab),
                            encode_bow(texts[2], vocab)};
    Bow x = encode_bow("alpha kappa omicron", vocab);
    std::vector<int> subset = {3, 0, 1, 4};

    auto a_loss = [&]() { return answer_loss(params, x, ctx, cands, 2); };
    auto a_grad = [&]() {
      params.store().zero_grads();
      answer_loss_grad(params, x, ctx, cands, 2, 1.0);
    };
    GradcheckReport rep = gradcheck(params.store(), a_loss, a_grad, 1e-5, 200, rng);
    worst = std::max(worst, rep.max_rel_error);
    coords_answer += rep.coords_checked;

    auto f_loss = [&]() { return fp_loss(params, x, ctx, cands, 1, resps, subset, 0); };
    auto f_grad = [&]() {
      params.store().zero_grads();
      fp_loss_grad(params, x, ctx, cands, 1, resps, subset, 0, 1.0);
    };
    rep = gradcheck(params.store(), f_loss, f_grad, 1e-5, 200, rng);
    worst = std::max(worst, rep.max_rel_error);
    coords_fp += rep.coords_checked;
  }
  bool pass = worst < 1e-4 && coords_answer >= 200 && coords_fp >= 200;
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "max relative error %.3e over %zu + %zu sampled coordinates", worst,
                coords_answer, coords_fp);
  report(8, pass, "analytic gradients match central differences to 1e-4", buf);
}

void criterion_oracle_equivalence() {
  Rng rng(2718);
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int d = rng.uniform_int(1, 4);
    int v = rng.uniform_int(3, 8);
    int hops = rng.uniform_int(1, 3);
    int n_mem = rng.uniform_int(0, 3);
    int n_cand = rng.uniform_int(2, 3);
    ModelParams params(ModelConfig{d, hops, 4}, v);
    for (std::size_t i = 0; i < params.store().coord_count(); ++i)
      params.store().set_coord(i, rng.gaussian(0.0, 0.3));

    auto random_bow = [&](int max_tokens) {
      Bow b;
      int n = rng.uniform_int(0, max_tokens);
      for (int i = 0; i < n; ++i) {
        int idx = rng.uniform_int(0, v - 1);
        bool dup = false;
        for (const auto& e : b) dup = dup || e.index == idx;
        if (!dup) b.push_back({idx, double(rng.uniform_int(1, 2))});
      }
      return b;
    };
    Bow x = random_bow(3);
    std::vector<Bow> ctx;
    for (int i = 0; i < n_mem; ++i) ctx.push_back(random_bow(3));
    CandidateSet cands;
    ResponseSet resps;
    for (int i = 0; i < n_cand; ++i) {
      cands.display.push_back("c" + std::to_string(i));
      cands.bows.push_back({{rng.uniform_int(0, v - 1), 1.0}});
    }
    int n_resp = rng.uniform_int(2, 4);
    for (int i = 0; i < n_resp; ++i) {
      resps.display.push_back("r" + std::to_string(i));
      resps.bows.push_back(random_bow(2));
    }
    int selected = rng.uniform_int(0, n_cand - 1);

    AnswerForward fwd = forward_answer(params, x, ctx, cands);
    naive::Forward ref = naive::forward_answer(params, x, ctx, cands);
    for (std::size_t i = 0; i < fwd.dist.size(); ++i)
      worst = std::max(worst, std::abs(fwd.dist[i] - ref.dist[i]));

    FpForward fp = forward_predict(params, x, ctx, cands, selected, resps);
    std::vector<double> fref = naive::forward_predict(params, x, ctx, cands, selected, resps);
    for (std::size_t i = 0; i < fp.dist.size(); ++i)
      worst = std::max(worst, std::abs(fp.dist[i] - fref[i]));
    ++checked;
  }
  bool pass = worst < 1e-10 && checked == 100;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "max deviation %.3e over %d random instances", worst,
                checked);
  report(9, pass, "both forward passes match an independent naive reimplementation", buf);
}

void criterion_generator_statistics() {
  bool pass = true;
  std::string detail;

  // empirical policy accuracy inside the 99% binomial interval
  {
    const double pi = 0.5;
    GeneratedSplits s = gen_dataset(WorldConfig::defaults(), SupervisionMode::task(3),
                                    Policy{pi, {}}, SplitSizes{10000, 10, 10}, 909);
    DatasetStats st = dataset_stats(s.train);
    double half = 2.576 * std::sqrt(pi * (1 - pi) / st.questions);
    bool ok = std::abs(st.policy_accuracy() - pi) < half;
    pass = pass && ok;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "policy_acc=%.3f ", st.policy_accuracy());
    detail += buf;
  }

  // partial feedback rewards about half of the correct answers
  {
    GeneratedSplits s = gen_dataset(WorldConfig::defaults(), SupervisionMode::task(6),
                                    Policy{0.5, {}}, SplitSizes{10000, 10, 10}, 910);
    DatasetStats st = dataset_stats(s.train);
    double rate = st.reward_rate_among_correct();
    pass = pass && rate >= 0.45 && rate <= 0.55;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "partial_reward=%.3f ", rate);
    detail += buf;
  }

  // the no-feedback mode never rewards
  {
    GeneratedSplits s = gen_dataset(WorldConfig::defaults(), SupervisionMode::task(7),
                                    Policy{0.5, {}}, SplitSizes{10000, 100, 100}, 911);
    int rewards = dataset_stats(s.train).rewards + dataset_stats(s.valid).rewards +
                  dataset_stats(s.test).rewards;
    pass = pass && rewards == 0;
    detail += "no_feedback_rewards=" + std::to_string(rewards) + " ";
  }

  // serialization round trip over one hundred random datasets
  {
    int ok = 0;
    for (int mode = 1; mode <= 10; ++mode)
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        GeneratedSplits s =
            gen_dataset(WorldConfig::defaults(), SupervisionMode::task(mode),
                        Policy{0.3, {}}, SplitSizes{12, 3, 4}, 5000 + seed);
        if (parse(serialize(s.train)) == s.train && parse(serialize(s.valid)) == s.valid &&
            parse(serialize(s.test)) == s.test)
          ++ok;
      }
    pass = pass && ok == 100;
    detail += "roundtrip=" + std::to_string(ok) + "/100";
  }

  report(10, pass, "generator statistics and the serialization round trip hold", detail);
}

void criterion_purity_and_isolation() {
  // answer prediction is bitwise blind to the response-prediction parameters
  bool purity = true;
  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    ModelParams params(ModelConfig{5, 2, 8}, 9);
    for (std::size_t i = 0; i < params.store().coord_count(); ++i)
      params.store().set_coord(i, rng.gaussian(0.0, 0.3));
    CandidateSet cands;
    for (int i = 0; i < 4; ++i) {
      cands.display.push_back("c" + std::to_string(i));
      cands.bows.push_back({{i + 1, 1.0}});
    }
    Bow x{{2, 1.0}, {5, 1.0}};
    std::vector<Bow> ctx{{{1, 1.0}}, {{3, 2.0}, {4, 1.0}}, {{6, 1.0}}};
    Vec before = forward_answer(params, x, ctx, cands).dist;
    int pred_before = predict(params, x, ctx, cands);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 5; ++c) params.fp_map()(r, c) = rng.gaussian(0.0, 100.0);
      params.action_marker()(r, 0) = rng.gaussian(0.0, 100.0);
    }
    Vec after = forward_answer(params, x, ctx, cands).dist;
    purity = purity && before == after && predict(params, x, ctx, cands) == pred_before;
  }

  // evaluation reads nothing but the story, the question and the gold label
  GeneratedSplits s = gen_dataset(WorldConfig::defaults(), SupervisionMode::task(3),
                                  Policy{0.5, {}}, SplitSizes{500, 50, 300}, 321);
  Hyperparams hyper;
  hyper.epochs_max = 40;
  hyper.patience = 10;
  TrainOutput out = train(Strategy::rbi, s.train, s.valid, hyper);
  Dataset masked = s.test;
  for (auto& ep : masked.episodes)
    for (auto& t : ep.turns) {
      if (t.kind == TurnKind::ans || t.kind == TurnKind::help || is_feedback_kind(t.kind))
        t.text = "placeholder";
      t.reward = 0;
    }
  double plain = evaluate(out.model, s.test);
  double hidden = evaluate(out.model, masked);
  bool isolation = plain == hidden;

  char buf[120];
  std::snprintf(buf, sizeof(buf), "purity=%s isolation: %.2f%% vs %.2f%%",
                purity ? "bitwise" : "VIOLATED", plain, hidden);
  report(11, purity && isolation,
         "answer prediction ignores the response head and evaluation ignores recorded behavior",
         buf);
}

}  // namespace

int main() {
  std::printf("acceptance suite: desk scale, 1000/100/1000 questions per split\n");
  criterion_imitation_expert();
  criterion_imitation_fails_on_noise();
  criterion_rbi();
  criterion_fp_no_reward();
  criterion_fp_poor_policy();
  criterion_combined_grid();
  criterion_biased_policy_probe();
  criterion_gradient_gate();
  criterion_oracle_equivalence();
  criterion_generator_statistics();
  criterion_purity_and_isolation();
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criterion(s) failed\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
