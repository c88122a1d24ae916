#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dialoglearn/checkpoint.hpp"
#include "dialoglearn/common.hpp"
#include "dialoglearn/dialogfmt.hpp"
#include "dialoglearn/training.hpp"

using namespace dialoglearn;

namespace {

Turn mk(Speaker sp, TurnKind k, std::string text, int reward = 0,
        std::optional<std::string> gold = {}) {
  Turn t;
  t.speaker = sp;
  t.kind = k;
  t.text = std::move(text);
  t.reward = reward;
  t.gold = std::move(gold);
  return t;
}

// Correction-mode episode: one wrong answer with a correction, one correct
// answer with rewarded praise.
Dataset correction_episode() {
  DialogEpisode ep;
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::stmt, "Mary went to the hallway."));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::stmt, "John moved to the bathroom."));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::stmt, "Mary travelled to the kitchen."));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::q, "Where is Mary?"));
  ep.turns.push_back(mk(Speaker::learner, TurnKind::ans, "bedroom", 0, "kitchen"));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::answer_fb, "No, the answer is kitchen."));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::q, "Where is John?"));
  ep.turns.push_back(mk(Speaker::learner, TurnKind::ans, "bathroom", 0, "bathroom"));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::fb, "Correct!", 1));
  Dataset d;
  d.episodes.push_back(std::move(ep));
  return d;
}

GeneratedSplits small_task(int mode, double pi, std::uint64_t seed, int n_train = 200) {
  return gen_dataset(WorldConfig::defaults(), SupervisionMode::task(mode), Policy{pi, {}},
                     SplitSizes{n_train, 40, 100}, seed);
}

Hyperparams fast_hyper() {
  Hyperparams h;
  h.epochs_max = 40;
  h.patience = 12;
  return h;
}

}  // namespace

TEST_CASE("one example per answer turn with context response and reward") {
  auto examples = extract_examples(correction_episode());
  REQUIRE(examples.size() == 2);

  const TrainingExample& first = examples[0];
  CHECK(first.x == "Where is Mary?");
  REQUIRE(first.context.size() == 3);
  CHECK(first.context[0] == "Mary went to the hallway.");
  CHECK(first.context[2] == "Mary travelled to the kitchen.");
  CHECK(first.answer == "bedroom");
  CHECK(first.gold == "kitchen");
  CHECK(first.reward == 0);
  CHECK(first.response == "No, the answer is kitchen.");

  const TrainingExample& second = examples[1];
  CHECK(second.x == "Where is John?");
  CHECK(second.answer == "bathroom");
  CHECK(second.reward == 1);
  CHECK(second.response == "Correct!");
  // the context holds story turns only, all strictly before the question
  CHECK(second.context.size() == 3);
  for (const auto& c : second.context) CHECK(c.find("Where") == std::string::npos);
}

TEST_CASE("expert-style data yields examples without rewards or responses") {
  GeneratedSplits s = small_task(1, 0.5, 3, 40);
  for (const auto& ex : extract_examples(s.train)) {
    CHECK(ex.reward == 0);
    CHECK(ex.response.empty());
    CHECK(ex.answer == *ex.gold);
  }
}

TEST_CASE("post-help turns fold into the response") {
  GeneratedSplits s = small_task(10, 0.3, 4, 60);
  bool saw_hint = false;
  for (const auto& ex : extract_examples(s.train)) {
    if (ex.answer == *ex.gold) continue;
    // negative template followed by the relevant fact; the learner's help
    // request is not teacher text and stays out
    CHECK(ex.response.find("A relevant fact is") != std::string::npos);
    CHECK(ex.response.find("help") == std::string::npos);
    saw_hint = true;
  }
  CHECK(saw_hint);
}

TEST_CASE("an answer before any question is a validation error") {
  Dataset d;
  DialogEpisode ep;
  ep.turns.push_back(mk(Speaker::learner, TurnKind::ans, "kitchen", 0, "kitchen"));
  d.episodes.push_back(ep);
  CHECK_THROWS_AS(extract_examples(d), DataError);
}

TEST_CASE("a single example is memorized") {
  Dataset d;
  DialogEpisode ep;
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::stmt, "Mary went to the hallway."));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::stmt, "John moved to the bathroom."));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::q, "Where is John?"));
  ep.turns.push_back(mk(Speaker::learner, TurnKind::ans, "bathroom", 0, "bathroom"));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::fb, "Correct!", 1));
  d.episodes.push_back(std::move(ep));

  Hyperparams h = fast_hyper();
  h.epochs_max = 60;
  TrainOutput out = train(Strategy::imitation, d, d, h);
  CHECK(evaluate(out.model, d) == 100.0);
  CHECK(out.best_valid_acc == 100.0);
}

TEST_CASE("two answers over the same story are told apart by the question") {
  // both answers correct, so validation selection agrees with memorization
  Dataset d;
  DialogEpisode ep;
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::stmt, "Mary went to the hallway."));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::stmt, "John moved to the bathroom."));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::q, "Where is John?"));
  ep.turns.push_back(mk(Speaker::learner, TurnKind::ans, "bathroom", 0, "bathroom"));
  ep.turns.push_back(mk(Speaker::teacher, TurnKind::q, "Where is Mary?"));
  ep.turns.push_back(mk(Speaker::learner, TurnKind::ans, "hallway", 0, "hallway"));
  d.episodes.push_back(std::move(ep));

  Hyperparams h = fast_hyper();
  h.epochs_max = 200;
  h.patience = 200;
  TrainOutput out = train(Strategy::imitation, d, d, h);
  CHECK(evaluate(out.model, d) == 100.0);
}

TEST_CASE("reward filtering reduces to imitation when everything is rewarded") {
  // expert data with no feedback: the auto rule counts it all as rewarded
  GeneratedSplits s = small_task(1, 0.5, 7, 80);
  Hyperparams h = fast_hyper();
  TrainOutput imit = train(Strategy::imitation, s.train, s.valid, h);
  TrainOutput rbi = train(Strategy::rbi, s.train, s.valid, h);
  CHECK(imit.model.params.store() == rbi.model.params.store());
  CHECK(rbi.warning.empty());
}

TEST_CASE("reward-based imitation without any reward returns the initial model") {
  GeneratedSplits s = small_task(7, 0.5, 8, 60);
  Hyperparams h = fast_hyper();
  TrainOutput out = train(Strategy::rbi, s.train, s.valid, h);
  CHECK_FALSE(out.warning.empty());
  CHECK(out.log.empty());
  double acc = evaluate(out.model, s.test);
  CHECK(acc < 60.0);  // untrained model stays far from a trained one
}

TEST_CASE("forward prediction refuses data without responses") {
  GeneratedSplits s = small_task(1, 0.5, 9, 40);
  CHECK_THROWS_AS(train(Strategy::fp, s.train, s.valid, fast_hyper()), TrainError);
}

TEST_CASE("expert reward counting can be forced off") {
  GeneratedSplits s = small_task(1, 0.5, 10, 40);
  Hyperparams h = fast_hyper();
  h.expert_reward = ExpertReward::off;
  TrainOutput out = train(Strategy::rbi, s.train, s.valid, h);
  CHECK_FALSE(out.warning.empty());
}

TEST_CASE("a response-prediction step moves the answer predictor through shared weights") {
  GeneratedSplits s = small_task(3, 0.5, 11, 60);
  std::vector<TrainingExample> ex = extract_examples(s.train);
  Vocabulary vocab = Vocabulary::build({ex[0].x, ex[0].response});
  for (const auto& e : ex[0].context)
    vocab = Vocabulary::build({ex[0].x, ex[0].response, e});
  CandidateSet cands = CandidateSet::build({"kitchen", "hallway", "bathroom"}, vocab);
  ResponseSet resps = ResponseSet::build({ex[0].response, "Correct!"}, vocab);

  ModelParams params(ModelConfig{8, 2, 10}, vocab.size());
  Rng rng(5);
  params.init(rng, 0.1);
  Bow x = encode_bow(ex[0].x, vocab);
  std::vector<Bow> ctx;
  for (const auto& c : ex[0].context) ctx.push_back(encode_bow(c, vocab));

  Vec before = forward_answer(params, x, ctx, cands).dist;
  std::vector<int> subset{0, 1};
  fp_loss_grad(params, x, ctx, cands, 1, resps, subset, 0, 1.0);
  params.store().sgd_step(0.1);
  Vec after = forward_answer(params, x, ctx, cands).dist;
  CHECK(before != after);
}

TEST_CASE("training is deterministic given data and seed") {
  GeneratedSplits s = small_task(2, 0.5, 13, 60);
  Hyperparams h = fast_hyper();
  TrainOutput a = train(Strategy::rbi_fp, s.train, s.valid, h);
  TrainOutput b = train(Strategy::rbi_fp, s.train, s.valid, h);
  CHECK(checkpoint_to_json(a.model) == checkpoint_to_json(b.model));
  h.seed = 2;
  TrainOutput c = train(Strategy::rbi_fp, s.train, s.valid, h);
  CHECK(checkpoint_to_json(a.model) != checkpoint_to_json(c.model));
}

TEST_CASE("the selected checkpoint has the best validation accuracy seen") {
  GeneratedSplits s = small_task(3, 0.5, 14, 80);
  TrainOutput out = train(Strategy::imitation, s.train, s.valid, fast_hyper());
  REQUIRE_FALSE(out.log.empty());
  double best = -1.0;
  for (const auto& rec : out.log) best = std::max(best, rec.valid_acc);
  CHECK(out.best_valid_acc == best);
  bool found = false;
  for (const auto& rec : out.log)
    if (rec.epoch == out.best_epoch && rec.valid_acc == best) found = true;
  CHECK(found);
}

TEST_CASE("evaluation requires gold annotations") {
  GeneratedSplits s = small_task(2, 0.5, 15, 40);
  Hyperparams h = fast_hyper();
  h.epochs_max = 2;
  h.patience = 1;
  TrainOutput out = train(Strategy::imitation, s.train, s.valid, h);
  Dataset broken = s.test;
  for (auto& ep : broken.episodes)
    for (auto& t : ep.turns)
      if (t.kind == TurnKind::ans) t.gold.reset();
  CHECK_THROWS_AS(evaluate(out.model, broken), DataError);
}

TEST_CASE("evaluation ignores recorded answers feedback and rewards") {
  GeneratedSplits s = small_task(3, 0.5, 16, 120);
  Hyperparams h = fast_hyper();
  TrainOutput out = train(Strategy::rbi, s.train, s.valid, h);

  Dataset masked = s.test;
  for (auto& ep : masked.episodes) {
    for (auto& t : ep.turns) {
      if (t.kind == TurnKind::ans) {
        t.text = "placeholder";
      } else if (t.kind == TurnKind::help || is_feedback_kind(t.kind)) {
        t.text = "placeholder";
      }
      t.reward = 0;
    }
  }
  CHECK(evaluate(out.model, s.test) == evaluate(out.model, masked));
}

TEST_CASE("an all-zero model predicts the first candidate everywhere") {
  GeneratedSplits s = small_task(2, 0.5, 17, 1000);
  // evaluating needs vocab and candidates from somewhere: train briefly, then
  // zero out every parameter
  Hyperparams h = fast_hyper();
  h.epochs_max = 1;
  h.patience = 1;
  TrainOutput out = train(Strategy::imitation, s.train, s.valid, h);
  for (std::size_t i = 0; i < out.model.params.store().coord_count(); ++i)
    out.model.params.store().set_coord(i, 0.0);
  double acc = evaluate(out.model, s.test);
  // gold answers are uniform over six locations, so first-candidate
  // prediction sits at chance
  CHECK(acc > 16.7 - 3.5);
  CHECK(acc < 16.7 + 3.5);
}

TEST_CASE("checkpoints round trip exactly") {
  GeneratedSplits s = small_task(6, 0.5, 18, 50);
  Hyperparams h = fast_hyper();
  h.epochs_max = 3;
  h.patience = 2;
  TrainOutput out = train(Strategy::rbi_fp, s.train, s.valid, h);
  out.model.task = 6;
  out.model.pi = 0.5;

  std::string json = checkpoint_to_json(out.model);
  TrainedModel back = checkpoint_from_json(json);
  CHECK(back.params.store() == out.model.params.store());
  CHECK(back.vocab.words() == out.model.vocab.words());
  CHECK(back.candidates.display == out.model.candidates.display);
  CHECK(back.responses.display == out.model.responses.display);
  CHECK(back.strategy == "rbi_fp");
  CHECK(back.task == 6);
  CHECK(checkpoint_to_json(back) == json);

  auto path = std::filesystem::temp_directory_path() / "dialoglearn_ckpt_test.json";
  save_checkpoint(out.model, path);
  TrainedModel loaded = load_checkpoint(path);
  CHECK(loaded.params.store() == out.model.params.store());
  CHECK(evaluate(loaded, s.test) == evaluate(out.model, s.test));
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
  CHECK_THROWS_AS(checkpoint_from_json("not json"), ParseError);
  CHECK_THROWS_AS(checkpoint_from_json("{}"), ParseError);
  CHECK_THROWS_AS(checkpoint_from_json(R"({"format":"other"})"), ParseError);
}

TEST_CASE("hyperparameters are validated") {
  GeneratedSplits s = small_task(1, 0.5, 19, 10);
  Hyperparams h;
  h.hops = 5;
  CHECK_THROWS_AS(train(Strategy::imitation, s.train, s.valid, h), ConfigError);
  h = Hyperparams{};
  h.lr = 0.0;
  CHECK_THROWS_AS(train(Strategy::imitation, s.train, s.valid, h), ConfigError);
  h = Hyperparams{};
  h.batch = 0;
  CHECK_THROWS_AS(train(Strategy::imitation, s.train, s.valid, h), ConfigError);
}

TEST_CASE("strategy names round trip") {
  for (Strategy s : {Strategy::imitation, Strategy::rbi, Strategy::fp, Strategy::rbi_fp})
    CHECK(strategy_from_name(strategy_name(s)) == s);
  CHECK_THROWS_AS(strategy_from_name("sgd"), UsageError);
}
